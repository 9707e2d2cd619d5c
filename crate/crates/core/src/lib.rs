//! POM-based phase-space quantization on a truncated harmonic-oscillator basis.

pub mod borel;
pub mod displacement;
pub mod error;
pub mod fock;
pub mod function;
pub mod grid;
pub mod io;
pub mod measurement;
pub mod operator;
pub mod phase_space;
pub mod pom;
pub mod quad;
pub mod quantizer;
pub mod verify;

pub use borel::{BorelSet1D, Interval};
pub use error::{Error, Result};
pub use fock::{FockState, TruncationConfig};
pub use function::{PhaseSpaceFunction, Region};
pub use grid::{GridRule, PhaseGrid, PhasePoint};
pub use measurement::{MomentTransferReport, SampleReport};
pub use operator::{CMatrix, CVector, Effect, Operator, SpectralDecomposition};
pub use phase_space::{Field, GeneratingOperator};
pub use pom::DiscretePOM;
pub use quantizer::{Axis, EffectReport, MapKind, Quantizer, QuantizerA, QuantizerWeyl};
pub use verify::{CheckResult, Verdict, VerifyConfig};
