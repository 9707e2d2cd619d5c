//! Run configuration: one JSON document, every field optional, overridable from flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pomquant_core::io::load_operator_csv;
use pomquant_core::quantizer::DEFAULT_MAX_DEGREE;
use pomquant_core::{
    Error, FockState, GeneratingOperator, MapKind, PhaseGrid, PhaseSpaceFunction, Result, TruncationConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// `|h_n⟩⟨h_n|`.
    FockProjector { n: usize },
    /// `Σ w |h_n⟩⟨h_n|` from `(n, w)` pairs.
    FockDiagonal { weights: Vec<(usize, f64)> },
    /// Density matrix read from a `row,col,re,im` CSV file.
    MatrixFile { path: PathBuf },
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::FockProjector { n: 0 }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// `fock:<n>`, `diag:<n>=<w>,<n>=<w>,...` or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(n) = s.strip_prefix("fock:") {
            let n = n.parse().map_err(|_| Error::Parse(format!("bad level in '{s}'")))?;
            return Ok(GeneratorSpec::FockProjector { n });
        }
        if let Some(list) = s.strip_prefix("diag:") {
            let weights = list
                .split(',')
                .map(|item| {
                    let (n, w) =
                        item.split_once('=').ok_or_else(|| Error::Parse(format!("expected n=w, got '{item}'")))?;
                    let n = n.trim().parse().map_err(|_| Error::Parse(format!("bad level '{n}'")))?;
                    let w = w.trim().parse().map_err(|_| Error::Parse(format!("bad weight '{w}'")))?;
                    Ok((n, w))
                })
                .collect::<Result<_>>()?;
            return Ok(GeneratorSpec::FockDiagonal { weights });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(GeneratorSpec::MatrixFile { path: path.into() });
        }
        Err(Error::Parse(format!("unknown generator spec '{s}' (use fock:<n>, diag:<n>=<w>,... or file:<path>)")))
    }
}

impl GeneratorSpec {
    pub fn build(&self, dim: usize) -> Result<GeneratingOperator> {
        match self {
            GeneratorSpec::FockProjector { n } => GeneratingOperator::fock_projector(dim, *n),
            GeneratorSpec::FockDiagonal { weights } => GeneratingOperator::fock_diagonal(dim, weights),
            GeneratorSpec::MatrixFile { path } => {
                let m = load_operator_csv(path)?;
                if m.nrows() > dim {
                    return Err(Error::InvalidConfig(format!(
                        "{} holds a {}-level matrix but dim is {dim}",
                        path.display(),
                        m.nrows()
                    )));
                }
                let mut full = pomquant_core::CMatrix::zeros(dim, dim);
                full.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(&m);
                GeneratingOperator::new(full, 1e-8)
            }
        }
    }
}

/// State used by `wigner`, `husimi` and `sample`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpec {
    Fock(usize),
    /// Gaussian random coefficients on the lowest levels, drawn from the run seed.
    Random(Option<usize>),
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Fock(0)
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    /// `fock:<n>`, `random` or `random:<levels>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let level = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad level in '{s}'")));
        if let Some(n) = s.strip_prefix("fock:") {
            return Ok(StateSpec::Fock(level(n)?));
        }
        if s == "random" {
            return Ok(StateSpec::Random(None));
        }
        if let Some(k) = s.strip_prefix("random:") {
            return Ok(StateSpec::Random(Some(level(k)?)));
        }
        Err(Error::Parse(format!("unknown state spec '{s}' (use fock:<n>, random or random:<levels>)")))
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Random(None) => f.write_str("random"),
            StateSpec::Random(Some(k)) => write!(f, "random:{k}"),
        }
    }
}

impl Serialize for StateSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tail_tol: f64,
    pub eig_tol: f64,
    pub pom_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tail_tol: TruncationConfig::DEFAULT_TAIL_TOL,
            eig_tol: TruncationConfig::DEFAULT_EIG_TOL,
            pom_tol: pomquant_core::pom::POM_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub grid: PhaseGrid,
    pub generator: GeneratorSpec,
    /// Function spec, e.g. `indicator:rect:[-1,2]xR` or `monomial:1:0`.
    pub function: String,
    pub map: MapKind,
    pub state: StateSpec,
    pub tolerances: Tolerances,
    pub max_degree: u32,
    pub seed: u64,
    pub samples: u64,
    pub k_max: u32,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 64,
            grid: PhaseGrid::default(),
            generator: GeneratorSpec::default(),
            function: "indicator:halfplane:0:0".into(),
            map: MapKind::A,
            state: StateSpec::default(),
            tolerances: Tolerances::default(),
            max_degree: DEFAULT_MAX_DEGREE,
            seed: 1,
            samples: 100_000,
            k_max: 3,
            output_dir: "pomquant-out".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn truncation(&self) -> Result<TruncationConfig> {
        TruncationConfig::with_tolerances(self.dim, self.tolerances.tail_tol, self.tolerances.eig_tol)
    }

    pub fn parsed_function(&self) -> Result<PhaseSpaceFunction> {
        let f: PhaseSpaceFunction = self.function.parse()?;
        f.validate()?;
        Ok(f)
    }

    /// Checks everything that can be checked without numerics.
    pub fn validate(&self) -> Result<()> {
        self.truncation()?;
        self.grid.validate()?;
        self.parsed_function()?;
        if !(0.0..1.0).contains(&self.tolerances.pom_tol) {
            return Err(Error::InvalidConfig(format!("pom_tol must lie in [0, 1), got {}", self.tolerances.pom_tol)));
        }
        match &self.generator {
            GeneratorSpec::FockProjector { n } if *n >= self.dim => {
                return Err(Error::InvalidConfig(format!("generator level {n} is outside dim {}", self.dim)))
            }
            GeneratorSpec::FockDiagonal { weights } => {
                if weights.iter().any(|(n, w)| *n >= self.dim || w.is_nan() || *w < 0.0) {
                    return Err(Error::InvalidConfig(
                        "generator weights must be nonnegative on levels below dim".into(),
                    ));
                }
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!("generator weights sum to {total}, not 1")));
                }
            }
            _ => {}
        }
        match self.state {
            StateSpec::Fock(n) if n >= self.dim => {
                return Err(Error::InvalidConfig(format!("state level {n} is outside dim {}", self.dim)))
            }
            StateSpec::Random(Some(0)) => {
                return Err(Error::InvalidConfig("random state needs at least one level".into()))
            }
            _ => {}
        }
        if self.samples == 0 || self.k_max == 0 {
            return Err(Error::InvalidConfig("samples and k_max must be positive".into()));
        }
        Ok(())
    }

    pub fn build_state(&self) -> Result<FockState> {
        match self.state {
            StateSpec::Fock(n) => Ok(FockState::basis(self.dim, n)),
            StateSpec::Random(levels) => {
                let support = levels.unwrap_or((self.dim / 4).max(1)).min(self.dim);
                Ok(FockState::random(self.dim, support, &mut ChaCha8Rng::seed_from_u64(self.seed)))
            }
        }
    }
}
