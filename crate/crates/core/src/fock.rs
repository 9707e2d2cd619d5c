//! Truncated oscillator basis: states, canonical operators and spectral measures.
//!
//! Conventions (ħ = 1): `Q = (a + a†)/√2`, `P = i(a† − a)/√2`, and the Fourier
//! operator acts on Hermite functions as `F h_n = (−i)^n h_n`, which is the unitary
//! transform `(Fφ)(p) = (2π)^{-1/2} ∫ e^{−ipx} φ(x) dx`. With these choices
//! `⟨φ|E^P(B)φ⟩ = ⟨Fφ|E^Q(B)Fφ⟩`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::borel::BorelSet1D;
use crate::error::{Error, Result};
use crate::operator::{CMatrix, CVector, Operator, ONE};
use crate::quad::Rule1D;

/// Phase `ω` in `F h_n = ω^n h_n`.
pub const FOURIER_PHASE: Complex64 = Complex64 { re: 0.0, im: -1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    /// Number of basis levels `h_0 … h_{dim-1}`.
    pub dim: usize,
    /// Largest weight a computation may leave outside its integration domain
    /// or push into the top basis levels.
    pub tail_tol: f64,
    /// Hermiticity / orthonormality tolerance.
    pub eig_tol: f64,
}

impl TruncationConfig {
    pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
    pub const DEFAULT_EIG_TOL: f64 = 1e-9;

    pub fn new(dim: usize) -> Result<Self> {
        Self::with_tolerances(dim, Self::DEFAULT_TAIL_TOL, Self::DEFAULT_EIG_TOL)
    }

    pub fn with_tolerances(dim: usize, tail_tol: f64, eig_tol: f64) -> Result<Self> {
        let cfg = TruncationConfig { dim, tail_tol, eig_tol };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidConfig(format!("dim must be at least 2, got {}", self.dim)));
        }
        for (name, v) in [("tail_tol", self.tail_tol), ("eig_tol", self.eig_tol)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// Size of the low-level block on which operator identities are compared.
    pub fn block(&self) -> usize {
        (self.dim / 4).max(1)
    }
}

/// Unit vector in the Hermite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    coeffs: CVector,
}

impl FockState {
    pub fn new(coeffs: CVector, tol: f64) -> Result<Self> {
        let norm = coeffs.norm();
        if (norm - 1.0).abs() > tol.max(1e-12) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(FockState { coeffs })
    }

    /// Normalizes `coeffs`; fails only for the zero vector.
    pub fn normalized(coeffs: CVector) -> Result<Self> {
        let norm = coeffs.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(FockState { coeffs: coeffs / Complex64::new(norm, 0.0) })
    }

    /// The oscillator eigenstate `h_n`.
    pub fn basis(dim: usize, n: usize) -> Self {
        assert!(n < dim, "level {n} outside a {dim}-dimensional basis");
        let mut coeffs = CVector::zeros(dim);
        coeffs[n] = ONE;
        FockState { coeffs }
    }

    /// Haar-random state supported on the lowest `support` levels.
    pub fn random(dim: usize, support: usize, rng: &mut impl Rng) -> Self {
        let support = support.min(dim).max(1);
        let mut coeffs = CVector::zeros(dim);
        for c in coeffs.iter_mut().take(support) {
            *c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        Self::normalized(coeffs).expect("a Gaussian sample is nonzero almost surely")
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Applies an operator that is expected to be an isometry on this state.
    pub fn evolve(&self, u: &Operator) -> Result<Self> {
        Self::normalized(u.apply(&self.coeffs))
    }

    /// Weight carried by the top `levels` basis vectors.
    pub fn top_weight(&self, levels: usize) -> f64 {
        let n = self.dim();
        self.coeffs.iter().skip(n.saturating_sub(levels)).map(|c| c.norm_sqr()).sum()
    }
}

/// `h_0(x), …, h_{n-1}(x)` through the normalized three-term recurrence.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    fill_hermite_functions(x, &mut out);
    out
}

pub(crate) fn fill_hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = 2f64.sqrt() * x * out[0];
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// `φ(x) = Σ_n c_n h_n(x)` sampled on `grid`.
pub fn position_wavefunction(phi: &FockState, grid: &[f64]) -> Vec<Complex64> {
    let mut h = vec![0.0; phi.dim()];
    grid.iter()
        .map(|&x| {
            fill_hermite_functions(x, &mut h);
            phi.coeffs().iter().zip(&h).map(|(c, hv)| c * hv).sum()
        })
        .collect()
}

/// Truncated annihilation operator.
pub fn build_lowering(cfg: &TruncationConfig) -> Operator {
    let n = cfg.dim;
    let mut m = CMatrix::zeros(n, n);
    for k in 1..n {
        m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    Operator::general(m)
}

/// `Q = (a + a†)/√2`: real tridiagonal with `Q[n, n+1] = √((n+1)/2)`.
pub fn build_position(cfg: &TruncationConfig) -> Operator {
    let n = cfg.dim;
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let v = Complex64::new(((k + 1) as f64 / 2.0).sqrt(), 0.0);
        m[(k, k + 1)] = v;
        m[(k + 1, k)] = v;
    }
    Operator::hermitian(m, 0.0).expect("symmetric by construction")
}

/// `P = i(a† − a)/√2`: `P[n, n+1] = −i√((n+1)/2)`.
pub fn build_momentum(cfg: &TruncationConfig) -> Operator {
    let n = cfg.dim;
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let v = ((k + 1) as f64 / 2.0).sqrt();
        m[(k, k + 1)] = Complex64::new(0.0, -v);
        m[(k + 1, k)] = Complex64::new(0.0, v);
    }
    Operator::hermitian(m, 0.0).expect("Hermitian by construction")
}

/// Parity `(𝒫φ)(x) = φ(−x)`: diagonal `(−1)^n`.
pub fn build_parity(cfg: &TruncationConfig) -> Operator {
    let diag: Vec<f64> = (0..cfg.dim).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Operator::from_real_diagonal(&diag)
}

/// Number operator `a†a`.
pub fn build_number(cfg: &TruncationConfig) -> Operator {
    let diag: Vec<f64> = (0..cfg.dim).map(|k| k as f64).collect();
    Operator::from_real_diagonal(&diag)
}

/// Fourier-Plancherel operator, diagonal with entries `FOURIER_PHASE^n`. Unitary, not Hermitian.
pub fn build_fourier(cfg: &TruncationConfig) -> Operator {
    let v = CVector::from_iterator(cfg.dim, (0..cfg.dim).map(|k| FOURIER_PHASE.powu(k as u32)));
    Operator::general(CMatrix::from_diagonal(&v))
}

/// Sum of the eigenprojections of a Hermitian operator whose eigenvalues lie in `set`.
///
/// The result is an exact projection of the truncated matrix. For the truncated
/// position operator the eigenvalues are Gauss-Hermite nodes, so this is only a
/// node-counting approximation of the continuum measure; see [`position_measure`].
pub fn spectral_measure(op: &Operator, set: &BorelSet1D, tol: f64) -> Result<Operator> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian { defect: op.hermiticity_defect(), tol });
    }
    let d = op.eigen(tol)?;
    let m = d.apply_real(|x| if set.contains(x) { 1.0 } else { 0.0 });
    Operator::hermitian(m, tol.max(1e-12))
}

pub(crate) fn hermite_support_radius(dim: usize) -> f64 {
    (2.0 * dim as f64 + 1.0).sqrt() + 12.0
}

/// Compression of the continuum position measure: `⟨h_m|E^Q(B) h_n⟩ = ∫_B h_m h_n dx`.
///
/// Integrated with Gauss-Legendre panels aligned to the endpoints of `set`, so the
/// entries are accurate to roughly machine precision. The result is an effect; it is
/// a projection only up to the leakage of `E^Q(B)` out of the truncated space.
pub fn position_measure(cfg: &TruncationConfig, set: &BorelSet1D) -> Operator {
    let n = cfg.dim;
    let radius = hermite_support_radius(n);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut h = vec![0.0; n];
    for (a, b) in set.pieces_within(-radius, radius) {
        let rule = Rule1D::gauss_legendre_max_width(a, b, 0.25);
        for (x, w) in rule.iter() {
            fill_hermite_functions(x, &mut h);
            for j in 0..n {
                let wj = w * h[j];
                for i in j..n {
                    acc[(i, j)] += wj * h[i];
                }
            }
        }
    }
    let m = CMatrix::from_fn(n, n, |i, j| {
        let v = if i >= j { acc[(i, j)] } else { acc[(j, i)] };
        Complex64::new(v, 0.0)
    });
    Operator::hermitian(m, 0.0).expect("symmetric by construction")
}

/// Compression of the continuum momentum measure, `F* E^Q(B) F`.
pub fn momentum_measure(cfg: &TruncationConfig, set: &BorelSet1D) -> Operator {
    let f = build_fourier(cfg);
    f.adjoint().conjugate(&position_measure(cfg, set))
}

/// Multiplies row `m`, column `n` by `conj(ω^m) ω^n`, i.e. returns `F* A F` for diagonal `F`.
pub(crate) fn fourier_conjugate(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let phases: Vec<Complex64> = (0..n).map(|k| FOURIER_PHASE.powu(k as u32)).collect();
    CMatrix::from_fn(n, n, |r, c| phases[r].conj() * phases[c] * a[(r, c)])
}
