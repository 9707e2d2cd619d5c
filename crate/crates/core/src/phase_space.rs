//! Weyl operators, generating operators and phase-space distributions.
//!
//! `W(q, p) = e^{iqp/2} e^{−iqP} e^{ipQ} = exp(i(pQ − qP))`, which is the displacement
//! `D(α)` with `α = (q + ip)/√2`. It shifts `Q` by `q` and `P` by `p`:
//! `W* Q W = Q + q`, `W* P W = P + p`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::displacement::{alpha, DisplacementKernel};
use crate::error::{Error, Result};
use crate::fock::{build_momentum, build_position, FockState, TruncationConfig};
use crate::grid::{PhaseGrid, PhasePoint};
use crate::operator::{hermiticity_defect, CMatrix, CVector, Operator, ZERO};
use crate::quad::Rule1D;

/// `exp(i(pQ − qP))` of the truncated generator, through its eigendecomposition.
/// Exactly unitary; agrees with the untruncated operator on low levels.
pub fn weyl_operator(pt: PhasePoint, cfg: &TruncationConfig) -> Result<Operator> {
    let q = build_position(cfg);
    let p = build_momentum(cfg);
    let generator = Operator::hermitian(q.scale(pt.p).sub(&p.scale(pt.q)).into_matrix(), cfg.eig_tol)?;
    let dec = generator.eigen(cfg.eig_tol)?;
    Ok(Operator::general(dec.apply_complex(|x| Complex64::new(0.0, x).exp())))
}

/// The three-factor form `e^{iqp/2} e^{−iqP} e^{ipQ}` of truncated exponentials.
pub fn weyl_operator_product(pt: PhasePoint, cfg: &TruncationConfig) -> Result<Operator> {
    let q = build_position(cfg).eigen(cfg.eig_tol)?;
    let p = build_momentum(cfg).eigen(cfg.eig_tol)?;
    let eq = q.apply_complex(|x| Complex64::new(0.0, pt.p * x).exp());
    let ep = p.apply_complex(|x| Complex64::new(0.0, -pt.q * x).exp());
    let phase = Complex64::new(0.0, 0.5 * pt.q * pt.p).exp();
    Ok(Operator::general(ep * eq * phase))
}

/// Largest weight that `W(q, p)` pushes from a block level into the top two basis
/// levels, over displacements of length `radius` in 16 directions. Uses exact
/// matrix elements, so it measures how close the truncation edge is.
pub fn truncation_tail(cfg: &TruncationConfig, radius: f64) -> f64 {
    let dim = cfg.dim;
    let top = dim.saturating_sub(2);
    let mut kern = DisplacementKernel::new(dim);
    let mut worst = 0.0f64;
    for j in 0..16 {
        let theta = TAU * j as f64 / 16.0;
        let beta = alpha(radius * theta.cos(), radius * theta.sin());
        let d = kern.matrix(beta);
        for k in 0..cfg.block() {
            let w: f64 = (top..dim).map(|m| d[(m, k)].norm_sqr()).sum();
            worst = worst.max(w);
        }
    }
    worst
}

/// Fails with [`Error::TailMass`] when [`truncation_tail`] exceeds `cfg.tail_tol`.
pub fn check_truncation_tail(cfg: &TruncationConfig, radius: f64) -> Result<()> {
    let mass = truncation_tail(cfg, radius);
    if mass > cfg.tail_tol {
        return Err(Error::TailMass {
            mass,
            tol: cfg.tail_tol,
            context: format!("displacements of length {radius} reach the top levels of a {}-level basis", cfg.dim),
        });
    }
    Ok(())
}

/// Positive, unit-trace operator `T = Σ t_k |η_k⟩⟨η_k|`.
#[derive(Debug, Clone)]
pub struct GeneratingOperator {
    matrix: CMatrix,
    weights: Vec<f64>,
    vectors: Vec<CVector>,
}

impl GeneratingOperator {
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidGenerator("matrix is not square".into()));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > tol {
            return Err(Error::InvalidGenerator(format!("Hermiticity defect {defect:.3e}")));
        }
        let op = Operator::hermitian(matrix, tol)?;
        let dec = op.eigen(tol.max(1e-12))?;
        let min = dec.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::InvalidGenerator(format!("negative eigenvalue {min:.3e}")));
        }
        let trace: f64 = dec.eigenvalues.iter().sum();
        if (trace - 1.0).abs() > tol {
            return Err(Error::InvalidGenerator(format!("trace {trace} is not 1")));
        }
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (k, &t) in dec.eigenvalues.iter().enumerate().rev() {
            if t > 1e-14 {
                weights.push(t);
                vectors.push(dec.eigenvectors.column(k).into_owned());
            }
        }
        Ok(GeneratingOperator { matrix: op.into_matrix(), weights, vectors })
    }

    /// `|h_n⟩⟨h_n|`.
    pub fn fock_projector(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidGenerator(format!("level {n} outside a {dim}-level basis")));
        }
        Self::fock_diagonal(dim, &[(n, 1.0)])
    }

    /// `Σ t_n |h_n⟩⟨h_n|` from `(n, t_n)` pairs.
    pub fn fock_diagonal(dim: usize, weights: &[(usize, f64)]) -> Result<Self> {
        let mut diag = vec![0.0; dim];
        for &(n, t) in weights {
            if n >= dim {
                return Err(Error::InvalidGenerator(format!("level {n} outside a {dim}-level basis")));
            }
            if t.is_nan() || t < 0.0 {
                return Err(Error::InvalidGenerator(format!("weight {t} is negative")));
            }
            diag[n] += t;
        }
        let total: f64 = diag.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGenerator(format!("weights sum to {total}, not 1")));
        }
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (n, &t) in diag.iter().enumerate() {
            if t > 0.0 {
                weights.push(t);
                vectors.push(FockState::basis(dim, n).coeffs().clone());
            }
        }
        Ok(GeneratingOperator { matrix: Operator::from_real_diagonal(&diag).into_matrix(), weights, vectors })
    }

    /// `|η⟩⟨η|`.
    pub fn pure(state: &FockState) -> Self {
        let v = state.coeffs().clone();
        GeneratingOperator { matrix: &v * v.adjoint(), weights: vec![1.0], vectors: vec![v] }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn operator(&self) -> Operator {
        Operator::hermitian(self.matrix.clone(), f64::INFINITY).expect("Hermitian by construction")
    }

    /// Nonzero eigenvalues `t_k` with eigenvectors `η_k`, largest first.
    pub fn eigenpairs(&self) -> impl Iterator<Item = (f64, &CVector)> {
        self.weights.iter().copied().zip(self.vectors.iter())
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }
}

/// `W(q, p) T W(q, p)*` with the truncated Weyl operator.
pub fn displaced_density(t: &GeneratingOperator, pt: PhasePoint, cfg: &TruncationConfig) -> Result<Operator> {
    if t.dim() != cfg.dim {
        return Err(Error::InvalidConfig(format!("generator dimension {} != {}", t.dim(), cfg.dim)));
    }
    let w = weyl_operator(pt, cfg)?;
    Ok(w.conjugate(&t.operator()))
}

/// Real values on the nodes of a [`PhaseGrid`], row-major in `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub values: Vec<f64>,
    /// Quadrature of the values over the grid, `∫∫ value dq dp`.
    pub integral: f64,
}

impl Field {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p.len() + j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Iterates `(q, p, value)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.q
            .iter()
            .flat_map(move |&q| self.p.iter().map(move |&p| (q, p)))
            .zip(&self.values)
            .map(|((q, p), &v)| (q, p, v))
    }
}

/// Evaluates `value(kernel, buffer, q, p)` on every node; rows run in parallel and
/// are concatenated in order, so the result does not depend on the thread count.
fn evaluate_field<F>(grid: &PhaseGrid, dim: usize, value: F) -> Result<Field>
where
    F: Fn(&mut DisplacementKernel, &mut [Complex64], f64, f64) -> f64 + Sync,
{
    grid.validate()?;
    let qr = grid.q_rule();
    let pr = grid.p_rule();
    let rows: Vec<Vec<f64>> = qr
        .nodes
        .par_iter()
        .map(|&q| {
            let mut kern = DisplacementKernel::new(dim);
            let mut buf = vec![ZERO; dim * dim];
            pr.nodes.iter().map(|&p| value(&mut kern, &mut buf, q, p)).collect()
        })
        .collect();
    let integral = weighted_sum(&qr, &pr, &rows);
    Ok(Field { q: qr.nodes, p: pr.nodes, values: rows.concat(), integral })
}

fn weighted_sum(qr: &Rule1D, pr: &Rule1D, rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .zip(&qr.weights)
        .map(|(row, wq)| wq * row.iter().zip(&pr.weights).map(|(v, wp)| v * wp).sum::<f64>())
        .sum()
}

fn check_normalization(total: f64, tol: f64, context: &str) -> Result<()> {
    let mass = (1.0 - total).abs();
    if mass.is_nan() || mass > tol {
        return Err(Error::TailMass { mass, tol, context: context.into() });
    }
    Ok(())
}

/// `P^T_φ(q, p) = ⟨φ|W T W* φ⟩ = Σ_k t_k |⟨W η_k|φ⟩|²`; the Husimi distribution for
/// `T = |h_0⟩⟨h_0|`. Fails when `(1/2π) ∫∫ P^T_φ` misses 1 by more than `cfg.tail_tol`.
pub fn generalized_distribution(
    t: &GeneratingOperator,
    phi: &FockState,
    grid: &PhaseGrid,
    cfg: &TruncationConfig,
) -> Result<Field> {
    let dim = cfg.dim;
    if t.dim() != dim || phi.dim() != dim {
        return Err(Error::InvalidConfig("generator, state and truncation dimensions differ".into()));
    }
    let c = phi.coeffs();
    let field = evaluate_field(grid, dim, |kern, buf, q, p| {
        // u = W(q,p)* φ = D(−α) φ; the compression is exact on the truncated space.
        kern.fill(-alpha(q, p), buf);
        let mut u = vec![ZERO; dim];
        for (n, cn) in c.iter().enumerate() {
            if *cn != ZERO {
                let col = &buf[n * dim..(n + 1) * dim];
                for (um, dm) in u.iter_mut().zip(col) {
                    *um += dm * cn;
                }
            }
        }
        t.eigenpairs()
            .map(|(tk, eta)| tk * eta.iter().zip(&u).map(|(e, um)| e.conj() * um).sum::<Complex64>().norm_sqr())
            .sum()
    })?;
    check_normalization(field.integral / TAU, cfg.tail_tol, "phase-space distribution leaves the grid")?;
    Ok(field)
}

/// `f^W_φ(q, p) = ⟨φ|W 𝒫 W* φ⟩ = ⟨φ|D(2α) 𝒫 φ⟩`, equal to `⟨φ|𝒫φ⟩` at the origin.
/// Fails when `(1/π) ∫∫ f^W_φ` misses 1 by more than `cfg.tail_tol`.
pub fn wigner_transform(phi: &FockState, grid: &PhaseGrid, cfg: &TruncationConfig) -> Result<Field> {
    let dim = cfg.dim;
    if phi.dim() != dim {
        return Err(Error::InvalidConfig("state and truncation dimensions differ".into()));
    }
    let c = phi.coeffs();
    let field = evaluate_field(grid, dim, |kern, buf, q, p| {
        kern.fill(alpha(q, p) * 2.0, buf);
        let mut acc = ZERO;
        for (n, cn) in c.iter().enumerate() {
            if *cn == ZERO {
                continue;
            }
            let col = &buf[n * dim..(n + 1) * dim];
            let inner: Complex64 = c.iter().zip(col).map(|(cm, dm)| cm.conj() * dm).sum();
            let s = if n % 2 == 0 { *cn } else { -*cn };
            acc += inner * s;
        }
        acc.re
    })?;
    check_normalization(field.integral / PI, cfg.tail_tol, "Wigner function leaves the grid")?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::displacement_matrix;
    use crate::operator::max_abs;
    use crate::quad::Rule1D;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    fn pt(q: f64, p: f64) -> PhasePoint {
        PhasePoint::new(q, p).unwrap()
    }

    #[test]
    fn weyl_at_origin_is_identity() {
        let w = weyl_operator(PhasePoint::ORIGIN, &cfg(16)).unwrap();
        assert!(w.max_abs_diff(&Operator::identity(16)) < 1e-12);
    }

    #[test]
    fn weyl_paths_agree_on_block() {
        let c = cfg(64);
        for (q, p) in [(1.0, 0.0), (0.7, -1.2), (-1.5, 0.9)] {
            let a = weyl_operator(pt(q, p), &c).unwrap();
            let b = weyl_operator_product(pt(q, p), &c).unwrap();
            let exact = Operator::general(displacement_matrix(alpha(q, p), 64));
            assert!(a.max_abs_diff_block(&b, 16) < 1e-8, "({q},{p})");
            assert!(a.max_abs_diff_block(&exact, 16) < 1e-10, "({q},{p})");
        }
    }

    #[test]
    fn weyl_is_unitary_and_inverts() {
        let c = cfg(64);
        for (q, p) in [(6.0, -6.0), (2.0, 3.0)] {
            let w = weyl_operator(pt(q, p), &c).unwrap();
            assert!(w.adjoint().mul(&w).max_abs_diff(&Operator::identity(64)) < 1e-8);
            let inv = weyl_operator(pt(-q, -p), &c).unwrap();
            assert!(w.mul(&inv).max_abs_diff(&Operator::identity(64)) < 1e-8);
        }
    }

    #[test]
    fn weyl_shifts_position_by_q() {
        // W(1,0)* Q W(1,0) = Q + 1 on low levels; the sign is confirmed by the shifted
        // ground-state density, whose mean is found by direct quadrature.
        let c = cfg(64);
        let w = weyl_operator(pt(1.0, 0.0), &c).unwrap();
        let q = build_position(&c);
        let diff = w.adjoint().mul(&q).mul(&w).sub(&q);
        assert!(max_abs(&(diff.block(16) - CMatrix::identity(16, 16))) < 1e-8);

        let shifted = FockState::basis(64, 0).evolve(&w).unwrap();
        let rule = Rule1D::gauss_legendre(-12.0, 12.0, 96);
        let psi = crate::fock::position_wavefunction(&shifted, &rule.nodes);
        let mean: f64 = rule.iter().zip(&psi).map(|((x, wt), v)| wt * x * v.norm_sqr()).sum();
        assert!((mean - 1.0).abs() < 1e-10, "mean = {mean}");
    }

    #[test]
    fn weyl_relation_holds_up_to_phase() {
        let c = cfg(64);
        let (a, b) = (pt(0.8, -0.3), pt(-0.4, 1.1));
        let lhs = weyl_operator(a, &c).unwrap().mul(&weyl_operator(b, &c).unwrap());
        let sum = weyl_operator(pt(a.q + b.q, a.p + b.p), &c).unwrap();
        let m = lhs.mul(&sum.adjoint()).block(16);
        let phase = m[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-6);
        assert!(max_abs(&(m - CMatrix::identity(16, 16) * phase)) < 1e-6);
    }

    #[test]
    fn generator_validation() {
        assert!(GeneratingOperator::fock_diagonal(4, &[(0, 0.6), (1, 0.4)]).is_ok());
        assert!(GeneratingOperator::fock_diagonal(4, &[(0, 0.6)]).is_err());
        assert!(GeneratingOperator::fock_diagonal(4, &[(0, 1.5), (1, -0.5)]).is_err());
        assert!(GeneratingOperator::fock_projector(4, 4).is_err());
        let bad = CMatrix::from_diagonal(&CVector::from_vec(vec![Complex64::new(0.5, 0.0); 3]));
        assert!(GeneratingOperator::new(bad, 1e-9).is_err());
        let t = GeneratingOperator::new(
            GeneratingOperator::fock_diagonal(3, &[(0, 0.3), (2, 0.7)]).unwrap().matrix().clone(),
            1e-9,
        )
        .unwrap();
        assert_eq!(t.rank(), 2);
        assert!((t.eigenpairs().next().unwrap().0 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn displaced_density_properties() {
        let c = cfg(64);
        let t = GeneratingOperator::fock_projector(64, 0).unwrap();
        let at_origin = displaced_density(&t, PhasePoint::ORIGIN, &c).unwrap();
        assert!(max_abs(&(at_origin.matrix() - t.matrix())) < 1e-12);
        let moved = displaced_density(&t, pt(2.0, -1.0), &c).unwrap();
        assert!((moved.trace().re - 1.0).abs() < 1e-10);
        assert!(moved.eigenvalues()[0] > -1e-10);
        // Overlap of two ground-state Gaussians a distance (q, p) apart.
        for (q, p) in [(1.0, 0.5), (-2.0, 1.5)] {
            let d = displaced_density(&t, pt(q, p), &c).unwrap();
            let v = d.expectation(&FockState::basis(64, 0));
            assert!((v - (-(q * q + p * p) / 2.0).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn husimi_values_and_normalization() {
        let c = cfg(64);
        let t = GeneratingOperator::fock_projector(64, 0).unwrap();
        let grid = PhaseGrid::square(8.0, 33);
        let h0 = generalized_distribution(&t, &FockState::basis(64, 0), &grid, &c).unwrap();
        assert!((h0.value(16, 16) - 1.0).abs() < 1e-14);
        let h1 = generalized_distribution(&t, &FockState::basis(64, 1), &grid, &c).unwrap();
        assert!(h1.value(16, 16).abs() < 1e-14);
        assert!((h1.integral / TAU - 1.0).abs() < 1e-9);
    }

    #[test]
    fn husimi_of_random_states_is_normalized_on_default_grid() {
        let c = cfg(64);
        let t = GeneratingOperator::fock_projector(64, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = FockState::random(64, c.block(), &mut rng);
        let f = generalized_distribution(&t, &phi, &PhaseGrid::square(16.0, 129), &c).unwrap();
        assert!(f.min() > -1e-10);
        assert!((f.integral / TAU - 1.0).abs() < 1e-6);
    }

    #[test]
    fn small_grid_is_a_tail_error() {
        let c = cfg(16);
        let t = GeneratingOperator::fock_projector(16, 0).unwrap();
        let err = generalized_distribution(&t, &FockState::basis(16, 5), &PhaseGrid::square(2.0, 16), &c).unwrap_err();
        assert!(matches!(err, Error::TailMass { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn wigner_of_low_levels() {
        let c = cfg(64);
        let grid = PhaseGrid::square(8.0, 129);
        let w0 = wigner_transform(&FockState::basis(64, 0), &grid, &c).unwrap();
        assert!((w0.value(64, 64) - 1.0).abs() < 1e-14);
        assert!(w0.min() >= -1e-10);
        assert!((w0.integral - PI).abs() < 1e-6);
        let w1 = wigner_transform(&FockState::basis(64, 1), &grid, &c).unwrap();
        assert!((w1.value(64, 64) + 1.0).abs() < 1e-14);
        assert!(w1.min() < -0.5);
    }

    #[test]
    fn wigner_is_covariant() {
        // Shift by whole grid cells so shifted nodes coincide with grid nodes.
        let c = cfg(64);
        let grid = PhaseGrid::square(8.0, 64); // spacing 0.25
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = FockState::random(64, 6, &mut rng);
        let (q0, p0) = (0.5, -0.75);
        let w = Operator::general(displacement_matrix(alpha(q0, p0), 64));
        let moved = FockState::normalized(w.apply(phi.coeffs())).unwrap();
        let base = wigner_transform(&phi, &grid, &c).unwrap();
        let shifted = wigner_transform(&moved, &grid, &c).unwrap();
        let (di, dj) = (2usize, 3usize);
        let mut err = 0.0f64;
        for i in 0..64 - di {
            for j in dj..64 {
                err = err.max((shifted.value(i + di, j - dj) - base.value(i, j)).abs());
            }
        }
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn truncation_tail_flags_small_bases() {
        assert!(truncation_tail(&cfg(64), 2.0 * 2f64.sqrt()) < 1e-9);
        assert!(check_truncation_tail(&cfg(4), 2.0 * 2f64.sqrt()).is_err());
    }
}
