//! Dense operators on the truncated space and their spectral decompositions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockState;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Dense `dim × dim` matrix with a flag recording whether it was validated as Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: CMatrix,
    hermitian: bool,
}

/// An operator intended to satisfy `0 ≤ A ≤ I`. Membership is reported by
/// [`crate::quantizer::effect_report`], not enforced by the type.
pub type Effect = Operator;

impl Operator {
    /// Wraps a matrix after checking Hermiticity to `tol`. The stored matrix is
    /// symmetrized so that downstream eigensolvers see an exactly Hermitian input.
    pub fn hermitian(entries: CMatrix, tol: f64) -> Result<Self> {
        assert!(entries.is_square(), "operator matrix must be square");
        let defect = hermiticity_defect(&entries);
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        let sym = (&entries + entries.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Operator { entries: sym, hermitian: true })
    }

    /// Wraps a matrix without any symmetry assertion (unitaries, products).
    pub fn general(entries: CMatrix) -> Self {
        assert!(entries.is_square(), "operator matrix must be square");
        Operator { entries, hermitian: false }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { entries: CMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { entries: CMatrix::zeros(dim, dim), hermitian: true }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&d| Complex64::new(d, 0.0)));
        Operator { entries: CMatrix::from_diagonal(&v), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }

    pub fn adjoint(&self) -> Self {
        Operator { entries: self.entries.adjoint(), hermitian: self.hermitian }
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        Operator::general(&self.entries * &other.entries)
    }

    /// `self · other · self*`, Hermitian whenever `other` is.
    pub fn conjugate(&self, other: &Operator) -> Operator {
        let m = &self.entries * &other.entries * self.entries.adjoint();
        Operator { entries: m, hermitian: other.hermitian }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator { entries: &self.entries + &other.entries, hermitian: self.hermitian && other.hermitian }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator { entries: &self.entries - &other.entries, hermitian: self.hermitian && other.hermitian }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { entries: &self.entries * Complex64::new(s, 0.0), hermitian: self.hermitian }
    }

    pub fn powi(&self, k: u32) -> Operator {
        let mut out = CMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            out = &out * &self.entries;
        }
        Operator { entries: out, hermitian: self.hermitian }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// `⟨ψ|A φ⟩`
    pub fn matrix_element(&self, psi: &FockState, phi: &FockState) -> Complex64 {
        psi.coeffs().dotc(&(&self.entries * phi.coeffs()))
    }

    /// Real part of `⟨φ|A φ⟩`.
    pub fn expectation(&self, phi: &FockState) -> f64 {
        self.matrix_element(phi, phi).re
    }

    /// Upper-left `k × k` block in the basis ordering, i.e. the lowest `k` levels.
    pub fn block(&self, k: usize) -> CMatrix {
        self.entries.view((0, 0), (k, k)).into_owned()
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.entries - &other.entries))
    }

    pub fn max_abs_diff_block(&self, other: &Operator, k: usize) -> f64 {
        max_abs(&(self.block(k) - other.block(k)))
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.hermitian {
            let e = self.entries.clone().symmetric_eigen();
            return e.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        self.entries.clone().singular_values().iter().fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn eigen(&self, tol: f64) -> Result<SpectralDecomposition> {
        SpectralDecomposition::new(self, tol)
    }

    /// Sorted eigenvalues of a Hermitian operator.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.entries.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues sorted ascending with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn new(op: &Operator, tol: f64) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        let dim = op.dim();
        let eig = op.matrix().clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = CMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        let decomposition = SpectralDecomposition { eigenvalues, eigenvectors };

        let scale = op.matrix().iter().fold(1.0f64, |m, z| m.max(z.norm()));
        let recon = max_abs(&(decomposition.reconstruct() - op.matrix())) / scale;
        let unitary = max_abs(
            &(decomposition.eigenvectors.adjoint() * &decomposition.eigenvectors - CMatrix::identity(dim, dim)),
        );
        if recon > 10.0 * tol.max(1e-13) || unitary > tol.max(1e-13) {
            return Err(Error::Numerical(format!(
                "eigendecomposition inaccurate: reconstruction {recon:.2e}, orthonormality {unitary:.2e}"
            )));
        }
        Ok(decomposition)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U g(Λ) U*` for a real function of the eigenvalues.
    pub fn apply_real(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        self.apply_complex(|x| Complex64::new(g(x), 0.0))
    }

    /// `U g(Λ) U*` for a complex function of the eigenvalues.
    pub fn apply_complex(&self, g: impl Fn(f64) -> Complex64) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (c, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = g(lambda);
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= s);
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_real(|x| x)
    }
}
