//! Matrix elements `⟨h_m|D(β)|h_n⟩` of the (untruncated) displacement operator.
//!
//! For `m = n + d`,
//! `⟨m|D(β)|n⟩ = √(n!/m!) β^d e^{−|β|²/2} L_n^{(d)}(|β|²)` and
//! `⟨n|D(β)|m⟩ = (−1)^d conj(β)^d …` with the same real factor. The real factor
//! `ℓ_n^{(d)}` is generated by a normalized three-term recurrence in `n`, so no
//! factorials or large Laguerre values are ever formed.
//!
//! Restricting these elements to the lowest `dim` levels gives the compression
//! `P D(β) P`, which is exact for vectors in the truncated space. The Weyl operator
//! is `W(q, p) = D((q + ip)/√2)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::operator::{CMatrix, CVector};

/// Complex displacement amplitude of the phase-space point `(q, p)`.
pub fn alpha(q: f64, p: f64) -> Complex64 {
    Complex64::new(q * FRAC_1_SQRT_2, p * FRAC_1_SQRT_2)
}

/// Real factors `ℓ_n^{(d)}(|β|²)` for `0 ≤ d`, `n + d < dim`, stored row-major by `d`.
struct LaguerreTable {
    dim: usize,
    values: Vec<f64>,
    offsets: Vec<usize>,
    sqrt_int: Vec<f64>,
}

impl LaguerreTable {
    fn new(dim: usize) -> Self {
        let mut offsets = Vec::with_capacity(dim + 1);
        let mut total = 0;
        for d in 0..dim {
            offsets.push(total);
            total += dim - d;
        }
        offsets.push(total);
        let sqrt_int = (0..=2 * dim + 1).map(|k| (k as f64).sqrt()).collect();
        LaguerreTable { dim, values: vec![0.0; total], offsets, sqrt_int }
    }

    #[inline]
    fn get(&self, d: usize, n: usize) -> f64 {
        self.values[self.offsets[d] + n]
    }

    /// Fills the rows `d < rows`.
    fn fill(&mut self, radius: f64, rows: usize) {
        let x = radius * radius;
        let s = &self.sqrt_int;
        let mut start = (-0.5 * x).exp();
        for d in 0..rows.min(self.dim) {
            if d > 0 {
                start *= radius / s[d];
            }
            let row = &mut self.values[self.offsets[d]..self.offsets[d + 1]];
            let df = d as f64;
            row[0] = start;
            if row.len() > 1 {
                row[1] = (1.0 + df - x) / s[d + 1] * start;
            }
            for n in 1..row.len().saturating_sub(1) {
                let nf = n as f64;
                row[n + 1] =
                    ((2.0 * nf + 1.0 + df - x) * row[n] - s[n] * s[n + d] * row[n - 1]) / (s[n + 1] * s[n + d + 1]);
            }
        }
    }
}

/// Reusable evaluator for displacement matrices of a fixed truncation.
pub struct DisplacementKernel {
    table: LaguerreTable,
    phases: Vec<Complex64>,
}

impl DisplacementKernel {
    pub fn new(dim: usize) -> Self {
        DisplacementKernel { table: LaguerreTable::new(dim), phases: vec![Complex64::new(1.0, 0.0); dim] }
    }

    pub fn dim(&self) -> usize {
        self.table.dim
    }

    fn prepare(&mut self, beta: Complex64) {
        let r = beta.norm();
        self.table.fill(r, self.table.dim);
        let unit = if r > 0.0 { beta / r } else { Complex64::new(1.0, 0.0) };
        let mut ph = Complex64::new(1.0, 0.0);
        for d in 0..self.phases.len() {
            self.phases[d] = ph;
            ph *= unit;
        }
    }

    /// Element `(m, n)` after [`Self::prepare`].
    #[inline]
    fn element(&self, m: usize, n: usize) -> Complex64 {
        if m >= n {
            let d = m - n;
            self.phases[d] * self.table.get(d, n)
        } else {
            let d = n - m;
            let v = self.phases[d].conj() * self.table.get(d, m);
            if d % 2 == 1 {
                -v
            } else {
                v
            }
        }
    }

    /// Full `dim × dim` compression of `D(β)`.
    pub fn matrix(&mut self, beta: Complex64) -> CMatrix {
        self.prepare(beta);
        let dim = self.dim();
        CMatrix::from_fn(dim, dim, |m, n| self.element(m, n))
    }

    /// Writes `D(β)` column-major into `out` (length `dim²`).
    pub fn fill(&mut self, beta: Complex64, out: &mut [Complex64]) {
        self.prepare(beta);
        let dim = self.dim();
        for n in 0..dim {
            for m in 0..dim {
                out[n * dim + m] = self.element(m, n);
            }
        }
    }

    /// Adds `weight · D(β) 𝒫` to the lower triangle (`m ≥ n`) of a column-major
    /// accumulator split into real and imaginary parts.
    ///
    /// `D(β)𝒫` with `β = 2α` is the displaced parity `W 𝒫 W*`; its Hermitian
    /// structure means the lower triangle determines the whole matrix.
    pub fn accumulate_displaced_parity(&mut self, beta: Complex64, weight: f64, re: &mut [f64], im: &mut [f64]) {
        self.prepare(beta);
        let dim = self.dim();
        for n in 0..dim {
            let w = if n % 2 == 0 { weight } else { -weight };
            let col = n * dim;
            for d in 0..dim - n {
                let v = w * self.table.get(d, n);
                let ph = self.phases[d];
                re[col + n + d] += v * ph.re;
                im[col + n + d] += v * ph.im;
            }
        }
    }

    /// `out = D(β) v` for `v` given as sparse `(index, coefficient)` pairs.
    pub fn apply_sparse(&mut self, beta: Complex64, v: &[(usize, Complex64)], out: &mut [Complex64]) {
        self.prepare(beta);
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for &(n, c) in v {
            for (m, z) in out.iter_mut().enumerate() {
                *z += self.element(m, n) * c;
            }
        }
    }

    /// `D(β)` applied to the basis vector `h_k`: the `k`-th column.
    pub fn column(&mut self, beta: Complex64, k: usize) -> CVector {
        self.prepare(beta);
        CVector::from_fn(self.dim(), |m, _| self.element(m, k))
    }

    /// Diagonal elements `⟨m|D(β)|m⟩`, which are real.
    pub fn diagonal(&mut self, beta: Complex64) -> Vec<f64> {
        self.table.fill(beta.norm(), 1);
        (0..self.dim()).map(|m| self.table.get(0, m)).collect()
    }
}

/// Convenience wrapper around [`DisplacementKernel::matrix`].
pub fn displacement_matrix(beta: Complex64, dim: usize) -> CMatrix {
    DisplacementKernel::new(dim).matrix(beta)
}
