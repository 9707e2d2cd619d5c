//! The phase-space quantization maps and question quantization.
//!
//! Type (a): `Γ^T(f) = (1/2π) ∫∫ f(q, p) W(q, p) T W(q, p)* dq dp` for a generating
//! operator `T`. Type (b): `Γ^𝒫(f) = c ∫∫ f(q, p) W(q, p) 𝒫 W(q, p)* dq dp`, with the
//! constant `c` fixed by `Γ^𝒫(1) = I` (it comes out as `1/π`).
//!
//! Both integrals are evaluated with exact matrix elements of the displacement
//! operator, so the truncated results are compressions of the untruncated operators
//! up to quadrature error.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borel::BorelSet1D;
use crate::displacement::{alpha, DisplacementKernel};
use crate::error::{Error, Result};
use crate::fock::{fill_hermite_functions, fourier_conjugate, hermite_support_radius, TruncationConfig, FOURIER_PHASE};
use crate::function::PhaseSpaceFunction;
use crate::grid::{PhaseGrid, WeightedNodes};
use crate::operator::{CMatrix, Operator, ZERO};
use crate::phase_space::GeneratingOperator;
use crate::pom::{DiscretePOM, POM_TOL};
use crate::quad::Rule1D;

/// Default cap on `a + b` for monomial variables.
pub const DEFAULT_MAX_DEGREE: u32 = 4;
/// Widest Gauss-Legendre panel used on region pieces.
pub const DEFAULT_MAX_PANEL: f64 = 1.0;
/// Fixed number of node chunks; the reduction order depends only on this.
const CHUNKS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Position,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    /// `Γ^T` with a generating operator.
    A,
    /// `Γ^𝒫`, the Weyl map.
    Weyl,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::A => "a",
            MapKind::Weyl => "weyl",
        })
    }
}

/// A linear map from phase-space functions to operators on the truncated space.
pub trait Quantizer: Sync {
    fn kind(&self) -> MapKind;
    fn cfg(&self) -> &TruncationConfig;
    fn grid(&self) -> &PhaseGrid;
    /// `Γ(1)` restricted to its diagonal, for the block levels.
    fn level_masses(&self) -> &[f64];
    fn quantize(&self, f: &PhaseSpaceFunction) -> Result<Operator>;
}

fn check_function(f: &PhaseSpaceFunction, max_degree: u32) -> Result<()> {
    f.validate()?;
    match f {
        PhaseSpaceFunction::Monomial { a, b } if a + b > max_degree => {
            Err(Error::InvalidConfig(format!("monomial degree {} exceeds the cap {max_degree}", a + b)))
        }
        PhaseSpaceFunction::ArrivalTime => {
            Err(Error::Unsupported("the arrival-time variable is unbounded and has no quantization here".into()))
        }
        _ => Ok(()),
    }
}

fn check_masses(masses: &[f64], tol: f64, what: &str) -> Result<()> {
    for (m, mass) in masses.iter().enumerate() {
        let miss = (1.0 - mass).abs();
        if miss.is_nan() || miss > tol {
            return Err(Error::TailMass {
                mass: miss,
                tol,
                context: format!("{what}: level {m} keeps weight {mass:.12} on the grid"),
            });
        }
    }
    Ok(())
}

/// Per-thread scratch space.
struct Workspace {
    kern: DisplacementKernel,
    v: Vec<Complex64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Workspace {
            kern: DisplacementKernel::new(dim),
            v: vec![ZERO; dim],
            re: vec![0.0; dim * dim],
            im: vec![0.0; dim * dim],
        }
    }
}

/// Sums `node(workspace, q, p, w)` contributions into a column-major lower triangle.
/// Nodes are split into `CHUNKS` contiguous ranges summed in parallel and then
/// combined in range order, so results are bit-reproducible.
fn accumulate<F>(nodes: &WeightedNodes, dim: usize, node: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&mut Workspace, f64, f64, f64) + Sync,
{
    let len = nodes.len();
    let size = len.div_ceil(CHUNKS).max(1);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..len.div_ceil(size))
        .into_par_iter()
        .map(|c| {
            let mut ws = Workspace::new(dim);
            for i in c * size..((c + 1) * size).min(len) {
                node(&mut ws, nodes.q[i], nodes.p[i], nodes.w[i]);
            }
            (ws.re, ws.im)
        })
        .collect();
    let mut re = vec![0.0; dim * dim];
    let mut im = vec![0.0; dim * dim];
    for (pr, pi) in partial {
        re.iter_mut().zip(&pr).for_each(|(a, b)| *a += b);
        im.iter_mut().zip(&pi).for_each(|(a, b)| *a += b);
    }
    (re, im)
}

fn hermitian_from_lower(re: &[f64], im: &[f64], dim: usize, scale: f64) -> Operator {
    let m = CMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(scale * re[c * dim + r], 0.0)
        } else if r > c {
            Complex64::new(scale * re[c * dim + r], scale * im[c * dim + r])
        } else {
            Complex64::new(scale * re[r * dim + c], -scale * im[r * dim + c])
        }
    });
    Operator::hermitian(m, 0.0).expect("Hermitian by construction")
}

/// Type (a) map `Γ^T`.
#[derive(Debug, Clone)]
pub struct QuantizerA {
    cfg: TruncationConfig,
    generator: GeneratingOperator,
    grid: PhaseGrid,
    /// Eigenvectors of `T` as sparse `(index, coefficient)` lists.
    sparse: Vec<(f64, Vec<(usize, Complex64)>)>,
    level_masses: Vec<f64>,
    max_degree: u32,
    max_panel: f64,
}

impl QuantizerA {
    /// Validates the inputs and checks that every block level keeps all but
    /// `cfg.tail_tol` of its weight on the grid.
    pub fn new(cfg: TruncationConfig, generator: GeneratingOperator, grid: PhaseGrid) -> Result<Self> {
        cfg.validate()?;
        grid.validate()?;
        if generator.dim() != cfg.dim {
            return Err(Error::InvalidConfig(format!(
                "generator dimension {} != truncation dimension {}",
                generator.dim(),
                cfg.dim
            )));
        }
        let sparse = generator
            .eigenpairs()
            .map(|(t, eta)| (t, eta.iter().enumerate().filter(|(_, c)| **c != ZERO).map(|(i, c)| (i, *c)).collect()))
            .collect();
        let mut quantizer = QuantizerA {
            cfg,
            generator,
            grid,
            sparse,
            level_masses: Vec::new(),
            max_degree: DEFAULT_MAX_DEGREE,
            max_panel: DEFAULT_MAX_PANEL,
        };
        let nodes = quantizer.grid.weighted_nodes(&PhaseSpaceFunction::ONE, quantizer.max_panel)?;
        let (re, _) = quantizer.integrate(&nodes, true);
        let dim = cfg.dim;
        quantizer.level_masses = (0..cfg.block()).map(|m| re[m * dim + m] / TAU).collect();
        check_masses(&quantizer.level_masses, cfg.tail_tol, "type-(a) kernel leaves the grid")?;
        Ok(quantizer)
    }

    pub fn with_max_degree(mut self, max_degree: u32) -> Self {
        self.max_degree = max_degree;
        self
    }

    pub fn generator(&self) -> &GeneratingOperator {
        &self.generator
    }

    fn integrate(&self, nodes: &WeightedNodes, diagonal_only: bool) -> (Vec<f64>, Vec<f64>) {
        let dim = self.cfg.dim;
        accumulate(nodes, dim, |ws, q, p, w| {
            for (t, eta) in &self.sparse {
                ws.kern.apply_sparse(alpha(q, p), eta, &mut ws.v);
                let s = w * t;
                for n in 0..dim {
                    let vn = ws.v[n].conj() * s;
                    if diagonal_only {
                        ws.re[n * dim + n] += (ws.v[n] * vn).re;
                        continue;
                    }
                    let col = n * dim;
                    for m in n..dim {
                        let z = ws.v[m] * vn;
                        ws.re[col + m] += z.re;
                        ws.im[col + m] += z.im;
                    }
                }
            }
        })
    }

    /// `Γ^T(f)` by two-dimensional quadrature.
    pub fn gamma_a(&self, f: &PhaseSpaceFunction) -> Result<Operator> {
        check_function(f, self.max_degree)?;
        let nodes = self.grid.weighted_nodes(f, self.max_panel)?;
        let (re, im) = self.integrate(&nodes, false);
        Ok(hermitian_from_lower(&re, &im, self.cfg.dim, 1.0 / TAU))
    }

    /// `Γ^T(χ_{B×ℝ})` or `Γ^T(χ_{ℝ×B})` through the one-dimensional convolution
    /// `⟨φ|Γφ⟩ = ∫_B Σ_k t_k (|η_k(−·)|² ∗ |φ|²)(x) dx`, with `η_k` replaced by `Fη_k`
    /// and `φ` by `Fφ` on the momentum axis.
    pub fn gamma_a_cylinder(&self, axis: Axis, set: &BorelSet1D) -> Result<Operator> {
        let dim = self.cfg.dim;
        let radius = hermite_support_radius(dim);
        let cdfs: Vec<(f64, DensityCdf)> = self
            .sparse
            .iter()
            .map(|(t, eta)| {
                let coeffs: Vec<(usize, Complex64)> = match axis {
                    Axis::Position => eta.clone(),
                    Axis::Momentum => eta.iter().map(|&(n, c)| (n, c * FOURIER_PHASE.powu(n as u32))).collect(),
                };
                (*t, DensityCdf::new(coeffs, radius))
            })
            .collect();
        let pieces = set.pieces_within(f64::NEG_INFINITY, f64::INFINITY);
        let rule = Rule1D::gauss_legendre_max_width(-radius, radius, 0.25);
        let mut acc = vec![0.0; dim * dim];
        let mut h = vec![0.0; dim];
        for (x, w) in rule.iter() {
            // g(x) = Σ_k t_k ∫_B |η_k(x − y)|² dy = Σ_k t_k Σ_pieces [G_k(x − a) − G_k(x − b)].
            let g: f64 = cdfs
                .iter()
                .map(|(t, cdf)| t * pieces.iter().map(|&(a, b)| cdf.eval(x - a) - cdf.eval(x - b)).sum::<f64>())
                .sum();
            if g == 0.0 {
                continue;
            }
            fill_hermite_functions(x, &mut h);
            let wg = w * g;
            for n in 0..dim {
                let s = wg * h[n];
                for m in n..dim {
                    acc[n * dim + m] += s * h[m];
                }
            }
        }
        let zeros = vec![0.0; dim * dim];
        let a = hermitian_from_lower(&acc, &zeros, dim, 1.0);
        Ok(match axis {
            Axis::Position => a,
            Axis::Momentum => Operator::hermitian(fourier_conjugate(a.matrix()), 1e-12)?,
        })
    }
}

impl Quantizer for QuantizerA {
    fn kind(&self) -> MapKind {
        MapKind::A
    }
    fn cfg(&self) -> &TruncationConfig {
        &self.cfg
    }
    fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    fn level_masses(&self) -> &[f64] {
        &self.level_masses
    }
    fn quantize(&self, f: &PhaseSpaceFunction) -> Result<Operator> {
        self.gamma_a(f)
    }
}

/// Cumulative distribution of `|Σ c_n h_n(y)|²`, tabulated on panel boundaries and
/// completed inside a panel by a Gauss-Legendre rule on the partial interval.
struct DensityCdf {
    coeffs: Vec<(usize, Complex64)>,
    levels: usize,
    lo: f64,
    width: f64,
    cumulative: Vec<f64>,
}

impl DensityCdf {
    const PANEL: f64 = 0.25;

    fn new(coeffs: Vec<(usize, Complex64)>, radius: f64) -> Self {
        let levels = coeffs.iter().map(|(n, _)| n + 1).max().unwrap_or(1);
        let panels = (2.0 * radius / Self::PANEL).ceil() as usize;
        let width = 2.0 * radius / panels as f64;
        let mut cdf = DensityCdf { coeffs, levels, lo: -radius, width, cumulative: Vec::with_capacity(panels + 1) };
        let mut total = 0.0;
        cdf.cumulative.push(0.0);
        for i in 0..panels {
            let a = cdf.lo + i as f64 * width;
            total += cdf.integrate(a, a + width);
            cdf.cumulative.push(total);
        }
        cdf
    }

    fn density(&self, y: f64, h: &mut [f64]) -> f64 {
        fill_hermite_functions(y, h);
        self.coeffs.iter().map(|&(n, c)| c * h[n]).sum::<Complex64>().norm_sqr()
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let mut h = vec![0.0; self.levels];
        Rule1D::gauss_legendre(a, b, 1).iter().map(|(y, w)| w * self.density(y, &mut h)).sum()
    }

    fn eval(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return 1.0;
        }
        if y == f64::NEG_INFINITY || y <= self.lo {
            return 0.0;
        }
        let panels = self.cumulative.len() - 1;
        let i = ((y - self.lo) / self.width).floor() as usize;
        if i >= panels {
            return self.cumulative[panels];
        }
        let a = self.lo + i as f64 * self.width;
        self.cumulative[i] + self.integrate(a, y)
    }
}

/// Type (b) map `Γ^𝒫`.
#[derive(Debug, Clone)]
pub struct QuantizerWeyl {
    cfg: TruncationConfig,
    grid: PhaseGrid,
    calibration: f64,
    level_masses: Vec<f64>,
    max_degree: u32,
    max_panel: f64,
}

impl QuantizerWeyl {
    /// Fixes the calibration constant from `Γ^𝒫(1) = I` on the block and checks that
    /// each block level individually satisfies it to `cfg.tail_tol`.
    pub fn new(cfg: TruncationConfig, grid: PhaseGrid) -> Result<Self> {
        cfg.validate()?;
        grid.validate()?;
        let dim = cfg.dim;
        let nodes = grid.weighted_nodes(&PhaseSpaceFunction::ONE, DEFAULT_MAX_PANEL)?;
        let (raw, _) = accumulate(&nodes, dim, |ws, q, p, w| {
            let diag = ws.kern.diagonal(alpha(q, p) * 2.0);
            for (m, d) in diag.iter().enumerate() {
                ws.re[m * dim + m] += if m % 2 == 0 { w * d } else { -w * d };
            }
        });
        let block = cfg.block();
        let trace: f64 = (0..block).map(|m| raw[m * dim + m]).sum();
        if trace.is_nan() || trace <= 0.0 {
            return Err(Error::Numerical(format!("Weyl calibration trace {trace} is not positive")));
        }
        let calibration = block as f64 / trace;
        let level_masses: Vec<f64> = (0..block).map(|m| calibration * raw[m * dim + m]).collect();
        check_masses(&level_masses, cfg.tail_tol, "Weyl kernel leaves the grid")?;
        Ok(QuantizerWeyl {
            cfg,
            grid,
            calibration,
            level_masses,
            max_degree: DEFAULT_MAX_DEGREE,
            max_panel: DEFAULT_MAX_PANEL,
        })
    }

    pub fn with_max_degree(mut self, max_degree: u32) -> Self {
        self.max_degree = max_degree;
        self
    }

    /// The constant `c` in `Γ^𝒫(f) = c ∫∫ f W𝒫W*`.
    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    /// `Γ^𝒫(f)`, using `W(q, p) 𝒫 W(q, p)* = D(2α) 𝒫`.
    pub fn gamma_weyl(&self, f: &PhaseSpaceFunction) -> Result<Operator> {
        check_function(f, self.max_degree)?;
        let nodes = self.grid.weighted_nodes(f, self.max_panel)?;
        let (re, im) = accumulate(&nodes, self.cfg.dim, |ws, q, p, w| {
            ws.kern.accumulate_displaced_parity(alpha(q, p) * 2.0, w, &mut ws.re, &mut ws.im);
        });
        Ok(hermitian_from_lower(&re, &im, self.cfg.dim, self.calibration))
    }
}

impl Quantizer for QuantizerWeyl {
    fn kind(&self) -> MapKind {
        MapKind::Weyl
    }
    fn cfg(&self) -> &TruncationConfig {
        &self.cfg
    }
    fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    fn level_masses(&self) -> &[f64] {
        &self.level_masses
    }
    fn quantize(&self, f: &PhaseSpaceFunction) -> Result<Operator> {
        self.gamma_weyl(f)
    }
}

/// Spectral diagnostics for membership in the effect interval `[0, I]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectReport {
    pub min_eig: f64,
    pub max_eig: f64,
    /// `‖A² − A‖`.
    pub proj_defect: f64,
    pub hermiticity_defect: f64,
}

impl EffectReport {
    pub fn is_effect(&self, tol: f64) -> bool {
        self.min_eig >= -tol && self.max_eig <= 1.0 + tol
    }
}

pub fn effect_report(a: &Operator) -> EffectReport {
    let hermiticity_defect = a.hermiticity_defect();
    let sym = Operator::hermitian(a.matrix().clone(), f64::INFINITY).expect("symmetrized");
    let eig = sym.eigenvalues();
    let proj_defect = eig.iter().fold(0.0f64, |m, l| m.max((l * l - l).abs()));
    EffectReport { min_eig: eig[0], max_eig: eig[eig.len() - 1], proj_defect, hermiticity_defect }
}

/// The unique POM with moment sequence `E[k] = A`, which exists exactly when
/// `0 ≤ A ≤ I`: `{0 ↦ I − A, 1 ↦ A}`.
pub fn quantize_question(a: &Operator, tol: f64) -> Result<DiscretePOM> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian { defect: a.hermiticity_defect(), tol });
    }
    let report = effect_report(a);
    if !report.is_effect(tol) {
        return Err(Error::SpectrumOutsideUnitInterval { min_eig: report.min_eig, max_eig: report.max_eig });
    }
    DiscretePOM::two_valued(a, tol)
}

/// `[Γ(f), Γ(f²), …, Γ(f^{k_max})]`. Powers equal to an earlier power (indicators)
/// reuse that operator.
pub fn moment_sequence(gamma: &dyn Quantizer, f: &PhaseSpaceFunction, k_max: u32) -> Result<Vec<Operator>> {
    let mut seen: Vec<(PhaseSpaceFunction, Operator)> = Vec::new();
    let mut out = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let fk = f.pow(k)?;
        let op = match seen.iter().find(|(g, _)| *g == fk) {
            Some((_, op)) => op.clone(),
            None => {
                let op = gamma.quantize(&fk)?;
                seen.push((fk, op.clone()));
                op
            }
        };
        out.push(op);
    }
    Ok(out)
}

/// Unsharp position or momentum observable: `Γ^T` of the bin cylinders
/// `(−∞, e_0), [e_0, e_1), …, [e_last, ∞)`. Inner bins are labelled by their
/// midpoints and the two outer bins by `e_0 − 1` and `e_last + 1`.
pub fn assemble_binned_observable(gamma: &QuantizerA, axis: Axis, edges: &[f64]) -> Result<DiscretePOM> {
    if edges.is_empty() {
        return Err(Error::InvalidConfig("binning needs at least one edge (two bins)".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("bin edges must be finite and strictly increasing".into()));
    }
    let (first, last) = (edges[0], edges[edges.len() - 1]);
    let mut bins = vec![(first - 1.0, BorelSet1D::less_than(first))];
    for w in edges.windows(2) {
        bins.push((
            0.5 * (w[0] + w[1]),
            BorelSet1D::from_intervals([crate::borel::Interval::new(w[0], w[1], true, false)]),
        ));
    }
    bins.push((last + 1.0, BorelSet1D::at_least(last)));
    let outcomes = bins
        .into_iter()
        .map(|(label, set)| Ok((label, gamma.gamma_a_cylinder(axis, &set)?)))
        .collect::<Result<Vec<_>>>()?;
    DiscretePOM::new(outcomes, POM_TOL)
}

/// `‖AB − BA‖`.
pub fn commutation_defect(a: &Operator, b: &Operator) -> f64 {
    a.mul(b).sub(&b.mul(a)).op_norm()
}
