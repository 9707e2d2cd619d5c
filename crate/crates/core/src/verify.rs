//! Named invariant checks, grouped so that subsets can be run on their own.

use std::f64::consts::SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::borel::BorelSet1D;
use crate::error::{Error, Result};
use crate::fock::{
    build_fourier, build_momentum, build_parity, build_position, hermite_functions, momentum_measure, position_measure,
    spectral_measure, FockState, TruncationConfig,
};
use crate::function::{PhaseSpaceFunction, Region};
use crate::grid::{PhaseGrid, PhasePoint};
use crate::measurement::{moment_transfer_check, sample_outcomes};
use crate::operator::{max_abs, CMatrix, Operator};
use crate::phase_space::{
    check_truncation_tail, generalized_distribution, weyl_operator, weyl_operator_product, wigner_transform,
    GeneratingOperator,
};
use crate::pom::{is_noiseless, noise_operator, pom_moment, variance_decomposition, DiscretePOM, POM_TOL};
use crate::quantizer::{
    assemble_binned_observable, commutation_defect, effect_report, quantize_question, Axis, QuantizerA, QuantizerWeyl,
};

pub const GROUPS: &[&str] = &[
    "fock",
    "weyl-operator",
    "distributions",
    "effects",
    "marginal-identities",
    "weyl-monomials",
    "fast-path",
    "questions",
    "noise",
    "sampling",
    "noncommutativity",
];

/// Largest displacement, per coordinate, used by the covariance checks.
const PROBE_SHIFT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub cfg: TruncationConfig,
    pub grid: PhaseGrid,
    pub seed: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub group: String,
    pub name: String,
    pub passed: bool,
    /// Absent when the check could not be evaluated.
    pub value: Option<f64>,
    pub bound: Bound,
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    /// 0 when every check passed, 3 otherwise.
    pub exit_code: i32,
    pub checks: Vec<CheckResult>,
}

struct Suite<'a> {
    only: &'a [String],
    checks: Vec<CheckResult>,
}

impl Suite<'_> {
    fn enabled(&self, group: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|g| g == group)
    }

    fn record(&mut self, group: &str, name: &str, value: f64, bound: Bound, threshold: f64) {
        let passed = match bound {
            Bound::AtMost => value <= threshold,
            Bound::AtLeast => value >= threshold,
        };
        self.checks.push(CheckResult {
            group: group.into(),
            name: name.into(),
            passed,
            value: Some(value),
            bound,
            threshold: Some(threshold),
            error: None,
        });
    }

    fn at_most(&mut self, group: &str, name: &str, value: f64, threshold: f64) {
        self.record(group, name, value, Bound::AtMost, threshold);
    }

    fn at_least(&mut self, group: &str, name: &str, value: f64, threshold: f64) {
        self.record(group, name, value, Bound::AtLeast, threshold);
    }

    fn fail(&mut self, group: &str, name: &str, err: &Error) {
        self.checks.push(CheckResult {
            group: group.into(),
            name: name.into(),
            passed: false,
            value: None,
            bound: Bound::AtMost,
            threshold: None,
            error: Some(err.to_string()),
        });
    }

    /// Runs a group body; an error aborts the group and is recorded as a failure.
    fn run(&mut self, group: &str, body: impl FnOnce(&mut Self) -> Result<()>) {
        if !self.enabled(group) {
            return;
        }
        if let Err(e) = body(self) {
            self.fail(group, "group-error", &e);
        }
    }
}

fn block_diff(a: &Operator, b: &Operator, k: usize) -> f64 {
    a.max_abs_diff_block(b, k)
}

fn cylinder(axis: Axis, set: &BorelSet1D) -> PhaseSpaceFunction {
    PhaseSpaceFunction::Indicator(match axis {
        Axis::Position => Region::position_cylinder(set.clone()),
        Axis::Momentum => Region::momentum_cylinder(set.clone()),
    })
}

fn hermite_roots(n: usize, half_width: f64) -> Vec<f64> {
    let h = |x: f64| hermite_functions(n + 1, x)[n];
    let steps = (2.0 * half_width / 1e-3).ceil() as usize;
    let mut roots = Vec::new();
    for i in 0..steps {
        let (mut lo, mut hi) = (-half_width + i as f64 * 1e-3, -half_width + (i + 1) as f64 * 1e-3);
        if h(lo) * h(hi) >= 0.0 {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if h(lo) * h(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Runs the enabled groups (`only` empty means all). A basis too small for the
/// probe displacements is reported as a single failing tail check.
pub fn run_verification(vc: &VerifyConfig, only: &[String]) -> Result<Verdict> {
    vc.cfg.validate()?;
    vc.grid.validate()?;
    if let Some(bad) = only.iter().find(|g| !GROUPS.contains(&g.as_str())) {
        return Err(Error::InvalidConfig(format!("unknown check group '{bad}'; known: {}", GROUPS.join(", "))));
    }
    let mut suite = Suite { only, checks: Vec::new() };
    let cfg = vc.cfg;
    let dim = cfg.dim;
    let k = cfg.block();

    let probe = PROBE_SHIFT * SQRT_2;
    if let Err(e) = check_truncation_tail(&cfg, probe) {
        suite.fail("precheck", "truncation-tail", &e);
        return Ok(finish(suite));
    }
    let h0 = GeneratingOperator::fock_projector(dim, 0)?;
    let qa = match QuantizerA::new(cfg, h0, vc.grid.clone()) {
        Ok(q) => q,
        Err(e) => {
            suite.fail("precheck", "grid-tail-type-a", &e);
            return Ok(finish(suite));
        }
    };
    let qw = match QuantizerWeyl::new(cfg, vc.grid.clone()) {
        Ok(q) => q,
        Err(e) => {
            suite.fail("precheck", "grid-tail-weyl", &e);
            return Ok(finish(suite));
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(vc.seed);
    let q_op = build_position(&cfg);
    let p_op = build_momentum(&cfg);
    let right_half = cylinder(Axis::Position, &BorelSet1D::at_least(0.0));
    let upper_half = cylinder(Axis::Momentum, &BorelSet1D::at_least(0.0));

    suite.run("fock", |s| {
        let comm = q_op.mul(&p_op).sub(&p_op.mul(&q_op));
        let target = CMatrix::identity(dim - 2, dim - 2) * num_complex::Complex64::new(0.0, 1.0);
        s.at_most("fock", "canonical-commutator", max_abs(&(comm.block(dim - 2) - target)), 1e-10);
        let f = build_fourier(&cfg);
        s.at_most("fock", "parity-is-fourier-squared", build_parity(&cfg).max_abs_diff(&f.mul(&f)), cfg.eig_tol);
        let roots = hermite_roots(dim, (2.0 * dim as f64 + 1.0).sqrt() + 1.0);
        let eig = q_op.eigenvalues();
        let err = if roots.len() == dim {
            roots.iter().zip(&eig).map(|(r, e)| (r - e).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        s.at_most("fock", "position-spectrum-is-hermite-roots", err, 1e-8);
        let whole = spectral_measure(&q_op, &BorelSet1D::closed(-1.0, 2.0), cfg.eig_tol)?;
        let left = spectral_measure(&q_op, &"[-1,0.5)".parse()?, cfg.eig_tol)?;
        let right = spectral_measure(&q_op, &BorelSet1D::closed(0.5, 2.0), cfg.eig_tol)?;
        s.at_most("fock", "spectral-measure-additive", left.add(&right).max_abs_diff(&whole), 1e-10);
        Ok(())
    });

    suite.run("weyl-operator", |s| {
        let far = PhasePoint::new(6.0, -6.0)?;
        let w = weyl_operator(far, &cfg)?;
        s.at_most("weyl-operator", "unitary", w.adjoint().mul(&w).max_abs_diff(&Operator::identity(dim)), 1e-8);
        let near = PhasePoint::new(0.7, -1.2)?;
        let paths = block_diff(&weyl_operator(near, &cfg)?, &weyl_operator_product(near, &cfg)?, k);
        s.at_most("weyl-operator", "exponential-matches-product", paths, 1e-8);
        let (a, b) = (PhasePoint::new(0.8, -0.3)?, PhasePoint::new(-0.4, 1.1)?);
        let lhs = weyl_operator(a, &cfg)?.mul(&weyl_operator(b, &cfg)?);
        let m = lhs.mul(&weyl_operator(PhasePoint::new(a.q + b.q, a.p + b.p)?, &cfg)?.adjoint()).block(k);
        let phase = m[(0, 0)];
        let defect = max_abs(&(m - CMatrix::identity(k, k) * phase)).max((phase.norm() - 1.0).abs());
        s.at_most("weyl-operator", "weyl-relation", defect, 1e-6);
        let w1 = weyl_operator(PhasePoint::new(1.0, 0.0)?, &cfg)?;
        let shift = w1.adjoint().mul(&q_op).mul(&w1).sub(&q_op);
        s.at_most(
            "weyl-operator",
            "shifts-position-by-plus-q",
            max_abs(&(shift.block(k) - CMatrix::identity(k, k))),
            1e-8,
        );
        Ok(())
    });

    suite.run("distributions", |s| {
        let w0 = wigner_transform(&FockState::basis(dim, 0), &vc.grid, &cfg)?;
        s.at_least("distributions", "wigner-h0-nonnegative", w0.min(), -1e-10);
        let w1 = wigner_transform(&FockState::basis(dim, 1), &vc.grid, &cfg)?;
        s.at_most("distributions", "wigner-h1-negative", w1.min(), -0.5);
        let phi = FockState::random(dim, k, &mut rng);
        let t = GeneratingOperator::fock_projector(dim, 0)?;
        let h = generalized_distribution(&t, &phi, &vc.grid, &cfg)?;
        s.at_least("distributions", "husimi-nonnegative", h.min(), -1e-10);
        s.at_most("distributions", "husimi-normalized", (h.integral / std::f64::consts::TAU - 1.0).abs(), 1e-6);
        Ok(())
    });

    let mut right_a = None;
    suite.run("effects", |s| {
        for (name, spec) in [
            ("half-plane", "indicator:halfplane:0:0"),
            ("rectangle", "indicator:rect:[-1,2]x[0,1]"),
            ("disc", "indicator:disc:0.5:0:2"),
            ("sector", "indicator:sector:90:180"),
        ] {
            let a = qa.gamma_a(&spec.parse()?)?;
            let r = effect_report(&a);
            s.at_least("effects", &format!("{name}-min-eig"), r.min_eig, -1e-8);
            s.at_most("effects", &format!("{name}-max-eig"), r.max_eig, 1.0 + 1e-8);
            s.at_least("effects", &format!("{name}-not-a-projection"), r.proj_defect, 1e-3);
        }
        let a = qa.gamma_a(&right_half)?;
        let region = Region::position_cylinder(BorelSet1D::at_least(0.0)).complement();
        let c = qa.gamma_a(&PhaseSpaceFunction::Indicator(region))?;
        s.at_most("effects", "complementation", block_diff(&a.add(&c), &Operator::identity(dim), k), 1e-6);
        let rect: PhaseSpaceFunction = "indicator:rect:[-1,1]x[0,2]".parse()?;
        let (q0, p0) = (PROBE_SHIFT / 2.0, -PROBE_SHIFT / 4.0);
        let moved = qa.gamma_a(&rect.translated(q0, p0)?)?;
        let w = weyl_operator(PhasePoint::new(q0, p0)?, &cfg)?;
        let conj = w.conjugate(&qa.gamma_a(&rect)?);
        s.at_most("effects", "covariance", block_diff(&moved, &conj, k), 1e-5);
        right_a = Some(a);
        Ok(())
    });

    suite.run("marginal-identities", |s| {
        for spec in ["[0,inf)", "[-1,2]", "(-inf,-0.5]u[1,3]"] {
            let set: BorelSet1D = spec.parse()?;
            let pos = qw.gamma_weyl(&cylinder(Axis::Position, &set))?;
            s.at_most(
                "marginal-identities",
                &format!("position-{spec}"),
                block_diff(&pos, &position_measure(&cfg, &set), k),
                1e-5,
            );
            let mom = qw.gamma_weyl(&cylinder(Axis::Momentum, &set))?;
            s.at_most(
                "marginal-identities",
                &format!("momentum-{spec}"),
                block_diff(&mom, &momentum_measure(&cfg, &set), k),
                1e-5,
            );
        }
        Ok(())
    });

    suite.run("weyl-monomials", |s| {
        for power in 1..=3u32 {
            let x = qw.gamma_weyl(&PhaseSpaceFunction::Monomial { a: power, b: 0 })?;
            s.at_most("weyl-monomials", &format!("x^{power}"), block_diff(&x, &q_op.powi(power), k), 1e-5);
            let y = qw.gamma_weyl(&PhaseSpaceFunction::Monomial { a: 0, b: power })?;
            s.at_most("weyl-monomials", &format!("y^{power}"), block_diff(&y, &p_op.powi(power), k), 1e-5);
        }
        Ok(())
    });

    suite.run("fast-path", |s| {
        let qa1 = QuantizerA::new(cfg, GeneratingOperator::fock_projector(dim, 1)?, vc.grid.clone())?;
        let set = BorelSet1D::closed(-1.0, 1.0);
        for axis in [Axis::Position, Axis::Momentum] {
            let fast = qa1.gamma_a_cylinder(axis, &set)?;
            let slow = qa1.gamma_a(&cylinder(axis, &set))?;
            s.at_most("fast-path", &format!("{axis:?}").to_lowercase(), fast.max_abs_diff(&slow), 1e-6);
        }
        Ok(())
    });

    suite.run("questions", |s| {
        let a = match &right_a {
            Some(a) => a.clone(),
            None => qa.gamma_a(&right_half)?,
        };
        let pom = quantize_question(&a, POM_TOL)?;
        let worst = (1..=5).map(|kk| pom_moment(&pom, kk).max_abs_diff(&a)).fold(0.0, f64::max);
        s.at_most("questions", "moments-equal-the-effect", worst, 0.0);
        let sector = qw.gamma_weyl(&"indicator:sector:90:180".parse()?)?;
        let r = effect_report(&sector);
        s.at_least("questions", "weyl-sector-leaves-unit-interval", (-r.min_eig).max(r.max_eig - 1.0), 0.05);
        let refused = matches!(quantize_question(&sector, POM_TOL), Err(Error::SpectrumOutsideUnitInterval { .. }));
        s.at_least("questions", "weyl-sector-has-no-pom", if refused { 1.0 } else { 0.0 }, 1.0);
        Ok(())
    });

    suite.run("noise", |s| {
        let a = match &right_a {
            Some(a) => a.clone(),
            None => qa.gamma_a(&right_half)?,
        };
        let unsharp = DiscretePOM::two_valued(&a, POM_TOL)?;
        s.at_least("noise", "unsharp-question-noise", noise_operator(&unsharp).op_norm(), 0.1);
        let proj = spectral_measure(&q_op, &BorelSet1D::at_least(0.0), cfg.eig_tol)?;
        let sharp = DiscretePOM::two_valued(&proj, POM_TOL)?;
        s.at_most("noise", "projection-noise", noise_operator(&sharp).op_norm(), 1e-8);
        s.at_least("noise", "projection-is-noiseless", if is_noiseless(&sharp, 1e-8) { 1.0 } else { 0.0 }, 1.0);
        let edges: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let binned = assemble_binned_observable(&qa, Axis::Position, &edges)?;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let phi = FockState::random(dim, k, &mut rng);
            let (total, sharp_part, noise) = variance_decomposition(&binned, &phi)?;
            worst = worst.max((total - sharp_part - noise).abs());
        }
        s.at_most("noise", "variance-decomposition", worst, 1e-8);
        s.at_least("noise", "noise-positive", noise_operator(&binned).eigenvalues()[0], -1e-8);
        let coarse_edges: Vec<f64> = (0..5).map(|i| -2.0 + i as f64).collect();
        let coarse = assemble_binned_observable(&qa, Axis::Position, &coarse_edges)?;
        let gain = noise_operator(&coarse).sub(&noise_operator(&binned));
        let least =
            (0..20).map(|_| gain.expectation(&FockState::random(dim, k, &mut rng))).fold(f64::INFINITY, f64::min);
        s.at_least("noise", "coarsening-adds-noise", least, -1e-10);
        let x = qa.gamma_a(&PhaseSpaceFunction::POSITION)?;
        let x2 = qa.gamma_a(&PhaseSpaceFunction::Monomial { a: 2, b: 0 })?;
        let n = x2.sub(&x.mul(&x));
        s.at_most(
            "noise",
            "husimi-position-noise-is-half",
            block_diff(&n, &Operator::identity(dim).scale(0.5), k),
            1e-5,
        );
        Ok(())
    });

    suite.run("sampling", |s| {
        let phi = FockState::basis(dim, 0);
        let report = moment_transfer_check(&qa, &right_half, &phi, 3, vc.samples, vc.seed)?;
        s.at_most("sampling", "moment-transfer-sigmas", report.max_deviation, 5.0);
        let pom = DiscretePOM::two_valued(&Operator::identity(dim).scale(0.5), POM_TOL)?;
        let a = sample_outcomes(&pom, &phi, vc.samples, vc.seed, 2)?;
        let b = sample_outcomes(&pom, &phi, vc.samples, vc.seed, 2)?;
        s.at_least("sampling", "deterministic", if a == b { 1.0 } else { 0.0 }, 1.0);
        Ok(())
    });

    suite.run("noncommutativity", |s| {
        let a = match &right_a {
            Some(a) => a.clone(),
            None => qa.gamma_a(&right_half)?,
        };
        let b = qa.gamma_a(&upper_half)?;
        s.at_least("noncommutativity", "type-a", commutation_defect(&a, &b), 0.05);
        let wa = qw.gamma_weyl(&right_half)?;
        let wb = qw.gamma_weyl(&upper_half)?;
        s.at_least("noncommutativity", "weyl", commutation_defect(&wa, &wb), 0.05);
        Ok(())
    });

    Ok(finish(suite))
}

fn finish(suite: Suite<'_>) -> Verdict {
    let passed = suite.checks.iter().all(|c| c.passed);
    Verdict { passed, exit_code: if passed { 0 } else { 3 }, checks: suite.checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            cfg: TruncationConfig::new(48).unwrap(),
            grid: PhaseGrid::square(14.0, 129),
            seed: 7,
            samples: 20_000,
        }
    }

    #[test]
    fn filtered_groups_pass_at_moderate_size() {
        let only: Vec<String> =
            ["fock", "weyl-operator", "marginal-identities"].iter().map(|s| s.to_string()).collect();
        let v = run_verification(&small(), &only).unwrap();
        assert!(v.passed, "{:#?}", v.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        assert!(v.checks.iter().all(|c| only.contains(&c.group)));
    }

    #[test]
    fn tiny_basis_fails_the_tail_precheck() {
        let mut vc = small();
        vc.cfg = TruncationConfig::new(4).unwrap();
        let v = run_verification(&vc, &[]).unwrap();
        assert!(!v.passed);
        assert_eq!(v.exit_code, 3);
        assert_eq!(v.checks[0].name, "truncation-tail");
    }

    #[test]
    fn unknown_group_is_a_config_error() {
        let err = run_verification(&small(), &["nonsense".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
