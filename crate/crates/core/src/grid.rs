//! Phase-space points, integration grids and the node sets fed to the quantizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::PhaseSpaceFunction;
use crate::quad::{Rule1D, PANEL_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        if !(q.is_finite() && p.is_finite()) {
            return Err(Error::InvalidConfig(format!("phase point ({q}, {p}) is not finite")));
        }
        Ok(PhasePoint { q, p })
    }

    pub const ORIGIN: PhasePoint = PhasePoint { q: 0.0, p: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridRule {
    /// `n` equal cells per axis, sampled at cell centres.
    MidpointUniform,
    /// Composite 16-point Gauss-Legendre; `n` is rounded up to a multiple of 16.
    GaussLegendreTensor,
}

/// Rectangular tensor grid on `[q_min, q_max] × [p_min, p_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    pub rule: GridRule,
}

impl Default for PhaseGrid {
    /// `[-16, 16]²` with 257 midpoint cells per axis: every level of a 64-dimensional
    /// basis keeps less than `1e-9` of its phase-space weight outside the square.
    fn default() -> Self {
        PhaseGrid::square(16.0, 257)
    }
}

impl PhaseGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        PhaseGrid {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            n_q: n,
            n_p: n,
            rule: GridRule::MidpointUniform,
        }
    }

    pub fn with_rule(mut self, rule: GridRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.q_min, self.q_max, self.p_min, self.p_max].iter().all(|v| v.is_finite());
        if !finite || self.q_min >= self.q_max || self.p_min >= self.p_max {
            return Err(Error::InvalidConfig(format!(
                "grid extents [{}, {}] x [{}, {}] are not ordered finite intervals",
                self.q_min, self.q_max, self.p_min, self.p_max
            )));
        }
        if self.n_q == 0 || self.n_p == 0 {
            return Err(Error::InvalidConfig("grid needs at least one node per axis".into()));
        }
        Ok(())
    }

    fn axis_rule(&self, lo: f64, hi: f64, n: usize) -> Rule1D {
        match self.rule {
            GridRule::MidpointUniform => Rule1D::midpoint(lo, hi, n),
            GridRule::GaussLegendreTensor => Rule1D::gauss_legendre(lo, hi, n.div_ceil(PANEL_ORDER)),
        }
    }

    pub fn q_rule(&self) -> Rule1D {
        self.axis_rule(self.q_min, self.q_max, self.n_q)
    }

    pub fn p_rule(&self) -> Rule1D {
        self.axis_rule(self.p_min, self.p_max, self.n_p)
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        (self.q_min..=self.q_max).contains(&q) && (self.p_min..=self.p_max).contains(&p)
    }

    /// Index of the nearest node of the base rule, or `None` outside the grid.
    pub fn nearest_node(&self, q: f64, p: f64) -> Option<(usize, usize)> {
        if !self.contains(q, p) {
            return None;
        }
        let nearest = |rule: &Rule1D, x: f64| {
            let i = rule.nodes.partition_point(|&n| n < x);
            match i {
                0 => 0,
                i if i == rule.len() => rule.len() - 1,
                i if (rule.nodes[i] - x).abs() < (x - rule.nodes[i - 1]).abs() => i,
                i => i - 1,
            }
        };
        Some((nearest(&self.q_rule(), q), nearest(&self.p_rule(), p)))
    }

    /// Quadrature rule on `[a, b] ∩ axis`. The base rule is reused when the piece spans
    /// the whole axis; otherwise Gauss-Legendre panels start and end exactly on the
    /// piece boundaries so that a jump of the integrand costs no accuracy.
    fn piece_rule(&self, lo: f64, hi: f64, n: usize, a: f64, b: f64, max_panel: f64) -> Rule1D {
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return Rule1D::default();
        }
        if a <= lo && b >= hi {
            return self.axis_rule(lo, hi, n);
        }
        Rule1D::gauss_legendre_max_width(a, b, max_panel)
    }

    /// Nodes and weights `w_i · f(q_i, p_i)` for integrating `f` against a smooth kernel.
    ///
    /// Indicators of regions that decompose into axis-aligned rectangles are integrated
    /// with boundary-aligned panels of width at most `max_panel`; every other function
    /// is sampled at the nodes of the base grid.
    pub fn weighted_nodes(&self, f: &PhaseSpaceFunction, max_panel: f64) -> Result<WeightedNodes> {
        self.validate()?;
        if matches!(f, PhaseSpaceFunction::ArrivalTime) {
            return Err(Error::Unsupported("the arrival-time variable is unbounded near p = 0".into()));
        }
        let mut out = WeightedNodes::default();
        if let PhaseSpaceFunction::Indicator(region) = f {
            if let Some(rects) = region.rectangles() {
                for (bq, bp) in rects {
                    for (qa, qb) in bq.pieces_within(self.q_min, self.q_max) {
                        let qr = self.piece_rule(self.q_min, self.q_max, self.n_q, qa, qb, max_panel);
                        for (pa, pb) in bp.pieces_within(self.p_min, self.p_max) {
                            let pr = self.piece_rule(self.p_min, self.p_max, self.n_p, pa, pb, max_panel);
                            for (q, wq) in qr.iter() {
                                for (p, wp) in pr.iter() {
                                    out.push(q, p, wq * wp);
                                }
                            }
                        }
                    }
                }
                return Ok(out);
            }
        }
        let qr = self.q_rule();
        let pr = self.p_rule();
        for (q, wq) in qr.iter() {
            for (p, wp) in pr.iter() {
                let v = f.eval(q, p);
                if !v.is_finite() {
                    return Err(Error::Unsupported(format!(
                        "function is unbounded on the grid (value {v} at ({q}, {p}))"
                    )));
                }
                if v != 0.0 {
                    out.push(q, p, wq * wp * v);
                }
            }
        }
        Ok(out)
    }
}

/// Flat list of quadrature nodes with their (function-weighted) weights.
#[derive(Debug, Clone, Default)]
pub struct WeightedNodes {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
}

impl WeightedNodes {
    fn push(&mut self, q: f64, p: f64, w: f64) {
        self.q.push(q);
        self.p.push(p);
        self.w.push(w);
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }
}
