//! One-dimensional quadrature rules shared by the phase-space integrals.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

/// Gauss-Legendre order used inside each panel.
pub const PANEL_ORDER: usize = 16;

fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let order = NonZeroUsize::new(PANEL_ORDER).expect("nonzero order");
        let mut rule: Vec<(f64, f64)> = GaussLegendre::new(order).iter().map(|(x, w)| (*x, *w)).collect();
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        rule
    })
}

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Equal cells on `[a, b]`, each sampled at its centre.
    pub fn midpoint(a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / n as f64;
        Rule1D { nodes: (0..n).map(|i| a + (i as f64 + 0.5) * h).collect(), weights: vec![h; n] }
    }

    /// Composite Gauss-Legendre on `[a, b]` with `panels` equal panels.
    pub fn gauss_legendre(a: f64, b: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let reference = reference_rule();
        let mut rule = Rule1D {
            nodes: Vec::with_capacity(panels * PANEL_ORDER),
            weights: Vec::with_capacity(panels * PANEL_ORDER),
        };
        for k in 0..panels {
            let lo = a + k as f64 * width;
            let mid = lo + 0.5 * width;
            for &(x, w) in reference {
                rule.nodes.push(mid + 0.5 * width * x);
                rule.weights.push(0.5 * width * w);
            }
        }
        rule
    }

    /// Composite Gauss-Legendre on `[a, b]` whose panels are no wider than `max_width`.
    pub fn gauss_legendre_max_width(a: f64, b: f64, max_width: f64) -> Self {
        if b <= a {
            return Rule1D::default();
        }
        let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
        Rule1D::gauss_legendre(a, b, panels)
    }
}
