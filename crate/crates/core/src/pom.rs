//! Finitely supported positive operator measures, their moments and noise.

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::operator::{max_abs, CMatrix, Operator};

/// Default tolerance for POM validity checks.
pub const POM_TOL: f64 = 1e-8;

/// Outcome-labelled effects summing to the identity.
#[derive(Debug, Clone)]
pub struct DiscretePOM {
    outcomes: Vec<(f64, Operator)>,
}

impl DiscretePOM {
    /// Checks that every effect has spectrum in `[−tol, 1 + tol]`, that the effects sum
    /// to `I` within `tol` entrywise, and that labels are finite and distinct.
    pub fn new(outcomes: Vec<(f64, Operator)>, tol: f64) -> Result<Self> {
        let first = outcomes.first().ok_or_else(|| Error::InvalidPom("no outcomes".into()))?;
        let dim = first.1.dim();
        let mut total = CMatrix::zeros(dim, dim);
        for (i, (label, effect)) in outcomes.iter().enumerate() {
            if !label.is_finite() {
                return Err(Error::InvalidPom(format!("label {label} is not finite")));
            }
            if outcomes[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::InvalidPom(format!("label {label} appears twice")));
            }
            if effect.dim() != dim {
                return Err(Error::InvalidPom("effects have different dimensions".into()));
            }
            if !effect.is_hermitian() {
                return Err(Error::InvalidPom(format!("effect for label {label} is not Hermitian")));
            }
            let eig = effect.eigenvalues();
            let (lo, hi) = (eig[0], eig[eig.len() - 1]);
            if lo < -tol || hi > 1.0 + tol {
                return Err(Error::InvalidPom(format!("effect for label {label} has spectrum [{lo:.3e}, {hi:.6}]")));
            }
            total += effect.matrix();
        }
        let defect = max_abs(&(total - CMatrix::identity(dim, dim)));
        if defect > tol {
            return Err(Error::InvalidPom(format!("effects sum to identity only within {defect:.3e}")));
        }
        Ok(DiscretePOM { outcomes })
    }

    /// The two-valued measure `{0 ↦ I − A, 1 ↦ A}`.
    pub fn two_valued(a: &Operator, tol: f64) -> Result<Self> {
        let complement = Operator::identity(a.dim()).sub(a);
        Self::new(vec![(0.0, complement), (1.0, a.clone())], tol)
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].1.dim()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.outcomes.iter().map(|(l, _)| *l).collect()
    }

    pub fn effects(&self) -> impl Iterator<Item = &Operator> {
        self.outcomes.iter().map(|(_, e)| e)
    }

    pub fn outcomes(&self) -> &[(f64, Operator)] {
        &self.outcomes
    }

    /// Merges runs of `group` consecutive outcomes, labelling each group by the mean label.
    pub fn coarsen(&self, group: usize, tol: f64) -> Result<Self> {
        if group == 0 {
            return Err(Error::InvalidPom("group size must be positive".into()));
        }
        let merged = self
            .outcomes
            .chunks(group)
            .map(|chunk| {
                let label = chunk.iter().map(|(l, _)| l).sum::<f64>() / chunk.len() as f64;
                let effect = chunk[1..].iter().fold(chunk[0].1.clone(), |acc, (_, e)| acc.add(e));
                (label, effect)
            })
            .collect();
        Self::new(merged, tol)
    }
}

/// `E[k] = Σ label^k · effect`; `E[0] = I`.
pub fn pom_moment(pom: &DiscretePOM, k: u32) -> Operator {
    if k == 0 {
        return Operator::identity(pom.dim());
    }
    pom.outcomes
        .iter()
        .fold(Operator::zeros(pom.dim()), |acc, (label, effect)| acc.add(&effect.scale(label.powi(k as i32))))
}

/// `N(E) = E[2] − E[1]²`.
pub fn noise_operator(pom: &DiscretePOM) -> Operator {
    let first = pom_moment(pom, 1);
    let square = Operator::hermitian(first.mul(&first).into_matrix(), f64::INFINITY).expect("Hermitian square");
    pom_moment(pom, 2).sub(&square)
}

/// `Var(E, φ) = Var(E[1], φ) + ⟨φ|N(E)φ⟩`, returned as `(total, sharp, noise)`.
pub fn variance_decomposition(pom: &DiscretePOM, phi: &FockState) -> Result<(f64, f64, f64)> {
    check_state(pom, phi)?;
    let probs = probabilities(pom, phi)?;
    let labels = pom.labels();
    let mean: f64 = labels.iter().zip(&probs).map(|(l, p)| l * p).sum();
    let total: f64 = labels.iter().zip(&probs).map(|(l, p)| (l - mean).powi(2) * p).sum();
    let first = pom_moment(pom, 1);
    let v = first.apply(phi.coeffs());
    let sharp = v.norm_squared() - first.expectation(phi).powi(2);
    let noise = noise_operator(pom).expectation(phi);
    Ok((total, sharp, noise))
}

/// True when `‖N(E)‖ ≤ tol`.
pub fn is_noiseless(pom: &DiscretePOM, tol: f64) -> bool {
    noise_operator(pom).op_norm() <= tol
}

/// `⟨φ|E_i φ⟩` for each outcome, in outcome order.
pub fn probabilities(pom: &DiscretePOM, phi: &FockState) -> Result<Vec<f64>> {
    check_state(pom, phi)?;
    Ok(pom.effects().map(|e| e.expectation(phi)).collect())
}

fn check_state(pom: &DiscretePOM, phi: &FockState) -> Result<()> {
    if phi.dim() != pom.dim() {
        return Err(Error::InvalidConfig(format!("state dimension {} != POM dimension {}", phi.dim(), pom.dim())));
    }
    if (phi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: phi.norm() });
    }
    Ok(())
}
