//! Monte-Carlo sampling of POM outcome statistics.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::function::PhaseSpaceFunction;
use crate::grid::PhasePoint;
use crate::pom::{pom_moment, probabilities, DiscretePOM, POM_TOL};
use crate::quantizer::{moment_sequence, quantize_question, Quantizer};

/// Draws per shard; shard `s` uses stream `s` of the seeded generator.
const SHARD: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCount {
    pub label: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub counts: Vec<OutcomeCount>,
    /// `(1/n) Σ label^k` for `k = 1..=k_max`.
    pub empirical_moments: Vec<f64>,
    /// `⟨φ|E[k]φ⟩`.
    pub predicted_moments: Vec<f64>,
    /// `√((⟨E[2k]⟩ − ⟨E[k]⟩²)/n)`, from the predicted distribution.
    pub std_errors: Vec<f64>,
    pub seed: u64,
    pub n: u64,
}

impl SampleReport {
    /// `|empirical − predicted| / std_error` per moment; an exact match with zero
    /// standard error counts as zero deviations.
    pub fn deviations(&self) -> Vec<f64> {
        deviations(&self.empirical_moments, &self.predicted_moments, &self.std_errors)
    }
}

fn deviations(empirical: &[f64], predicted: &[f64], std_errors: &[f64]) -> Vec<f64> {
    empirical
        .iter()
        .zip(predicted)
        .zip(std_errors)
        .map(|((e, p), s)| {
            let diff = (e - p).abs();
            if *s > 0.0 {
                diff / s
            } else if diff <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Draws `n` i.i.d. outcomes from `probabilities(pom, φ)`. Shards of `SHARD` draws
/// run in parallel, each on its own stream of a ChaCha8 generator seeded with
/// `seed`, so counts depend only on `(seed, inputs)`.
pub fn sample_outcomes(pom: &DiscretePOM, phi: &FockState, n: u64, seed: u64, k_max: u32) -> Result<SampleReport> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    let probs = probabilities(pom, phi)?;
    let weights: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::Numerical(format!("outcome distribution: {e}")))?;
    let shards = n.div_ceil(SHARD);
    let per_shard: Vec<Vec<u64>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let draws = SHARD.min(n - s * SHARD);
            let mut counts = vec![0u64; weights.len()];
            for _ in 0..draws {
                counts[dist.sample(&mut rng)] += 1;
            }
            counts
        })
        .collect();
    let mut totals = vec![0u64; weights.len()];
    for shard in per_shard {
        totals.iter_mut().zip(shard).for_each(|(t, c)| *t += c);
    }
    let labels = pom.labels();
    let nf = n as f64;
    let mut empirical = Vec::new();
    let mut predicted = Vec::new();
    let mut std_errors = Vec::new();
    for k in 1..=k_max {
        let ki = k as i32;
        empirical.push(labels.iter().zip(&totals).map(|(l, c)| l.powi(ki) * *c as f64).sum::<f64>() / nf);
        let mean = pom_moment(pom, k).expectation(phi);
        let second = pom_moment(pom, 2 * k).expectation(phi);
        predicted.push(mean);
        std_errors.push(((second - mean * mean).max(0.0) / nf).sqrt());
    }
    Ok(SampleReport {
        counts: labels.into_iter().zip(totals).map(|(label, count)| OutcomeCount { label, count }).collect(),
        empirical_moments: empirical,
        predicted_moments: predicted,
        std_errors,
        seed,
        n,
    })
}

/// `f(q, p)^k`, the `k`-th moment of the point measure at `(q, p)`.
pub fn classical_moment(f: &PhaseSpaceFunction, pt: PhasePoint, k: u32) -> Result<f64> {
    let v = f.eval_at(pt);
    if !v.is_finite() {
        return Err(Error::Unsupported(format!("{f} is undefined at ({}, {})", pt.q, pt.p)));
    }
    Ok(v.powi(k as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTransferReport {
    /// `⟨φ|Γ(f^k)φ⟩` for `k = 1..=k_max`.
    pub quantized_moments: Vec<f64>,
    pub sample: SampleReport,
    /// `|empirical_k − ⟨φ|Γ(f^k)φ⟩| / std_error_k`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Quantizes the question `f`, builds its two-valued POM, samples it, and compares
/// the empirical moments with `⟨φ|Γ(f^k)φ⟩`.
pub fn moment_transfer_check(
    gamma: &dyn Quantizer,
    f: &PhaseSpaceFunction,
    phi: &FockState,
    k_max: u32,
    n: u64,
    seed: u64,
) -> Result<MomentTransferReport> {
    if !f.is_indicator() {
        return Err(Error::InvalidConfig("moment transfer is checked for question variables only".into()));
    }
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be positive".into()));
    }
    let ops = moment_sequence(gamma, f, k_max)?;
    let pom = quantize_question(&ops[0], POM_TOL)?;
    let sample = sample_outcomes(&pom, phi, n, seed, k_max)?;
    let quantized: Vec<f64> = ops.iter().map(|a| a.expectation(phi)).collect();
    let devs = deviations(&sample.empirical_moments, &quantized, &sample.std_errors);
    let max_deviation = devs.iter().copied().fold(0.0, f64::max);
    Ok(MomentTransferReport { quantized_moments: quantized, sample, deviations: devs, max_deviation })
}
