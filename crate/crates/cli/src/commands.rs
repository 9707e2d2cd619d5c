//! Subcommand implementations. Each returns the process exit code on success.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use pomquant_core::io::{
    output_path, save_counts_csv, save_field_csv, save_field_pgm, save_operator_csv, save_pom, Envelope, PomEntry,
};
use pomquant_core::measurement::moment_transfer_check;
use pomquant_core::phase_space::{generalized_distribution, wigner_transform};
use pomquant_core::quantizer::{effect_report, quantize_question};
use pomquant_core::verify::{run_verification, Bound, VerifyConfig};
use pomquant_core::{
    EffectReport, Error, Field, MapKind, MomentTransferReport, Quantizer, QuantizerA, QuantizerWeyl, Result, Verdict,
};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizeBody {
    pub config: RunConfig,
    pub operator_file: String,
    /// Weyl normalization constant, absent for type (a).
    pub calibration: Option<f64>,
    /// Diagonal of `Γ(1)` on the comparison block.
    pub level_masses: Vec<f64>,
    pub effect_report: Option<EffectReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pom: Option<Vec<PomEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldBody {
    pub config: RunConfig,
    pub csv_file: String,
    pub pgm_file: String,
    pub min: f64,
    pub max: f64,
    /// Grid integral of the field.
    pub integral: f64,
    /// Integral divided by its exact value for a normalized state.
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBody {
    pub config: RunConfig,
    pub counts_file: String,
    pub report: MomentTransferReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyBody {
    pub config: RunConfig,
    pub only: Vec<String>,
    pub verdict: Verdict,
}

enum Built {
    A(QuantizerA),
    Weyl(QuantizerWeyl),
}

impl Built {
    fn new(rc: &RunConfig) -> Result<Self> {
        let cfg = rc.truncation()?;
        Ok(match rc.map {
            MapKind::A => {
                let t = rc.generator.build(rc.dim)?;
                Built::A(QuantizerA::new(cfg, t, rc.grid.clone())?.with_max_degree(rc.max_degree))
            }
            MapKind::Weyl => Built::Weyl(QuantizerWeyl::new(cfg, rc.grid.clone())?.with_max_degree(rc.max_degree)),
        })
    }

    fn quantizer(&self) -> &dyn Quantizer {
        match self {
            Built::A(q) => q,
            Built::Weyl(q) => q,
        }
    }

    fn calibration(&self) -> Option<f64> {
        match self {
            Built::A(_) => None,
            Built::Weyl(q) => Some(q.calibration()),
        }
    }
}

fn out_dir(rc: &RunConfig) -> &Path {
    &rc.output_dir
}

pub fn quantize(rc: &RunConfig, with_pom: bool) -> Result<i32> {
    rc.validate()?;
    let f = rc.parsed_function()?;
    let built = Built::new(rc)?;
    let op = built.quantizer().quantize(&f)?;
    let operator_file = "operator.csv".to_string();
    save_operator_csv(&op, &output_path(out_dir(rc), &operator_file)?)?;

    let report = f.is_indicator().then(|| effect_report(&op));
    let mut note = None;
    let mut pom = None;
    let mut failure = None;
    if let Some(r) = &report {
        println!(
            "effect report: min_eig {:.6e}, max_eig {:.6e}, proj_defect {:.3e}",
            r.min_eig, r.max_eig, r.proj_defect
        );
        if !r.is_effect(rc.tolerances.pom_tol) {
            note = Some(format!(
                "spectrum [{:.6}, {:.6}] leaves [0, 1]: no operator measure has this moment sequence, so question quantization fails",
                r.min_eig, r.max_eig
            ));
        }
    }
    if with_pom {
        match quantize_question(&op, rc.tolerances.pom_tol) {
            Ok(p) => pom = Some(save_pom(&p, out_dir(rc), "effect")?),
            Err(e) => failure = Some(e),
        }
    }
    if let Some(n) = &note {
        println!("note: {n}");
    }
    let body = QuantizeBody {
        config: rc.clone(),
        operator_file,
        calibration: built.calibration(),
        level_masses: built.quantizer().level_masses().to_vec(),
        effect_report: report,
        note,
        pom,
    };
    let json = output_path(out_dir(rc), "quantize.json")?;
    Envelope::new("quantize", body).write(&json)?;
    println!("wrote {}", json.display());
    match failure {
        Some(e) => Err(e),
        None => Ok(0),
    }
}

fn write_field(rc: &RunConfig, name: &str, field: &Field, exact: f64) -> Result<i32> {
    let csv_file = format!("{name}.csv");
    let pgm_file = format!("{name}.pgm");
    save_field_csv(field, &output_path(out_dir(rc), &csv_file)?)?;
    save_field_pgm(field, &output_path(out_dir(rc), &pgm_file)?)?;
    let body = FieldBody {
        config: rc.clone(),
        csv_file,
        pgm_file,
        min: field.min(),
        max: field.max(),
        integral: field.integral,
        normalization: field.integral / exact,
    };
    println!("{name}: min {:.6e}, max {:.6e}, normalization {:.12}", body.min, body.max, body.normalization);
    let json = output_path(out_dir(rc), &format!("{name}.json"))?;
    Envelope::new(name, body).write(&json)?;
    println!("wrote {}", json.display());
    Ok(0)
}

pub fn wigner(rc: &RunConfig) -> Result<i32> {
    rc.validate()?;
    let field = wigner_transform(&rc.build_state()?, &rc.grid, &rc.truncation()?)?;
    write_field(rc, "wigner", &field, PI)
}

pub fn husimi(rc: &RunConfig) -> Result<i32> {
    rc.validate()?;
    let t = rc.generator.build(rc.dim)?;
    let field = generalized_distribution(&t, &rc.build_state()?, &rc.grid, &rc.truncation()?)?;
    write_field(rc, "husimi", &field, TAU)
}

pub fn sample(rc: &RunConfig) -> Result<i32> {
    rc.validate()?;
    let f = rc.parsed_function()?;
    if !f.is_indicator() {
        return Err(Error::InvalidConfig("sample needs an indicator function (a question variable)".into()));
    }
    let built = Built::new(rc)?;
    let report = moment_transfer_check(built.quantizer(), &f, &rc.build_state()?, rc.k_max, rc.samples, rc.seed)?;
    let counts_file = "counts.csv".to_string();
    save_counts_csv(&report.sample, &output_path(out_dir(rc), &counts_file)?)?;
    for (k, ((e, q), d)) in
        report.sample.empirical_moments.iter().zip(&report.quantized_moments).zip(&report.deviations).enumerate()
    {
        println!("moment {}: empirical {e:.6}, quantized {q:.6}, deviation {d:.2} sigma", k + 1);
    }
    let json = output_path(out_dir(rc), "sample.json")?;
    Envelope::new("sample", SampleBody { config: rc.clone(), counts_file, report }).write(&json)?;
    println!("wrote {}", json.display());
    Ok(0)
}

pub fn verify(rc: &RunConfig, only: &[String]) -> Result<i32> {
    rc.truncation()?;
    rc.grid.validate()?;
    let vc = VerifyConfig { cfg: rc.truncation()?, grid: rc.grid.clone(), seed: rc.seed, samples: rc.samples };
    let verdict = run_verification(&vc, only)?;
    for c in &verdict.checks {
        let op = match c.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let status = if c.passed { "PASS" } else { "FAIL" };
        match (&c.error, c.value, c.threshold) {
            (None, Some(v), Some(t)) => println!("{status}  {:<20} {:<38} {v:>12.4e} {op} {t:.1e}", c.group, c.name),
            (e, _, _) => {
                println!("{status}  {:<20} {:<38} {}", c.group, c.name, e.as_deref().unwrap_or("not evaluated"))
            }
        }
    }
    let failed = verdict.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", verdict.checks.len());
    let code = verdict.exit_code;
    let json = output_path(out_dir(rc), "verify.json")?;
    Envelope::new("verify", VerifyBody { config: rc.clone(), only: only.to_vec(), verdict }).write(&json)?;
    Ok(code)
}
