use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pomquant_cli::commands::{FieldBody, QuantizeBody, SampleBody, VerifyBody};
use pomquant_cli::RunConfig;
use pomquant_core::borel::BorelSet1D;
use pomquant_core::fock::{build_position, position_measure};
use pomquant_core::io::{load_operator_csv, Envelope};
use pomquant_core::{Operator, TruncationConfig};

fn pomquant(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pomquant")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn block_diff(file: &Path, reference: &Operator, k: usize) -> f64 {
    let m = Operator::general(load_operator_csv(file).unwrap());
    m.max_abs_diff_block(reference, k)
}

#[test]
fn weyl_rectangle_matches_position_measure() {
    let dir = tempfile::tempdir().unwrap();
    let o = pomquant(&["quantize", "--map", "weyl", "--function", "indicator:rect:[-1,2]xR"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = TruncationConfig::new(64).unwrap();
    let reference = position_measure(&cfg, &BorelSet1D::closed(-1.0, 2.0));
    assert!(block_diff(&dir.path().join("operator.csv"), &reference, 16) < 1e-5);
    let env: Envelope<QuantizeBody> = Envelope::read(&dir.path().join("quantize.json")).unwrap();
    assert!((env.body.calibration.unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-9);
    assert!(env.body.effect_report.unwrap().is_effect(1e-8));
}

#[test]
fn type_a_position_monomial_matches_q() {
    let dir = tempfile::tempdir().unwrap();
    let o = pomquant(&["quantize", "--map", "a", "--T", "fock:0", "--function", "monomial:1:0"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let q = build_position(&TruncationConfig::new(64).unwrap());
    assert!(block_diff(&dir.path().join("operator.csv"), &q, 16) < 1e-5);
    let env: Envelope<QuantizeBody> = Envelope::read(&dir.path().join("quantize.json")).unwrap();
    assert!(env.body.effect_report.is_none());
}

#[test]
fn matrix_file_generator_matches_fock_projector() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    fs::write(&t, "row,col,re,im\n0,0,1,0\n").unwrap();
    let spec = format!("file:{}", t.display());
    let args =
        ["quantize", "--dim", "32", "--grid-half-width", "12", "--grid-points", "129", "--function", "monomial:0:2"];
    let a = pomquant(&[&args[..], &["--T", &spec]].concat(), &dir.path().join("file"));
    let b = pomquant(&[&args[..], &["--T", "fock:0"]].concat(), &dir.path().join("fock"));
    assert_eq!((code(&a), code(&b)), (0, 0), "{}", String::from_utf8_lossy(&a.stderr));
    let fa = fs::read(dir.path().join("file/operator.csv")).unwrap();
    let fb = fs::read(dir.path().join("fock/operator.csv")).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn weyl_sector_reports_and_refuses_a_pom() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["quantize", "--map", "weyl", "--function", "indicator:sector:90:180"];
    let o = pomquant(&args, dir.path());
    assert_eq!(code(&o), 0);
    let env: Envelope<QuantizeBody> = Envelope::read(&dir.path().join("quantize.json")).unwrap();
    let r = env.body.effect_report.unwrap();
    assert!(r.min_eig < -0.05 || r.max_eig > 1.05, "{r:?}");
    assert!(env.body.note.unwrap().contains("question quantization fails"));
    let o = pomquant(&[&args[..], &["--pom"]].concat(), &dir.path().join("pom"));
    assert_eq!(code(&o), 4);
}

#[test]
fn type_a_question_yields_a_pom() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        pomquant(&["quantize", "--dim", "32", "--grid-half-width", "12", "--grid-points", "129", "--pom"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let env: Envelope<QuantizeBody> = Envelope::read(&dir.path().join("quantize.json")).unwrap();
    let pom = env.body.pom.unwrap();
    assert_eq!(pom.iter().map(|e| e.label).collect::<Vec<_>>(), vec![0.0, 1.0]);
    let e0 = load_operator_csv(&dir.path().join(&pom[0].matrix)).unwrap();
    let e1 = load_operator_csv(&dir.path().join(&pom[1].matrix)).unwrap();
    let sum = Operator::general(e0 + e1);
    assert!(sum.max_abs_diff(&Operator::identity(32)) < 1e-12);
}

#[test]
fn wigner_and_husimi_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = pomquant(&["wigner", "--state", "fock:1"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("normalization"));
    let env: Envelope<FieldBody> = Envelope::read(&dir.path().join("wigner.json")).unwrap();
    assert!(env.body.min <= -0.5);
    assert!((env.body.normalization - 1.0).abs() < 1e-6);
    let csv = fs::read_to_string(dir.path().join("wigner.csv")).unwrap();
    assert!(csv.starts_with("q,p,value\n"));
    assert_eq!(csv.lines().count(), 1 + 257 * 257);
    let pgm = fs::read(dir.path().join("wigner.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n# value = "));

    let o = pomquant(&["husimi", "--state", "fock:0"], dir.path());
    assert_eq!(code(&o), 0);
    let env: Envelope<FieldBody> = Envelope::read(&dir.path().join("husimi.json")).unwrap();
    assert!(env.body.min >= 0.0);
    // |⟨h_0|W(0,0) h_0⟩|² = 1 at the origin, which is a grid node.
    assert!((env.body.max - 1.0).abs() < 1e-12);
}

#[test]
fn sampling_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sample",
        "--dim",
        "32",
        "--grid-half-width",
        "12",
        "--grid-points",
        "129",
        "--samples",
        "50000",
        "--seed",
        "9",
    ];
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(code(&pomquant(&args, dir.path())), 0);
    let first = (read("sample.json"), read("counts.csv"));
    assert_eq!(code(&pomquant(&args, dir.path())), 0);
    assert!(first == (read("sample.json"), read("counts.csv")));
    let env: Envelope<SampleBody> = Envelope::read(&dir.path().join("sample.json")).unwrap();
    assert!(env.body.report.max_deviation < 5.0);
    assert_eq!(env.body.report.sample.n, 50_000);
}

#[test]
fn config_round_trips_through_envelopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    fs::write(
        &cfg_path,
        r#"{
            "dim": 24,
            "grid": {"q_min": -11, "q_max": 11, "p_min": -11, "p_max": 11, "n_q": 97, "n_p": 97, "rule": "midpoint-uniform"},
            "generator": {"kind": "fock-diagonal", "weights": [[0, 0.75], [1, 0.25]]},
            "function": "indicator:disc:0.5:0:2",
            "state": "random:3",
            "seed": 4
        }"#,
    )
    .unwrap();
    let o = pomquant(&["quantize", "--config", cfg_path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let env: Envelope<QuantizeBody> = Envelope::read(&dir.path().join("quantize.json")).unwrap();
    let mut expected = RunConfig::load(&cfg_path).unwrap();
    expected.output_dir = dir.path().to_path_buf();
    assert_eq!(env.body.config, expected);
    let text = serde_json::to_string(&env.body.config).unwrap();
    assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), expected);

    let o = pomquant(&["config", "--config", cfg_path.to_str().unwrap()], dir.path());
    let printed: RunConfig = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, expected);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["quantize", "--dim", "1"][..],
        &["quantize", "--function", "bogus"],
        &["quantize", "--function", "monomial:5:0"],
        &["quantize", "--T", "diag:0=0.5,1=0.6"],
        &["wigner", "--state", "fock:99"],
        &["sample", "--function", "monomial:1:0"],
        &["verify", "--only", "nonsense"],
        &["quantize", "--map", "c"],
    ] {
        assert_eq!(code(&pomquant(args, dir.path())), 2, "{args:?}");
    }
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"dimension": 8}"#).unwrap();
    assert_eq!(code(&pomquant(&["quantize", "--config", bad.to_str().unwrap()], dir.path())), 2);
    assert_eq!(code(&pomquant(&["quantize", "--config", "/nonexistent.json"], dir.path())), 2);
}

#[test]
fn tail_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = pomquant(&["verify", "--dim", "4"], dir.path());
    assert_eq!(code(&o), 3);
    let env: Envelope<VerifyBody> = Envelope::read(&dir.path().join("verify.json")).unwrap();
    assert!(!env.body.verdict.passed);
    assert_eq!(env.body.verdict.checks[0].name, "truncation-tail");
    assert_eq!(code(&pomquant(&["wigner", "--grid-half-width", "3", "--state", "fock:10"], dir.path())), 3);
    assert_eq!(code(&pomquant(&["quantize", "--grid-half-width", "4"], dir.path())), 3);
}

#[test]
fn verify_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = pomquant(&["verify", "--only", "fock,marginal-identities"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let env: Envelope<VerifyBody> = Envelope::read(&dir.path().join("verify.json")).unwrap();
    let groups: std::collections::BTreeSet<_> = env.body.verdict.checks.iter().map(|c| c.group.as_str()).collect();
    assert_eq!(groups.into_iter().collect::<Vec<_>>(), vec!["fock", "marginal-identities"]);
    assert!(env.body.verdict.checks.iter().all(|c| c.passed));
}
