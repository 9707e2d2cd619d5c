use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pomquant_cli::commands;
use pomquant_cli::{GeneratorSpec, RunConfig, StateSpec};
use pomquant_core::{MapKind, PhaseGrid, Result};

/// Phase-space quantization on a truncated harmonic-oscillator basis.
///
/// Exit codes: 0 ok, 2 invalid configuration, 3 numerical or tail-mass failure,
/// 4 operator outside [0, I] (no operator measure exists).
#[derive(Parser)]
#[command(name = "pomquant", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Settings applied on top of the config file (or the defaults).
#[derive(Args)]
struct Overrides {
    /// JSON run configuration; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Number of basis levels.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Half width of the square integration grid.
    #[arg(long, global = true)]
    grid_half_width: Option<f64>,
    /// Midpoint cells per grid axis.
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Generating operator: fock:<n>, diag:<n>=<w>,... or file:<path>.
    #[arg(long, visible_alias = "T", global = true)]
    generator: Option<GeneratorSpec>,
    /// Function: monomial:<a>:<b>, constant, arrival-time or indicator:<region>.
    #[arg(long, global = true, allow_hyphen_values = true)]
    function: Option<String>,
    /// Quantization map: a or weyl.
    #[arg(long, global = true, value_parser = parse_map)]
    map: Option<MapKind>,
    /// State: fock:<n>, random or random:<levels>.
    #[arg(long, global = true)]
    state: Option<StateSpec>,
    #[arg(long, global = true)]
    tail_tol: Option<f64>,
    #[arg(long, global = true)]
    eig_tol: Option<f64>,
    #[arg(long, global = true)]
    pom_tol: Option<f64>,
    /// Largest monomial degree a + b.
    #[arg(long, global = true)]
    max_degree: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of simulated measurements.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Highest moment compared by `sample`.
    #[arg(long, global = true)]
    k_max: Option<u32>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize the configured function; writes operator.csv and quantize.json.
    Quantize {
        /// Also build the two-valued measure of a question variable (exit 4 if none exists).
        #[arg(long)]
        pom: bool,
    },
    /// Wigner transform of the configured state; writes wigner.{csv,pgm,json}.
    Wigner,
    /// Phase-space distribution of the state for the configured generator; writes husimi.{csv,pgm,json}.
    Husimi,
    /// Simulate measurements of a question variable and compare moments; writes sample.json and counts.csv.
    Sample,
    /// Run the invariant checks; writes verify.json.
    Verify {
        /// Restrict to these check groups (comma separated or repeated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Print the effective configuration as JSON.
    Config,
}

fn parse_map(s: &str) -> std::result::Result<MapKind, String> {
    match s {
        "a" | "type-a" => Ok(MapKind::A),
        "weyl" => Ok(MapKind::Weyl),
        _ => Err(format!("unknown map '{s}' (use a or weyl)")),
    }
}

impl Overrides {
    fn resolve(self) -> Result<RunConfig> {
        let mut rc = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.dim {
            rc.dim = v;
        }
        if self.grid_half_width.is_some() || self.grid_points.is_some() {
            let half = self.grid_half_width.unwrap_or(rc.grid.q_max);
            let n = self.grid_points.unwrap_or(rc.grid.n_q);
            rc.grid = PhaseGrid::square(half, n).with_rule(rc.grid.rule);
        }
        if let Some(v) = self.generator {
            rc.generator = v;
        }
        if let Some(v) = self.function {
            rc.function = v;
        }
        if let Some(v) = self.map {
            rc.map = v;
        }
        if let Some(v) = self.state {
            rc.state = v;
        }
        if let Some(v) = self.tail_tol {
            rc.tolerances.tail_tol = v;
        }
        if let Some(v) = self.eig_tol {
            rc.tolerances.eig_tol = v;
        }
        if let Some(v) = self.pom_tol {
            rc.tolerances.pom_tol = v;
        }
        if let Some(v) = self.max_degree {
            rc.max_degree = v;
        }
        if let Some(v) = self.seed {
            rc.seed = v;
        }
        if let Some(v) = self.samples {
            rc.samples = v;
        }
        if let Some(v) = self.k_max {
            rc.k_max = v;
        }
        if let Some(v) = self.out {
            rc.output_dir = v;
        }
        Ok(rc)
    }
}

fn run(cli: Cli) -> Result<i32> {
    let rc = cli.overrides.resolve()?;
    match cli.command {
        Command::Quantize { pom } => commands::quantize(&rc, pom),
        Command::Wigner => commands::wigner(&rc),
        Command::Husimi => commands::husimi(&rc),
        Command::Sample => commands::sample(&rc),
        Command::Verify { only } => commands::verify(&rc, &only),
        Command::Config => {
            rc.validate()?;
            println!("{}", serde_json::to_string_pretty(&rc)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
