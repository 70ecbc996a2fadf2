mod report;
mod scenario;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use report::Report;
use scenario::{ConfigError, Fields, Scenario};
use tasks::{Context, RunError};

const SCHEMA: &str = include_str!("../../../docs/scenario-schema.md");

#[derive(Parser)]
#[command(name = "geomqm", version, about = "Covariant lattice Schrödinger operators: build, reconstruct, analyse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json plus task artifacts.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every absolute tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Parse and check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Print the scenario schema.
    Schema,
}

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(path: &Path) -> Result<(Scenario, Fields), ConfigError> {
    let s = Scenario::load(path)?;
    s.validate()?;
    let fields = Fields::build(&s)?;
    Ok((s, fields))
}

fn config_error(path: &Path, e: &ConfigError) -> ExitCode {
    eprintln!("error: {}: {e}", path.display());
    ExitCode::from(EXIT_CONFIG)
}

fn run(path: &Path, out: &Path, seed: Option<u64>, tol_scale: f64) -> ExitCode {
    if !(tol_scale > 0.0) || !tol_scale.is_finite() {
        eprintln!("error: --tol-scale must be positive, got {tol_scale}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let scenario = match load(path) {
        Ok((s, _)) => s,
        Err(e) => return config_error(path, &e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    let seed = seed.unwrap_or(scenario.seed);
    let base_dir = path.parent().unwrap_or(Path::new("."));
    let ctx = Context { scenario: &scenario, base_dir, out, seed, tol_scale };
    let mut report = Report::new(scenario.task.name(), scenario.hash(), seed, tol_scale);

    let start = Instant::now();
    let outcome = tasks::run(&ctx, &mut report);
    if let Err(RunError::Config(e)) = &outcome {
        return config_error(path, e);
    }
    if let Err(e) = &outcome {
        report.error = Some(e.to_string());
    }
    report.finish(start.elapsed().as_secs_f64());

    let report_path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = std::fs::write(&report_path, text + "\n") {
        eprintln!("error: writing {}: {e}", report_path.display());
        return ExitCode::from(EXIT_CHECK);
    }

    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    for c in report.failed_checks() {
        eprintln!("check failed: {} = {} (threshold {})", c.name, c.value, c.threshold);
    }
    println!(
        "{} {}: {} of {} checks passed",
        report.task,
        if report.passed { "PASS" } else { "FAIL" },
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, seed, tol_scale } => run(&scenario, &out, seed, tol_scale),
        Command::Validate { scenario } => match load(&scenario) {
            Ok((s, fields)) => {
                println!(
                    "{}: ok (task {}, {} sites, hash {})",
                    scenario.display(),
                    s.task.name(),
                    fields.lattice.num_sites(),
                    s.hash()
                );
                ExitCode::SUCCESS
            }
            Err(e) => config_error(&scenario, &e),
        },
        Command::Schema => {
            print!("{SCHEMA}");
            ExitCode::SUCCESS
        }
    }
}
