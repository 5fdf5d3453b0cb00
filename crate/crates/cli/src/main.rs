//! `novikov`: run scenarios, check peakons, verify the acceptance criteria
//! and export monitor series.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use novikov::scenario::{
    emit_plots, exit, exit_code, parse_config, peakon_check, resolve_output_dir, run_scenario,
    ConfigError, ScenarioConfig, Violation,
};
use novikov::verify::verify;

#[derive(Parser)]
#[command(
    name = "novikov",
    version,
    about = "Pseudospectral laboratory for the multi-component Novikov system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and write monitors.csv, snapshots and manifest.json.
    Simulate {
        config: PathBuf,
        /// Run directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a peakon scenario, fit the crest speed and check the exact
    /// peakon against the weak formulation.
    PeakonCheck {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria on a scenario, or on the built-in
    /// protocol when none is given. Exits 1 when a criterion fails.
    Verify {
        config: Option<PathBuf>,
        /// Directory for the runs and `verify_report.json`.
        #[arg(long, default_value = "verify")]
        out: PathBuf,
    },
    /// Split a run's monitors.csv into one `time,<monitor>` CSV per monitor
    /// under `<run-dir>/plots`.
    EmitPlots { run_dir: PathBuf },
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        violations: vec![Violation {
            key: path.display().to_string(),
            message: format!("cannot read: {e}"),
        }],
    })?;
    parse_config(&text).with_context(|| format!("reading {}", path.display()))
}

/// Relative paths resolve against `NOVIKOV_OUT` when it is set.
fn output_root(path: &Path) -> PathBuf {
    match std::env::var_os("NOVIKOV_OUT") {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

fn run_dir(cfg: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    out.map(output_root)
        .unwrap_or_else(|| resolve_output_dir(cfg))
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("NOVIKOV_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError {
            violations: vec![Violation {
                key: "NOVIKOV_THREADS".into(),
                message: format!("expected a positive integer, got {value:?}"),
            }],
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("starting the worker pool")?;
    info!("using {threads} worker threads");
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let dir = run_dir(&cfg, out.as_deref());
            let run = run_scenario(&cfg, &dir)?;
            let m = &run.manifest;
            println!("termination: {}", run.report.termination.label());
            println!(
                "steps: {}, samples: {}, wall time: {:.2} s",
                m.steps, m.samples, m.wall_time_s
            );
            if !m.flags.is_empty() {
                println!("flags: {:?}", m.flags);
            }
            println!("output: {}", dir.display());
        }
        Command::PeakonCheck { config, out } => {
            let cfg = load_config(&config)?;
            let dir = run_dir(&cfg, out.as_deref());
            let (check, run) = peakon_check(&cfg, &dir)?;
            println!("termination: {}", run.report.termination.label());
            println!("expected speed: {:.10}", check.expected_speed);
            match (check.measured_speed, check.relative_error) {
                (Some(speed), Some(err)) => {
                    println!("measured speed: {speed:.10} (relative error {err:.3e})")
                }
                _ => println!("measured speed: unavailable"),
            }
            println!(
                "weak-form residual: {:.3e} exact, {:.3e} with the speed raised by 10%",
                check.weak_max_residual, check.weak_max_residual_perturbed
            );
            println!("output: {}", dir.display());
        }
        Command::Verify { config, out } => {
            let cfg = config.as_deref().map(load_config).transpose()?;
            let dir = output_root(&out);
            let report = verify(cfg.as_ref(), &dir)?;
            for c in &report.criteria {
                println!("{}", c.summary_line());
            }
            let path = dir.join("verify_report.json");
            std::fs::write(&path, report.to_json() + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            println!("report: {}", path.display());
            if !report.passed() {
                return Ok(1);
            }
        }
        Command::EmitPlots { run_dir } => {
            for path in emit_plots(&run_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(exit::OK)
}

/// Exit status for an error: configuration problems, numerical failures
/// and I/O failures each have their own code.
fn failure_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return exit::CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<novikov::Error>() {
            return exit_code(e);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return exit::IO;
        }
    }
    exit::IO
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            failure_code(&err)
        }
    };
    ExitCode::from(code as u8)
}
