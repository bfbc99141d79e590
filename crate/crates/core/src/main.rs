use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{error, info, warn, LevelFilter};

use singflow::diagnostics::{all_passed, Verdict};
use singflow::scenario::{self, Mode, RunOptions};

/// Singular gradient flows on the unit torus.
#[derive(Parser)]
#[command(name = "singflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the regularized resolvent problem for one datum.
    Elliptic(RunArgs),
    /// Run implicit Euler from an initial datum.
    Evolve(RunArgs),
    /// Build the Orlicz modulus of a field's gradient and dump it as JSON.
    Orlicz(RunArgs),
    /// Re-check stored reports; exits 1 if any applicable verdict fails.
    Verify {
        /// A report.json or a run directory.
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Concurrent sweep points.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed for the random generators; overrides the config unless swept.
    #[arg(long)]
    seed: Option<u64>,
}

fn init_logging() {
    let raw = std::env::var("SINGFLOW_LOG").unwrap_or_default();
    let (level, unknown) = match raw.as_str() {
        "" | "info" => (LevelFilter::Info, false),
        "quiet" => (LevelFilter::Off, false),
        "debug" => (LevelFilter::Debug, false),
        _ => (LevelFilter::Info, true),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    if unknown {
        warn!("SINGFLOW_LOG={raw} not recognized; use quiet, info or debug");
    }
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        let status = match (v.applicable, v.passed) {
            (false, _) => "n/a ",
            (true, true) => "pass",
            (true, false) => "FAIL",
        };
        let at = v.index.map(|i| format!(" @{i}")).unwrap_or_default();
        println!(
            "  {status}  {:<28} measured {:>12.5e}  bound {:>12.5e}  tol {:.1e}{at}",
            v.name, v.measured, v.bound, v.tolerance
        );
    }
}

fn run(mode: Mode, args: RunArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let opts = RunOptions {
        out: args.out.clone(),
        workers: args.workers,
        seed: args.seed,
    };
    let summary = scenario::run(mode, &text, &opts).with_context(|| format!("config {}", args.config.display()))?;
    let mut failed = false;
    for point in &summary.points {
        match point {
            Ok(p) => {
                info!("{} written to {}", mode.name(), p.dir.display());
                if !p.passed() {
                    warn!("{}: some verdicts failed", p.dir.display());
                }
            }
            Err(e) => {
                error!("{e}");
                failed = true;
            }
        }
    }
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn main() -> Result<ExitCode> {
    init_logging();
    let cli = Cli::parse();
    match cli.command {
        Command::Elliptic(a) => run(Mode::Elliptic, a),
        Command::Evolve(a) => run(Mode::Evolve, a),
        Command::Orlicz(a) => run(Mode::Orlicz, a),
        Command::Verify { report } => {
            let outcomes = scenario::verify(&report).with_context(|| format!("verifying {}", report.display()))?;
            let mut ok = true;
            for o in &outcomes {
                println!("{}", o.report.display());
                print_verdicts(&o.verdicts);
                ok &= all_passed(&o.verdicts);
            }
            println!("{}", if ok { "all applicable verdicts pass" } else { "verification FAILED" });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
