mod config;
mod experiments;
mod report;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, Overrides};
use experiments::{Experiment, Failure};

// Large short-lived matrices churn the system allocator's mmap path.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    name = "razak",
    version,
    about = "Build and check towers of Razak building blocks"
)]
struct Cli {
    /// Print the config, report and CSV formats and exit.
    #[arg(long)]
    schema: bool,
    /// JSON config file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Build or verify the tower.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// Run one of the numerical experiments.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Build the tower and write tower.json.
    Build,
    /// Check every connecting map.
    Verify,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Spectrum spread of the image of h across [0, 1].
    EigDensity,
    /// Oscillation of point traces against the branch spacing.
    TraceGap,
    /// Defect of the image of h^{1/n} as an approximate unit.
    ApproxUnit,
    /// Central embeddings into matrix tensor products.
    Central,
}

fn workers() -> Result<(), Failure> {
    let Ok(v) = std::env::var("RAZAK_WORKERS") else {
        return Ok(());
    };
    let n: usize =
        v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::Config(format!("RAZAK_WORKERS={v} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.schema {
        print!("{}", schema::SCHEMA);
        return ExitCode::SUCCESS;
    }
    let exp = match cli.command {
        Some(Command::Tower(TowerCmd::Build)) => Experiment::Build,
        Some(Command::Tower(TowerCmd::Verify)) => Experiment::Verify,
        Some(Command::Experiment(ExperimentCmd::EigDensity)) => Experiment::EigDensity,
        Some(Command::Experiment(ExperimentCmd::TraceGap)) => Experiment::TraceGap,
        Some(Command::Experiment(ExperimentCmd::ApproxUnit)) => Experiment::ApproxUnit,
        Some(Command::Experiment(ExperimentCmd::Central)) => Experiment::Central,
        None => {
            eprintln!("no command given; see --help");
            return ExitCode::from(2);
        }
    };
    let overrides = Overrides {
        depth: cli.depth,
        grid: cli.grid,
        out: cli.out,
        seed: cli.seed,
    };
    let result = workers()
        .and_then(|_| Config::load(cli.config.as_deref(), overrides).map_err(Failure::Config))
        .and_then(|cfg| experiments::run(exp, &cfg));
    match result {
        Ok(report) => {
            for inv in report.invariants.iter().filter(|i| !i.pass) {
                eprintln!("FAIL {}: {:e} vs {:e}", inv.name, inv.value, inv.bound);
            }
            let failed = report.invariants.iter().filter(|i| !i.pass).count();
            println!(
                "{}: {} invariants, {} failed",
                report.command,
                report.invariants.len(),
                failed
            );
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
