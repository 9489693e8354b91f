use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use epiflux::cli::{execute, load_config, Failure, Overrides, StudyKind};

#[derive(Parser)]
#[command(name = "epiflux", version, about = "Seasonal SIR simulation and limit-theorem studies")]
struct Cli {
    #[command(subcommand)]
    study: Study,
}

#[derive(Subcommand)]
enum Study {
    /// One exact sample path on a grid, with the ODE alongside
    Simulate(StudyArgs),
    /// Mean-field ODE solution
    Ode(StudyArgs),
    /// Sup-norm deviation from the ODE across population sizes
    Ensemble(StudyArgs),
    /// Marginal normality of the scaled fluctuations at one time
    Fluctuation(StudyArgs),
    /// Log-log regression of infective fluctuation size against N
    Scaling(StudyArgs),
}

#[derive(clap::Args)]
struct StudyArgs {
    /// JSON study configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on worker threads for ensembles
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 4 if a statistical check fails
    #[arg(long)]
    gate: bool,
}

fn run(kind: StudyKind, args: StudyArgs) -> Result<(), Failure> {
    let overrides = Overrides {
        seed: args.seed,
        out_dir: args.out,
    };
    let config = load_config(kind, &args.config, &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Runtime(epiflux::Error::Config(format!("thread pool: {e}"))))?;
    let output = pool.install(|| execute(kind, &config, args.gate))?;
    for check in &output.gates {
        let status = if check.passed { "pass" } else { "FAIL" };
        eprintln!("{status}: {} ({})", check.name, check.detail);
    }
    println!("{}", output.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.study {
        Study::Simulate(a) => (StudyKind::Trajectory, a),
        Study::Ode(a) => (StudyKind::Ode, a),
        Study::Ensemble(a) => (StudyKind::Ensemble, a),
        Study::Fluctuation(a) => (StudyKind::Fluctuation, a),
        Study::Scaling(a) => (StudyKind::Scaling, a),
    };
    if args.threads == Some(0) {
        let f = Failure::Config(epiflux::Error::Config("--threads must be at least 1".into()));
        eprintln!("{}", f.record());
        return ExitCode::from(f.exit_code() as u8);
    }
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.record());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
