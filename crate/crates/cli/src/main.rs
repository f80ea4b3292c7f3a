use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rsma_cli::config::{ConfigFile, ExperimentConfig, Solver};
use rsma_cli::{run, write_csv, CliError, RunOptions, Status};

#[derive(Parser)]
#[command(name = "rsma", version, about = "Rate-splitting experiments with improper common streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rates of the allocation in the [allocation] section.
    Eval(Flags),
    /// Private sum-rate maximization.
    PrivateMax(Flags),
    /// Common-rate maximization at the private powers in [common].
    CommonMax(Flags),
    /// Train a soft actor-critic agent per sweep point.
    SumRateSac {
        #[command(flatten)]
        flags: Flags,
        /// Save one checkpoint per row into this directory.
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
    },
    /// Brute-force sum-rate grid search.
    Oracle(Flags),
    /// Run the solver named in the config.
    Sweep {
        #[command(flatten)]
        flags: Flags,
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-check every row against the grid oracle.
    #[arg(long)]
    verify: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force proper signaling (κ = 0).
    #[arg(long)]
    pgs: bool,
}

fn load(flags: &Flags, solver: Option<Solver>) -> Result<ExperimentConfig, CliError> {
    let mut file: ConfigFile = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None if solver.is_none() => return Err(CliError::Config("`sweep` needs --config".into())),
        None => ConfigFile::default(),
    };
    if solver.is_some() {
        file.solver = solver;
    }
    if flags.seed.is_some() {
        file.seed = flags.seed;
    }
    if flags.verify {
        file.verify = Some(true);
    }
    if flags.pgs {
        file.pgs = Some(true);
    }
    if flags.out.is_some() {
        file.out = flags.out.clone();
    }
    ExperimentConfig::from_file(file)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (flags, solver, checkpoint_dir) = match cli.command {
        Command::Eval(f) => (f, Some(Solver::Eval), None),
        Command::PrivateMax(f) => (f, Some(Solver::PrivateMax), None),
        Command::CommonMax(f) => (f, Some(Solver::CommonMax), None),
        Command::SumRateSac { flags, checkpoint_dir } => (flags, Some(Solver::Sac), checkpoint_dir),
        Command::Oracle(f) => (f, Some(Solver::Oracle), None),
        Command::Sweep { flags, checkpoint_dir } => (flags, None, checkpoint_dir),
    };
    let cfg = load(&flags, solver)?;
    let rows = run(&cfg, &RunOptions { checkpoint_dir })?;
    match &cfg.out {
        Some(path) => write_csv(&rows, std::fs::File::create(path)?)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if rows.iter().any(|r| r.oracle_ok == Some(false)) {
        eprintln!("warning: some rows fail the oracle cross-check (oracle_ok = false)");
    }
    if rows.iter().all(|r| r.status == Status::Infeasible) {
        return Err(CliError::Infeasible("no sweep point is feasible".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
