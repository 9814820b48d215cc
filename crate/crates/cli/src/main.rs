use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod table;

/// Independent component analysis with weighted third and fourth cumulants.
#[derive(Debug, Parser)]
#[command(name = "cumica", version)]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (default: all cores).
    #[arg(long, global = true, env = "CUMICA_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate an unmixing matrix from a CSV data file.
    Estimate(EstimateArgs),
    /// Monte Carlo comparison with the asymptotic variances, or a single
    /// simulated data set with --emit-data.
    Simulate(SimulateArgs),
    /// Table of asymptotic variances for the given sources.
    Asv(AsvArgs),
    /// Best weight for separating a two-group normal mixture.
    OptimalAlpha(OptimalAlphaArgs),
    /// Grid of ASV(w12) + ASV(w21) over two shape families.
    Contour(ContourArgs),
    /// Which identifiability conditions the sources satisfy.
    CheckAssumptions(CheckArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Observations, one per row; `-` reads standard input.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// deflation, symmetric, compound, jade or fobi.
    #[arg(long, default_value = "symmetric")]
    pub method: String,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    /// Compound only: auto, symmetric, fobi or a CSV file holding W0.
    #[arg(long, default_value = "auto")]
    pub standardizer: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Key-value experiment file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma separated, e.g. gamma:1,ep:0.5,mix:0.3:5,normal,uniform.
    #[arg(long)]
    pub sources: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Mixing for --emit-data: identity or random (drawn from the seed).
    #[arg(long, default_value = "identity")]
    pub mixing: String,
    /// Write one sample of size n instead of running the experiment.
    #[arg(long)]
    pub emit_data: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AsvArgs {
    #[arg(long, default_value = "symmetric")]
    pub method: String,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long)]
    pub sources: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimalAlphaArgs {
    /// Weight of the N(0,1) group; a comma separated list sweeps.
    #[arg(long, value_delimiter = ',', required = true)]
    pub pi: Vec<f64>,
    /// Mean of the second group; a comma separated list sweeps.
    #[arg(long, value_delimiter = ',', required = true)]
    pub mu: Vec<f64>,
    /// Step of the initial grid search.
    #[arg(long, default_value_t = 1e-3)]
    pub grid: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    /// gamma or ep.
    #[arg(long)]
    pub family_x: String,
    /// Shape range as from:to.
    #[arg(long)]
    pub range_x: String,
    #[arg(long)]
    pub family_y: String,
    #[arg(long)]
    pub range_y: String,
    #[arg(long, default_value = "symmetric")]
    pub method: String,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub sources: String,
    #[arg(long, default_value = "symmetric")]
    pub method: String,
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Numerical(#[from] cumica::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use cumica::Error as E;
        match self {
            CliError::Numerical(E::InvalidParams(_) | E::InvalidSpec(_) | E::InvalidData(_)) => 1,
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Estimate(_) => "estimate",
        Command::Simulate(_) => "simulate",
        Command::Asv(_) => "asv",
        Command::OptimalAlpha(_) => "optimal-alpha",
        Command::Contour(_) => "contour",
        Command::CheckAssumptions(_) => "check-assumptions",
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Asv(a) => commands::asv(a),
        Command::OptimalAlpha(a) => commands::optimal_alpha(a),
        Command::Contour(a) => commands::contour(a),
        Command::CheckAssumptions(a) => commands::check_assumptions(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let mut err = io::stderr().lock();
            match &e {
                CliError::Numerical(inner) => {
                    let _ = match inner.component() {
                        Some(k) => writeln!(err, "error: {} (component {k}): {inner}", inner.name()),
                        None => writeln!(err, "error: {}: {inner}", inner.name()),
                    };
                }
                other => {
                    let _ = writeln!(err, "error: {other}");
                }
            }
            if code == 1 {
                let name = subcommand_name(&cli.command);
                let mut cmd = Cli::command();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    let _ = writeln!(err, "{}", sub.render_usage());
                }
            }
            ExitCode::from(code)
        }
    }
}
