//! `corrduel` command-line tool.

mod commands;
mod session_run;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrduel::baselines::PolicyKind;
use corrduel::similarity::GridShape;

#[derive(Debug, Parser)]
#[command(
    name = "corrduel",
    version,
    about = "Correlational dueling bandits: simulations, similarity matrices and live sessions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a regret benchmark and write regret.csv and regret.svg.
    Simulate(SimulateArgs),
    /// Build a similarity matrix file.
    Similarity {
        #[command(subcommand)]
        source: SimilaritySource,
    },
    /// Run a session headlessly from a scripted list of winners.
    SessionRun(SessionRunArgs),
    /// Serve the live-session HTTP API.
    Serve(ServeArgs),
    /// Rebuild a session from its JSONL event log and print its state.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment file; flags given on the command line override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Comma-separated policy names.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    pub grid: Option<GridShape>,
    /// Horizon (iterations per trial).
    #[arg(long = "T", visible_alias = "horizon")]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lengthscale: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub rucb_alpha: Option<f64>,
    /// Use the same landscape for every trial.
    #[arg(long)]
    pub fixed_landscape: bool,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SimilaritySource {
    /// Squared-exponential similarity over a regular grid on the unit square.
    Grid {
        #[arg(long)]
        grid: GridShape,
        #[arg(long, default_value_t = corrduel::similarity::DEFAULT_LENGTHSCALE)]
        lengthscale: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Potential-field correlation between 16-channel electrode configurations.
    Electrode {
        /// A 16-character string over `+`, `-` and `0`; repeat once per arm.
        #[arg(long = "config", required = true, allow_hyphen_values = true)]
        configs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SessionRunArgs {
    /// TOML file with the arm catalog, similarity and session settings.
    #[arg(long)]
    pub arms: PathBuf,
    /// Winner ids (or `tie`) separated by commas, spaces or newlines.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Also write the session's event log here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Print the final state as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CORRDUEL_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "CORRDUEL_DATA_DIR", default_value = "corrduel-data")]
    pub data_dir: PathBuf,
    /// Seeds sessions that are created without an explicit seed.
    #[arg(long, env = "CORRDUEL_SERVER_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub log: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Runtime(_) => 1,
            Self::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Similarity { source } => commands::similarity(source),
        Command::SessionRun(args) => session_run::run(args),
        Command::Serve(args) => commands::serve(args),
        Command::Replay(args) => session_run::replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
