use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsc_cli::commands::{self, AppSpec};
use gsc_cli::{CliError, RunConfig};
use gsc_core::deployment::Solver;
use gsc_core::{CaseType, Method};

/// Simulator for semantic-communication routing and model placement in LEO
/// satellite networks.
#[derive(Debug, Parser)]
#[command(name = "gscsim", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured deployment solver.
    #[arg(long, global = true, value_parser = parse_solver)]
    solver: Option<Solver>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: from the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the traditional-versus-semantic comparison.
    Simulate,
    /// Places encoder/decoder models for the applications of a snapshot.
    Plan {
        /// Snapshot file with `app` records.
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Routes a single application on a snapshot.
    Route(RouteArgs),
    /// Prints a metrics CSV.
    Report {
        /// Metrics CSV (default: metrics.csv in the output directory).
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RouteArgs {
    /// Snapshot file to route on.
    #[arg(long)]
    snapshot: PathBuf,
    /// Route the snapshot's application with this id instead of one given
    /// inline.
    #[arg(long, conflicts_with_all = ["case", "src", "dst", "rate", "kb", "ratio"])]
    app: Option<u32>,
    /// Capability case, 1 to 4.
    #[arg(long, value_parser = parse_case, required_unless_present = "app")]
    case: Option<CaseType>,
    /// Source terminal, by id or name.
    #[arg(long, required_unless_present = "app")]
    src: Option<String>,
    /// Destination terminal, by id or name.
    #[arg(long, required_unless_present = "app")]
    dst: Option<String>,
    /// Raw rate in Mbps.
    #[arg(long, required_unless_present = "app")]
    rate: Option<f64>,
    /// Knowledge base index.
    #[arg(long, default_value_t = 0)]
    kb: usize,
    /// Compression ratio (compressed over raw rate).
    #[arg(long)]
    ratio: Option<f64>,
    /// `gsc` or `traditional`.
    #[arg(long, default_value = "gsc", value_parser = parse_method)]
    method: Method,
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: gsc_core::Error| e.to_string())
}

fn parse_case(s: &str) -> Result<CaseType, String> {
    s.parse().map_err(|e: gsc_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: gsc_core::Error| e.to_string())
}

fn load_config(path: Option<&Path>, required: bool) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None if required => Err(CliError::Usage("--config is required".into())),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    let required = matches!(cli.command, Command::Simulate);
    let mut cfg = load_config(g.config.as_deref(), required)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    let solver = match g.solver {
        Some(s) => s,
        None => cfg.solver()?,
    };
    let out_dir = g.out.unwrap_or_else(|| cfg.output.dir.clone());
    let stdout = &mut std::io::stdout();

    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out_dir, stdout).map(|_| ()),
        Command::Plan { snapshot } => commands::plan(&cfg, &snapshot, solver, &out_dir, stdout).map(|_| ()),
        Command::Route(a) => {
            let spec = match a.app {
                Some(id) => AppSpec::FromFile(id),
                None => AppSpec::Inline {
                    case: a.case.expect("required by clap"),
                    src: a.src.expect("required by clap"),
                    dst: a.dst.expect("required by clap"),
                    rate_mbps: a.rate.expect("required by clap"),
                    kb: a.kb,
                    ratio: a.ratio,
                },
            };
            commands::route(&cfg, &a.snapshot, &spec, a.method, stdout).map(|_| ())
        }
        Command::Report { metrics } => {
            commands::report(&commands::metrics_path(metrics, &out_dir), stdout).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
