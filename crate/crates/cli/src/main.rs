mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epiclose::Error;

#[derive(Parser)]
#[command(name = "epiclose", version, about = "Meta-population influenza model with school-closure policies")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct ConfigArg {
    /// Experiment configuration (JSON).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic census, mobility and contact files.
    GenData {
        #[arg(long, default_value_t = 20)]
        districts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Spatial clusters of districts.
        #[arg(long, default_value_t = 1)]
        clusters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the model with schools open and write daily trajectories.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Drop the noise and use expected arrival times.
        #[arg(long)]
        deterministic: bool,
    },
    /// Mean peak day and attack rate over a grid of R0 and mu.
    Calibrate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Inclusive range start:end:step.
        #[arg(long, default_value = "1.4:2.4:0.2")]
        r0: String,
        /// Comma list; `a,b,...,c` expands arithmetically.
        #[arg(long, default_value = "0,0.1,...,1")]
        mu: String,
        #[arg(long, default_value_t = 20)]
        runs: usize,
    },
    /// Exhaustive search for the best closure schedule of the seed district.
    GroundTruth {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        budget: Option<u32>,
        #[arg(long)]
        weeks: Option<usize>,
        /// Also write every evaluated policy.
        #[arg(long)]
        dump_all: bool,
    },
    /// Train closure policies with PPO.
    Train {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Write a checkpoint every this many updates.
        #[arg(long, default_value_t = 50)]
        checkpoint_every: usize,
    },
    /// Compare a policy with the all-open baseline on paired stochastic runs.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Trained network.
        #[arg(long, conflicts_with = "schedule")]
        checkpoint: Option<PathBuf>,
        /// Fixed schedule for the seed district, e.g. 1110001111 (1 = open).
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        runs: Option<usize>,
        /// Write week-by-week logs of the first N episodes.
        #[arg(long, default_value_t = 0)]
        episode_logs: usize,
    },
    /// Modularity communities of the commute graph.
    Communities {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Report the members of this community.
        #[arg(long)]
        community: Option<usize>,
    },
    /// Central and convex-hull districts by age composition.
    SelectDistricts {
        #[command(flatten)]
        cfg: ConfigArg,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Json(_) | Error::EpisodeDone => 2,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Shape { .. } | Error::EmptyAgeGroup(_) => 3,
        Error::Numerical(_) | Error::DegenerateContactMatrix => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::GenData { districts, seed, clusters, out } => commands::gen_data(districts, seed, clusters, &out),
        Command::Simulate { cfg, runs, deterministic } => commands::simulate(&cfg, runs, deterministic),
        Command::Calibrate { cfg, r0, mu, runs } => commands::calibrate(&cfg, &r0, &mu, runs),
        Command::GroundTruth { cfg, budget, weeks, dump_all } => commands::ground_truth(&cfg, budget, weeks, dump_all),
        Command::Train { cfg, episodes, trials, checkpoint_every } => {
            commands::train(&cfg, episodes, trials, checkpoint_every)
        }
        Command::Evaluate { cfg, checkpoint, schedule, runs, episode_logs } => {
            commands::evaluate(&cfg, checkpoint.as_deref(), schedule.as_deref(), runs, episode_logs)
        }
        Command::Communities { cfg, community } => commands::communities(&cfg, community),
        Command::SelectDistricts { cfg } => commands::select_districts(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
