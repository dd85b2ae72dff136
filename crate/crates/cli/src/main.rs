mod commands;
mod render;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Alternative paths planner: preprocess path sets, then answer queries
/// without collision checking.
#[derive(Debug, Parser)]
#[command(name = "altpaths", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a database from a scenario file.
    Preprocess {
        scenario: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Goals preprocessed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Look up the path for one goal and obstacle placement.
    Query {
        db: PathBuf,
        #[arg(long)]
        goal: usize,
        /// Obstacle cells as "x,y;x,y;...".
        #[arg(long, allow_hyphen_values = true)]
        obstacles: String,
        /// Repeat the lookup and report latency statistics.
        #[arg(long)]
        repeat: Option<usize>,
    },
    /// Check coverage (and optionally completeness) with the brute-force oracle.
    Verify {
        db: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        /// Also compare against direct planning for every placement.
        #[arg(long)]
        completeness: bool,
        /// Verify against this scenario file instead of the embedded copy.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Largest exhaustive placement count allowed.
        #[arg(long, default_value_t = 1_000_000)]
        cap: u128,
    },
    /// Tabulate success rate, latency and size for one or more databases.
    Bench {
        #[arg(required = true)]
        dbs: Vec<PathBuf>,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Draw the map, region, obstacles and stored paths as SVG.
    Render {
        db: PathBuf,
        #[arg(long)]
        goal: usize,
        #[arg(long, allow_hyphen_values = true)]
        obstacles: String,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ModeArgs {
    /// Enumerate every admissible placement (the default).
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    /// Draw this many random placements per goal instead.
    #[arg(long, requires = "seed")]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Preprocess { scenario, out, jobs } => commands::preprocess(&scenario, &out, jobs),
        Command::Query {
            db,
            goal,
            obstacles,
            repeat,
        } => commands::query(&db, goal, &obstacles, repeat),
        Command::Verify {
            db,
            mode,
            completeness,
            scenario,
            cap,
        } => {
            let mode = match mode.samples {
                Some(count) => altpaths::oracle::PlacementMode::Sampled {
                    count,
                    seed: mode.seed.expect("clap enforces --seed"),
                },
                None => altpaths::oracle::PlacementMode::Exhaustive,
            };
            commands::verify(&db, mode, completeness, scenario.as_deref(), cap)
        }
        Command::Bench { dbs, samples, seed } => commands::bench(&dbs, samples, seed),
        Command::Render {
            db,
            goal,
            obstacles,
            out,
        } => commands::render(&db, goal, &obstacles, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
