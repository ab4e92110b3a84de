use std::path::PathBuf;
use std::process::ExitCode;

use byzgrad_cli::{cmd_check, cmd_gen, cmd_run, CliError, GenParams, RunOptions, RunOutcome};
use clap::{Parser, Subcommand};

/// Simulate Byzantine-robust peer-to-peer gradient descent.
#[derive(Parser)]
#[command(name = "byzgrad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv and summary.json.
    Run {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Run a batch: `key=a..b` (inclusive) or `key=v1,v2,...`.
        #[arg(long)]
        sweep: Option<String>,
        /// Parallel sweep points (0 = one per CPU).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Record a trace row every N rounds.
        #[arg(long, value_parser = clap::value_parser!(usize))]
        record_every: Option<usize>,
    },
    /// Print a scenario generated from a built-in template.
    Gen {
        template: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        f: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        eig_min: Option<f64>,
        #[arg(long)]
        eig_max: Option<f64>,
    },
    /// Report constants and verdicts for a scenario without running it.
    Check { file: PathBuf },
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("BYZGRAD_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::config(None, format!("BYZGRAD_SEED={s:?} is not a u64"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = env_seed().and_then(|seed| match cli.command {
        Command::Run {
            file,
            out,
            sweep,
            jobs,
            record_every,
        } => {
            let opts = RunOptions {
                seed,
                record_every,
                sweep,
                jobs,
            };
            cmd_run(&file, &out, &opts).map(|outcome| match outcome {
                RunOutcome::Single(s) => {
                    println!("{}: {} after {} rounds", s.digest, s.verdict, s.rounds)
                }
                RunOutcome::Sweep(index) => {
                    for p in &index.points {
                        println!("{}: {}", p.dir, p.summary.verdict);
                    }
                }
            })
        }
        Command::Gen {
            template,
            n,
            f,
            d,
            seed: gen_seed,
            xi,
            horizon,
            eig_min,
            eig_max,
        } => {
            let params = GenParams {
                n,
                f,
                d,
                seed: gen_seed.or(seed),
                xi,
                horizon,
                eig_min,
                eig_max,
            };
            cmd_gen(&template, &params).map(|toml| print!("{toml}"))
        }
        Command::Check { file } => cmd_check(&file, seed).map(|report| print!("{report}")),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("byzgrad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
