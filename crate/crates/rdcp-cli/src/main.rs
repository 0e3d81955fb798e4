use std::path::PathBuf;

use clap::{Parser, Subcommand};

use rdcp_cli::commands;
use rdcp_cli::runner::thread_count;

#[derive(Parser)]
#[command(
    name = "rdcp",
    about = "Random degree-constrained process: simulation, limit samplers, critical times"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded RDCP simulations and write summary CSVs.
    Simulate {
        /// Host spec: complete:n, bipartite:n, regular:n:r, union:...
        #[arg(long)]
        host: String,
        /// Degree-constraint spec: comma-separated k:weight pairs.
        #[arg(long)]
        dist: String,
        /// Stop rule: final, time:T or steps:K.
        #[arg(long, default_value = "final")]
        until: String,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (RDCP_THREADS overrides; default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Also dump the edge-by-edge trajectory of replica 0.
        #[arg(long)]
        trajectory: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sample the limit object and dump a neighborhood census.
    LimitCensus {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        t_hat: f64,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// mtbp or pwit.
        #[arg(long, default_value = "mtbp")]
        sampler: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare a finite-host census against the limit sampler (TV report).
    Compare {
        #[arg(long)]
        host: String,
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 0.75)]
        t_hat: f64,
        /// Step-indexed mode: run floor(s*n) steps and compare at F^{-1}(2s).
        #[arg(long)]
        steps_frac: Option<f64>,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Critical times, diagnostics, and the spectral eigenvalue per dist.
    CriticalTime {
        /// One or more dist specs.
        #[arg(long, required = true)]
        dist: Vec<String>,
        #[arg(long, default_value_t = 1e-11)]
        abs_tol: f64,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        /// Append Monte Carlo largest-component evidence at 0.9/1.1 t_hat_c.
        #[arg(long)]
        bracket: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Principal eigenvalue of the branching operator over a t_hat ladder.
    Spectral {
        #[arg(long)]
        dist: String,
        /// Comma-separated t_hat values.
        #[arg(long, default_value = "0.2,0.4,0.6,0.8,1.0,1.2,1.4,1.6,1.8,2.0")]
        t_hats: String,
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the acceptance suite and write one row per checked quantity.
    Selftest {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { host, dist, until, replicas, seed, threads, trajectory, out } => {
            commands::parse_stop(&until).and_then(|stop| {
                commands::cmd_simulate(
                    &host,
                    &dist,
                    stop,
                    replicas,
                    seed,
                    thread_count(threads),
                    trajectory,
                    &out,
                )
            })
        }
        Command::LimitCensus { dist, t_hat, radius, samples, sampler, seed, threads, out } => {
            commands::cmd_limit_census(
                &dist,
                t_hat,
                radius,
                samples,
                &sampler,
                seed,
                thread_count(threads),
                &out,
            )
        }
        Command::Compare { host, dist, t_hat, steps_frac, radius, samples, seed, threads, out } => {
            commands::cmd_compare(
                &host,
                &dist,
                t_hat,
                steps_frac,
                radius,
                samples,
                seed,
                thread_count(threads),
                &out,
            )
        }
        Command::CriticalTime { dist, abs_tol, grid, bracket, seed, threads, out } => {
            commands::cmd_critical(&dist, abs_tol, grid, bracket, seed, thread_count(threads), &out)
        }
        Command::Spectral { dist, t_hats, grid, out } => {
            let parsed: Result<Vec<f64>, _> =
                t_hats.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match parsed {
                Ok(ts) => commands::cmd_spectral(&dist, &ts, grid, &out),
                Err(e) => Err(format!("bad t_hat list: {e}")),
            }
        }
        Command::Selftest { seed, threads, out } => {
            commands::cmd_selftest(seed, thread_count(threads), &out)
        }
    };
    if let Err(msg) = result {
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}
