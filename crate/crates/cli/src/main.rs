//! `ionwalk`: run quantum-walk simulation and reconstruction experiments from
//! JSON configs.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Report;
use crate::output::{default_prefix, Sink};

#[derive(Parser)]
#[command(name = "ionwalk", version, about = "Trapped-ion quantum walk experiments")]
struct Cli {
    /// Log stage timings (-v) or every file written (-vv) to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output path prefix; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed; overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; falls back to IONWALK_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn print_report(report: &Report) {
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("IONWALK_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("IONWALK_THREADS must be a positive integer, got {v:?}")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();

    match cli.command {
        Command::Validate { config } => {
            let cfg = match config::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            let (report, _) = cfg.validate(None);
            print_report(&report);
            if !report.ok() {
                return ExitCode::from(EXIT_INVALID);
            }
            println!("OK");
            for (k, v) in &report.derived {
                println!("{k} = {}", fmt_value(*v));
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed, threads } => {
            let cfg = match config::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            let threads = match thread_count(threads) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            if let Some(t) = threads {
                if t == 0 {
                    eprintln!("error: thread count must be positive");
                    return ExitCode::from(EXIT_INVALID);
                }
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            let (report, resolved) = cfg.validate(seed);
            print_report(&report);
            let Some(resolved) = resolved else {
                return ExitCode::from(EXIT_INVALID);
            };
            let prefix = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| default_prefix(&config));
            match run::run(&resolved, Sink::new(prefix)) {
                Ok(sink) => {
                    for p in sink.written() {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
    }
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else if v.abs() >= 1e-3 && v.abs() < 1e6 {
        format!("{v:.4}")
    } else {
        format!("{v:.4e}")
    }
}
