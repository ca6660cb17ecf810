use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tvopt::config::Config;
use tvopt::{commands, HarnessError};

#[derive(Parser)]
#[command(
    name = "tvopt",
    about = "Decentralized non-smooth optimization testbed: optimal primal-dual solver, \
             baselines, hard instances, and lower-bound certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one instance and emit a CSV of per-iteration metrics
    Run {
        /// Flat `key = value` config file
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value` overrides (applied after the file)
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Repeat a run across several values of one config key
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Config key to vary
        #[arg(long)]
        vary: String,
        /// Comma-separated list of values for the varied key
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Certify the communication lower bound on the hard chain instance
    LowerBound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
    /// Re-certify a network's condition number over several gossip rounds
    CertifyNetwork {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of gossip rounds to certify over
        #[arg(long, default_value_t = 16)]
        rounds: usize,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn load_config(path: Option<&PathBuf>, overrides: &[String]) -> Result<Config, HarnessError> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::new(),
    };
    for pair in overrides {
        cfg.set_pair(pair)?;
    }
    Ok(cfg)
}

fn real_main() -> Result<bool, HarnessError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load_config(config.as_ref(), &overrides)?;
            let out = commands::run(&cfg)?;
            if cfg.get("out").is_none() {
                print!("{}", out.csv);
            }
            println!("{}", out.summary);
            Ok(true)
        }
        Command::Sweep {
            config,
            vary,
            values,
            overrides,
        } => {
            let cfg = load_config(config.as_ref(), &overrides)?;
            let out = commands::sweep(&cfg, &vary, &values)?;
            print!("{}", out.summary_csv);
            Ok(true)
        }
        Command::LowerBound { n, d } => {
            let out = commands::lower_bound(n, d)?;
            println!("{}", out.line);
            Ok(out.pass)
        }
        Command::CertifyNetwork {
            config,
            rounds,
            overrides,
        } => {
            let cfg = load_config(config.as_ref(), &overrides)?;
            let out = commands::certify_network(&cfg, rounds)?;
            println!("{}", out.line);
            Ok(out.pass)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
