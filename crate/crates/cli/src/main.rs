//! `chstab`: certify, simulate and analyse the stabilized Cahn–Hilliard scheme.

mod commands;
mod config;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::SweepRequest;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "chstab",
    version,
    about = "Stabilized semi-implicit Cahn-Hilliard stepping with stability certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check (ν, τ, A) and an initial bound against the L∞ stability theory.
    Certify {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long = "A")]
        a: f64,
        /// Sup norm of the initial data; omit to certify any data with ‖u0‖∞ ≤ M1.
        #[arg(long)]
        linf_u0: Option<f64>,
    },
    /// Run the scheme, writing energy.csv and optional CHF1 snapshots.
    Simulate(ConfigArgs),
    /// Critical time step for each stabilization value; CSV `A,tau_c` on stdout.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated stabilization values.
        #[arg(long = "A", value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, default_value_t = 1e-5)]
        tau_lo: f64,
        #[arg(long, default_value_t = 10.0)]
        tau_hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        rel_tol: f64,
    },
    /// Periodic 1D resolvent kernel and its mean-zero constants.
    Kernel {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        theta: f64,
    },
    /// Kernel constants of a general graph Laplacian given as an edge list.
    Resolvent {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        k: f64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        for assignment in &self.overrides {
            config.apply_override(assignment)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::Certify {
            nu,
            tau,
            a,
            linf_u0,
        } => commands::certify_report(nu, tau, a, linf_u0, &mut out)?,
        Command::Simulate(args) => commands::simulate(&args.load()?, &mut out)?,
        Command::Sweep {
            config,
            a,
            tau_lo,
            tau_hi,
            rel_tol,
        } => {
            let request = SweepRequest {
                a_values: &a,
                tau_lo,
                tau_hi,
                rel_tol,
            };
            commands::sweep(&config.load()?, &request, &mut out)?
        }
        Command::Kernel { n, theta } => commands::kernel_report(n, theta, &mut out)?,
        Command::Resolvent { operator, k } => commands::resolvent_report(&operator, k, &mut out)?,
    };
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
