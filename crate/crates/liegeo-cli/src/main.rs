//! `liegeo`: simulate Euler/reconstruction flows on SO(n), compare them with
//! the closed-form geodesics, probe bracket-generating hulls, reproduce the
//! built-in figures and search for polynomial first integrals.
//!
//! Exit codes: 0 success, 1 tolerance/expectation failure, 2 configuration
//! error, 3 integration divergence. Set `LIEGEO_LOG=info` for progress
//! output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;
mod setup;

use commands::Overrides;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(liegeo::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(liegeo::Error::IntegrationDiverged(_)) => 3,
            CliError::Lib(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "liegeo", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a configured flow and report conservation drifts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (overrides the config's output.path).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for the initial momentum when the config omits it.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate a chain flow and compare against the closed-form solution.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the bracket-generating hull of configured seed vectors.
    Hull {
        #[arg(long)]
        config: PathBuf,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit projected curve data for one of the built-in figures.
    Figure {
        /// fig1-left, fig1-right, fig2-left, fig2-right, fig3-left, fig3-right
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG polyline of the first two columns.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Search for polynomial first integrals of a configured field.
    SearchIntegrals {
        #[arg(long)]
        config: PathBuf,
        /// JSON report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with code 1 if any new integral is found.
        #[arg(long)]
        expect_none: bool,
    },
    /// List the built-in filtrations.
    Catalog,
    /// Run several simulate configs concurrently.
    Batch {
        /// Config paths; each must set output.path.
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            step,
            t_end,
            tol,
            seed,
        } => {
            let cfg = commands::load_config(&config)?;
            commands::simulate(&cfg, &out, Overrides { step, t_end, tol, seed })
        }
        Cmd::Compare {
            config,
            out,
            step,
            t_end,
            tol,
            seed,
        } => {
            let cfg = commands::load_config(&config)?;
            commands::compare(&cfg, &out, Overrides { step, t_end, tol, seed })
        }
        Cmd::Hull { config, out } => {
            let cfg = commands::load_config(&config)?;
            commands::hull(&cfg, &out)
        }
        Cmd::Figure {
            name,
            out,
            svg,
            step,
            t_end,
        } => commands::figure(
            &name,
            &out,
            &svg,
            Overrides {
                step,
                t_end,
                ..Default::default()
            },
        ),
        Cmd::SearchIntegrals {
            config,
            out,
            expect_none,
        } => {
            let cfg = commands::load_config(&config)?;
            commands::search(&cfg, &out, expect_none)
        }
        Cmd::Catalog => commands::catalog_listing(),
        Cmd::Batch { configs, jobs, seed } => commands::batch(
            &configs,
            jobs,
            Overrides {
                seed,
                ..Default::default()
            },
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LIEGEO_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("liegeo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
