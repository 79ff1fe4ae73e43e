//! `toruslab`: reproducible kernel, Strichartz and NLS experiments on
//! rectangular tori.
//!
//! Exit codes: 0 success, 1 resource or guard abort, 2 usage error.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

use toruslab::{Budget, Dyadic, Error, TorusGeometry};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Guard(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_) | Error::Theta { .. } | Error::NotDyadic(_) | Error::Exponent { .. } | Error::Band(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Guard(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "toruslab", version = toruslab::VERSION, about = "Schrödinger kernels, Strichartz norms and energy-critical NLS on rectangular tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate K_N(t, x) at a point or on a grid.
    Kernel(commands::KernelArgs),
    /// Dispersive and off-arc kernel constants for a list of N.
    DispersiveCheck(commands::DispersiveArgs),
    /// Fit the growth exponent of ‖e^{itΔ}P_{<=N} f‖_{L^p} in N.
    StrichartzSweep(commands::StrichartzArgs),
    /// Bilinear Strichartz ratios, and optionally random arc-set pairings.
    BilinearCheck(commands::BilinearArgs),
    /// Run the energy-critical NLS.
    NlsRun(commands::NlsArgs),
    /// Arithmetic helpers.
    #[command(subcommand)]
    Arith(commands::ArithCommand),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Dimension.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Comma-separated theta_j; defaults to the square torus.
    #[arg(long)]
    pub theta: Option<String>,
    /// Major-arc exponent.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Maximum number of grid cells any single allocation may use.
    #[arg(long)]
    pub budget: Option<u128>,
}

impl Common {
    pub fn geometry(&self) -> Result<TorusGeometry, Failure> {
        match &self.theta {
            None => Ok(TorusGeometry::square(self.d)?),
            Some(list) => {
                let theta = parse_list::<f64>(list, "--theta")?;
                if theta.len() != self.d {
                    return Err(Failure::Usage(format!("--theta has {} entries but --d is {}", theta.len(), self.d)));
                }
                Ok(TorusGeometry::new(theta)?)
            }
        }
    }

    pub fn budget(&self) -> Budget {
        self.budget.map_or_else(Budget::default, Budget::new)
    }

    fn init_threads(&self) -> Result<(), Failure> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
        }
        Ok(())
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| Failure::Usage(format!("{flag}: cannot parse {v:?}"))))
        .collect()
}

pub fn parse_dyadics(s: &str) -> Result<Vec<Dyadic>, Failure> {
    parse_list::<u64>(s, "--N")?.into_iter().map(|n| Ok(Dyadic::new(n)?)).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kernel(a) => a.common.init_threads().and_then(|_| commands::kernel(&a)),
        Command::DispersiveCheck(a) => a.common.init_threads().and_then(|_| commands::dispersive_check(&a)),
        Command::StrichartzSweep(a) => a.common.init_threads().and_then(|_| commands::strichartz_sweep(&a)),
        Command::BilinearCheck(a) => a.common.init_threads().and_then(|_| commands::bilinear_check(&a)),
        Command::NlsRun(a) => a.common.init_threads().and_then(|_| commands::nls_run(&a)),
        Command::Arith(a) => commands::arith(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("aborted: {msg}");
            ExitCode::from(1)
        }
    }
}
