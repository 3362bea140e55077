//! `nullcert`: bounds, exact and integral-formula certificates, verification
//! and calibration from the command line.
//!
//! Structured output is JSON on stdout, a one-line summary goes to stderr.
//! Exit status: 0 success, 2 a definitive "no solution", 1 anything else.

mod certfile;
mod commands;
mod dump;
mod error;
mod state;
mod system;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "nullcert",
    version,
    about = "Polynomial ideal and module membership certificates"
)]
struct Cli {
    /// Calibration state file.
    #[arg(
        long,
        global = true,
        env = "NULLCERT_STATE",
        default_value = "nullcert-state.json"
    )]
    state: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct DegreeChoice {
    /// Degree estimate: thm12, thm13, thm14 or macaulay.
    #[arg(long, conflicts_with = "rho")]
    pub theorem: Option<String>,
    /// Explicit degree bound for deg(F_i Q_i).
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<i64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Degree bounds for a system.
    Bounds {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        theorem: Option<String>,
        /// ν∞ as p/q; overrides the system file.
        #[arg(long)]
        nu_inf: Option<String>,
    },
    /// Exact certificate by linear algebra.
    Certify {
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        degree: DegreeChoice,
        /// Also write the certificate here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Numeric certificate from the integral division formula.
    CertifyIntegral {
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        degree: DegreeChoice,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, conflicts_with = "eps_sequence")]
        eps: Option<f64>,
        /// Decreasing cutoffs for a residual study, comma separated.
        #[arg(long, value_delimiter = ',')]
        eps_sequence: Option<Vec<f64>>,
        /// chart-grid (n = 1), chart-montecarlo or sphere-montecarlo.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long, default_value_t = 0)]
        chart: usize,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        max_std_error: Option<f64>,
        /// Largest relative residual accepted.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-check a certificate file against its system.
    Verify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
        /// Largest relative residual accepted for numeric certificates.
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
    },
    /// Smallest feasible degree up to a maximum.
    Minrho {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        max: i64,
    },
    /// Pin the orientation constant for integrals over projective space.
    Calibrate {
        #[arg(long, required_unless_present = "dump_point")]
        n: Option<usize>,
        #[arg(long, default_value = "sphere-montecarlo")]
        strategy: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        /// Recompute even if a matching calibration is stored.
        #[arg(long)]
        recalibrate: bool,
        /// Print kernel values at ζ = `re,im;re,im;…` instead of calibrating.
        #[arg(long)]
        dump_point: Option<String>,
        /// Target point z for the dump.
        #[arg(long, requires = "dump_point")]
        z: Option<String>,
        /// System whose Koszul kernels are included in the dump.
        #[arg(long, requires = "dump_point")]
        system: Option<PathBuf>,
        #[arg(long, requires = "dump_point")]
        eps: Option<f64>,
        #[arg(long, requires = "dump_point")]
        chart: Option<usize>,
    },
}

pub enum Status {
    Success,
    Infeasible,
    Rejected,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON on stdout; a closed pipe (`| head`) is not an error.
pub fn emit(value: &serde_json::Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("JSON output");
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}").and_then(|_| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
        }
    }
}

fn run(cli: Cli) -> Result<Status, CliError> {
    use commands::*;
    match cli.command {
        Command::Bounds {
            system,
            theorem,
            nu_inf,
        } => bounds(&system, theorem.as_deref(), nu_inf.as_deref()),
        Command::Certify {
            system,
            degree,
            output,
        } => certify(&system, &degree, output.as_deref()),
        Command::CertifyIntegral {
            system,
            degree,
            samples,
            seed,
            eps,
            eps_sequence,
            strategy,
            chart,
            threads,
            max_std_error,
            tolerance,
            output,
        } => certify_integral(IntegralArgs {
            system: &system,
            degree: &degree,
            samples,
            seed,
            eps,
            eps_sequence,
            strategy: strategy.as_deref(),
            chart,
            threads,
            max_std_error,
            tolerance,
            output: output.as_deref(),
            state: &cli.state,
        }),
        Command::Verify {
            system,
            certificate,
            tolerance,
        } => verify(&system, &certificate, tolerance),
        Command::Minrho { system, max } => minrho(&system, max),
        Command::Calibrate {
            n,
            strategy,
            samples,
            seed,
            threads,
            recalibrate,
            dump_point,
            z,
            system,
            eps,
            chart,
        } => match dump_point {
            Some(point) => dump(&point, z.as_deref(), system.as_deref(), eps, chart),
            None => calibrate(CalibrateArgs {
                n: n.expect("clap requires --n"),
                strategy: &strategy,
                samples,
                seed,
                threads,
                recalibrate,
                state: &cli.state,
            }),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Infeasible) => ExitCode::from(2),
        Ok(Status::Rejected) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
