//! Command-line surface over the collision-probability stack.
//!
//! Exit codes: 0 success, 2 usage or schema error, 3 domain error (no
//! encounter plane, degenerate covariance), 4 protocol failure.

use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub mod commands;
pub mod input;
pub mod report;

/// Classified command errors carrying their exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Protocol(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Protocol(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Protocol(m) => m,
        }
    }
}

fn default_seed() -> u64 {
    std::env::var("PCOL_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(7)
}

#[derive(Parser)]
#[command(
    name = "pcol",
    about = "Satellite collision probability, in plaintext and under threshold homomorphic encryption",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce two satellite states at TCA to the encounter-plane geometry.
    Reduce {
        /// Conjunction input JSON (schema pcol_input_v1).
        input: PathBuf,
    },
    /// Integrate the collision probability with one rule and step pair.
    Pcol {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        sigma_x: Option<f64>,
        #[arg(long)]
        sigma_z: Option<f64>,
        #[arg(long, default_value = "gauss2")]
        rule: String,
        #[arg(long, default_value_t = 0.5)]
        h_r: f64,
        #[arg(long, default_value_t = 0.5)]
        h_phi: f64,
        /// Also run the 2-D Monte-Carlo validator with this many samples.
        #[arg(long)]
        mc: Option<u64>,
        /// Compare against the converged reference quadrature.
        #[arg(long)]
        reference: bool,
        #[arg(long, default_value = "md")]
        format: String,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
    },
    /// Reproduce the full rule/step benchmark grid (15 rows).
    BenchQuadrature {
        #[arg(long, default_value_t = 5.0)]
        r: f64,
        #[arg(long, default_value_t = 50.0)]
        sigma_x: f64,
        #[arg(long, default_value_t = 25.0)]
        sigma_z: f64,
        #[arg(long, default_value = "md")]
        format: String,
    },
    /// End-to-end threshold demo: collective keys, encrypted shares, the
    /// chosen pipeline, and collective decryption.
    HeDemo {
        #[arg(long, default_value_t = 2)]
        parties: usize,
        /// table | online (add --point for a single evaluation).
        #[arg(long, default_value = "table")]
        mode: String,
        #[arg(long, default_value = "gauss2")]
        rule: String,
        /// Step size used for both h_r and h_phi.
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        #[arg(long, default_value_t = 10)]
        n1: usize,
        #[arg(long, default_value_t = 10)]
        n2: usize,
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        /// Point evaluation "y,phi" (online mode).
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 5.0)]
        r: f64,
        #[arg(long, default_value_t = 50.0)]
        sigma_x: f64,
        #[arg(long, default_value_t = 25.0)]
        sigma_z: f64,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Reduce { input } => commands::cmd_reduce(input),
        Command::Pcol {
            input,
            r,
            sigma_x,
            sigma_z,
            rule,
            h_r,
            h_phi,
            mc,
            reference,
            format,
            seed,
        } => commands::cmd_pcol(&commands::PcolArgs {
            input: input.clone(),
            r: *r,
            sigma_x: *sigma_x,
            sigma_z: *sigma_z,
            rule: rule.clone(),
            h_r: *h_r,
            h_phi: *h_phi,
            mc: *mc,
            reference: *reference,
            format: format.clone(),
            seed: *seed,
        }),
        Command::BenchQuadrature {
            r,
            sigma_x,
            sigma_z,
            format,
        } => commands::cmd_bench_quadrature(*r, *sigma_x, *sigma_z, format),
        Command::HeDemo {
            parties,
            mode,
            rule,
            h,
            n1,
            n2,
            preset,
            seed,
            point,
            r,
            sigma_x,
            sigma_z,
            format,
        } => commands::cmd_he_demo(&commands::HeDemoArgs {
            parties: *parties,
            mode: mode.clone(),
            rule: rule.clone(),
            h: *h,
            n1: *n1,
            n2: *n2,
            preset: preset.clone(),
            seed: *seed,
            point: point.clone(),
            r: *r,
            sigma_x: *sigma_x,
            sigma_z: *sigma_z,
            format: format.clone(),
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
