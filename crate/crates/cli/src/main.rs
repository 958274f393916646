#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::CliError;

/// Prescribe Gaussian and geodesic curvature on triangulated surfaces with
/// boundary.
///
/// Every command writes `report.json` (and `fields.csv` with `--fields`)
/// to the output directory. Exit status is 0 when all checks pass, 2 when
/// a verification check or feasibility test fails and 1 on input errors.
#[derive(Debug, Parser)]
#[command(name = "curvforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Realize a Gaussian curvature K on a flat model.
    PrescribeGaussian {
        #[command(flatten)]
        common: Common,
        /// Target Gaussian curvature: expression in x, y, z or CSV file.
        #[arg(long = "K", allow_hyphen_values = true)]
        k: String,
        /// Boundary Robin coefficient.
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Realize a geodesic curvature σ on a model with geodesic boundary.
    PrescribeGeodesic {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        /// Interior coefficient.
        #[arg(long = "A", default_value_t = 1.0)]
        a: f64,
    },
    /// Realize a pair (K, σ) on a surface with χ = 0.
    PrescribePair {
        #[command(flatten)]
        common: Common,
        #[arg(long = "K", allow_hyphen_values = true)]
        k: String,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
    },
    /// Necessary conditions for a pair (K, σ) on a surface with χ < 0.
    CheckFeasibility {
        #[command(flatten)]
        common: Common,
        #[arg(long = "K", allow_hyphen_values = true)]
        k: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        sigma: String,
    },
    /// Build one of the explicit example pairs (cases 1 to 8, or chi0).
    MakeExample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        case: String,
    },
    /// Conformal flat metric with geodesic boundary (χ = 0 only).
    Uniformize {
        #[command(flatten)]
        common: Common,
    },
    /// Gauss–Bonnet, maximum-principle probes and, with targets, the
    /// curvature of a rescaled metric.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Conformal factor to apply before checking.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long = "K", allow_hyphen_values = true)]
        k: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Mesh file (.off or .obj).
    #[arg(long)]
    mesh: PathBuf,
    /// auto, uniformize, or one of flat-geodesic, flat-unit, flat-neg-unit,
    /// curved-unit, curved-neg-unit.
    #[arg(long)]
    model: Option<String>,
    /// Residual tolerance of the monotone iteration.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write per-vertex fields.csv.
    #[arg(long)]
    fields: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CURVFORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("curvforge: {e}");
            ExitCode::from(match e {
                CliError::Verification(_) => 2,
                _ => 1,
            })
        }
    }
}
