use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use hybrid_qsd_cli::{check_exit, cmd_oracle_compare, cmd_run, cmd_sweep, cmd_verify, report, Law};

/// Non-Markovian dynamics of open quantum systems in hybrid
/// bosonic/fermionic environments.
///
/// Output directories can be redirected with HQSD_OUTPUT_DIR.
#[derive(Parser)]
#[command(name = "hqsd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one model and write trajectory, coefficients and manifest.
    Run { config: PathBuf },
    /// Repeat a run over several values of one knob.
    Sweep {
        config: PathBuf,
        /// c_f, c_b, kappa_b or kernel.<name>.<field>
        #[arg(long)]
        knob: String,
        /// Comma-separated list, e.g. 0.3,1,3
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Compare the master equation against the exact total-system oracle.
    OracleCompare {
        config: PathBuf,
        /// Maximum allowed trace distance; defaults to the config's "tolerance".
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check a trajectory CSV against an analytic law.
    Verify {
        trajectory: PathBuf,
        #[arg(long, value_enum)]
        law: LawArg,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Cosine,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config).map_or_else(|e| report(&e), |_| 0),
        Command::Sweep { config, knob, values } => {
            cmd_sweep(&config, &knob, &values).map_or_else(|e| report(&e), |_| 0)
        }
        Command::OracleCompare { config, tol } => check_exit(cmd_oracle_compare(&config, tol)),
        Command::Verify {
            trajectory,
            law,
            lambda,
            omega,
            tol,
        } => {
            let law = match law {
                LawArg::Cosine => Law::Cosine,
            };
            check_exit(cmd_verify(&trajectory, law, lambda, omega, tol))
        }
    };
    ExitCode::from(code as u8)
}
