use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use treedamp_cli::commands;
use treedamp_cli::CliError;

#[derive(Parser)]
#[command(name = "treedamp", version, about = "Energy-optimal damping of delay systems on trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem for a given control.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        control: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the minimal-energy control that brings the system to rest.
    Damp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Elements per delay interval (overrides the config).
        #[arg(long)]
        q: Option<usize>,
        /// Relative first-variation tolerance (overrides the config).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check a stored solution against the optimality conditions.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Tabulate energy and residuals over refinement levels.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<usize>,
        /// Also write convergence.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, control, out } => {
            let s = commands::cmd_simulate(&config, &control, &out)?;
            let worst = s.edges.iter().map(|e| e.equation).fold(0.0, f64::max);
            println!("simulated {} edges, max equation residual {worst:e}", s.edges.len());
        }
        Command::Damp { config, out, q, tol } => {
            let s = commands::cmd_damp(&config, &out, q, tol)?;
            println!("J = {:.16e}  (optimality {:e}, {} unknowns)", s.energy, s.optimality.relative, s.dimension);
        }
        Command::Verify { config, solution } => {
            let s = commands::cmd_verify(&config, &solution)?;
            println!("J = {:.16e}  optimality {:e}  admissible", s.energy, s.optimality.relative);
        }
        Command::Convergence { config, q, out } => {
            commands::cmd_convergence(&config, &q, out.as_ref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
