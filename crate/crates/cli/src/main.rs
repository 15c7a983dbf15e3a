#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmd;
mod error;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, Status, STATUS_HELP};

#[derive(Parser)]
#[command(
    name = "fieldforge",
    version,
    about = "On-chip antenna design, FDTD simulation and cryostat cavity analysis",
    after_help = STATUS_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form dipole and feed-line design with an induced-EMF impedance reference.
    Design(cmd::design::DesignArgs),
    /// Run the FDTD pipeline on a scene and write S-parameters, efficiency and patterns.
    Simulate(cmd::simulate::SimulateArgs),
    /// Repeat the simulation over a list of substrate thicknesses.
    SweepThickness(cmd::sweep::SweepArgs),
    /// Enumerate cylindrical or rectangular cavity modes, wall Q and mode density.
    Cavity(cmd::cavity::CavityArgs),
    /// Print the built-in material table.
    Materials(cmd::materials::MaterialsArgs),
    /// List, export or check scene files.
    Scene(cmd::scene::SceneArgs),
}

/// Flags shared by the commands that write files.
#[derive(Args, Clone, Debug)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Print the summary as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(a) => cmd::design::run(&a),
        Command::Simulate(a) => cmd::simulate::run(&a),
        Command::SweepThickness(a) => cmd::sweep::run(&a),
        Command::Cavity(a) => cmd::cavity::run(&a),
        Command::Materials(a) => cmd::materials::run(&a),
        Command::Scene(a) => cmd::scene::run(&a),
    };
    match result {
        Ok(()) => ExitCode::from(Status::Ok as u8),
        Err(CliError { status, message }) => {
            eprintln!("error: {message}");
            if status == Status::Usage {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(status as u8)
        }
    }
}
