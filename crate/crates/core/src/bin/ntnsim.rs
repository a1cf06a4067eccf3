use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ntnsim::cli::{effective_config, execute, exit_code, replay, Overrides};
use ntnsim::output::{Command, RunManifest};

#[derive(Parser)]
#[command(
    name = "ntnsim",
    version,
    about = "LEO satellite / UE tracking and link parameter simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full scenario: truth, measurements, EKF, link metrics.
    Simulate(RunArgs),
    /// Like simulate, with an external ephemeris as the satellite truth.
    Track(RunArgs),
    /// Truth gamma / theta / TA / Doppler table, no filtering.
    Geometry(RunArgs),
    /// Visibility windows only.
    Windows(RunArgs),
    /// Repeat a run from its manifest.json.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "ntnsim-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ephemeris: Option<PathBuf>,
    #[arg(long, default_value = "ntnsim-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications; per-epoch files hold run 0.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    theta_min_deg: Option<f64>,
    #[arg(long)]
    freq_ghz: Option<f64>,
}

fn run(cmd: Cmd) -> ntnsim::Result<(RunManifest, PathBuf)> {
    let (command, a) = match cmd {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Track(a) => (Command::Track, a),
        Cmd::Geometry(a) => (Command::Geometry, a),
        Cmd::Windows(a) => (Command::Windows, a),
        Cmd::Replay { manifest, out } => return replay(&manifest, &out).map(|m| (m, out)),
    };
    let overrides = Overrides {
        seed: a.seed,
        theta_min_deg: a.theta_min_deg,
        freq_ghz: a.freq_ghz,
    };
    let config = effective_config(a.config.as_deref(), &overrides)?;
    execute(command, config, a.ephemeris.as_deref(), a.runs, &a.out).map(|m| (m, a.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((m, out)) => {
            println!("wrote {} to {}", m.outputs.join(", "), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ntnsim: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
