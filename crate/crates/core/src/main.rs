use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gupnls::cli::{load_config, run, EXIT_ERROR};
use gupnls::config::{Command, RunConfig};
use gupnls::stationary::PotentialSpec;

#[derive(Parser)]
#[command(version, about = "Deformed Schrodinger equation solver and checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON configuration (or a manifest from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Deformation strength; 0 gives the linear equation
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Harmonic trap stiffness; selects the harmonic potential.
    #[arg(long, global = true, allow_negative_numbers = true)]
    zeta: Option<f64>,
    /// Points per axis
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Half width of the grid.
    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_extent: Option<f64>,
    /// Time step
    #[arg(long, global = true, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Number of time steps
    #[arg(long, global = true)]
    steps: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Self-consistent ground state.
    Stationary,
    /// Time evolution from the configured initial state.
    Evolve,
    /// Run the verification suite.
    Check,
    /// Table of the harmonic nonlinearity against its asymptote.
    NuCurve,
    /// Ground-state width scan towards the minimal length.
    Minlength,
}

fn build(cli: &Cli) -> gupnls::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    config.command = Some(match cli.command {
        Cmd::Stationary => Command::Stationary,
        Cmd::Evolve => Command::Evolve,
        Cmd::Check => Command::Check,
        Cmd::NuCurve => Command::NuCurve,
        Cmd::Minlength => Command::MinLength,
    });
    if let Some(v) = &cli.output {
        config.output_dir = v.clone();
    }
    if let Some(v) = cli.beta {
        config.beta = v;
    }
    if let Some(zeta) = cli.zeta {
        config.potential = PotentialSpec::Harmonic { zeta };
    }
    if let Some(v) = cli.grid_points {
        config.grid.points = v;
    }
    if let Some(v) = cli.grid_extent {
        config.grid.extent = Some(v);
    }
    if let Some(v) = cli.dt {
        config.evolution.dt = v;
    }
    if let Some(v) = cli.steps {
        config.evolution.steps = v;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    match run(&config) {
        Ok(manifest) => {
            if let Some(e) = &manifest.error {
                eprintln!("error: {e}");
            }
            println!(
                "{:?}: {} file(s) in {}",
                manifest.status,
                manifest.files.len(),
                config.output_dir.display()
            );
            ExitCode::from(manifest.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
