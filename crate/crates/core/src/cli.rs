//! Command dispatch: runs one configured command and records a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Command, InitialState, RunConfig};
use crate::error::{Error, Result};
use crate::evolution::{evolve, galilean_boost, Trajectory};
use crate::field::{gaussian_state, plane_wave, WaveField};
use crate::io::{
    write_field, write_json, write_min_length, write_nu_curve, write_trajectory, StationaryRecord,
    SuiteReport,
};
use crate::stationary::{
    gup_minimal_length, harmonic_analytic, logspace, min_position_uncertainty_scan,
    solve_consistent, ConsistencyResult, PotentialSpec,
};
use crate::verification::run_all;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CheckFailed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub status: Status,
    pub error: Option<String>,
    pub seconds: f64,
    /// Data files written, relative to the output directory.
    pub files: Vec<String>,
}

impl Manifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => EXIT_OK,
            Status::CheckFailed => EXIT_CHECK_FAILED,
            Status::Error => EXIT_ERROR,
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Summary of a minimal-length scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinLengthRecord {
    pub beta: f64,
    pub infimum: f64,
    pub limit: f64,
    pub relative_gap: f64,
    pub monotone_decreasing: bool,
    /// Smallest `Delta x^2` allowed by the uncertainty relation itself.
    pub relation_minimum_sq: f64,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn field(&mut self, stem: &str, psi: &WaveField) -> Result<()> {
        self.files.push(format!("{stem}.csv"));
        self.files.push(format!("{stem}.json"));
        write_field(&self.dir, stem, psi)
    }
}

/// Run `config` (whose `command` must be set), write its files and the manifest.
///
/// Errors from the command are recorded in the manifest; only failures to
/// write the manifest itself are returned.
pub fn run(config: &RunConfig) -> Result<Manifest> {
    let command = config
        .command
        .ok_or_else(|| Error::Validation("no command given".into()))?;
    config.validate()?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut out = Outputs {
        dir: dir.clone(),
        files: Vec::new(),
    };
    let start = Instant::now();
    let result = match command {
        Command::Stationary => stationary(config, &mut out).map(|_| true),
        Command::Evolve => evolution(config, &mut out).map(|_| true),
        Command::Check => check(config, &mut out),
        Command::NuCurve => {
            let s = config.scan;
            write_nu_curve(&out.path("nu_curve.csv"), s.q_min, s.q_max, s.n_points).map(|_| true)
        }
        Command::MinLength => min_length(config, &mut out).map(|_| true),
    };
    let (status, error) = match result {
        Ok(true) => (Status::Ok, None),
        Ok(false) => (Status::CheckFailed, None),
        Err(e) => (Status::Error, Some(e.to_string())),
    };
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        config: config.clone(),
        status,
        error,
        seconds: start.elapsed().as_secs_f64(),
        files: out.files,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn consistent_state(config: &RunConfig) -> Result<ConsistencyResult> {
    let grid = config.build_grid()?;
    solve_consistent(
        &grid,
        &config.potential,
        &config.model()?,
        config.units(),
        &config.consistency,
    )
}

fn stationary(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let res = consistent_state(config)?;
    let beta = config.model()?.beta();
    let harmonic = match config.potential {
        PotentialSpec::Harmonic { zeta } => {
            let a = harmonic_analytic(beta, zeta, config.units())?;
            Some((a.q, a.nu, a.sigma_sq))
        }
        _ => None,
    };
    write_json(&out.path("stationary.json"), &StationaryRecord::new(beta, &res, harmonic))?;
    out.field("psi", &res.psi)
}

fn initial_state(config: &RunConfig) -> Result<WaveField> {
    let units = config.units();
    let dims = config.grid.dims;
    match &config.evolution.initial {
        InitialState::GroundState { velocity } => {
            let psi = consistent_state(config)?.psi;
            match velocity {
                Some(v) => galilean_boost(&psi, v, units),
                None => Ok(psi),
            }
        }
        InitialState::Gaussian {
            sigma,
            center,
            velocity,
        } => {
            let zero = vec![0.0; dims];
            let center = center.as_deref().unwrap_or(&zero);
            gaussian_state(&config.build_grid()?, *sigma, center, velocity.as_deref(), units)
        }
        InitialState::PlaneWave { k } => plane_wave(&config.build_grid()?, k, units),
    }
}

fn write_evolution(traj: &Trajectory, out: &mut Outputs) -> Result<()> {
    write_trajectory(&out.path("trajectory.csv"), traj)?;
    for snap in &traj.snapshots {
        out.field(&format!("snapshot_{:08}", snap.step), &snap.psi)?;
    }
    out.field("psi_final", &traj.final_state)
}

fn evolution(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let psi0 = initial_state(config)?;
    out.field("psi_initial", &psi0)?;
    match evolve(&psi0, &config.evolution_config()?) {
        Ok(traj) => write_evolution(&traj, out),
        Err(Error::Interrupted {
            step,
            source,
            partial,
        }) => {
            write_evolution(&partial, out)?;
            Err(Error::Interrupted {
                step,
                source,
                partial,
            })
        }
        Err(e) => Err(e),
    }
}

fn check(config: &RunConfig, out: &mut Outputs) -> Result<bool> {
    let report = SuiteReport::new(run_all(&config.suite_config()));
    write_json(&out.path("report.json"), &report)?;
    Ok(report.failed == 0)
}

fn min_length(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let beta = config.model()?.beta();
    let s = config.scan;
    let scan = min_position_uncertainty_scan(beta, &logspace(s.q_min, s.q_max, s.n_points), config.units())?;
    write_min_length(&out.path("minlength.csv"), &scan)?;
    let relation = gup_minimal_length(beta, config.units())?;
    let record = MinLengthRecord {
        beta,
        infimum: scan.infimum,
        limit: scan.limit,
        relative_gap: (scan.infimum - scan.limit) / scan.limit,
        monotone_decreasing: scan.dx_sq.windows(2).all(|w| w[1] < w[0]),
        relation_minimum_sq: relation * relation,
    };
    write_json(&out.path("minlength.json"), &record)
}

/// Read a configuration or manifest file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    crate::config::parse_config(&std::fs::read_to_string(path)?)
}
