//! Data files: CSV tables at full double precision and JSON records.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deformation::UnitsConfig;
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::field::WaveField;
use crate::grid::Grid;
use crate::stationary::{nu_of_q, ConsistencyResult, MinLengthScan};
use crate::verification::CheckReport;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Grid and units stored next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: Grid,
    pub units: UnitsConfig,
}

/// `<stem>.csv` with columns `x0[,x1,x2],re,im` and `<stem>.json` with the grid.
pub fn write_field(dir: &Path, stem: &str, psi: &WaveField) -> Result<()> {
    let grid = &psi.grid;
    let mut header: Vec<String> = (0..grid.dims()).map(|l| format!("x{l}")).collect();
    header.push("re".into());
    header.push("im".into());
    let rows = psi.values.iter().enumerate().map(|(i, v)| {
        let x = grid.position(i);
        let mut row = x[..grid.dims()].to_vec();
        row.push(v.re);
        row.push(v.im);
        row
    });
    write_rows(&dir.join(format!("{stem}.csv")), &header, rows)?;
    write_json(
        &dir.join(format!("{stem}.json")),
        &FieldHeader {
            grid: grid.clone(),
            units: psi.units,
        },
    )
}

pub fn read_field(dir: &Path, stem: &str) -> Result<WaveField> {
    let header: FieldHeader =
        serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let dims = header.grid.dims();
    let text = fs::read_to_string(dir.join(format!("{stem}.csv")))?;
    let mut values = Vec::with_capacity(header.grid.len());
    for (n, line) in text.lines().enumerate().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != dims + 2 {
            return Err(Error::Parse(format!("line {}: expected {} columns", n + 1, dims + 2)));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))
        };
        values.push(Complex64::new(num(cells[dims])?, num(cells[dims + 1])?));
    }
    WaveField::new(header.grid, values, header.units)
}

/// Summary of a stationary solve; the harmonic fields are absent for other potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryRecord {
    pub beta: f64,
    pub q: Option<f64>,
    pub nu: Option<f64>,
    pub sigma_sq_analytic: Option<f64>,
    /// Width `sigma^2 = 2 (Delta x)^2` per axis, the convention of `exp(-x^2 / 2 sigma^2)`.
    pub sigma_sq: Vec<f64>,
    pub energy: f64,
    pub w_params: Vec<f64>,
    pub fisher: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl StationaryRecord {
    pub fn new(beta: f64, result: &ConsistencyResult, harmonic: Option<(f64, f64, f64)>) -> Self {
        let (_, dx) = crate::field::position_stats(&result.psi);
        Self {
            beta,
            q: harmonic.map(|h| h.0),
            nu: harmonic.map(|h| h.1),
            sigma_sq_analytic: harmonic.map(|h| h.2),
            sigma_sq: dx.iter().map(|d| 2.0 * d * d).collect(),
            energy: result.energy,
            w_params: result.w_params.clone(),
            fisher: result.fisher.clone(),
            residual: result.residual,
            iterations: result.iterations,
            converged: result.converged,
        }
    }
}

/// Columns `t, norm` and per axis `dx_l, dp_l, F_l, W_l`.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let dims = traj.final_state.grid.dims();
    let mut header = vec!["t".to_string(), "norm".to_string()];
    for l in 0..dims {
        header.extend([format!("dx_{l}"), format!("dp_{l}"), format!("F_{l}"), format!("W_{l}")]);
    }
    let rows = traj
        .times
        .iter()
        .zip(&traj.stats)
        .zip(&traj.w_history)
        .map(|((t, s), w)| {
            let mut row = vec![*t, s.norm];
            for l in 0..dims {
                row.extend([s.delta_x[l], s.delta_p[l], s.fisher[l], w[l]]);
            }
            row
        });
    write_rows(path, &header, rows)
}

/// Columns `q, nu, 16q^2, ratio` at `n` log-spaced `q`.
pub fn write_nu_curve(path: &Path, q_min: f64, q_max: f64, n: usize) -> Result<()> {
    if !(q_min > 0.0 && q_max > q_min) {
        return Err(Error::Validation("need 0 < q_min < q_max".into()));
    }
    let header = ["q", "nu", "16q2", "ratio"].map(String::from);
    let rows = crate::stationary::logspace(q_min, q_max, n).into_iter().map(|q| {
        let nu = nu_of_q(q);
        let asym = 16.0 * q * q;
        vec![q, nu, asym, nu / asym]
    });
    write_rows(path, &header, rows)
}

/// Columns `q, dx_sq`.
pub fn write_min_length(path: &Path, scan: &MinLengthScan) -> Result<()> {
    let header = ["q", "dx_sq"].map(String::from);
    let rows = scan.q.iter().zip(&scan.dx_sq).map(|(q, d)| vec![*q, *d]);
    write_rows(path, &header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn new(checks: Vec<CheckReport>) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        Self {
            passed,
            failed: checks.len() - passed,
            checks,
        }
    }
}
