//! Run configuration: a JSON document with defaults, validated before dispatch.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::deformation::{DeformationModel, ModelKind, UnitsConfig};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, KineticScheme};
use crate::grid::{Boundary, Grid};
use crate::stationary::{harmonic_analytic, ConsistencyOptions, ConsistencyScheme, PotentialSpec};
use crate::verification::SuiteConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Stationary,
    Evolve,
    Check,
    NuCurve,
    #[serde(rename = "minlength")]
    MinLength,
}

/// Grid made of `points` nodes per axis over `[-extent, extent]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub boundary: Boundary,
    pub dims: usize,
    pub points: usize,
    /// Half width; `None` picks ten harmonic widths, or 10 without a trap.
    pub extent: Option<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            boundary: Boundary::Dirichlet,
            dims: 1,
            points: 1024,
            extent: None,
        }
    }
}

/// Starting state of an `evolve` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Consistent ground state of the configured potential, boosted by `velocity`.
    GroundState {
        #[serde(default)]
        velocity: Option<Vec<f64>>,
    },
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        velocity: Option<Vec<f64>>,
    },
    PlaneWave {
        k: Vec<f64>,
    },
}

impl Default for InitialState {
    fn default() -> Self {
        Self::GroundState { velocity: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionParams {
    pub dt: f64,
    pub steps: usize,
    /// Defaults to the scheme matching the grid boundary.
    pub kinetic_scheme: Option<KineticScheme>,
    pub w_recompute_every: usize,
    pub snapshot_every: usize,
    pub record_every: usize,
    pub initial: InitialState,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            dt: 0.001,
            steps: 1000,
            kinetic_scheme: None,
            w_recompute_every: 1,
            snapshot_every: 0,
            record_every: 1,
            initial: InitialState::default(),
        }
    }
}

/// Log-spaced `q` grid for `nu-curve` and `minlength`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanParams {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            q_min: 1e-2,
            q_max: 1e2,
            n_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckParams {
    pub betas: Vec<f64>,
    pub grid_points: usize,
}

impl Default for CheckParams {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self {
            betas: s.betas,
            grid_points: s.grid_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub model: ModelKind,
    pub beta: f64,
    pub hbar: f64,
    pub mass: f64,
    pub potential: PotentialSpec,
    pub grid: GridParams,
    pub consistency: ConsistencyOptions,
    pub evolution: EvolutionParams,
    pub scan: ScanParams,
    pub check: CheckParams,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            model: ModelKind::Gup,
            beta: 0.0,
            hbar: 1.0,
            mass: 1.0,
            potential: PotentialSpec::Harmonic { zeta: 1.0 },
            grid: GridParams::default(),
            consistency: ConsistencyOptions::default(),
            evolution: EvolutionParams::default(),
            scan: ScanParams::default(),
            check: CheckParams::default(),
            output_dir: PathBuf::from("out"),
            seed: 7,
        }
    }
}

/// Parse and validate a configuration document.
///
/// A run manifest (an object with a `config` member) is accepted too, so a
/// run can be repeated from its own record.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let config: RunConfig = match value {
        serde_json::Value::Object(mut map)
            if map.contains_key("config") && map.contains_key("version") =>
        {
            let inner = map.remove("config").unwrap_or_default();
            serde_json::from_value(inner).map_err(|e| Error::Parse(format!("config: {e}")))?
        }
        // Parsed from the text again so errors carry line and column.
        _ => serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?,
    };
    config.validate()?;
    Ok(config)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be positive")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Validation("beta must be nonnegative".into()));
        }
        positive("hbar", self.hbar)?;
        positive("mass", self.mass)?;
        let g = &self.grid;
        if !(1..=crate::grid::MAX_DIMS).contains(&g.dims) {
            return Err(Error::Validation("grid.dims must be 1, 2 or 3".into()));
        }
        if g.points < crate::grid::MIN_POINTS {
            return Err(Error::Validation(format!(
                "grid.points must be at least {}",
                crate::grid::MIN_POINTS
            )));
        }
        if let Some(e) = g.extent {
            positive("grid.extent", e)?;
        }
        let c = &self.consistency;
        positive("consistency.tolerance", c.tolerance)?;
        if c.max_iterations == 0 {
            return Err(Error::Validation("consistency.max_iterations must be positive".into()));
        }
        if let ConsistencyScheme::DampedPicard { alpha } = c.scheme {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Validation("alpha must lie in (0, 1]".into()));
            }
        }
        let e = &self.evolution;
        positive("evolution.dt", e.dt)?;
        if e.w_recompute_every == 0 || e.record_every == 0 {
            return Err(Error::Validation(
                "evolution.w_recompute_every and record_every must be positive".into(),
            ));
        }
        if let InitialState::Gaussian { sigma, .. } = e.initial {
            positive("evolution.initial.sigma", sigma)?;
        }
        let s = &self.scan;
        positive("scan.q_min", s.q_min)?;
        if !(s.q_max > s.q_min && s.q_max.is_finite()) {
            return Err(Error::Validation("scan.q_max must exceed scan.q_min".into()));
        }
        if s.n_points < 2 {
            return Err(Error::Validation("scan.n_points must be at least 2".into()));
        }
        if self.check.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::Validation("beta must be nonnegative".into()));
        }
        if self.check.grid_points < crate::grid::MIN_POINTS {
            return Err(Error::Validation("check.grid_points is too small".into()));
        }
        if let PotentialSpec::Harmonic { zeta } = self.potential {
            positive("zeta", zeta)?;
        }
        Ok(())
    }

    pub fn units(&self) -> UnitsConfig {
        UnitsConfig {
            hbar: self.hbar,
            mass: self.mass,
        }
    }

    pub fn model(&self) -> Result<DeformationModel> {
        match self.model {
            ModelKind::Identity => Ok(DeformationModel::identity()),
            ModelKind::Gup => DeformationModel::gup(self.beta),
        }
    }

    pub fn half_width(&self) -> Result<f64> {
        if let Some(e) = self.grid.extent {
            return Ok(e);
        }
        Ok(match self.potential {
            PotentialSpec::Harmonic { zeta } => {
                let beta = self.model()?.beta();
                10.0 * harmonic_analytic(beta, zeta, self.units())?.sigma_sq.sqrt()
            }
            _ => 10.0,
        })
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::centered(
            self.grid.boundary,
            self.grid.dims,
            self.grid.points,
            self.half_width()?,
        )
    }

    pub fn evolution_config(&self) -> Result<EvolutionConfig> {
        let e = &self.evolution;
        let scheme = e.kinetic_scheme.unwrap_or(match self.grid.boundary {
            Boundary::Periodic => KineticScheme::SpectralPeriodic,
            Boundary::Dirichlet => KineticScheme::CrankNicolsonDirichlet,
        });
        let mut cfg = EvolutionConfig::new(
            e.dt,
            e.steps,
            scheme,
            self.model()?,
            self.potential.clone(),
            self.units(),
        );
        cfg.w_recompute_every = e.w_recompute_every;
        cfg.snapshot_every = e.snapshot_every;
        cfg.record_every = e.record_every;
        Ok(cfg)
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            betas: self.check.betas.clone(),
            grid_points: self.check.grid_points,
            zeta: match self.potential {
                PotentialSpec::Harmonic { zeta } => zeta,
                _ => 1.0,
            },
            units: self.units(),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(r#"{"command": "nu-curve", "beta": 1.0}"#).unwrap();
        assert_eq!(c.command, Some(Command::NuCurve));
        assert_eq!(c.beta, 1.0);
        assert_eq!((c.hbar, c.mass), (1.0, 1.0));
        assert_eq!(c.scan, ScanParams::default());
        assert_eq!(c.consistency.tolerance, 1e-8);
    }

    #[test]
    fn negative_beta_is_rejected() {
        match parse_config(r#"{"command": "stationary", "beta": -1}"#) {
            Err(Error::Validation(m)) => assert!(m.contains("beta must be nonnegative")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        match parse_config(r#"{"command": "check", "betta": 1}"#) {
            Err(Error::Parse(m)) => assert!(m.contains("betta"), "{m}"),
            other => panic!("{other:?}"),
        }
        match parse_config("{\n  \"grid\": {\"pts\": 3}\n}") {
            Err(Error::Parse(m)) => assert!(m.contains("pts") && m.contains("line 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_document_reports_position() {
        match parse_config("{\"beta\": }") {
            Err(Error::Parse(m)) => assert!(m.contains("line 1"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn picard_alpha_default_and_range() {
        let c = parse_config(r#"{"consistency": {"scheme": {"scheme": "damped_picard"}}}"#).unwrap();
        assert_eq!(c.consistency.scheme, ConsistencyScheme::DampedPicard { alpha: 0.5 });
        let bad = r#"{"consistency": {"scheme": {"scheme": "damped_picard", "alpha": 1.5}}}"#;
        assert!(matches!(parse_config(bad), Err(Error::Validation(_))));
    }

    #[test]
    fn harmonic_extent_follows_width() {
        let c = parse_config(r#"{"beta": 0.2}"#).unwrap();
        let a = harmonic_analytic(0.2, 1.0, c.units()).unwrap();
        assert!((c.half_width().unwrap() - 10.0 * a.sigma_sq.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn manifest_is_accepted() {
        let c = parse_config(r#"{"command": "minlength", "beta": 0.5}"#).unwrap();
        let manifest = serde_json::json!({"version": "0.1.0", "config": c});
        let back = parse_config(&manifest.to_string()).unwrap();
        assert_eq!(back, c);
    }
}
