//! Time evolution by Strang splitting.
//!
//! The nonlinear term is a real potential `V_W = -(hbar^2/2m) sum_l W_l r_l`
//! with `r_l = |psi|^{-1} d^2|psi|/dx_l^2`. One step is: half phase rotation
//! by `V + V_W`, a full kinetic step, refresh of `V_W` from the new `|psi|`,
//! and a second half phase rotation. Phase rotations are unimodular and both
//! kinetic propagators are unitary, so the norm is conserved to rounding.
//!
//! The shape `r_l` is refreshed every step. The scalar weights `W_l` are
//! refreshed every `w_recompute_every` steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deformation::{DeformationModel, UnitsConfig};
use crate::error::{Error, Result};
use crate::field::{abs_curvature_ratio, fisher_information, FieldStats, WaveField};
use crate::grid::{Boundary, Grid};
use crate::spectral::{wavenumbers, AxisFft};
use crate::stationary::PotentialSpec;
use crate::tridiag::ConstTridiagonal;

/// Largest admissible `dt max|V + V_W| / hbar`.
pub const PHASE_GUARD: f64 = 0.5;
/// Largest per-step amplification of short waves the stiffness check accepts.
pub const STIFFNESS_GROWTH: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticScheme {
    SpectralPeriodic,
    CrankNicolsonDirichlet,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub kinetic_scheme: KineticScheme,
    #[serde(default = "one")]
    pub w_recompute_every: usize,
    /// Keep every n-th state (and the initial one); 0 keeps none.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Record statistics every n-th step.
    #[serde(default = "one")]
    pub record_every: usize,
    pub model: DeformationModel,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub units: UnitsConfig,
}

impl EvolutionConfig {
    pub fn new(
        dt: f64,
        steps: usize,
        kinetic_scheme: KineticScheme,
        model: DeformationModel,
        potential: PotentialSpec,
        units: UnitsConfig,
    ) -> Self {
        Self {
            dt,
            steps,
            kinetic_scheme,
            w_recompute_every: 1,
            snapshot_every: 0,
            record_every: 1,
            model,
            potential,
            units,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Validation("dt must be positive".into()));
        }
        if self.w_recompute_every == 0 || self.record_every == 0 {
            return Err(Error::Validation(
                "w_recompute_every and record_every must be positive".into(),
            ));
        }
        let needed = match self.kinetic_scheme {
            KineticScheme::SpectralPeriodic => Boundary::Periodic,
            KineticScheme::CrankNicolsonDirichlet => Boundary::Dirichlet,
        };
        if grid.boundary() != needed {
            return Err(Error::Validation(format!(
                "{:?} needs a {:?} grid",
                self.kinetic_scheme, needed
            )));
        }
        self.potential.validate(grid)
    }

    /// Kinetic phase `mu` and rotation angle `theta` of one step for the
    /// fraction `f` in (0, 1] of the largest resolved wavenumber on `axis`.
    fn mode(&self, grid: &Grid, axis: usize, f: f64) -> (f64, f64) {
        let h = grid.spacing()[axis];
        let c = self.units.hbar * self.dt / (2.0 * self.units.mass);
        match self.kinetic_scheme {
            KineticScheme::SpectralPeriodic => {
                let mu = c * (f * std::f64::consts::PI / h).powi(2);
                (mu, mu)
            }
            KineticScheme::CrankNicolsonDirichlet => {
                let mu = c * 4.0 / (h * h) * (0.5 * f * std::f64::consts::PI).sin().powi(2);
                (mu, 2.0 * (0.5 * mu).atan())
            }
        }
    }

    /// Linear stability of the explicitly applied nonlinear term for weights `w`.
    ///
    /// A short-wavelength perturbation of (amplitude, phase) goes through
    /// kick-rotate-kick: rotation by `theta`, kicks of strength
    /// `s = sum_l W_l mu_l / 2`. The map has unit determinant and trace
    /// `2 cos(theta) - 2 s sin(theta)`; its growth factor is scanned over a
    /// lattice of wavenumbers and must stay within [`STIFFNESS_GROWTH`] of one.
    pub fn check_stiffness(&self, grid: &Grid, w: &[f64]) -> Result<()> {
        if w.iter().all(|w| *w == 0.0) {
            return Ok(());
        }
        const SAMPLES: usize = 32;
        let dims = grid.dims();
        let modes: Vec<Vec<(f64, f64)>> = (0..dims)
            .map(|l| {
                (0..=SAMPLES)
                    .map(|j| self.mode(grid, l, j as f64 / SAMPLES as f64))
                    .collect()
            })
            .collect();
        let mut worst: f64 = 1.0;
        let total = (SAMPLES + 1).pow(dims as u32);
        for idx in 0..total {
            let (mut theta, mut s, mut rest) = (0.0, 0.0, idx);
            for l in 0..dims {
                let (mu, th) = modes[l][rest % (SAMPLES + 1)];
                rest /= SAMPLES + 1;
                theta += th;
                s += 0.5 * w[l] * mu;
            }
            let tr = 2.0 * theta.cos() - 2.0 * s * theta.sin();
            if tr.abs() > 2.0 {
                worst = worst.max(0.5 * (tr.abs() + (tr * tr - 4.0).sqrt()));
            }
        }
        if worst - 1.0 > STIFFNESS_GROWTH {
            return Err(Error::Stability(format!(
                "nonlinear term amplifies short waves by {worst:.6} per step at dt = {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Nonlinear potential of `psi` and the weights `W_l = W(C F_l[|psi|^2])`.
pub fn effective_potential(
    psi: &WaveField,
    model: &DeformationModel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = nonlinear_weights(psi, model)?;
    Ok((potential_from_weights(psi, &w), w))
}

fn nonlinear_weights(psi: &WaveField, model: &DeformationModel) -> Result<Vec<f64>> {
    let c = psi.units.fisher_constant();
    let rho = psi.density();
    (0..psi.grid.dims())
        .map(|l| {
            if model.is_linear() {
                Ok(0.0)
            } else {
                model.nonlinearity(c * fisher_information(&rho, l, &psi.grid))
            }
        })
        .collect()
}

fn potential_from_weights(psi: &WaveField, w: &[f64]) -> Vec<f64> {
    let pref = -psi.units.hbar * psi.units.hbar / (2.0 * psi.units.mass);
    let mut v = vec![0.0; psi.values.len()];
    for (l, &wl) in w.iter().enumerate() {
        if wl == 0.0 {
            continue;
        }
        for (v, r) in v.iter_mut().zip(abs_curvature_ratio(psi, l)) {
            *v += pref * wl * r;
        }
    }
    v
}

/// `psi(x) exp(i m v.x / hbar)`.
pub fn galilean_boost(psi: &WaveField, velocity: &[f64], units: UnitsConfig) -> Result<WaveField> {
    if velocity.len() != psi.grid.dims() {
        return Err(Error::invalid("velocity needs one entry per axis"));
    }
    let k: Vec<f64> = velocity.iter().map(|v| units.mass * v / units.hbar).collect();
    Ok(psi.with_phase(|x| x.iter().zip(&k).map(|(x, k)| x * k).sum()))
}

enum Kinetic {
    Spectral {
        fft: AxisFft,
        multipliers: Vec<Vec<Complex64>>,
    },
    CrankNicolson {
        solvers: Vec<ConstTridiagonal>,
        /// `i hbar dt / (4 m h^2)` per axis.
        coupling: Vec<Complex64>,
    },
}

/// Reusable propagator for one grid and configuration.
pub struct Stepper {
    config: EvolutionConfig,
    grid: Grid,
    potential: Vec<f64>,
    kinetic: Kinetic,
    weights: Vec<f64>,
    v_w: Vec<f64>,
    steps_taken: usize,
}

impl Stepper {
    pub fn new(psi: &WaveField, config: &EvolutionConfig) -> Result<Self> {
        let grid = psi.grid.clone();
        config.validate(&grid)?;
        let units = config.units;
        let kinetic = match config.kinetic_scheme {
            KineticScheme::SpectralPeriodic => Kinetic::Spectral {
                fft: AxisFft::new(&grid),
                multipliers: (0..grid.dims())
                    .map(|l| {
                        wavenumbers(grid.points()[l], grid.spacing()[l])
                            .into_iter()
                            .map(|k| {
                                let phase = -units.hbar * k * k * config.dt / (2.0 * units.mass);
                                Complex64::from_polar(1.0, phase)
                            })
                            .collect()
                    })
                    .collect(),
            },
            KineticScheme::CrankNicolsonDirichlet => {
                let coupling: Vec<Complex64> = grid
                    .spacing()
                    .iter()
                    .map(|h| Complex64::new(0.0, units.hbar * config.dt / (4.0 * units.mass * h * h)))
                    .collect();
                let solvers = (0..grid.dims())
                    .map(|l| {
                        let ic = coupling[l];
                        ConstTridiagonal::new(grid.points()[l], 1.0 + 2.0 * ic, -ic)
                    })
                    .collect();
                Kinetic::CrankNicolson { solvers, coupling }
            }
        };
        let psi = WaveField {
            units,
            ..psi.clone()
        };
        let (v_w, weights) = effective_potential(&psi, &config.model)?;
        let stepper = Self {
            config: config.clone(),
            potential: config.potential.samples(&grid)?,
            grid,
            kinetic,
            weights,
            v_w,
            steps_taken: 0,
        };
        stepper.config.check_stiffness(&stepper.grid, &stepper.weights)?;
        let vmax = stepper
            .potential
            .iter()
            .zip(&stepper.v_w)
            .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
        let guard = config.dt * vmax / units.hbar;
        if guard >= PHASE_GUARD {
            return Err(Error::Stability(format!(
                "dt max|V|/hbar = {guard:.3} exceeds {PHASE_GUARD}"
            )));
        }
        Ok(stepper)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn effective_potential(&self) -> &[f64] {
        &self.v_w
    }

    fn half_phase(&self, psi: &mut WaveField) {
        let f = -0.5 * self.config.dt / self.config.units.hbar;
        for ((v, pot), vw) in psi.values.iter_mut().zip(&self.potential).zip(&self.v_w) {
            *v *= Complex64::from_polar(1.0, f * (pot + vw));
        }
    }

    fn kinetic(&self, psi: &mut WaveField) {
        let grid = &self.grid;
        match &self.kinetic {
            Kinetic::Spectral { fft, multipliers } => {
                for (l, m) in multipliers.iter().enumerate() {
                    fft.apply_multiplier(grid, &mut psi.values, l, m);
                }
            }
            Kinetic::CrankNicolson { solvers, coupling } => {
                for l in 0..grid.dims() {
                    let n = grid.points()[l];
                    let s = grid.stride(l);
                    let ic = coupling[l];
                    let mut line = vec![Complex64::new(0.0, 0.0); n];
                    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
                    for start in grid.line_starts(l) {
                        for (i, out) in line.iter_mut().enumerate() {
                            let c = psi.values[start + i * s];
                            let m = if i > 0 { psi.values[start + (i - 1) * s] } else { Complex64::new(0.0, 0.0) };
                            let p = if i + 1 < n { psi.values[start + (i + 1) * s] } else { Complex64::new(0.0, 0.0) };
                            *out = (1.0 - 2.0 * ic) * c + ic * (m + p);
                        }
                        solvers[l].solve_strided(&mut line, 0, 1, &mut scratch);
                        for (i, v) in line.iter().enumerate() {
                            psi.values[start + i * s] = *v;
                        }
                    }
                }
            }
        }
    }

    fn refresh(&mut self, psi: &WaveField) -> Result<()> {
        if self.steps_taken.is_multiple_of(self.config.w_recompute_every) {
            self.weights = nonlinear_weights(psi, &self.config.model)?;
            self.config.check_stiffness(&self.grid, &self.weights)?;
        }
        self.v_w = potential_from_weights(psi, &self.weights);
        Ok(())
    }

    /// Advance `psi` by one step in place.
    ///
    /// On error `psi` holds the state after the kinetic sub-step.
    pub fn step(&mut self, psi: &mut WaveField) -> Result<()> {
        self.half_phase(psi);
        self.kinetic(psi);
        self.steps_taken += 1;
        self.refresh(psi)?;
        self.half_phase(psi);
        Ok(())
    }
}

/// One step from `psi`.
pub fn step(psi: &WaveField, config: &EvolutionConfig) -> Result<WaveField> {
    let mut stepper = Stepper::new(psi, config)?;
    let mut out = psi.clone();
    stepper.step(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub psi: WaveField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: EvolutionConfig,
    pub times: Vec<f64>,
    pub stats: Vec<FieldStats>,
    pub w_history: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: WaveField,
    pub steps_completed: usize,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.stats.first().map_or(1.0, |s| s.norm);
        self.stats
            .iter()
            .map(|s| (s.norm - n0).abs())
            .fold(0.0, f64::max)
    }
}

/// Run `config.steps` steps from `psi0`.
///
/// A failing step returns [`Error::Interrupted`] carrying the trajectory up
/// to the last completed step.
pub fn evolve(psi0: &WaveField, config: &EvolutionConfig) -> Result<Trajectory> {
    let mut stepper = Stepper::new(psi0, config)?;
    let mut psi = WaveField {
        units: config.units,
        ..psi0.clone()
    };
    let mut traj = Trajectory {
        config: config.clone(),
        times: vec![0.0],
        stats: vec![FieldStats::of(&psi)],
        w_history: vec![stepper.weights().to_vec()],
        snapshots: Vec::new(),
        final_state: psi.clone(),
        steps_completed: 0,
    };
    if config.snapshot_every > 0 {
        traj.snapshots.push(Snapshot {
            step: 0,
            time: 0.0,
            psi: psi.clone(),
        });
    }
    for n in 1..=config.steps {
        let before = psi.clone();
        if let Err(e) = stepper.step(&mut psi) {
            traj.final_state = before;
            return Err(Error::Interrupted {
                step: n,
                source: Box::new(e),
                partial: Box::new(traj),
            });
        }
        let t = n as f64 * config.dt;
        if n % config.record_every == 0 || n == config.steps {
            traj.times.push(t);
            traj.stats.push(FieldStats::of(&psi));
            traj.w_history.push(stepper.weights().to_vec());
        }
        if config.snapshot_every > 0 && n % config.snapshot_every == 0 {
            traj.snapshots.push(Snapshot {
                step: n,
                time: t,
                psi: psi.clone(),
            });
        }
        traj.steps_completed = n;
    }
    traj.final_state = psi;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_state, momentum_stats, plane_wave, position_stats};
    use std::f64::consts::TAU;

    fn units() -> UnitsConfig {
        UnitsConfig::default()
    }

    #[test]
    fn plane_wave_has_no_nonlinear_potential() {
        let g = Grid::periodic(&[(64, 0.0, 8.0)]).unwrap();
        let psi = plane_wave(&g, &[TAU * 2.0 / 8.0], units()).unwrap();
        let (v, w) = effective_potential(&psi, &DeformationModel::gup(0.5).unwrap()).unwrap();
        // flat up to rounding
        assert!(w[0] < 1e-20);
        assert!(v.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn gaussian_nonlinear_potential() {
        let beta = 0.05;
        let sigma: f64 = 1.5;
        let g = Grid::dirichlet(&[(2001, -9.0, 9.0)]).unwrap();
        let psi = gaussian_state(&g, sigma, &[0.0], None, units()).unwrap();
        let model = DeformationModel::gup(beta).unwrap();
        let (v, w) = effective_potential(&psi, &model).unwrap();
        let wexact = model.nonlinearity(0.5 / (sigma * sigma)).unwrap();
        assert!((w[0] / wexact - 1.0).abs() < 1e-5);
        for (x, v) in g.axis_coords(0).iter().zip(&v).skip(500).take(1000) {
            let exact = -0.5 * wexact * (x * x / sigma.powi(4) - 1.0 / (sigma * sigma));
            assert!((v - exact).abs() < 1e-5, "{x} {v} {exact}");
        }
    }

    #[test]
    fn identity_model_has_no_nonlinear_potential() {
        let g = Grid::dirichlet(&[(128, -8.0, 8.0)]).unwrap();
        let psi = gaussian_state(&g, 1.0, &[0.0], None, units()).unwrap();
        let (v, _) = effective_potential(&psi, &DeformationModel::identity()).unwrap();
        assert!(v.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn boost_leaves_nonlinear_potential_unchanged() {
        let g = Grid::dirichlet(&[(256, -8.0, 8.0)]).unwrap();
        let psi = gaussian_state(&g, 1.0, &[0.3], None, units()).unwrap();
        let model = DeformationModel::gup(0.1).unwrap();
        let boosted = galilean_boost(&psi, &[0.7], units()).unwrap();
        let (a, _) = effective_potential(&psi, &model).unwrap();
        let (b, _) = effective_potential(&boosted, &model).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert_eq!(galilean_boost(&psi, &[0.0], units()).unwrap(), psi);
        let (p0, dp0) = momentum_stats(&psi);
        let (p1, dp1) = momentum_stats(&boosted);
        assert!((p1[0] - p0[0] - 0.7).abs() < 1e-3);
        assert!((dp1[0] - dp0[0]).abs() < 1e-3);
    }

    #[test]
    fn plane_wave_step_follows_linear_dispersion() {
        let g = Grid::periodic(&[(64, 0.0, 8.0)]).unwrap();
        let k = TAU * 3.0 / 8.0;
        let psi = plane_wave(&g, &[k], units()).unwrap();
        let dt = 0.01;
        let cfg = EvolutionConfig::new(
            dt,
            1,
            KineticScheme::SpectralPeriodic,
            DeformationModel::gup(1.0).unwrap(),
            PotentialSpec::Free,
            units(),
        );
        let next = step(&psi, &cfg).unwrap();
        let expected = Complex64::from_polar(1.0, -0.5 * k * k * dt);
        for (a, b) in next.values.iter().zip(&psi.values) {
            assert!((a / b - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn coherent_state_oscillates_classically() {
        let g = Grid::centered(Boundary::Periodic, 1, 256, 10.0).unwrap();
        let x0 = 1.5;
        let psi = gaussian_state(&g, 1.0, &[x0], None, units()).unwrap();
        let dt = 0.001;
        let steps = (TAU / dt).round() as usize;
        let mut cfg = EvolutionConfig::new(
            dt,
            steps,
            KineticScheme::SpectralPeriodic,
            DeformationModel::identity(),
            PotentialSpec::Harmonic { zeta: 1.0 },
            units(),
        );
        cfg.record_every = 50;
        let traj = evolve(&psi, &cfg).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.stats) {
            assert!((s.mean_x[0] - x0 * t.cos()).abs() < 1e-4 * x0 + 1e-4, "{t} {}", s.mean_x[0]);
        }
        let (m, _) = position_stats(&traj.final_state);
        assert!((m[0] - x0 * (steps as f64 * dt).cos()).abs() < 1e-4);
    }

    #[test]
    fn norm_is_conserved() {
        let g = Grid::dirichlet(&[(256, -8.0, 8.0)]).unwrap();
        let psi = gaussian_state(&g, 1.2, &[0.5], Some(&[0.3]), units()).unwrap();
        let mut cfg = EvolutionConfig::new(
            0.005,
            1000,
            KineticScheme::CrankNicolsonDirichlet,
            DeformationModel::gup(0.1).unwrap(),
            PotentialSpec::Harmonic { zeta: 1.0 },
            units(),
        );
        cfg.record_every = 10;
        let traj = evolve(&psi, &cfg).unwrap();
        assert!(traj.max_norm_drift() <= 1e-8);
        assert!(traj.w_history.iter().all(|w| w[0] > 0.0));
    }

    #[test]
    fn scheme_and_boundary_must_match() {
        let g = Grid::dirichlet(&[(64, -8.0, 8.0)]).unwrap();
        let psi = gaussian_state(&g, 1.0, &[0.0], None, units()).unwrap();
        let cfg = EvolutionConfig::new(
            0.01,
            1,
            KineticScheme::SpectralPeriodic,
            DeformationModel::identity(),
            PotentialSpec::Free,
            units(),
        );
        assert!(matches!(step(&psi, &cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn phase_guard_rejects_large_steps() {
        let g = Grid::dirichlet(&[(64, -8.0, 8.0)]).unwrap();
        let psi = gaussian_state(&g, 1.0, &[0.0], None, units()).unwrap();
        let cfg = EvolutionConfig::new(
            0.1,
            1,
            KineticScheme::CrankNicolsonDirichlet,
            DeformationModel::identity(),
            PotentialSpec::Harmonic { zeta: 1.0 },
            units(),
        );
        assert!(matches!(step(&psi, &cfg), Err(Error::Stability(_))));
    }

    #[test]
    fn stiffness_guard() {
        let g = Grid::dirichlet(&[(512, -8.0, 8.0)]).unwrap();
        let psi = gaussian_state(&g, 1.0, &[0.0], None, units()).unwrap();
        let mut cfg = EvolutionConfig::new(
            0.01,
            1,
            KineticScheme::CrankNicolsonDirichlet,
            DeformationModel::gup(0.1).unwrap(),
            PotentialSpec::Free,
            units(),
        );
        assert!(matches!(step(&psi, &cfg), Err(Error::Stability(_))));
        cfg.dt = 0.001;
        assert!(step(&psi, &cfg).is_ok());
    }

    #[test]
    fn domain_error_truncates_trajectory() {
        // A packet wider than the ground state of a stiff trap contracts until
        // C F = 1/(2 sigma^2) passes 1/(4 beta).
        let g = Grid::dirichlet(&[(512, -5.0, 5.0)]).unwrap();
        let beta = 0.2;
        let psi = gaussian_state(&g, 0.8, &[0.0], None, units()).unwrap();
        let mut cfg = EvolutionConfig::new(
            0.0001,
            5000,
            KineticScheme::CrankNicolsonDirichlet,
            DeformationModel::gup(beta).unwrap(),
            PotentialSpec::Harmonic { zeta: 100.0 },
            units(),
        );
        cfg.record_every = 100;
        match evolve(&psi, &cfg) {
            Err(Error::Interrupted {
                step,
                source,
                partial,
            }) => {
                assert!(step > 1);
                assert!(matches!(*source, Error::Domain { .. } | Error::Stability(_)));
                assert_eq!(partial.steps_completed, step - 1);
            }
            other => panic!("expected interruption, got {:?}", other.map(|t| t.steps_completed)),
        }
    }
}
