//! Stationary states: the effective-mass eigenproblem closed by the
//! consistency conditions `W_l = W(C F_l[|psi|^2])`, and the closed forms of
//! the harmonic ground state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deformation::{DeformationModel, UnitsConfig};
use crate::error::{Error, Result};
use crate::field::{fisher_information, WaveField};
use crate::grid::{Boundary, Grid};
use crate::roots::{bracketed_root, golden_section_min};
use crate::tridiag::SymTridiagonal;

/// Default tolerance on the relative consistency residual.
pub const CONSISTENCY_TOL: f64 = 1e-8;
/// Ground-state eigen-residual bound relative to `|E|`.
pub const EIGEN_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    /// `zeta x_l^2 / 2` summed over axes.
    Harmonic { zeta: f64 },
    /// Sum of one-dimensional profiles, one sample list per axis.
    Separable { axes: Vec<Vec<f64>> },
    /// Arbitrary samples on the full grid (time evolution only).
    Tabulated { samples: Vec<f64> },
}

impl PotentialSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            PotentialSpec::Free => Ok(()),
            PotentialSpec::Harmonic { zeta } => {
                if zeta.is_finite() && *zeta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Validation("zeta must be positive".into()))
                }
            }
            PotentialSpec::Separable { axes } => {
                if axes.len() != grid.dims() {
                    return Err(Error::Validation("one potential profile per axis".into()));
                }
                for (l, a) in axes.iter().enumerate() {
                    if a.len() != grid.points()[l] || a.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Validation(format!(
                            "potential profile {l} must have {} finite samples",
                            grid.points()[l]
                        )));
                    }
                }
                Ok(())
            }
            PotentialSpec::Tabulated { samples } => {
                if samples.len() != grid.len() || samples.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!(
                        "tabulated potential must have {} finite samples",
                        grid.len()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self, PotentialSpec::Tabulated { .. })
    }

    /// Profile along `axis` for separable potentials.
    pub fn axis_samples(&self, grid: &Grid, axis: usize) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let x = grid.axis_coords(axis);
        match self {
            PotentialSpec::Free => Ok(vec![0.0; x.len()]),
            PotentialSpec::Harmonic { zeta } => Ok(x.iter().map(|x| 0.5 * zeta * x * x).collect()),
            PotentialSpec::Separable { axes } => Ok(axes[axis].clone()),
            PotentialSpec::Tabulated { .. } => {
                Err(Error::invalid("tabulated potential is not separable"))
            }
        }
    }

    /// Samples on the full grid.
    pub fn samples(&self, grid: &Grid) -> Result<Vec<f64>> {
        if let PotentialSpec::Tabulated { samples } = self {
            self.validate(grid)?;
            return Ok(samples.clone());
        }
        let mut out = vec![0.0; grid.len()];
        for axis in 0..grid.dims() {
            let prof = self.axis_samples(grid, axis)?;
            let stride = grid.stride(axis);
            let n = grid.points()[axis];
            for (i, v) in out.iter_mut().enumerate() {
                *v += prof[(i / stride) % n];
            }
        }
        Ok(out)
    }
}

/// `-(hbar^2 / 2m) sum_l (1 + W_l) d^2/dx_l^2 + V` with three-point differences.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub grid: Grid,
    pub units: UnitsConfig,
    pub w_params: Vec<f64>,
    pub potential: Vec<f64>,
    axis_potentials: Option<Vec<Vec<f64>>>,
}

pub fn build_hamiltonian(
    grid: &Grid,
    potential: &PotentialSpec,
    w_params: &[f64],
    units: UnitsConfig,
) -> Result<Hamiltonian> {
    if w_params.len() != grid.dims() || w_params.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("need one finite W per axis"));
    }
    potential.validate(grid)?;
    let axis_potentials = if potential.is_separable() {
        Some(
            (0..grid.dims())
                .map(|l| potential.axis_samples(grid, l))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(Hamiltonian {
        grid: grid.clone(),
        units,
        w_params: w_params.to_vec(),
        potential: potential.samples(grid)?,
        axis_potentials,
    })
}

impl Hamiltonian {
    fn kinetic_coefficient(&self, axis: usize) -> f64 {
        self.units.hbar * self.units.hbar * (1.0 + self.w_params[axis]) / (2.0 * self.units.mass)
    }

    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.potential.iter().zip(psi).map(|(v, p)| v * p).collect();
        for axis in 0..self.grid.dims() {
            let c = self.kinetic_coefficient(axis);
            for (o, d) in out.iter_mut().zip(self.grid.d2(psi, axis)) {
                *o -= c * d;
            }
        }
        out
    }

    pub fn apply_complex(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = psi.iter().map(|v| v.re).collect();
        let im: Vec<f64> = psi.iter().map(|v| v.im).collect();
        self.apply(&re)
            .into_iter()
            .zip(self.apply(&im))
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }

    /// One-dimensional operator along `axis` (separable Hamiltonians only).
    pub fn axis_matrix(&self, axis: usize) -> Result<SymTridiagonal> {
        let pots = self
            .axis_potentials
            .as_ref()
            .ok_or_else(|| Error::invalid("Hamiltonian is not separable"))?;
        let h = self.grid.spacing()[axis];
        let k = self.kinetic_coefficient(axis) / (h * h);
        let n = self.grid.points()[axis];
        Ok(SymTridiagonal {
            diag: pots[axis].iter().map(|v| 2.0 * k + v).collect(),
            off: vec![-k; n - 1],
            corner: (self.grid.boundary() == Boundary::Periodic).then_some(-k),
        })
    }

    /// `|H psi - E psi|` in the grid L2 norm.
    pub fn residual(&self, psi: &WaveField, energy: f64) -> f64 {
        let hp = self.apply_complex(&psi.values);
        let r: Vec<f64> = hp
            .iter()
            .zip(&psi.values)
            .map(|(a, b)| (a - energy * b).norm_sqr())
            .collect();
        self.grid.integrate(&r).sqrt()
    }
}

/// Lowest eigenpair of one axis: energy and grid-normalized, positive profile.
fn axis_ground_state(h: &Hamiltonian, axis: usize) -> Result<(f64, Vec<f64>)> {
    let a = h.axis_matrix(axis)?;
    let (lo, _) = a.lowest_eigenvalue_bracket();
    let tol = 0.1 * EIGEN_REL_TOL * lo.abs() + 100.0 * f64::EPSILON * a.norm_inf();
    let (e, v) = a.lowest_eigenpair(tol, 50)?;
    let s = h.grid.spacing()[axis].sqrt().recip();
    Ok((e, v.into_iter().map(|x| x * s).collect()))
}

/// Ground state of a separable Hamiltonian as a product of axis ground states.
pub fn ground_state(h: &Hamiltonian) -> Result<(f64, WaveField)> {
    let mut energy = 0.0;
    let mut psi: Option<WaveField> = None;
    for axis in 0..h.grid.dims() {
        let (e, v) = axis_ground_state(h, axis)?;
        energy += e;
        let f = WaveField::from_real(h.grid.axis_grid(axis), &v, h.units)?;
        psi = Some(match psi {
            None => f,
            Some(p) => p.tensor(&f)?,
        });
    }
    let psi = psi.expect("grid has at least one axis");
    let psi = WaveField::new(h.grid.clone(), psi.values, h.units)?;
    let residual = h.residual(&psi, energy);
    let scale = h.grid.dims() as f64 * 100.0 * f64::EPSILON * max_diag(h);
    if residual > EIGEN_REL_TOL * energy.abs() + scale {
        return Err(Error::Convergence {
            iterations: 0,
            residual,
        });
    }
    Ok((energy, psi))
}

fn max_diag(h: &Hamiltonian) -> f64 {
    let kin: f64 = (0..h.grid.dims())
        .map(|l| 4.0 * h.kinetic_coefficient(l) / h.grid.spacing()[l].powi(2))
        .sum();
    kin + h.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConsistencyScheme {
    /// Bracketed root of `W - W(C F(W))`, which is increasing in `W`.
    Bracketed,
    /// `W <- (1 - a) W + a W(C F(W))` from `W = 0`, halving `a` whenever the residual grows.
    DampedPicard {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsistencyOptions {
    pub scheme: ConsistencyScheme,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            scheme: ConsistencyScheme::Bracketed,
            tolerance: CONSISTENCY_TOL,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub w_params: Vec<f64>,
    pub energy: f64,
    pub psi: WaveField,
    pub fisher: Vec<f64>,
    pub iterations: usize,
    /// `max_l |W_l - W(C F_l)| / (1 + W_l)`.
    pub residual: f64,
    pub converged: bool,
}

/// Fisher information of the axis ground state at effective-mass factor `1 + w`.
struct AxisProblem<'a> {
    grid: Grid,
    potential: &'a PotentialSpec,
    full_grid: &'a Grid,
    axis: usize,
    units: UnitsConfig,
}

impl AxisProblem<'_> {
    fn state(&self, w: f64) -> Result<(f64, Vec<f64>, f64)> {
        let mut ws = vec![0.0; self.full_grid.dims()];
        ws[self.axis] = w;
        let h = build_hamiltonian(self.full_grid, self.potential, &ws, self.units)?;
        let (e, v) = axis_ground_state(&h, self.axis)?;
        let rho: Vec<f64> = v.iter().map(|x| x * x).collect();
        let f = fisher_information(&rho, 0, &self.grid);
        Ok((e, v, f))
    }
}

fn relative_residual(w: f64, target: f64) -> f64 {
    (w - target).abs() / (1.0 + w)
}

fn solve_axis(
    problem: &AxisProblem,
    model: &DeformationModel,
    opts: &ConsistencyOptions,
) -> Result<(f64, usize)> {
    let c = problem.units.fisher_constant();
    let image = |w: f64| -> Result<f64> {
        let (_, _, f) = problem.state(w)?;
        model.nonlinearity(c * f)
    };
    if model.is_linear() {
        return Ok((0.0, 0));
    }
    match opts.scheme {
        ConsistencyScheme::Bracketed => {
            // Out-of-domain points count as -infinity: there W(C F) does not exist
            // and a larger W (a wider state) is needed.
            let mut phi = |w: f64| match image(w) {
                Ok(t) => (w - t) / (1.0 + w),
                Err(Error::Domain { .. }) => f64::NEG_INFINITY,
                Err(_) => f64::NAN,
            };
            let f0 = phi(0.0);
            if f0 == 0.0 {
                return Ok((0.0, 1));
            }
            let mut hi = 1.0;
            let mut fhi = phi(hi);
            while !(fhi > 0.0) {
                if fhi.is_nan() || hi > 1e12 {
                    return Err(image(hi).err().unwrap_or(Error::Convergence {
                        iterations: 0,
                        residual: f64::INFINITY,
                    }));
                }
                hi *= 4.0;
                fhi = phi(hi);
            }
            let root = bracketed_root(
                &mut phi,
                0.0,
                hi,
                1e-15 * (1.0 + hi),
                0.01 * opts.tolerance,
                opts.max_iterations,
            )?;
            Ok((root.x, root.iterations))
        }
        ConsistencyScheme::DampedPicard { alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::invalid("damping must be in (0, 1]"));
            }
            let mut a = alpha;
            let mut w = 0.0;
            let mut target = image(w)?;
            let mut res = relative_residual(w, target);
            for it in 1..=opts.max_iterations {
                if res <= opts.tolerance {
                    return Ok((w, it - 1));
                }
                let next = (1.0 - a) * w + a * target;
                let next_target = image(next)?;
                let next_res = relative_residual(next, next_target);
                if next_res > res {
                    a *= 0.5;
                }
                w = next;
                target = next_target;
                res = next_res;
            }
            Err(Error::Convergence {
                iterations: opts.max_iterations,
                residual: res,
            })
        }
    }
}

/// Self-consistent ground state for a separable potential.
pub fn solve_consistent(
    grid: &Grid,
    potential: &PotentialSpec,
    model: &DeformationModel,
    units: UnitsConfig,
    opts: &ConsistencyOptions,
) -> Result<ConsistencyResult> {
    if !potential.is_separable() {
        return Err(Error::invalid(
            "stationary solves need a separable potential",
        ));
    }
    potential.validate(grid)?;
    let c = units.fisher_constant();
    let mut w_params = Vec::new();
    let mut iterations = 0;
    for axis in 0..grid.dims() {
        let problem = AxisProblem {
            grid: grid.axis_grid(axis),
            potential,
            full_grid: grid,
            axis,
            units,
        };
        let (w, it) = solve_axis(&problem, model, opts)?;
        w_params.push(w);
        iterations = iterations.max(it);
    }
    let h = build_hamiltonian(grid, potential, &w_params, units)?;
    let (energy, psi) = ground_state(&h)?;
    let rho = psi.density();
    let fisher: Vec<f64> = (0..grid.dims())
        .map(|l| fisher_information(&rho, l, grid))
        .collect();
    let mut residual: f64 = 0.0;
    for (w, f) in w_params.iter().zip(&fisher) {
        residual = residual.max(relative_residual(*w, model.nonlinearity(c * f)?));
    }
    let converged = residual <= opts.tolerance;
    if !converged {
        return Err(Error::Convergence {
            iterations,
            residual,
        });
    }
    Ok(ConsistencyResult {
        w_params,
        energy,
        psi,
        fisher,
        iterations,
        residual,
        converged,
    })
}

/// Closed-form root of the harmonic consistency condition as a function of
/// `q = hbar^2 beta / (2 sigma_0^2)`.
pub fn nu_of_q(q: f64) -> f64 {
    let r = (1.0 + q * q).sqrt();
    q / (1.0 + q * q) * (4.0 * r + q * (7.0 + 8.0 * q * (q + r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicAnalytic {
    /// Squared width of the undeformed ground state `exp(-x^2 / 2 sigma_0^2)`.
    pub sigma0_sq: f64,
    pub q: f64,
    pub nu: f64,
    /// Squared width of the consistent ground state.
    pub sigma_sq: f64,
}

pub fn harmonic_analytic(beta: f64, zeta: f64, units: UnitsConfig) -> Result<HarmonicAnalytic> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Validation("beta must be nonnegative".into()));
    }
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(Error::Validation("zeta must be positive".into()));
    }
    let sigma0_sq = units.hbar / (zeta * units.mass).sqrt();
    let q = units.hbar * units.hbar * beta / (2.0 * sigma0_sq);
    let nu = nu_of_q(q);
    Ok(HarmonicAnalytic {
        sigma0_sq,
        q,
        nu,
        sigma_sq: sigma0_sq * (1.0 + nu).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinLengthScan {
    pub q: Vec<f64>,
    /// `(Delta x)^2` of the consistent harmonic ground state at each `q`.
    pub dx_sq: Vec<f64>,
    /// Value at the largest sampled `q`.
    pub infimum: f64,
    /// `hbar^2 beta`, the limit as `q` grows.
    pub limit: f64,
}

/// `(Delta x)^2 = (hbar^2 beta / 4) sqrt(1 + nu(q)) / q` over `q_grid`.
pub fn min_position_uncertainty_scan(
    beta: f64,
    q_grid: &[f64],
    units: UnitsConfig,
) -> Result<MinLengthScan> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Validation("beta must be positive".into()));
    }
    if q_grid.is_empty() || q_grid.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
        return Err(Error::Validation("q values must be positive".into()));
    }
    let pref = 0.25 * units.hbar * units.hbar * beta;
    let dx_sq: Vec<f64> = q_grid
        .iter()
        .map(|&q| pref * (1.0 + nu_of_q(q)).sqrt() / q)
        .collect();
    let imax = q_grid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(MinLengthScan {
        q: q_grid.to_vec(),
        infimum: dx_sq[imax],
        dx_sq,
        limit: units.hbar * units.hbar * beta,
    })
}

/// Smallest `Delta x` allowed by `Delta x Delta p >= (hbar/2)(1 + beta Delta p^2)`,
/// found numerically over `Delta p`; the closed form is `hbar sqrt(beta)`.
pub fn gup_minimal_length(beta: f64, units: UnitsConfig) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Validation("beta must be positive".into()));
    }
    let hbar = units.hbar;
    let dx = |log_p: f64| {
        let p = log_p.exp();
        0.5 * hbar * (1.0 / p + beta * p)
    };
    let centre = -0.5 * beta.ln();
    let (_, v) = golden_section_min(dx, centre - 20.0, centre + 20.0, 1e-12);
    Ok(v)
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    let steps = (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => 10f64.powf((a * (steps - i as f64) + b * i as f64) / steps),
        })
        .collect()
}
