//! Sampled wavefunctions and the density functionals built on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deformation::{DeformationModel, UnitsConfig};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::spectral::AxisFft;

/// Densities below this fraction of the maximum do not contribute to Fisher information.
pub const RHO_FLOOR: f64 = 1e-13;
/// Regularization of `|psi|` in the curvature ratio, relative to `max |psi|`.
pub const EPS_NODE: f64 = 1e-12;
/// Smallest norm accepted by [`WaveField::normalize`].
pub const ZERO_NORM: f64 = 1e-300;
/// Half-width, in units of the width parameter, a Gaussian state must fit inside.
pub const GAUSSIAN_SUPPORT: f64 = 6.0;
/// Largest mass fraction [`rescale_density`] may drop.
pub const RESCALE_MASS_LOSS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub units: UnitsConfig,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, units: UnitsConfig) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            units,
        })
    }

    pub fn from_real(grid: Grid, values: &[f64], units: UnitsConfig) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            units,
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.integrate(&self.density())
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n.is_finite() && n >= ZERO_NORM) {
            return Err(Error::ZeroField);
        }
        let s = n.sqrt().recip();
        Ok(self.scaled(Complex64::new(s, 0.0)))
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
            units: self.units,
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Multiply by `exp(i phase(x))`.
    pub fn with_phase(&self, phase: impl Fn(&[f64]) -> f64) -> Self {
        let dims = self.grid.dims();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::from_polar(1.0, phase(&self.grid.position(i)[..dims])))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            units: self.units,
        }
    }

    /// `self(x) * other(y)` on the product grid.
    pub fn tensor(&self, other: &WaveField) -> Result<Self> {
        let grid = self.grid.product(&other.grid)?;
        let mut values = Vec::with_capacity(grid.len());
        for a in &self.values {
            for b in &other.values {
                values.push(a * b);
            }
        }
        Self::new(grid, values, self.units)
    }

    /// Largest pointwise distance to another field on the same grid.
    pub fn max_abs_diff(&self, other: &WaveField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Quadrature L2 norm of `self - other`.
    pub fn l2_diff(&self, other: &WaveField) -> f64 {
        let d: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .collect();
        self.grid.integrate(&d).sqrt()
    }
}

/// Fisher information of `rho` along `axis`.
pub fn fisher_information(rho: &[f64], axis: usize, grid: &Grid) -> f64 {
    let max = rho.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0.0;
    }
    let floor = RHO_FLOOR * max;
    let d = grid.d1(rho, axis);
    let terms: Vec<f64> = rho
        .iter()
        .zip(&d)
        .map(|(&r, &dr)| if r >= floor { dr * dr / r } else { 0.0 })
        .collect();
    grid.integrate(&terms)
}

/// `|psi|^{-1} d^2|psi|/dx_axis^2`, regularized near nodes.
pub fn abs_curvature_ratio(psi: &WaveField, axis: usize) -> Vec<f64> {
    let a = psi.modulus();
    let max = a.iter().copied().fold(0.0, f64::max);
    let eps = EPS_NODE * max;
    let d2 = psi.grid.d2(&a, axis);
    a.iter()
        .zip(&d2)
        .map(|(&a, &c)| {
            let den = a.max(eps);
            if den > 0.0 {
                c / den
            } else {
                0.0
            }
        })
        .collect()
}

/// Mean and standard deviation of every coordinate under `|psi|^2 / norm`.
pub fn position_stats(psi: &WaveField) -> (Vec<f64>, Vec<f64>) {
    let grid = &psi.grid;
    let rho = psi.density();
    let total: f64 = rho.iter().sum();
    let mut mean = Vec::new();
    let mut delta = Vec::new();
    for axis in 0..grid.dims() {
        let x = grid.coordinate_field(axis);
        if total <= 0.0 {
            mean.push(0.0);
            delta.push(0.0);
            continue;
        }
        let m = rho.iter().zip(&x).map(|(r, x)| r * x).sum::<f64>() / total;
        let v = rho.iter().zip(&x).map(|(r, x)| r * (x - m) * (x - m)).sum::<f64>() / total;
        mean.push(m);
        delta.push(v.max(0.0).sqrt());
    }
    (mean, delta)
}

/// Derivative of complex samples along `axis`: spectral on periodic grids,
/// second-order differences with one-sided edges on Dirichlet grids.
pub fn gradient(psi: &WaveField, axis: usize, fft: Option<&AxisFft>) -> Vec<Complex64> {
    let grid = &psi.grid;
    if grid.boundary() == Boundary::Periodic {
        return match fft {
            Some(f) => f.derivative(grid, &psi.values, axis),
            None => AxisFft::new(grid).derivative(grid, &psi.values, axis),
        };
    }
    let n = grid.points()[axis];
    let s = grid.stride(axis);
    let h = grid.spacing()[axis];
    let f = &psi.values;
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    for start in grid.line_starts(axis) {
        let at = |i: usize| f[start + i * s];
        out[start] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        for i in 1..n - 1 {
            out[start + i * s] = (at(i + 1) - at(i - 1)) / (2.0 * h);
        }
        out[start + (n - 1) * s] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
    }
    out
}

/// Mean and spread of the momentum operator `-i hbar d/dx_l` for every axis.
pub fn momentum_stats(psi: &WaveField) -> (Vec<f64>, Vec<f64>) {
    let grid = &psi.grid;
    let hbar = psi.units.hbar;
    let total: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
    let fft = (grid.boundary() == Boundary::Periodic).then(|| AxisFft::new(grid));
    let mut mean = Vec::new();
    let mut delta = Vec::new();
    for axis in 0..grid.dims() {
        if total <= 0.0 {
            mean.push(0.0);
            delta.push(0.0);
            continue;
        }
        let d = gradient(psi, axis, fft.as_ref());
        let p1 = hbar * psi.values.iter().zip(&d).map(|(v, d)| (v.conj() * d).im).sum::<f64>() / total;
        let p2 = hbar * hbar * d.iter().map(|d| d.norm_sqr()).sum::<f64>() / total;
        mean.push(p1);
        delta.push((p2 - p1 * p1).max(0.0).sqrt());
    }
    (mean, delta)
}

/// Momentum spread built from the phase gradient and the deformed fluctuation
/// magnitude: `sqrt(Var(dS/dx_l) + [w^{-1}(sqrt(C F_l))]^2)`.
///
/// This is the spread of `p = grad S + N` when the fluctuation `N` is
/// unbiased, uncorrelated with `grad S`, and has the magnitude fixed by the
/// deformed scaling law.
pub fn fluctuation_momentum_spread(psi: &WaveField, model: &DeformationModel) -> Result<Vec<f64>> {
    let grid = &psi.grid;
    let hbar = psi.units.hbar;
    let c = psi.units.fisher_constant();
    let rho = psi.density();
    let total: f64 = rho.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroField);
    }
    let max = rho.iter().copied().fold(0.0, f64::max);
    let floor = RHO_FLOOR * max;
    let fft = (grid.boundary() == Boundary::Periodic).then(|| AxisFft::new(grid));
    let mut out = Vec::new();
    for axis in 0..grid.dims() {
        let d = gradient(psi, axis, fft.as_ref());
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for ((v, d), &r) in psi.values.iter().zip(&d).zip(&rho) {
            if r >= floor {
                let flux = hbar * (v.conj() * d).im;
                m1 += flux;
                m2 += flux * flux / r;
            }
        }
        m1 /= total;
        m2 /= total;
        let f = fisher_information(&rho, axis, grid) / (total * grid.cell_volume());
        let dn = model.w_inverse((c * f).sqrt())?;
        out.push(((m2 - m1 * m1).max(0.0) + dn * dn).sqrt());
    }
    Ok(out)
}

/// Per-axis summary statistics of a field.
///
/// Moments are expectation values under `|psi|^2 / norm`; `fisher` is the
/// functional of the raw density, so it equals the usual Fisher information
/// for normalized fields and scales with the norm otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub norm: f64,
    pub mean_x: Vec<f64>,
    pub delta_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub delta_p: Vec<f64>,
    pub fisher: Vec<f64>,
    /// `1 / sqrt(F_l)`; infinite for a flat density.
    pub delta_x_small: Vec<f64>,
    /// `sqrt(C F_l)`.
    pub delta_n_w: Vec<f64>,
}

impl FieldStats {
    pub fn of(psi: &WaveField) -> Self {
        let rho = psi.density();
        let norm = psi.grid.integrate(&rho);
        let (mean_x, delta_x) = position_stats(psi);
        let (mean_p, delta_p) = momentum_stats(psi);
        let fisher: Vec<f64> = (0..psi.grid.dims())
            .map(|l| fisher_information(&rho, l, &psi.grid))
            .collect();
        let c = psi.units.fisher_constant();
        Self {
            norm,
            mean_x,
            delta_x,
            mean_p,
            delta_p,
            delta_x_small: fisher.iter().map(|f| f.sqrt().recip()).collect(),
            delta_n_w: fisher.iter().map(|f| (c * f).sqrt()).collect(),
            fisher,
        }
    }
}

/// `kappa^n rho(kappa x)` sampled on the same grid by multilinear interpolation.
///
/// Fails when the nodes of `rho` outside the window `x / kappa` sees carry more
/// than [`RESCALE_MASS_LOSS`] of the mass.
pub fn rescale_density(rho: &[f64], kappa: f64, grid: &Grid) -> Result<Vec<f64>> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::invalid("kappa must be positive"));
    }
    if rho.len() != grid.len() {
        return Err(Error::invalid("density does not match grid"));
    }
    let dims = grid.dims();
    let periodic = grid.boundary() == Boundary::Periodic;
    // Window in original coordinates reached by kappa * x for x on the grid.
    let window: Vec<(f64, f64)> = (0..dims)
        .map(|l| {
            let (lo, hi) = grid.node_range(l);
            (kappa * lo, kappa * hi)
        })
        .collect();
    let total: f64 = rho.iter().sum();
    let lost: f64 = rho
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = grid.position(*i);
            (0..dims).any(|l| {
                let tol = 1e-12 * grid.spacing()[l];
                x[l] < window[l].0 - tol || x[l] > window[l].1 + tol
            })
        })
        .map(|(_, r)| r)
        .sum();
    if total > 0.0 && lost > RESCALE_MASS_LOSS * total {
        return Err(Error::Support(format!(
            "rescaling by {kappa} drops a mass fraction {:.3e}",
            lost / total
        )));
    }

    let factor = kappa.powi(dims as i32);
    let sample = |l: usize, j: isize| -> Option<usize> {
        let n = grid.points()[l] as isize;
        if (0..n).contains(&j) {
            Some(j as usize)
        } else if periodic && j == n {
            Some(0)
        } else {
            None
        }
    };
    let mut out = vec![0.0; rho.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let x = grid.position(i);
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for l in 0..dims {
            let u = (kappa * x[l] - grid.origin()[l]) / grid.spacing()[l];
            let f = u.floor();
            base[l] = f as isize;
            frac[l] = u - f;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dims) {
            let mut weight = 1.0;
            let mut idx = 0usize;
            let mut inside = true;
            for l in 0..dims {
                let bit = (corner >> l) & 1;
                weight *= if bit == 1 { frac[l] } else { 1.0 - frac[l] };
                match sample(l, base[l] + bit as isize) {
                    Some(j) => idx += j * grid.stride(l),
                    None => inside = false,
                }
            }
            if inside && weight != 0.0 {
                acc += weight * rho[idx];
            }
        }
        *o = factor * acc;
    }
    Ok(out)
}

/// Normalized Gaussian `exp(-|x - c|^2 / 2 sigma^2)`, optionally boosted by
/// `exp(i m v.x / hbar)`.
pub fn gaussian_state(
    grid: &Grid,
    sigma: f64,
    center: &[f64],
    velocity: Option<&[f64]>,
    units: UnitsConfig,
) -> Result<WaveField> {
    let dims = grid.dims();
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if center.len() != dims || velocity.is_some_and(|v| v.len() != dims) {
        return Err(Error::invalid("center and velocity need one entry per axis"));
    }
    for (l, &c) in center.iter().enumerate() {
        let (lo, hi) = grid.node_range(l);
        let reach = GAUSSIAN_SUPPORT * sigma;
        let slack = 1e-9 * grid.spacing()[l];
        if c - reach < lo - slack || c + reach > hi + slack {
            return Err(Error::Support(format!(
                "axis {l}: [{lo}, {hi}] does not contain {c} +/- {reach}"
            )));
        }
    }
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for l in 0..dims {
                r2 += (x[l] - center[l]).powi(2);
                if let Some(v) = velocity {
                    phase += units.mass * v[l] * x[l] / units.hbar;
                }
            }
            Complex64::from_polar((-0.5 * r2 / (sigma * sigma)).exp(), phase)
        })
        .collect();
    WaveField::new(grid.clone(), values, units)?.normalize()
}

/// Unit-norm `exp(i k.x) / sqrt(V)` on a periodic grid.
pub fn plane_wave(grid: &Grid, k: &[f64], units: UnitsConfig) -> Result<WaveField> {
    if grid.boundary() != Boundary::Periodic {
        return Err(Error::invalid("plane waves need a periodic grid"));
    }
    if k.len() != grid.dims() {
        return Err(Error::invalid("wavevector needs one entry per axis"));
    }
    let mut volume = 1.0;
    for (l, &kl) in k.iter().enumerate() {
        let length = grid.length(l);
        let cycles = kl * length / std::f64::consts::TAU;
        if (cycles - cycles.round()).abs() > 1e-9 * cycles.abs().max(1.0) {
            return Err(Error::Commensurability { k: kl, length });
        }
        volume *= length;
    }
    let amp = volume.sqrt().recip();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let phase: f64 = k.iter().enumerate().map(|(l, kl)| kl * x[l]).sum();
            Complex64::from_polar(amp, phase)
        })
        .collect();
    WaveField::new(grid.clone(), values, units)
}
