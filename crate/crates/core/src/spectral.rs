//! Axis-wise FFTs on periodic grids.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

pub struct AxisFft {
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl AxisFft {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.points().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.points().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { forward, inverse }
    }

    /// Transform along `axis`, multiply mode `j` by `multiplier[j]`, transform back.
    pub fn apply_multiplier(
        &self,
        grid: &Grid,
        data: &mut [Complex64],
        axis: usize,
        multiplier: &[Complex64],
    ) {
        let n = grid.points()[axis];
        let s = grid.stride(axis);
        let norm = 1.0 / n as f64;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for start in grid.line_starts(axis) {
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[start + i * s];
            }
            self.forward[axis].process(&mut line);
            for (v, m) in line.iter_mut().zip(multiplier) {
                *v *= m * norm;
            }
            self.inverse[axis].process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * s] = *v;
            }
        }
    }

    /// Spectral derivative along `axis` (Nyquist mode dropped).
    pub fn derivative(&self, grid: &Grid, data: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = grid.points()[axis];
        let k = wavenumbers(n, grid.spacing()[axis]);
        let mult: Vec<Complex64> = k
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if n.is_multiple_of(2) && j == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            })
            .collect();
        let mut out = data.to_vec();
        self.apply_multiplier(grid, &mut out, axis, &mult);
        out
    }
}

/// Angular wavenumbers in FFT order for `n` samples at spacing `h`.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = TAU / (n as f64 * h);
    (0..n)
        .map(|j| {
            let j = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            j * dk
        })
        .collect()
}
