//! Symmetric tridiagonal (optionally cyclic) matrices and their lowest eigenpair.
//!
//! The lowest eigenvalue is bracketed by bisection on positive definiteness
//! of `A - s I` (an LDL^T pivot test, equivalent to a zero Sturm count), then
//! the eigenvector comes from inverse iteration at the lower end of the final
//! bracket, where the shifted matrix is still positive definite and the
//! unpivoted factorization is stable.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<f64>,
    /// Coupling between the last and the first row (cyclic matrices only).
    pub corner: Option<f64>,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, x)| d * x).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        if let Some(c) = self.corner {
            y[0] += c * x[n - 1];
            y[n - 1] += c * x[0];
        }
        y
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            if let Some(c) = self.corner {
                if i == 0 || i == n - 1 {
                    r += c.abs();
                }
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Whether `A - shift I` is positive definite.
    pub fn is_positive_definite_shifted(&self, shift: f64) -> bool {
        self.factor(shift).is_some()
    }

    /// LDL^T of `A - shift I`; `None` if a pivot is not positive.
    fn factor(&self, shift: f64) -> Option<Factor> {
        let n = self.len();
        let m = if self.corner.is_some() { n - 1 } else { n };
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n];
        d[0] = self.diag[0] - shift;
        if !(d[0] > 0.0) {
            return None;
        }
        for i in 1..m {
            l[i - 1] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - shift - l[i - 1] * self.off[i - 1];
            if !(d[i] > 0.0) {
                return None;
            }
        }
        let mut last = Vec::new();
        if let Some(c) = self.corner {
            // Last row couples to row 0 (corner) and row n-2 (off).
            // Solve L D L^T g = v for the border v, then Schur complement.
            let mut v = vec![0.0; m];
            v[0] += c;
            v[m - 1] += self.off[n - 2];
            // forward: L y = v
            let mut y = v.clone();
            for i in 1..m {
                y[i] -= l[i - 1] * y[i - 1];
            }
            let mut schur = self.diag[n - 1] - shift;
            for i in 0..m {
                schur -= y[i] * y[i] / d[i];
            }
            if !(schur > 0.0) {
                return None;
            }
            d[n - 1] = schur;
            // row of L for the border: y_i / d_i
            last = (0..m).map(|i| y[i] / d[i]).collect();
        }
        Some(Factor { d, l, last, m })
    }

    /// Solve `(A - shift I) x = b` for positive-definite shifted matrices.
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
        let f = self
            .factor(shift)
            .ok_or_else(|| Error::invalid("shifted matrix is not positive definite"))?;
        Ok(f.solve(b))
    }

    /// Lowest eigenvalue to near machine precision.
    pub fn lowest_eigenvalue_bracket(&self) -> (f64, f64) {
        let (mut lo, hi0) = self.gershgorin();
        let mut hi = hi0;
        // Positive definiteness of A - lo I holds strictly below the Gershgorin bound.
        lo -= 1e-12 * (lo.abs() + hi.abs() + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.is_positive_definite_shifted(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())) {
                break;
            }
        }
        (lo, hi)
    }

    /// Lowest eigenpair with a unit Euclidean-norm eigenvector of positive sum.
    ///
    /// Stops once `|A x - e x| <= tol`.
    pub fn lowest_eigenpair(&self, tol: f64, max_iterations: usize) -> Result<(f64, Vec<f64>)> {
        let n = self.len();
        let (lo, _) = self.lowest_eigenvalue_bracket();
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut residual = f64::INFINITY;
        for _ in 0..max_iterations.max(1) {
            let y = self.solve_shifted(lo, &x)?;
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            x = y.iter().map(|v| v / norm).collect();
            let ax = self.apply(&x);
            let eig: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            residual = ax
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - eig * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual <= tol {
                if x.iter().sum::<f64>() < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok((eig, x));
            }
        }
        Err(Error::Convergence {
            iterations: max_iterations,
            residual,
        })
    }
}

struct Factor {
    d: Vec<f64>,
    l: Vec<f64>,
    last: Vec<f64>,
    m: usize,
}

impl Factor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let m = self.m;
        let mut y = b.to_vec();
        for i in 1..m {
            y[i] -= self.l[i - 1] * y[i - 1];
        }
        if m < n {
            for i in 0..m {
                y[n - 1] -= self.last[i] * y[i];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        if m < n {
            for i in 0..m {
                y[i] -= self.last[i] * y[n - 1];
            }
        }
        for i in (0..m - 1).rev() {
            y[i] -= self.l[i] * y[i + 1];
        }
        y
    }
}

/// Pre-factored constant-coefficient complex tridiagonal system (Thomas algorithm)
/// with `diag` on the diagonal and `off` on both off-diagonals.
#[derive(Debug, Clone)]
pub struct ConstTridiagonal {
    off: Complex64,
    /// Modified super-diagonal `c'_i`.
    c_prime: Vec<Complex64>,
    /// Reciprocal of the modified pivots.
    inv_pivot: Vec<Complex64>,
}

impl ConstTridiagonal {
    pub fn new(n: usize, diag: Complex64, off: Complex64) -> Self {
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut prev_c = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let pivot = diag - off * prev_c;
            inv_pivot[i] = pivot.inv();
            c_prime[i] = off * inv_pivot[i];
            prev_c = c_prime[i];
        }
        Self {
            off,
            c_prime,
            inv_pivot,
        }
    }

    /// Solve in place on a strided line.
    pub fn solve_strided(&self, data: &mut [Complex64], start: usize, stride: usize, scratch: &mut [Complex64]) {
        let n = self.c_prime.len();
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let v = (data[start + i * stride] - self.off * prev) * self.inv_pivot[i];
            scratch[i] = v;
            prev = v;
        }
        for i in (0..n - 1).rev() {
            scratch[i] -= self.c_prime[i] * scratch[i + 1];
        }
        for i in 0..n {
            data[start + i * stride] = scratch[i];
        }
    }
}
