//! Scalar root finding and minimization on brackets.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Root of `f` on `[lo, hi]` with `f(lo) < 0 < f(hi)`.
///
/// Illinois-modified regula falsi. Infinite values are allowed (they still
/// carry a sign) and force a bisection step. Stops when `|f| <= ftol` or the
/// bracket is narrower than `xtol`.
pub fn bracketed_root(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    xtol: f64,
    ftol: f64,
    max_iterations: usize,
) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() || fb.is_nan() || !(fa < 0.0 && fb > 0.0) {
        return Err(Error::invalid(format!(
            "root not bracketed: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let mut side = 0i8;
    for it in 1..=max_iterations {
        let x = if fa.is_finite() && fb.is_finite() {
            let x = (a * fb - b * fa) / (fb - fa);
            if x > a && x < b {
                x
            } else {
                0.5 * (a + b)
            }
        } else {
            0.5 * (a + b)
        };
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::invalid(format!("function is NaN at {x}")));
        }
        if fx.abs() <= ftol {
            return Ok(Root {
                x,
                value: fx,
                iterations: it,
            });
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= xtol {
            let (x, value) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
            return Ok(Root {
                x,
                value: if value.is_finite() { value } else { fx },
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: max_iterations,
        residual: fa.abs().min(fb.abs()),
    })
}

/// Minimizer of a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = bracketed_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 0.0, 200).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn handles_infinite_side() {
        let f = |x: f64| if x > 3.0 { f64::INFINITY } else { x - 2.5 };
        let r = bracketed_root(f, 0.0, 10.0, 1e-14, 0.0, 200).unwrap();
        assert!((r.x - 2.5).abs() < 1e-13);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(bracketed_root(|x| x + 1.0, 0.0, 1.0, 1e-12, 0.0, 50).is_err());
    }

    #[test]
    fn golden_section() {
        let (x, fx) = golden_section_min(|x| (x - 0.7).powi(2) + 1.0, -3.0, 5.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }
}
