use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;
pub const MAX_DIMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Field vanishes one spacing outside the outermost nodes on every axis.
    Dirichlet,
    /// Node `n` coincides with node `0`.
    Periodic,
}

/// Uniform tensor-product grid in up to three dimensions.
///
/// Samples are stored row-major: the last axis varies fastest. Node `i` on
/// axis `l` sits at `origin[l] + i * spacing[l]`.
///
/// Quadrature is the plain sum times the cell volume on both boundary types.
/// On periodic grids this is the rectangle rule; on Dirichlet grids it is the
/// trapezoid rule over the box whose walls (where the field is zero) sit one
/// spacing outside the outermost nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(
        points: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        boundary: Boundary,
    ) -> Result<Self> {
        let dims = points.len();
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::Validation(format!(
                "grid dimension must be 1..={MAX_DIMS}, got {dims}"
            )));
        }
        if spacing.len() != dims || origin.len() != dims {
            return Err(Error::Validation(
                "points, spacing and origin must have equal length".into(),
            ));
        }
        if let Some(n) = points.iter().find(|&&n| n < MIN_POINTS) {
            return Err(Error::Validation(format!(
                "grid needs at least {MIN_POINTS} points per dimension, got {n}"
            )));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Validation("grid spacing must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Validation("grid origin must be finite".into()));
        }
        Ok(Self {
            points,
            spacing,
            origin,
            boundary,
        })
    }

    /// Dirichlet grid whose outermost nodes sit at `min` and `max` on each axis.
    pub fn dirichlet(axes: &[(usize, f64, f64)]) -> Result<Self> {
        let mut points = Vec::new();
        let mut spacing = Vec::new();
        let mut origin = Vec::new();
        for &(n, lo, hi) in axes {
            if !(hi > lo) {
                return Err(Error::Validation("axis extent must be positive".into()));
            }
            points.push(n);
            spacing.push((hi - lo) / (n.max(2) - 1) as f64);
            origin.push(lo);
        }
        Self::new(points, spacing, origin, Boundary::Dirichlet)
    }

    /// Periodic grid of `n` nodes covering `[start, start + length)` on each axis.
    pub fn periodic(axes: &[(usize, f64, f64)]) -> Result<Self> {
        let mut points = Vec::new();
        let mut spacing = Vec::new();
        let mut origin = Vec::new();
        for &(n, start, length) in axes {
            if !(length > 0.0) {
                return Err(Error::Validation("axis length must be positive".into()));
            }
            points.push(n);
            spacing.push(length / n.max(1) as f64);
            origin.push(start);
        }
        Self::new(points, spacing, origin, Boundary::Periodic)
    }

    /// Symmetric box `[-half_width, half_width]` (periodic: `[-a, a)`) in `dims` dimensions.
    pub fn centered(boundary: Boundary, dims: usize, n: usize, half_width: f64) -> Result<Self> {
        match boundary {
            Boundary::Dirichlet => Self::dirichlet(&vec![(n, -half_width, half_width); dims]),
            Boundary::Periodic => Self::periodic(&vec![(n, -half_width, 2.0 * half_width); dims]),
        }
    }

    /// Tensor product of two grids with the same boundary type.
    pub fn product(&self, other: &Grid) -> Result<Self> {
        if self.boundary != other.boundary {
            return Err(Error::invalid("cannot combine grids with different boundaries"));
        }
        let cat = |a: &[f64], b: &[f64]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Self::new(
            self.points.iter().chain(&other.points).copied().collect(),
            cat(&self.spacing, &other.spacing),
            cat(&self.origin, &other.origin),
            self.boundary,
        )
    }

    /// One-dimensional grid along `axis`.
    pub fn axis_grid(&self, axis: usize) -> Grid {
        Grid {
            points: vec![self.points[axis]],
            spacing: vec![self.spacing[axis]],
            origin: vec![self.origin[axis]],
            boundary: self.boundary,
        }
    }

    pub fn dims(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Length of the box along `axis` (wall to wall on Dirichlet grids).
    pub fn length(&self, axis: usize) -> f64 {
        let n = self.points[axis] as f64;
        match self.boundary {
            Boundary::Periodic => n * self.spacing[axis],
            Boundary::Dirichlet => (n + 1.0) * self.spacing[axis],
        }
    }

    /// Lowest and highest node coordinate on `axis`.
    pub fn node_range(&self, axis: usize) -> (f64, f64) {
        let lo = self.origin[axis];
        (lo, lo + (self.points[axis] - 1) as f64 * self.spacing[axis])
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    /// Node coordinates along `axis`.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points[axis]).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Multi-index of flat index `idx`.
    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIMS] {
        let mut out = [0; MAX_DIMS];
        for axis in (0..self.dims()).rev() {
            out[axis] = idx % self.points[axis];
            idx /= self.points[axis];
        }
        out
    }

    pub fn position(&self, idx: usize) -> [f64; MAX_DIMS] {
        let m = self.unravel(idx);
        let mut x = [0.0; MAX_DIMS];
        for axis in 0..self.dims() {
            x[axis] = self.coordinate(axis, m[axis]);
        }
        x
    }

    /// Coordinates of every node along `axis`, laid out like the samples.
    pub fn coordinate_field(&self, axis: usize) -> Vec<f64> {
        let stride = self.stride(axis);
        let n = self.points[axis];
        (0..self.len())
            .map(|idx| self.coordinate(axis, (idx / stride) % n))
            .collect()
    }

    /// Start offsets of all grid lines running along `axis`; consecutive
    /// samples on a line are `stride(axis)` apart.
    pub fn line_starts(&self, axis: usize) -> Vec<usize> {
        let stride = self.stride(axis);
        let n = self.points[axis];
        let outer = self.len() / (n * stride);
        let mut starts = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            for inner in 0..stride {
                starts.push(o * n * stride + inner);
            }
        }
        starts
    }

    /// Quadrature of samples over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Central first derivative along `axis`; Dirichlet ghosts are zero.
    pub fn d1(&self, values: &[f64], axis: usize) -> Vec<f64> {
        self.stencil(values, axis, |m, _, p, h| (p - m) / (2.0 * h))
    }

    /// Three-point second derivative along `axis`; Dirichlet ghosts are zero.
    pub fn d2(&self, values: &[f64], axis: usize) -> Vec<f64> {
        self.stencil(values, axis, |m, c, p, h| (p - 2.0 * c + m) / (h * h))
    }

    fn stencil(
        &self,
        values: &[f64],
        axis: usize,
        f: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> Vec<f64> {
        let n = self.points[axis];
        let s = self.stride(axis);
        let h = self.spacing[axis];
        let periodic = self.boundary == Boundary::Periodic;
        let mut out = vec![0.0; values.len()];
        for start in self.line_starts(axis) {
            for i in 0..n {
                let at = |j: usize| values[start + j * s];
                let c = at(i);
                let m = if i > 0 {
                    at(i - 1)
                } else if periodic {
                    at(n - 1)
                } else {
                    0.0
                };
                let p = if i + 1 < n {
                    at(i + 1)
                } else if periodic {
                    at(0)
                } else {
                    0.0
                };
                out[start + i * s] = f(m, c, p, h);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(Grid::dirichlet(&[(8, -1.0, 1.0)]).is_err());
        assert!(Grid::dirichlet(&[(32, 1.0, -1.0)]).is_err());
        assert!(Grid::new(vec![16; 4], vec![0.1; 4], vec![0.0; 4], Boundary::Periodic).is_err());
        assert!(Grid::new(vec![16], vec![0.0], vec![0.0], Boundary::Periodic).is_err());
    }

    #[test]
    fn layout_and_coordinates() {
        let g = Grid::dirichlet(&[(16, -1.0, 1.0), (20, 0.0, 1.9)]).unwrap();
        assert_eq!(g.len(), 320);
        assert_eq!(g.stride(0), 20);
        assert_eq!(g.stride(1), 1);
        assert_eq!(g.unravel(41), [2, 1, 0]);
        let x = g.position(41);
        assert!((x[0] - (-1.0 + 2.0 * 2.0 / 15.0)).abs() < 1e-15);
        assert!((x[1] - 0.1).abs() < 1e-15);
        assert_eq!(g.line_starts(0).len(), 20);
        assert_eq!(g.line_starts(1).len(), 16);
        let (lo, hi) = g.node_range(0);
        assert_eq!((lo, hi), (-1.0, 1.0));
    }

    #[test]
    fn periodic_box() {
        let g = Grid::centered(Boundary::Periodic, 1, 64, 4.0).unwrap();
        assert!((g.length(0) - 8.0).abs() < 1e-15);
        assert!((g.spacing()[0] - 0.125).abs() < 1e-15);
        let ones = vec![1.0; 64];
        assert!((g.integrate(&ones) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn derivatives_of_periodic_sine() {
        let g = Grid::periodic(&[(256, 0.0, std::f64::consts::TAU)]).unwrap();
        let x = g.axis_coords(0);
        let f: Vec<f64> = x.iter().map(|x| x.sin()).collect();
        let d = g.d1(&f, 0);
        let dd = g.d2(&f, 0);
        for (i, x) in x.iter().enumerate() {
            assert!((d[i] - x.cos()).abs() < 1e-3);
            assert!((dd[i] + x.sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn product_grid() {
        let a = Grid::dirichlet(&[(16, -1.0, 1.0)]).unwrap();
        let b = Grid::dirichlet(&[(32, -2.0, 2.0)]).unwrap();
        let ab = a.product(&b).unwrap();
        assert_eq!(ab.points(), &[16, 32]);
        assert_eq!(ab.axis_grid(1), b);
    }
}
