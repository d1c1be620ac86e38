//! Uniform node grids on a truncated interval and the trapezoidal quadrature
//! used for every spatial integral in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `x_i = x_min + i * dx`, `i = 0..=n_cells`, with `x_min < 0 < x_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::Domain("grid bounds must be finite".into()));
        }
        if !(x_min < 0.0 && 0.0 < x_max) {
            return Err(Error::Domain(format!(
                "grid [{x_min}, {x_max}] must contain the origin in its interior"
            )));
        }
        if n_cells < 2 {
            return Err(Error::Domain(format!("need at least 2 cells, got {n_cells}")));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_cells,
            dx: (x_max - x_min) / n_cells as f64,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_cells: usize) -> Result<Self> {
        Grid::new(-half_width, half_width, n_cells)
    }

    /// Grid described by its node count rather than its cell count.
    pub fn with_nodes(x_min: f64, x_max: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::Domain(format!("need at least 3 nodes, got {n_nodes}")));
        }
        Grid::new(x_min, x_max, n_nodes - 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.x(i)).collect()
    }

    /// Index of the node closest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round();
        i.clamp(0.0, self.n_cells as f64) as usize
    }

    pub fn covers(&self, x: f64) -> bool {
        self.x_min <= x && x <= self.x_max
    }

    /// Trapezoidal weights: `dx` inside, `dx/2` at both ends.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dx; self.n_nodes()];
        w[0] = 0.5 * self.dx;
        w[self.n_cells] = 0.5 * self.dx;
        w
    }

    /// Trapezoidal weights of the sub-integral over the nodes selected by
    /// `mask`: each cell whose two end nodes are both selected contributes
    /// `dx/2` to each end. Weights never exceed the full-grid weights.
    pub fn masked_weights(&self, mask: &[bool]) -> Vec<f64> {
        debug_assert_eq!(mask.len(), self.n_nodes());
        let mut w = vec![0.0; self.n_nodes()];
        let half = 0.5 * self.dx;
        for i in 0..self.n_cells {
            if mask[i] && mask[i + 1] {
                w[i] += half;
                w[i + 1] += half;
            }
        }
        w
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_nodes());
        let n = self.n_cells;
        let interior: f64 = f[1..n].iter().sum();
        self.dx * (interior + 0.5 * (f[0] + f[n]))
    }

    /// `sum_i weight_i * f(i)` over all nodes.
    pub fn integrate_with(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let n = self.n_cells;
        let mut s = 0.5 * (f(0) + f(n));
        for i in 1..n {
            s += f(i);
        }
        self.dx * s
    }

    /// Centered first derivative, one-sided second order at both ends.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; u.len()];
        self.gradient_into(u, &mut d);
        d
    }

    pub fn gradient_into(&self, u: &[f64], d: &mut [f64]) {
        let n = self.n_cells;
        debug_assert_eq!(u.len(), n + 1);
        let inv2 = 0.5 / self.dx;
        for i in 1..n {
            d[i] = (u[i + 1] - u[i - 1]) * inv2;
        }
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2;
        d[n] = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) * inv2;
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.integrate_with(|i| u[i] * u[i]).sqrt()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.integrate_with(|i| u[i] * v[i])
    }

    /// Same spacing, shifted by `offset`.
    pub fn translated(&self, offset: f64) -> Result<Self> {
        Grid::new(self.x_min + offset, self.x_max + offset, self.n_cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_is_uniform() {
        let g = Grid::new(-3.0, 5.0, 64).unwrap();
        assert_eq!(g.dx(), 0.125);
        let xs = g.nodes();
        for w in xs.windows(2) {
            assert!((w[1] - w[0] - g.dx()).abs() < 1e-14);
        }
        assert_eq!(xs[g.nearest(0.0)], 0.0);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(Grid::new(0.0, 1.0, 10).is_err());
        assert!(Grid::new(-1.0, -0.5, 10).is_err());
        assert!(Grid::new(-1.0, 1.0, 1).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 10).is_err());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = Grid::new(-1.0, 3.0, 40).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((g.integrate(&f) - 12.0).abs() < 1e-12);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 4.0).abs() < 1e-12);
    }

    #[test]
    fn masked_weights_bounded_by_full_weights() {
        let g = Grid::symmetric(4.0, 80).unwrap();
        let mask: Vec<bool> = g.nodes().iter().map(|x| x.abs() <= 1.0 + 1e-12).collect();
        let mw = g.masked_weights(&mask);
        let fw = g.trapezoid_weights();
        for (m, f) in mw.iter().zip(&fw) {
            assert!(*m <= *f + 1e-15);
        }
        let total: f64 = mw.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_exact_on_quadratics() {
        let g = Grid::new(-2.0, 2.0, 16).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|x| x * x - x).collect();
        let d = g.gradient(&u);
        for (i, x) in g.nodes().iter().enumerate() {
            assert!((d[i] - (2.0 * x - 1.0)).abs() < 1e-12, "node {i}");
        }
    }
}
