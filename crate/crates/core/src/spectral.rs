//! Sharp discrete constant of the whole-line Poincaré-type inequality
//!
//! ```text
//! int_{|x|<=L} |w|^2 <= C* ( int |w_x|^2 + int_{|x|>=L} |w|^2 )
//! ```
//!
//! computed as the reciprocal of the smallest eigenvalue of the symmetric
//! pencil `(K, M_in)`, where `K` is the P1 stiffness matrix plus the lumped
//! outer mass and `M_in` the lumped inner mass. Homogeneous Dirichlet values
//! close the truncated interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Iteration cap for the inverse power iteration.
pub const MAX_ITERATIONS: usize = 10_000;

/// Relative slack allowed when checking sampled Poincaré ratios against `C*`.
pub const SAMPLE_SLACK: f64 = 1e-8;

/// The discrete minimization problem for a fixed grid and radius.
#[derive(Debug, Clone)]
pub struct PoincareProblem {
    pub grid: Grid,
    pub l: f64,
    /// Nodes with `|x| <= L`.
    pub indicator_in: Vec<bool>,
    /// Nodes with `|x| >= L`.
    pub indicator_out: Vec<bool>,
    inner_mass: Vec<f64>,
    outer_mass: Vec<f64>,
}

impl PoincareProblem {
    pub fn new(grid: Grid, l: f64) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::Setup(format!("L must be positive, got {l}")));
        }
        if !(grid.x_min() < -l && grid.x_max() > l) {
            return Err(Error::Setup(format!(
                "grid [{}, {}] must extend beyond +-{l}",
                grid.x_min(),
                grid.x_max()
            )));
        }
        let n = grid.n_nodes();
        let tol = 1e-12 * l.max(1.0);
        let indicator_in: Vec<bool> = (0..n).map(|i| grid.x(i).abs() <= l + tol).collect();
        let indicator_out: Vec<bool> = (0..n).map(|i| grid.x(i).abs() >= l - tol).collect();

        // Lumped masses: each cell hands half of its inner (outer) length to
        // each end node. Cells straddling +-L are split exactly, so an aligned
        // boundary node gets dx/2 in both masses.
        let mut inner_mass = vec![0.0; n];
        let mut outer_mass = vec![0.0; n];
        for c in 0..grid.n_cells() {
            let (x0, x1) = (grid.x(c), grid.x(c + 1));
            let inside = (x1.min(l) - x0.max(-l)).max(0.0);
            let outside = grid.dx() - inside;
            inner_mass[c] += 0.5 * inside;
            inner_mass[c + 1] += 0.5 * inside;
            outer_mass[c] += 0.5 * outside;
            outer_mass[c + 1] += 0.5 * outside;
        }
        // Dirichlet ends carry no unknown.
        inner_mass[0] = 0.0;
        inner_mass[n - 1] = 0.0;
        outer_mass[0] = 0.0;
        outer_mass[n - 1] = 0.0;

        if inner_mass.iter().all(|&m| m == 0.0) {
            return Err(Error::Setup("inner mass matrix is degenerate".into()));
        }
        Ok(PoincareProblem {
            grid,
            l,
            indicator_in,
            indicator_out,
            inner_mass,
            outer_mass,
        })
    }

    pub fn inner_mass(&self) -> &[f64] {
        &self.inner_mass
    }

    pub fn outer_mass(&self) -> &[f64] {
        &self.outer_mass
    }

    /// `sum |w_{i+1} - w_i|^2 / dx`
    pub fn gradient_energy(&self, w: &[f64]) -> f64 {
        let inv = 1.0 / self.grid.dx();
        w.windows(2).map(|p| (p[1] - p[0]) * (p[1] - p[0])).sum::<f64>() * inv
    }

    pub fn inner_form(&self, w: &[f64]) -> f64 {
        self.inner_mass.iter().zip(w).map(|(m, x)| m * x * x).sum()
    }

    pub fn outer_form(&self, w: &[f64]) -> f64 {
        self.outer_mass.iter().zip(w).map(|(m, x)| m * x * x).sum()
    }

    /// `gradient energy + outer mass`, the quadratic form of `K`.
    pub fn energy_form(&self, w: &[f64]) -> f64 {
        self.gradient_energy(w) + self.outer_form(w)
    }

    /// `inner / (gradient + outer)`; zero when the inner part vanishes.
    pub fn poincare_ratio(&self, w: &[f64]) -> f64 {
        let inner = self.inner_form(w);
        if inner == 0.0 {
            return 0.0;
        }
        inner / self.energy_form(w)
    }

    /// `(gradient + outer) / inner`
    pub fn rayleigh_quotient(&self, w: &[f64]) -> f64 {
        self.energy_form(w) / self.inner_form(w)
    }

    /// Tridiagonal `K` on the interior unknowns `1..n-1`: `(diag, off)`.
    pub fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.grid.n_nodes() - 2;
        let inv = 1.0 / self.grid.dx();
        let diag = (0..m).map(|j| 2.0 * inv + self.outer_mass[j + 1]).collect();
        let off = vec![-inv; m.saturating_sub(1)];
        (diag, off)
    }
}

/// LDL^T factorization of a symmetric positive definite tridiagonal matrix.
struct TridiagonalFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl TridiagonalFactor {
    fn new(diag: &[f64], off: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut d = vec![0.0; m];
        let mut l = vec![0.0; m.saturating_sub(1)];
        d[0] = diag[0];
        for j in 1..m {
            l[j - 1] = off[j - 1] / d[j - 1];
            d[j] = diag[j] - l[j - 1] * off[j - 1];
            if !(d[j] > 0.0) {
                return Err(Error::Setup("stiffness matrix is not positive definite".into()));
            }
        }
        Ok(TridiagonalFactor { d, l })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let m = self.d.len();
        for j in 1..m {
            rhs[j] -= self.l[j - 1] * rhs[j - 1];
        }
        for j in 0..m {
            rhs[j] /= self.d[j];
        }
        for j in (0..m - 1).rev() {
            rhs[j] -= self.l[j] * rhs[j + 1];
        }
    }
}

fn apply_tridiagonal(diag: &[f64], off: &[f64], x: &[f64], y: &mut [f64]) {
    let m = diag.len();
    for j in 0..m {
        let mut s = diag[j] * x[j];
        if j > 0 {
            s += off[j - 1] * x[j - 1];
        }
        if j + 1 < m {
            s += off[j] * x[j + 1];
        }
        y[j] = s;
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareEstimate {
    pub c_star: f64,
    /// `1 / c_star`
    pub lambda_min: f64,
    /// Discrete eigenfunction on the full grid, positive, `max = 1`.
    pub minimizer: Vec<f64>,
    /// `||K w - lambda M_in w|| / ||K w||`
    pub residual: f64,
    pub iterations: usize,
    /// `|w|` at the nodes next to the artificial boundary, relative to `max |w|`.
    pub edge_amplitude: f64,
}

/// Inverse power iteration on `K^{-1} M_in` for its dominant eigenvalue `C*`.
pub fn estimate_c_star(problem: &PoincareProblem, tol: f64) -> Result<PoincareEstimate> {
    if !(tol > 0.0) {
        return Err(Error::Setup(format!("tolerance must be positive, got {tol}")));
    }
    let n = problem.grid.n_nodes();
    let m = n - 2;
    let (diag, off) = problem.stiffness();
    let factor = TridiagonalFactor::new(&diag, &off)?;
    let min = &problem.inner_mass[1..n - 1];

    // Start from a positive profile: 1 on the inner region, exp(-(|x|-L)) outside.
    let mut w: Vec<f64> = (1..n - 1)
        .map(|i| {
            let r = problem.grid.x(i).abs();
            (-(r - problem.l).max(0.0)).exp()
        })
        .collect();

    let mut kw = vec![0.0; m];
    let mut residual = f64::INFINITY;
    let mut lambda = f64::NAN;
    for iter in 1..=MAX_ITERATIONS {
        let mut y: Vec<f64> = w.iter().zip(min).map(|(x, mi)| x * mi).collect();
        factor.solve(&mut y);
        let scale = y.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Convergence {
                iterations: iter,
                residual,
            });
        }
        for (wj, yj) in w.iter_mut().zip(&y) {
            *wj = yj / scale;
        }
        apply_tridiagonal(&diag, &off, &w, &mut kw);
        let energy: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
        let inner: f64 = w.iter().zip(min).map(|(x, mi)| mi * x * x).sum();
        lambda = energy / inner;
        let r: Vec<f64> = kw
            .iter()
            .zip(w.iter().zip(min))
            .map(|(k, (x, mi))| k - lambda * mi * x)
            .collect();
        residual = norm2(&r) / norm2(&kw);
        if residual < tol {
            let mut minimizer = Vec::with_capacity(n);
            minimizer.push(0.0);
            minimizer.extend_from_slice(&w);
            minimizer.push(0.0);
            let peak = minimizer.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
            let sign = if minimizer[n / 2] < 0.0 { -1.0 } else { 1.0 };
            for v in &mut minimizer {
                *v *= sign / peak;
            }
            let edge_amplitude = minimizer[1].abs().max(minimizer[n - 2].abs());
            let limit = tol.max(1e-24).sqrt();
            if edge_amplitude > limit {
                return Err(Error::Domain(format!(
                    "minimizer amplitude {edge_amplitude:e} at the truncation boundary exceeds {limit:e}; enlarge the domain"
                )));
            }
            return Ok(PoincareEstimate {
                c_star: 1.0 / lambda,
                lambda_min: lambda,
                minimizer,
                residual,
                iterations: iter,
                edge_amplitude,
            });
        }
    }
    let _ = lambda;
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub n_samples: usize,
    pub c_star: f64,
    pub max_ratio: f64,
    pub worst_sample: usize,
    /// Samples whose ratio exceeds `C* (1 + SAMPLE_SLACK)`.
    pub violations: usize,
}

impl ViolationReport {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

/// Random discrete H^1 function with zero Dirichlet values: either a sum of
/// Gaussian bumps or box-filtered noise.
pub fn random_h1_sample(grid: &Grid, l: f64, rng: &mut impl Rng) -> Vec<f64> {
    let n = grid.n_nodes();
    let mut w = vec![0.0; n];
    if rng.gen_bool(0.5) {
        let bumps = rng.gen_range(1..=5);
        for _ in 0..bumps {
            let center = rng.gen_range(-3.0 * l..3.0 * l);
            let width = l * (rng.gen_range(0.05_f64.ln()..5.0_f64.ln())).exp();
            let amp = rng.gen_range(-1.0..1.0);
            for (i, wi) in w.iter_mut().enumerate() {
                let s = (grid.x(i) - center) / width;
                *wi += amp * (-s * s).exp();
            }
        }
    } else {
        for wi in w.iter_mut() {
            *wi = rng.gen_range(-1.0..1.0);
        }
        let max_window = (n / 8).max(2);
        let window = (rng.gen_range(0.0..(max_window as f64).ln())).exp() as usize;
        for _ in 0..2 {
            box_filter(&mut w, window.max(1));
        }
        let offset = rng.gen_range(-1.0..1.0);
        let decay = l * rng.gen_range(0.5..20.0);
        for (i, wi) in w.iter_mut().enumerate() {
            let r = grid.x(i).abs();
            *wi = (*wi + offset) * (-(r / decay).powi(2)).exp();
        }
    }
    w[0] = 0.0;
    w[n - 1] = 0.0;
    w
}

fn box_filter(w: &mut [f64], window: usize) {
    let n = w.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + w[i];
    }
    for i in 0..n {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(n);
        w[i] = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
    }
}

/// Checks the inequality on `n_samples` random H^1 functions.
pub fn verify_poincare_on_samples(
    problem: &PoincareProblem,
    estimate: &PoincareEstimate,
    n_samples: usize,
    seed: u64,
) -> ViolationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = estimate.c_star * (1.0 + SAMPLE_SLACK);
    let mut max_ratio = 0.0;
    let mut worst_sample = 0;
    let mut violations = 0;
    for k in 0..n_samples {
        let w = random_h1_sample(&problem.grid, problem.l, &mut rng);
        let ratio = problem.poincare_ratio(&w);
        if ratio > max_ratio {
            max_ratio = ratio;
            worst_sample = k;
        }
        if ratio > bound {
            violations += 1;
        }
    }
    ViolationReport {
        n_samples,
        c_star: estimate.c_star,
        max_ratio,
        worst_sample,
        violations,
    }
}

/// Convenience: estimate on `[-half_width, half_width]` with `n_nodes` nodes.
pub fn c_star_for(l: f64, half_width: f64, n_nodes: usize, tol: f64) -> Result<PoincareEstimate> {
    let grid = Grid::with_nodes(-half_width, half_width, n_nodes)?;
    estimate_c_star(&PoincareProblem::new(grid, l)?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn continuum_c_star(l: f64) -> f64 {
        // s tan(s L) = 1 on (0, pi/(2L)), lambda = s^2
        let (mut lo, mut hi) = (1e-12, std::f64::consts::FRAC_PI_2 / l - 1e-12);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (mid * l).tan() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        1.0 / (lo * lo)
    }

    #[test]
    fn approaches_continuum_constant() {
        let est = c_star_for(1.0, 30.0, 6001, 1e-11).unwrap();
        let exact = continuum_c_star(1.0);
        assert!((est.c_star - exact).abs() / exact < 1e-4, "{} vs {exact}", est.c_star);
        assert!((est.c_star * est.lambda_min - 1.0).abs() < 1e-14);
        assert!(est.residual < 1e-11);
    }

    #[test]
    fn wider_inner_region_gives_larger_constant() {
        let c1 = c_star_for(1.0, 40.0, 8192, 1e-10).unwrap();
        let c2 = c_star_for(2.0, 40.0, 8192, 1e-10).unwrap();
        assert!(c2.c_star > c1.c_star);
        assert!(c2.c_star > 2.0 * c1.c_star);
    }

    #[test]
    fn test_function_gives_upper_bound_on_lambda() {
        let grid = Grid::with_nodes(-20.0, 20.0, 2001).unwrap();
        let p = PoincareProblem::new(grid, 1.0).unwrap();
        let est = estimate_c_star(&p, 1e-10).unwrap();
        let w: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| (1.0 - (x.abs() - 1.0).max(0.0)).max(0.0))
            .collect();
        assert!(est.lambda_min <= p.rayleigh_quotient(&w));
    }

    #[test]
    fn minimizer_is_extremal_and_outer_functions_give_zero() {
        let grid = Grid::with_nodes(-25.0, 25.0, 1001).unwrap();
        let p = PoincareProblem::new(grid, 1.0).unwrap();
        let est = estimate_c_star(&p, 1e-12).unwrap();
        let r = p.poincare_ratio(&est.minimizer);
        assert!((r - est.c_star).abs() / est.c_star < 1e-12);

        let w: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| if x.abs() >= 3.0 && x.abs() < 10.0 { (x - 3.0).sin() } else { 0.0 })
            .collect();
        assert_eq!(p.poincare_ratio(&w), 0.0);
    }

    #[test]
    fn random_samples_respect_the_constant() {
        let grid = Grid::with_nodes(-30.0, 30.0, 1201).unwrap();
        let p = PoincareProblem::new(grid, 1.0).unwrap();
        let est = estimate_c_star(&p, 1e-12).unwrap();
        let rep = verify_poincare_on_samples(&p, &est, 200, 42);
        assert!(rep.ok(), "{rep:?}");
        assert!(rep.max_ratio > 0.0 && rep.max_ratio <= est.c_star * (1.0 + SAMPLE_SLACK));
    }

    #[test]
    fn setup_errors() {
        let grid = Grid::symmetric(5.0, 100).unwrap();
        assert!(matches!(PoincareProblem::new(grid, 6.0), Err(Error::Setup(_))));
        assert!(matches!(PoincareProblem::new(grid, 0.0), Err(Error::Setup(_))));
        // L smaller than half a cell: no cell overlaps the inner region beyond
        // a sliver, still nondegenerate; an inner region missing entirely is not
        // representable since the origin is interior.
        let p = PoincareProblem::new(grid, 1e-3).unwrap();
        assert!(p.inner_mass().iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn truncation_too_tight_is_reported() {
        let grid = Grid::with_nodes(-4.0, 4.0, 401).unwrap();
        let p = PoincareProblem::new(grid, 1.0).unwrap();
        assert!(matches!(estimate_c_star(&p, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn translation_keeping_alignment_is_harmless() {
        let grid = Grid::symmetric(30.0, 3000).unwrap();
        let a = estimate_c_star(&PoincareProblem::new(grid, 1.0).unwrap(), 1e-12).unwrap();
        let shifted = grid.translated(7.0 * grid.dx()).unwrap();
        let b = estimate_c_star(&PoincareProblem::new(shifted, 1.0).unwrap(), 1e-12).unwrap();
        assert!((a.c_star - b.c_star).abs() / a.c_star < 1e-11);
    }

    #[test]
    fn refinement_converges_at_second_order() {
        let est: Vec<f64> = [500, 1000, 2000]
            .iter()
            .map(|&cells| {
                let g = Grid::symmetric(25.0, cells).unwrap();
                estimate_c_star(&PoincareProblem::new(g, 1.0).unwrap(), 1e-12)
                    .unwrap()
                    .c_star
            })
            .collect();
        let exact = continuum_c_star(1.0);
        let e: Vec<f64> = est.iter().map(|c| (c - exact).abs()).collect();
        let r1 = e[0] / e[1];
        let r2 = e[1] / e[2];
        assert!((3.0..5.0).contains(&r1), "{est:?} {r1}");
        assert!((3.0..5.0).contains(&r2), "{est:?} {r2}");
    }
}
