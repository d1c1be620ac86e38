#![allow(dead_code)]

use dampwave::coefficients::*;
use dampwave::solver::*;
use dampwave::Grid;

pub const REF_V0: f64 = 0.08;
pub const REF_BETA: f64 = 2.0;
pub const REF_L: f64 = 1.0;
pub const REF_EPS1: f64 = 1.0;
pub const REF_RADIUS: f64 = 3.0;

pub fn example1_profile(grid: Grid, v0: f64, ramp: Ramp) -> CoefficientProfile {
    let v = build_potential_example1(v0, REF_BETA, REF_L, &grid).unwrap();
    let a = build_damping_plateau(REF_EPS1, REF_L, ramp, &grid).unwrap();
    CoefficientProfile::new(grid, v, a).unwrap()
}

pub fn free_profile(grid: Grid) -> CoefficientProfile {
    CoefficientProfile::new(grid, SampledPotential::zero(&grid), SampledDamping::none(REF_L, &grid)).unwrap()
}

pub fn bump(grid: &Grid, radius: f64, a0: f64, a1: f64) -> InitialData {
    InitialData::from_shape(grid, DataShape::Bump { radius, center: 0.0 }, a0, a1)
}

/// Linear reference run on `[-60, 60]` with `n_cells` cells.
pub fn reference_config(n_cells: usize, t_end: f64) -> RunConfig {
    let g = Grid::symmetric(60.0, n_cells).unwrap();
    let p = example1_profile(g, REF_V0, Ramp::Sharp);
    let d = bump(&g, REF_RADIUS, 1.0, 1.0);
    RunConfig::new(p, d, t_end)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `exp(1 - 1/(1 - s^2))` and its derivative in `x` for `s = x / r`.
pub fn bump_fn(x: f64, r: f64) -> f64 {
    let s = x / r;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

pub fn bump_dx(x: f64, r: f64) -> f64 {
    let s = x / r;
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        bump_fn(x, r) * (-2.0 * s / (q * q)) / r
    }
}

/// L2 error of the free-wave solution at `t_end` against d'Alembert's formula
/// for `u0 = bump(x)`, `u1 = c * bump'(x)`.
pub fn dalembert_error(dx: f64, t_end: f64, radius: f64, c: f64) -> f64 {
    let g = make_domain(Support::Compact(radius), t_end, 3.0, dx).unwrap();
    let nodes = g.nodes();
    let data = InitialData {
        u0: nodes.iter().map(|&x| bump_fn(x, radius)).collect(),
        u1: nodes.iter().map(|&x| c * bump_dx(x, radius)).collect(),
        support: Support::Compact(radius),
    };
    let res = run(&RunConfig::new(free_profile(g), data, t_end), None).unwrap();
    let exact: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            0.5 * (bump_fn(x - t_end, radius) + bump_fn(x + t_end, radius))
                + 0.5 * c * (bump_fn(x + t_end, radius) - bump_fn(x - t_end, radius))
        })
        .collect();
    let err: Vec<f64> = res.final_state.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
    g.l2_norm(&err)
}

/// Largest eigenvalue of `D K^{-1} D`, `D = diag(sqrt(M_in))`, by full dense
/// symmetric eigendecomposition.
pub fn dense_c_star(problem: &dampwave::spectral::PoincareProblem) -> f64 {
    use nalgebra::{DMatrix, SymmetricEigen};
    let (diag, off) = problem.stiffness();
    let m = diag.len();
    let mut k = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        k[(j, j)] = diag[j];
        if j + 1 < m {
            k[(j, j + 1)] = off[j];
            k[(j + 1, j)] = off[j];
        }
    }
    let kinv = k.cholesky().expect("K is positive definite").inverse();
    let d: Vec<f64> = problem.inner_mass()[1..=m].iter().map(|x| x.sqrt()).collect();
    let s = DMatrix::from_fn(m, m, |i, j| d[i] * kinv[(i, j)] * d[j]);
    let s = 0.5 * (&s + s.transpose());
    SymmetricEigen::new(s).eigenvalues.max()
}

/// Root of `s tan(s L) = 1` on `(0, pi / 2L)`, returned as `1 / s^2`.
pub fn continuum_c_star(l: f64) -> f64 {
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
