//! Potential and damping coefficient families, the multiplier weight `phi`,
//! initial data and the norms that enter the decay bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Absolute slack for the discrete monotonicity check of the potential.
pub const MONOTONICITY_SLACK: f64 = 1e-12;

/// Initial-data amplitude below which a non-compact profile is treated as zero.
pub const TRUNCATION_LEVEL: f64 = 1e-14;

/// Closed-form potential families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Potential {
    /// `2V0/L^b - V0 |x|^b / L^{2b}` for `|x| <= L`, `V0 |x|^{-b}` outside.
    Example1 { v0: f64, beta: f64, l: f64 },
    /// `V0 exp(-nu x^2)`.
    Gaussian { v0: f64, nu: f64 },
    /// `V = 0` (free or purely damped waves).
    Zero,
    /// Samples supplied directly; evaluated by linear interpolation.
    Tabulated,
}

impl Potential {
    /// Closed-form value, `None` for tabulated samples.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match *self {
            Potential::Example1 { v0, beta, l } => {
                let r = x.abs();
                Some(if r <= l {
                    2.0 * v0 / l.powf(beta) - v0 / l.powf(2.0 * beta) * r.powf(beta)
                } else {
                    v0 * r.powf(-beta)
                })
            }
            Potential::Gaussian { v0, nu } => Some(v0 * (-nu * x * x).exp()),
            Potential::Zero => Some(0.0),
            Potential::Tabulated => None,
        }
    }
}

/// Interior shape of the damping between the undamped core and the plateau.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ramp {
    /// Linear ramp.
    Sharp,
    /// Cubic smoothstep `3s^2 - 2s^3`.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "lowercase")]
pub enum Damping {
    /// `a = 0` for `|x| <= core`, `a = eps1` for `|x| >= l`, monotone ramp between.
    Plateau {
        eps1: f64,
        l: f64,
        core: f64,
        ramp: Ramp,
    },
    /// `a = 0`. `l` still sets the local region used by the diagnostics.
    None { l: f64 },
}

impl Damping {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Damping::Plateau {
                eps1,
                l,
                core,
                ramp,
            } => {
                let r = x.abs();
                if r >= l {
                    eps1
                } else if r <= core {
                    0.0
                } else {
                    let s = (r - core) / (l - core);
                    let blend = match ramp {
                        Ramp::Sharp => s,
                        Ramp::Smooth => s * s * (3.0 - 2.0 * s),
                    };
                    eps1 * blend
                }
            }
            Damping::None { .. } => 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Damping::Plateau { l, .. } | Damping::None { l } => l,
        }
    }

    pub fn floor(&self) -> f64 {
        match *self {
            Damping::Plateau { eps1, .. } => eps1,
            Damping::None { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub family: Potential,
    pub values: Vec<f64>,
}

impl SampledPotential {
    pub fn tabulated(values: Vec<f64>) -> Self {
        SampledPotential {
            family: Potential::Tabulated,
            values,
        }
    }

    pub fn zero(grid: &Grid) -> Self {
        SampledPotential {
            family: Potential::Zero,
            values: vec![0.0; grid.n_nodes()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledDamping {
    pub spec: Damping,
    pub values: Vec<f64>,
}

impl SampledDamping {
    pub fn none(l: f64, grid: &Grid) -> Self {
        SampledDamping {
            spec: Damping::None { l },
            values: vec![0.0; grid.n_nodes()],
        }
    }
}

fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..grid.n_nodes()).map(|i| f(grid.x(i))).collect()
}

pub fn build_potential_example1(v0: f64, beta: f64, l: f64, grid: &Grid) -> Result<SampledPotential> {
    if !(beta > 1.0) {
        return Err(Error::Hypothesis(format!(
            "example1 potential needs beta > 1 (short range), got {beta}"
        )));
    }
    if !(v0 > 0.0) || !(l > 0.0) {
        return Err(Error::Hypothesis(format!(
            "example1 potential needs V0 > 0 and L > 0, got V0 = {v0}, L = {l}"
        )));
    }
    if !(grid.covers(-l) && grid.covers(l)) || grid.x_max() <= l || grid.x_min() >= -l {
        return Err(Error::Domain(format!(
            "grid [{}, {}] does not extend beyond +-{l}",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let family = Potential::Example1 { v0, beta, l };
    Ok(SampledPotential {
        family,
        values: sample(grid, |x| family.eval(x).unwrap()),
    })
}

pub fn build_potential_gaussian(v0: f64, nu: f64, grid: &Grid) -> Result<SampledPotential> {
    if !(v0 > 0.0) || !(nu > 0.0) {
        return Err(Error::Hypothesis(format!(
            "gaussian potential needs V0 > 0 and nu > 0, got V0 = {v0}, nu = {nu}"
        )));
    }
    let family = Potential::Gaussian { v0, nu };
    Ok(SampledPotential {
        family,
        values: sample(grid, |x| family.eval(x).unwrap()),
    })
}

/// Damping plateau with the undamped core at `|x| <= L/2`.
pub fn build_damping_plateau(eps1: f64, l: f64, ramp: Ramp, grid: &Grid) -> Result<SampledDamping> {
    build_damping_plateau_with_core(eps1, l, 0.5 * l, ramp, grid)
}

pub fn build_damping_plateau_with_core(
    eps1: f64,
    l: f64,
    core: f64,
    ramp: Ramp,
    grid: &Grid,
) -> Result<SampledDamping> {
    if !(eps1 > 0.0) || !(l > 0.0) {
        return Err(Error::Hypothesis(format!(
            "damping plateau needs eps1 > 0 and L > 0, got eps1 = {eps1}, L = {l}"
        )));
    }
    if !(0.0..l).contains(&core) {
        return Err(Error::Hypothesis(format!(
            "damping core radius must lie in [0, L), got {core}"
        )));
    }
    let spec = Damping::Plateau {
        eps1,
        l,
        core,
        ramp,
    };
    Ok(SampledDamping {
        spec,
        values: sample(grid, |x| spec.eval(x)),
    })
}

/// Multiplier weight: `eps1` on `|x| <= L`, `L eps1 / |x|` outside.
pub fn multiplier_weight(x: f64, l: f64, eps1: f64) -> f64 {
    let r = x.abs();
    if r <= l {
        eps1
    } else {
        l * eps1 / r
    }
}

/// Sampled coefficients on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile {
    pub grid: Grid,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub phi: Vec<f64>,
    /// Radius where the damping plateau starts.
    pub l: f64,
    /// Damping floor on the plateau.
    pub eps1: f64,
    pub potential: Potential,
    pub damping: Damping,
}

impl CoefficientProfile {
    pub fn new(grid: Grid, potential: SampledPotential, damping: SampledDamping) -> Result<Self> {
        let n = grid.n_nodes();
        if potential.values.len() != n || damping.values.len() != n {
            return Err(Error::Domain(format!(
                "coefficient arrays must have {n} samples (got V: {}, a: {})",
                potential.values.len(),
                damping.values.len()
            )));
        }
        let l = damping.spec.radius();
        if !(l > 0.0) {
            return Err(Error::Hypothesis(format!("L must be positive, got {l}")));
        }
        let eps1 = damping.spec.floor();
        let phi = sample(&grid, |x| multiplier_weight(x, l, eps1));
        Ok(CoefficientProfile {
            grid,
            v: potential.values,
            a: damping.values,
            phi,
            l,
            eps1,
            potential: potential.family,
            damping: damping.spec,
        })
    }

    /// Potential at an arbitrary point: closed form when available, otherwise
    /// linear interpolation of the samples.
    pub fn potential_at(&self, x: f64) -> f64 {
        if let Some(v) = self.potential.eval(x) {
            return v;
        }
        let g = &self.grid;
        let s = ((x - g.x_min()) / g.dx()).clamp(0.0, g.n_cells() as f64);
        let i = (s.floor() as usize).min(g.n_cells() - 1);
        let f = s - i as f64;
        (1.0 - f) * self.v[i] + f * self.v[i + 1]
    }

    pub fn v_origin(&self) -> f64 {
        self.potential_at(0.0)
    }

    /// `min{V(L), V(-L)}`.
    pub fn v_l(&self) -> f64 {
        self.potential_at(self.l).min(self.potential_at(-self.l))
    }

    /// `max{V(L), V(-L)}`.
    pub fn v_l_prime(&self) -> f64 {
        self.potential_at(self.l).max(self.potential_at(-self.l))
    }

    pub fn a_sup(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, &a| m.max(a.abs()))
    }

    pub fn v_max(&self) -> f64 {
        self.v.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Nodes with `|x| <= L` (closed).
    pub fn inner_mask(&self) -> Vec<bool> {
        let tol = 1e-12 * self.l.max(1.0);
        (0..self.grid.n_nodes())
            .map(|i| self.grid.x(i).abs() <= self.l + tol)
            .collect()
    }
}

/// Support of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// Data vanish for `|x| > R`.
    Compact(f64),
    Unbounded,
}

/// Shape shared by `u0` and `u1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum DataShape {
    /// `exp(1 - 1/(1 - s^2))`, `s = (x - center)/radius`, zero for `|s| >= 1`.
    Bump { radius: f64, center: f64 },
    /// `exp(-((x - center)/width)^2)`.
    Gaussian { width: f64, center: f64 },
}

impl DataShape {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DataShape::Bump { radius, center } => {
                let s = (x - center) / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            DataShape::Gaussian { width, center } => {
                let s = (x - center) / width;
                (-s * s).exp()
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        let (scale, center) = match *self {
            DataShape::Bump { radius, center } => (radius, center),
            DataShape::Gaussian { width, center } => (width, center),
        };
        if !(scale > 0.0) || !center.is_finite() {
            return Err(Error::Config(format!("invalid data shape {self:?}")));
        }
        Ok(())
    }

    pub fn support(&self) -> Support {
        match *self {
            DataShape::Bump { radius, center } => Support::Compact(center.abs() + radius),
            DataShape::Gaussian { .. } => Support::Unbounded,
        }
    }

    /// Radius beyond which `amplitude * shape` stays below [`TRUNCATION_LEVEL`].
    pub fn truncation_radius(&self, amplitude: f64) -> f64 {
        match *self {
            DataShape::Bump { radius, center } => center.abs() + radius,
            DataShape::Gaussian { width, center } => {
                let ratio = amplitude.abs() / TRUNCATION_LEVEL;
                if ratio <= 1.0 {
                    center.abs()
                } else {
                    center.abs() + width * ratio.ln().sqrt()
                }
            }
        }
    }
}

/// Sampled Cauchy data `(u0, u1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub support: Support,
}

impl InitialData {
    pub fn from_shape(grid: &Grid, shape: DataShape, u0_amplitude: f64, u1_amplitude: f64) -> Self {
        let base = sample(grid, |x| shape.eval(x));
        InitialData {
            u0: base.iter().map(|b| u0_amplitude * b).collect(),
            u1: base.iter().map(|b| u1_amplitude * b).collect(),
            support: shape.support(),
        }
    }

    pub fn zero(grid: &Grid) -> Self {
        InitialData {
            u0: vec![0.0; grid.n_nodes()],
            u1: vec![0.0; grid.n_nodes()],
            support: Support::Compact(0.0),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        InitialData {
            u0: self.u0.iter().map(|x| factor * x).collect(),
            u1: self.u1.iter().map(|x| factor * x).collect(),
            support: self.support,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u0.iter().chain(&self.u1).all(|&x| x == 0.0)
    }

    /// Largest `|u0|, |u1|` at nodes outside the declared support.
    pub fn leakage(&self, grid: &Grid) -> f64 {
        match self.support {
            Support::Compact(r) => (0..grid.n_nodes())
                .filter(|&i| grid.x(i).abs() > r)
                .map(|i| self.u0[i].abs().max(self.u1[i].abs()))
                .fold(0.0, f64::max),
            Support::Unbounded => 0.0,
        }
    }
}

/// Norms of the initial data entering the decay estimates (`mu = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    pub h1_norm_u0: f64,
    pub l2_norm_u0: f64,
    pub l2_norm_u1: f64,
    /// `|| (u1 + a u0) / sqrt(V) ||`
    pub weighted_norm: f64,
    /// `h1_norm_u0 + l2_norm_u1 + weighted_norm`
    pub i0: f64,
}

pub fn compute_data_norms(data: &InitialData, profile: &CoefficientProfile) -> Result<DataNorms> {
    let g = &profile.grid;
    let n = g.n_nodes();
    if data.u0.len() != n || data.u1.len() != n {
        return Err(Error::Domain(format!(
            "initial data must have {n} samples (got {}, {})",
            data.u0.len(),
            data.u1.len()
        )));
    }
    if let Some(i) = profile.v.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DivisionGuard(format!(
            "V = {} at x = {} prevents the weighted norm",
            profile.v[i],
            g.x(i)
        )));
    }
    let du0 = g.gradient(&data.u0);
    let l2_u0_sq = g.integrate_with(|i| data.u0[i] * data.u0[i]);
    let h1_sq = l2_u0_sq + g.integrate_with(|i| du0[i] * du0[i]);
    let l2_u1_sq = g.integrate_with(|i| data.u1[i] * data.u1[i]);
    let weighted_sq = g.integrate_with(|i| {
        let f = data.u1[i] + profile.a[i] * data.u0[i];
        f * f / profile.v[i]
    });
    let h1_norm_u0 = h1_sq.sqrt();
    let l2_norm_u1 = l2_u1_sq.sqrt();
    let weighted_norm = weighted_sq.sqrt();
    Ok(DataNorms {
        h1_norm_u0,
        l2_norm_u0: l2_u0_sq.sqrt(),
        l2_norm_u1,
        weighted_norm,
        i0: h1_norm_u0 + l2_norm_u1 + weighted_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
    pub v_origin: f64,
    pub c_star: f64,
    /// `1/(4 C*)`
    pub smallness_bound: f64,
    /// `1/(4 C*) - V(0)`; positive when the smallness condition holds.
    pub smallness_margin: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, passed: bool, detail: String) -> HypothesisCheck {
    HypothesisCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Checks the damping hypotheses (A.1)(A.2), the potential hypotheses
/// (V.1)(V.2) and the smallness condition `0 < V(0) < 1/(4 C*)`.
pub fn validate_hypotheses(profile: &CoefficientProfile, c_star: f64) -> ValidationReport {
    let g = &profile.grid;
    let n = g.n_nodes();
    let mut checks = Vec::with_capacity(5);

    let a_bad = profile.a.iter().position(|a| !(a.is_finite() && *a >= 0.0));
    checks.push(check(
        "A.1",
        a_bad.is_none(),
        match a_bad {
            None => format!("a bounded and nonnegative, sup a = {:e}", profile.a_sup()),
            Some(i) => format!("a({}) = {}", g.x(i), profile.a[i]),
        },
    ));

    let tol = 1e-12 * profile.l.max(1.0);
    let a2_bad = (0..n)
        .filter(|&i| g.x(i).abs() >= profile.l - tol)
        .find(|&i| profile.a[i] < profile.eps1);
    checks.push(check(
        "A.2",
        profile.eps1 > 0.0 && a2_bad.is_none(),
        if profile.eps1 <= 0.0 {
            "no damping floor (eps1 = 0)".to_string()
        } else {
            match a2_bad {
                None => format!("a >= {} on |x| >= {}", profile.eps1, profile.l),
                Some(i) => format!("a({}) = {} < eps1 = {}", g.x(i), profile.a[i], profile.eps1),
            }
        },
    ));

    let v_bad = profile.v.iter().position(|v| !(*v > 0.0 && v.is_finite()));
    checks.push(check(
        "V.1",
        v_bad.is_none(),
        match v_bad {
            None => "V > 0 at every node".to_string(),
            Some(i) => format!("V({}) = {}", g.x(i), profile.v[i]),
        },
    ));

    let mut v2_bad = None;
    for i in 0..g.n_cells() {
        let (x0, x1) = (g.x(i), g.x(i + 1));
        let (v0, v1) = (profile.v[i], profile.v[i + 1]);
        let violates = if x0 >= 0.0 {
            v1 > v0 + MONOTONICITY_SLACK
        } else if x1 <= 0.0 {
            v1 < v0 - MONOTONICITY_SLACK
        } else {
            false
        };
        if violates {
            v2_bad = Some(i);
            break;
        }
    }
    checks.push(check(
        "V.2",
        v2_bad.is_none(),
        match v2_bad {
            None => "V nondecreasing on x <= 0 and nonincreasing on x >= 0".to_string(),
            Some(i) => format!(
                "V({}) = {:e} -> V({}) = {:e} breaks V'(x) x <= 0",
                g.x(i),
                profile.v[i],
                g.x(i + 1),
                profile.v[i + 1]
            ),
        },
    ));

    let v_origin = profile.v_origin();
    let smallness_bound = 1.0 / (4.0 * c_star);
    let smallness_margin = smallness_bound - v_origin;
    checks.push(check(
        "smallness",
        c_star > 0.0 && v_origin > 0.0 && smallness_margin > 0.0,
        format!("V(0) = {v_origin:e}, 1/(4C*) = {smallness_bound:e}, margin = {smallness_margin:e}"),
    ));

    ValidationReport {
        checks,
        v_origin,
        c_star,
        smallness_bound,
        smallness_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wide() -> Grid {
        Grid::symmetric(50.0, 4095).unwrap()
    }

    fn example1_profile(grid: Grid) -> CoefficientProfile {
        let v = build_potential_example1(0.01, 2.0, 1.0, &grid).unwrap();
        let a = build_damping_plateau(1.0, 1.0, Ramp::Sharp, &grid).unwrap();
        CoefficientProfile::new(grid, v, a).unwrap()
    }

    #[test]
    fn example1_reference_values() {
        let p = Potential::Example1 {
            v0: 0.01,
            beta: 2.0,
            l: 1.0,
        };
        assert!((p.eval(0.0).unwrap() - 0.02).abs() < 1e-15);
        assert!((p.eval(1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((p.eval(-1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((p.eval(2.0).unwrap() - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn example1_branches_meet_at_seam() {
        for &(v0, beta, l) in &[(0.3, 1.5, 0.7), (2.0, 4.0, 3.0), (1e-3, 1.01, 1.0)] {
            let inner = 2.0 * v0 / f64::powf(l, beta) - v0 / f64::powf(l, 2.0 * beta) * f64::powf(l, beta);
            let outer = v0 * f64::powf(l, -beta);
            assert!((inner - outer).abs() <= 1e-14 * outer.abs().max(1.0));
        }
    }

    #[test]
    fn example1_sampled_matches_closed_form_and_is_monotone() {
        let g = wide();
        assert_eq!(g.n_nodes(), 4096);
        let s = build_potential_example1(0.01, 2.0, 1.0, &g).unwrap();
        for i in 0..g.n_nodes() {
            assert_eq!(s.values[i], s.family.eval(g.x(i)).unwrap());
        }
        let prof = example1_profile(g);
        let rep = validate_hypotheses(&prof, 1.0);
        assert!(rep.check("V.2").unwrap().passed);
        assert!(rep.check("V.1").unwrap().passed);
    }

    #[test]
    fn example1_parameter_errors() {
        let g = wide();
        assert!(matches!(
            build_potential_example1(0.01, 1.0, 1.0, &g),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            build_potential_example1(0.01, 0.5, 1.0, &g),
            Err(Error::Hypothesis(_))
        ));
        let small = Grid::symmetric(0.5, 10).unwrap();
        assert!(matches!(
            build_potential_example1(0.01, 2.0, 1.0, &small),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gaussian_potential() {
        let g = Grid::symmetric(4.0, 400).unwrap();
        let s = build_potential_gaussian(0.01, 0.5, &g).unwrap();
        assert_eq!(s.values[g.nearest(0.0)], 0.01);
        let at2 = s.values[g.nearest(2.0)];
        assert!((at2 - 0.001_353_352_832_366_127).abs() < 1e-15);
        // V'(x) x = -2 nu x^2 V(x) <= 0
        for i in 0..g.n_nodes() {
            let x = g.x(i);
            assert!(-2.0 * 0.5 * x * x * s.values[i] <= 0.0);
        }
        assert!(build_potential_gaussian(0.0, 1.0, &g).is_err());
        assert!(build_potential_gaussian(0.01, -1.0, &g).is_err());
    }

    #[test]
    fn damping_plateau_shapes() {
        let g = Grid::symmetric(4.0, 800).unwrap();
        for ramp in [Ramp::Sharp, Ramp::Smooth] {
            let d = build_damping_plateau(1.0, 1.0, ramp, &g).unwrap();
            assert_eq!(d.spec.eval(0.0), 0.0);
            assert_eq!(d.spec.eval(1.5), 1.0);
            let sup = d.values.iter().cloned().fold(0.0, f64::max);
            assert_eq!(sup, 1.0);
            for i in 0..g.n_cells() {
                // monotone towards the plateau
                if g.x(i) >= 0.0 {
                    assert!(d.values[i + 1] >= d.values[i]);
                }
            }
        }
        assert!(build_damping_plateau(0.0, 1.0, Ramp::Sharp, &g).is_err());
    }

    #[test]
    fn phi_lipschitz_profile() {
        let g = Grid::symmetric(20.0, 4000).unwrap();
        let p = example1_profile(g);
        let dx = g.dx();
        for i in 0..g.n_cells() {
            let (x0, x1) = (g.x(i), g.x(i + 1));
            let jump = (p.phi[i + 1] - p.phi[i]).abs();
            if x0.abs() <= 1.0 && x1.abs() <= 1.0 {
                assert_eq!(jump, 0.0);
            } else {
                assert!(jump <= p.eps1 / p.l * dx * (1.0 + 2.0 * dx));
            }
        }
    }

    #[test]
    fn inner_minimum_of_potential_is_v_l() {
        let g = Grid::symmetric(20.0, 2000).unwrap();
        let p = example1_profile(g);
        let mask = p.inner_mask();
        let min_inner = (0..g.n_nodes())
            .filter(|&i| mask[i])
            .map(|i| p.v[i])
            .fold(f64::INFINITY, f64::min);
        let slope = 2.0 * 0.01; // |V'(L)|
        assert!((min_inner - p.v_l()).abs() <= slope * g.dx());
    }

    #[test]
    fn validator_flags_constructed_violations() {
        let g = Grid::symmetric(10.0, 200).unwrap();
        // exterior |x|^{-1/2} decay but increasing in the interior
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| {
                let r = x.abs();
                if r >= 1.0 {
                    0.01 * r.powf(-0.5)
                } else {
                    0.005 + 0.005 * r * r
                }
            })
            .collect();
        let a = build_damping_plateau(1.0, 1.0, Ramp::Sharp, &g).unwrap();
        let p = CoefficientProfile::new(g, SampledPotential::tabulated(vals), a.clone()).unwrap();
        let rep = validate_hypotheses(&p, 1.0);
        assert!(!rep.check("V.2").unwrap().passed);
        assert!(!rep.all_passed());

        // smallness violated with V(0) = 1/(2C*)
        let c_star = 1.5;
        let gauss = build_potential_gaussian(1.0 / (2.0 * c_star), 1.0, &g).unwrap();
        let p = CoefficientProfile::new(g, gauss, a).unwrap();
        let rep = validate_hypotheses(&p, c_star);
        assert!(!rep.check("smallness").unwrap().passed);
        assert!(rep.smallness_margin < 0.0);
        assert!((rep.smallness_margin - (1.0 / 6.0 - 1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_data_norms() {
        let g = Grid::symmetric(10.0, 200).unwrap();
        let p = example1_profile(g);
        let n = compute_data_norms(&InitialData::zero(&g), &p).unwrap();
        assert_eq!(n.i0, 0.0);
    }

    #[test]
    fn weighted_norm_of_sqrt_v_window() {
        let g = Grid::symmetric(10.0, 400).unwrap();
        let p = example1_profile(g);
        let u1: Vec<f64> = (0..g.n_nodes())
            .map(|i| if g.x(i).abs() <= 2.0 + 1e-12 { p.v[i].sqrt() } else { 0.0 })
            .collect();
        let count = u1.iter().filter(|&&u| u != 0.0).count();
        let data = InitialData {
            u0: vec![0.0; g.n_nodes()],
            u1,
            support: Support::Compact(2.0),
        };
        let n = compute_data_norms(&data, &p).unwrap();
        assert!((n.weighted_norm - (count as f64 * g.dx()).sqrt()).abs() < 1e-12);
        assert!((n.i0 - (n.h1_norm_u0 + n.l2_norm_u1 + n.weighted_norm)).abs() < 1e-15);
    }

    #[test]
    fn zero_potential_is_a_division_guard() {
        let g = Grid::symmetric(10.0, 200).unwrap();
        let a = build_damping_plateau(1.0, 1.0, Ramp::Sharp, &g).unwrap();
        let p = CoefficientProfile::new(g, SampledPotential::zero(&g), a).unwrap();
        let d = InitialData::from_shape(&g, DataShape::Bump { radius: 2.0, center: 0.0 }, 1.0, 0.0);
        assert!(matches!(compute_data_norms(&d, &p), Err(Error::DivisionGuard(_))));
    }

    #[test]
    fn bump_data_vanishes_outside_support() {
        let g = Grid::symmetric(10.0, 200).unwrap();
        let d = InitialData::from_shape(&g, DataShape::Bump { radius: 2.0, center: 1.0 }, 1.0, -0.5);
        assert_eq!(d.support, Support::Compact(3.0));
        assert_eq!(d.leakage(&g), 0.0);
        let gs = DataShape::Gaussian { width: 1.0, center: 0.0 };
        let r = gs.truncation_radius(1.0);
        assert!(gs.eval(r) <= TRUNCATION_LEVEL * (1.0 + 1e-9));
    }
}
