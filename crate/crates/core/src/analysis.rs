//! Decay-rate fits, the scalar inequalities used by the semilinear theory,
//! and threshold sweeps over `(p, I0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{compute_data_norms, Potential, Support};
use crate::diagnostics::EnergyRecord;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::solver::{derive_constants, run_with_constants, Nonlinearity, RunConfig, Termination};

/// Values below this are floored before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;
pub const MIN_FIT_RECORDS: usize = 10;
/// Decay fits start here to skip the initial transient.
pub const FIT_START: f64 = 10.0;
/// A sweep run decays if its energy-norm exponent is at most this.
pub const DECAY_EXPONENT: f64 = -0.4;
/// Allowed growth of the last-quartile max of `||u||` over the first-quartile max.
pub const BOUNDED_GROWTH: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub quantity: String,
    pub window: [f64; 2],
    /// Slope of `log q` against `log(1 + t)`.
    pub exponent: f64,
    pub r_squared: f64,
    /// `sup q(t) (1 + t)^rate` over the window.
    pub sup_scaled: f64,
    pub claimed_rate: f64,
    pub n_points: usize,
}

/// Least-squares power-law fit of `quantity` on the records with
/// `t_lo <= t <= t_hi`.
pub fn fit_decay(series: &[EnergyRecord], quantity: &str, window: [f64; 2], claimed_rate: f64) -> Result<FitResult> {
    let [t_lo, t_hi] = window;
    if !(t_lo <= t_hi) {
        return Err(Error::Fit(format!("empty window [{t_lo}, {t_hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sup = f64::NEG_INFINITY;
    let mut used = [f64::INFINITY, f64::NEG_INFINITY];
    for r in series.iter().filter(|r| r.t >= t_lo && r.t <= t_hi) {
        let q = r
            .quantity(quantity)
            .ok_or_else(|| Error::Fit(format!("unknown quantity '{quantity}'")))?;
        if q.is_nan() {
            return Err(Error::Fit(format!("'{quantity}' is undefined at t = {}", r.t)));
        }
        let s = 1.0 + r.t;
        xs.push(s.ln());
        ys.push(q.max(LOG_FLOOR).ln());
        sup = sup.max(q * s.powf(claimed_rate));
        used[0] = used[0].min(r.t);
        used[1] = used[1].max(r.t);
    }
    if xs.len() < MIN_FIT_RECORDS {
        return Err(Error::Fit(format!(
            "window [{t_lo}, {t_hi}] holds {} records; at least {MIN_FIT_RECORDS} needed",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::Fit("window spans a single time".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(FitResult {
        quantity: quantity.to_string(),
        window: used,
        exponent: slope,
        r_squared,
        sup_scaled: sup,
        claimed_rate,
        n_points: xs.len(),
    })
}

/// Critical exponent `5 + 2 beta` of the small-data theory.
pub fn p_star(beta: f64) -> f64 {
    5.0 + 2.0 * beta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Report {
    pub theta: f64,
    pub t_max: f64,
    /// `sup_t (1+t)^{1/2} int_0^t (1+t-s)^{-1/2} (1+s)^{-theta} ds`
    pub sup: f64,
    pub t_at_sup: f64,
    /// Value of the scaled integral at `t_max`.
    pub at_t_max: f64,
    pub hypothesis_violated: bool,
}

/// `int_0^t (1+t-s)^{-1/2} (1+s)^{-theta} ds`.
///
/// Each half of `[0, t]` is mapped to a logarithmic variable anchored at its
/// outer end (`1 + s = e^y`, resp. `1 + t - s = e^z`) and integrated with
/// composite Simpson on `panels` intervals.
pub fn convolution_integral(theta: f64, t: f64, panels: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let panels = panels.max(2) + panels % 2;
    let ymax = (1.0 + 0.5 * t).ln();
    let left = |y: f64| {
        let s = y.exp_m1();
        (1.0 + t - s).powf(-0.5) * (1.0 + s).powf(1.0 - theta)
    };
    let right = |z: f64| {
        let r = z.exp();
        let s = t - z.exp_m1();
        r.sqrt() * (1.0 + s).powf(-theta)
    };
    simpson(left, ymax, panels) + simpson(right, ymax, panels)
}

fn simpson(f: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Scaled convolution integral on a grid of `t` values in `[0, t_max]`,
/// without checking `theta > 1`.
pub fn lemma31_scan(theta: f64, t_max: f64, n_quadrature: usize) -> Lemma31Report {
    const SAMPLES: usize = 400;
    let mut ts: Vec<f64> = (0..=SAMPLES)
        .map(|i| (1.0 + t_max).powf(i as f64 / SAMPLES as f64) - 1.0)
        .collect();
    ts.extend((1..=SAMPLES).map(|i| t_max * i as f64 / SAMPLES as f64));
    ts.push(t_max);
    let mut rep = Lemma31Report {
        theta,
        t_max,
        sup: 0.0,
        t_at_sup: 0.0,
        at_t_max: 0.0,
        hypothesis_violated: theta <= 1.0,
    };
    for t in ts {
        let t = t.min(t_max);
        let g = (1.0 + t).sqrt() * convolution_integral(theta, t, n_quadrature);
        if g > rep.sup {
            rep.sup = g;
            rep.t_at_sup = t;
        }
        if t == t_max {
            rep.at_t_max = g;
        }
    }
    rep
}

/// Bounded only for `theta > 1`; smaller exponents are rejected.
pub fn check_lemma31(theta: f64, t_max: f64, n_quadrature: usize) -> Result<Lemma31Report> {
    if !(theta > 1.0) {
        let a = lemma31_scan(theta, t_max, n_quadrature);
        let b = lemma31_scan(theta, 2.0 * t_max, n_quadrature);
        return Err(Error::Hypothesis(format!(
            "theta = {theta} <= 1: scaled integral is unbounded (sup {:.6} on [0, {t_max}], {:.6} on [0, {}])",
            a.sup,
            b.sup,
            2.0 * t_max
        )));
    }
    if !(t_max >= 0.0) {
        return Err(Error::Config(format!("t_max must be nonnegative, got {t_max}")));
    }
    Ok(lemma31_scan(theta, t_max, n_quadrature))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GagliardoNirenbergReport {
    pub p: f64,
    /// `(p - 1) / (2p)`
    pub theta: f64,
    pub n_samples: usize,
    /// Largest `||u||_{2p} / (||u||^{1-theta} ||u_x||^theta)` observed.
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

pub fn gn_theta(p: f64) -> f64 {
    (p - 1.0) / (2.0 * p)
}

/// `||u||_{2p} / (||u||^{1-theta} ||u_x||^theta)` with trapezoid norms and
/// cell-wise forward differences for `u_x`.
pub fn gn_ratio(grid: &Grid, u: &[f64], p: f64) -> f64 {
    let theta = gn_theta(p);
    let q = 2.0 * p;
    let lq = grid.integrate_with(|i| u[i].abs().powf(q)).powf(1.0 / q);
    let l2 = grid.l2_norm(u);
    let dx = grid.dx();
    let dx_sq: f64 = u.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / dx;
    lq / (l2.powf(1.0 - theta) * dx_sq.sqrt().powf(theta))
}

fn gn_sample(grid: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let xs = grid.nodes();
    let bumps = rng.gen_range(1..=4);
    let mut u = vec![0.0; xs.len()];
    for _ in 0..bumps {
        let c = rng.gen_range(-8.0..8.0);
        let w: f64 = rng.gen_range(0.4..3.0);
        let amp = rng.gen_range(-1.0..1.0);
        let k = rng.gen_range(0.0..2.0);
        for (ui, x) in u.iter_mut().zip(&xs) {
            let z = (x - c) / w;
            *ui += amp * (-0.5 * z * z).exp() * (k * z).cos();
        }
    }
    u
}

/// Empirical constant of the one-dimensional Gagliardo-Nirenberg inequality
/// over random smooth samples.
pub fn check_gagliardo_nirenberg(p: f64, n_samples: usize, seed: u64) -> Result<GagliardoNirenbergReport> {
    if !(p > 1.0) {
        return Err(Error::Config(format!("Gagliardo-Nirenberg check needs p > 1, got {p}")));
    }
    let grid = Grid::symmetric(30.0, 6000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0_f64;
    let mut sum = 0.0;
    let mut used = 0;
    for _ in 0..n_samples {
        let u = gn_sample(&grid, &mut rng);
        let r = gn_ratio(&grid, &u, p);
        if r.is_finite() {
            max_ratio = max_ratio.max(r);
            sum += r;
            used += 1;
        }
    }
    Ok(GagliardoNirenbergReport {
        p,
        theta: gn_theta(p),
        n_samples: used,
        max_ratio,
        mean_ratio: if used > 0 { sum / used as f64 } else { 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum SweepOutcome {
    /// `||u||` stays bounded but the energy norm does not reach the decay threshold.
    Bounded,
    Decayed { exponent: f64 },
    Unbounded,
    Blowup { t: f64 },
    Instability { t: f64 },
    Failed,
}

impl SweepOutcome {
    pub fn token(&self) -> String {
        match self {
            SweepOutcome::Bounded => "bounded".to_string(),
            SweepOutcome::Decayed { exponent } => format!("decayed_at_rate({exponent:.4})"),
            SweepOutcome::Unbounded => "unbounded".to_string(),
            SweepOutcome::Blowup { t } => format!("blowup({t:.6})"),
            SweepOutcome::Instability { t } => format!("instability({t:.6})"),
            SweepOutcome::Failed => "failed".to_string(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, SweepOutcome::Bounded | SweepOutcome::Decayed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemilinearSweep {
    pub beta: f64,
    pub p_star: f64,
    pub p_values: Vec<f64>,
    pub i0_values: Vec<f64>,
    /// `outcomes[i][j]` for `p_values[i]`, `i0_values[j]`.
    pub outcomes: Vec<Vec<SweepOutcome>>,
}

impl SemilinearSweep {
    /// Rows are `p`, columns are `I0`; `supercritical` marks `p > p*(beta)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,supercritical");
        for i0 in &self.i0_values {
            s.push_str(&format!(",I0={i0:e}"));
        }
        s.push('\n');
        for (p, row) in self.p_values.iter().zip(&self.outcomes) {
            s.push_str(&format!("{p},{}", *p > self.p_star));
            for o in row {
                s.push(',');
                s.push_str(&o.token());
            }
            s.push('\n');
        }
        s
    }
}

/// `max ||u||` over the last quartile of records is within [`BOUNDED_GROWTH`]
/// of the max over the first quartile.
pub fn l2_bounded(series: &[EnergyRecord]) -> bool {
    let n = series.len();
    if n < 4 {
        return true;
    }
    let q = n / 4;
    let first = series[..q].iter().fold(0.0_f64, |m, r| m.max(r.l2_u));
    let last = series[n - q..].iter().fold(0.0_f64, |m, r| m.max(r.l2_u));
    last <= BOUNDED_GROWTH * first
}

pub fn classify(series: &[EnergyRecord], termination: Termination, t_end: f64) -> SweepOutcome {
    match termination {
        Termination::Blowup { t } => return SweepOutcome::Blowup { t },
        Termination::Instability { t } => return SweepOutcome::Instability { t },
        Termination::Completed => {}
    }
    if !l2_bounded(series) {
        return SweepOutcome::Unbounded;
    }
    match fit_decay(series, "energy_norm", [FIT_START, t_end], 0.5) {
        Ok(f) if f.exponent <= DECAY_EXPONENT => SweepOutcome::Decayed { exponent: f.exponent },
        _ => SweepOutcome::Bounded,
    }
}

/// Runs every `(p, I0)` pair with `|u|^p` and the base data rescaled to the
/// given `I0`; runs are independent and execute in parallel.
pub fn semilinear_sweep(beta: f64, p_values: &[f64], i0_values: &[f64], base: &RunConfig) -> Result<SemilinearSweep> {
    match base.profile.potential {
        Potential::Example1 { beta: b, .. } if (b - beta).abs() <= 1e-12 * beta.abs().max(1.0) => {}
        _ => {
            return Err(Error::Config(format!(
                "sweep needs the power-law potential family with beta = {beta}"
            )))
        }
    }
    match base.data.support {
        Support::Compact(r) if r > base.profile.l => {}
        _ => {
            return Err(Error::Hypothesis(format!(
                "sweep data must be supported in |x| <= R with R > L = {}",
                base.profile.l
            )))
        }
    }
    if let Some(p) = p_values.iter().find(|p| !(**p > 1.0)) {
        return Err(Error::Config(format!("sweep exponents must exceed 1, got {p}")));
    }
    if let Some(i0) = i0_values.iter().find(|i| !(**i >= 0.0)) {
        return Err(Error::Config(format!("sweep data sizes must be nonnegative, got {i0}")));
    }
    let base_i0 = compute_data_norms(&base.data, &base.profile)?.i0;
    if !(base_i0 > 0.0) && i0_values.iter().any(|&i| i > 0.0) {
        return Err(Error::Config("base data are zero and cannot be rescaled".into()));
    }
    let derived = derive_constants(base)?;

    let cells: Vec<(usize, usize)> = (0..p_values.len())
        .flat_map(|i| (0..i0_values.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<SweepOutcome> = cells
        .par_iter()
        .map(|&(i, j)| {
            let i0 = i0_values[j];
            if i0 == 0.0 {
                return SweepOutcome::Bounded;
            }
            let mut cfg = base.clone();
            cfg.data = base.data.scaled(i0 / base_i0);
            cfg.nonlinearity = Nonlinearity::Power { p: p_values[i] };
            let mut d = derived.clone();
            d.norms = compute_data_norms(&cfg.data, &cfg.profile).ok();
            match run_with_constants(&cfg, d, None) {
                Ok(r) => classify(&r.records, r.termination, cfg.t_end),
                Err(_) => SweepOutcome::Failed,
            }
        })
        .collect();
    let outcomes = results.chunks(i0_values.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(SemilinearSweep {
        beta,
        p_star: p_star(beta),
        p_values: p_values.to_vec(),
        i0_values: i0_values.to_vec(),
        outcomes: if i0_values.is_empty() { vec![Vec::new(); p_values.len()] } else { outcomes },
    })
}
