//! Leapfrog time stepping for `u_tt - u_xx + V u + a u_t = f(u)` on a
//! truncated interval.
//!
//! The damping term is time-centered, `a (u^{n+1} - u^{n-1}) / (2 dt)`, so the
//! update is solved pointwise with denominator `1 + a dt / 2 >= 1`. The
//! nonlinearity `|u|^p` is explicit at level `n`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{compute_data_norms, validate_hypotheses, CoefficientProfile, DataNorms, InitialData, Support, ValidationReport};
use crate::diagnostics::{derive_multiplier_config_with, summarize, Accumulator, EnergyRecord, MultiplierConfig, RunSummary, Snapshot};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral::{estimate_c_star, PoincareProblem};

/// Any node with `|u|` above this (or non-finite) ends the run.
pub const BLOWUP_THRESHOLD: f64 = 1e8;

pub const DEFAULT_CFL: f64 = 0.9;
pub const DEFAULT_RECORD_EVERY: usize = 10;

/// Nodes at each end monitored for boundary contamination.
pub const EDGE_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Nonlinearity {
    None,
    /// `f(u) = |u|^p`
    Power { p: f64 },
}

impl Nonlinearity {
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::None => 0.0,
            Nonlinearity::Power { p } => u.abs().powf(p),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Homogeneous Dirichlet values at both ends.
    #[default]
    Dirichlet,
    /// Node `n_cells` is identified with node 0.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub step: usize,
    pub dt: f64,
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    /// `int_0^t u ds`, trapezoid rule per step.
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: CoefficientProfile,
    pub data: InitialData,
    pub t_end: f64,
    pub cfl: f64,
    pub nonlinearity: Nonlinearity,
    pub record_every: usize,
    pub domain_padding: f64,
    pub boundary: Boundary,
    /// Overrides `eps` in the multiplier `k` condition (default `eps1 / 2`).
    pub multiplier_eps: Option<f64>,
}

impl RunConfig {
    pub fn new(profile: CoefficientProfile, data: InitialData, t_end: f64) -> Self {
        RunConfig {
            profile,
            data,
            t_end,
            cfl: DEFAULT_CFL,
            nonlinearity: Nonlinearity::None,
            record_every: DEFAULT_RECORD_EVERY,
            domain_padding: 0.0,
            boundary: Boundary::Dirichlet,
            multiplier_eps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.profile.grid.n_nodes();
        if self.data.u0.len() != n || self.data.u1.len() != n {
            return Err(Error::Config("initial data do not conform to the grid".into()));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Config(format!("CFL factor must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if let Nonlinearity::Power { p } = self.nonlinearity {
            if !(p > 1.0) {
                return Err(Error::Config(format!("power nonlinearity needs p > 1, got {p}")));
            }
            if !matches!(self.data.support, Support::Compact(_)) {
                return Err(Error::Config("semilinear runs need compactly supported data".into()));
            }
        }
        Ok(())
    }

    /// Largest stable step: `cfl dx / sqrt(1 + max(V) dx^2 / 4)`.
    pub fn max_dt(&self) -> f64 {
        let dx = self.profile.grid.dx();
        self.cfl * dx / (1.0 + 0.25 * self.profile.v_max() * dx * dx).sqrt()
    }

    /// Number of steps and the step that lands exactly on `t_end`.
    pub fn time_steps(&self) -> (usize, f64) {
        let n = (self.t_end / self.max_dt() - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// `R + t_end + padding`
pub fn domain_half_width(radius: f64, t_end: f64, padding: f64) -> f64 {
    radius + t_end + padding
}

/// Symmetric grid of spacing `dx` on `[-X, X]`, `X >= R + t_end + padding`,
/// rounded up to a whole number of cells so that the origin is a node.
pub fn make_domain(support: Support, t_end: f64, padding: f64, dx: f64) -> Result<Grid> {
    match support {
        Support::Compact(r) => make_domain_with_radius(r, t_end, padding, dx),
        Support::Unbounded => Err(Error::Config(
            "unbounded data need an explicit truncation radius to size the domain".into(),
        )),
    }
}

pub fn make_domain_with_radius(radius: f64, t_end: f64, padding: f64, dx: f64) -> Result<Grid> {
    if !(dx > 0.0) || !(radius >= 0.0) || !(t_end >= 0.0) || !(padding >= 0.0) {
        return Err(Error::Config(format!(
            "invalid domain request R = {radius}, t_end = {t_end}, padding = {padding}, dx = {dx}"
        )));
    }
    let x = domain_half_width(radius, t_end, padding);
    let half_cells = ((x / dx) - 1e-9).ceil().max(1.0) as usize;
    Grid::symmetric(half_cells as f64 * dx, 2 * half_cells)
}

/// The solver hit non-finite values or crossed [`BLOWUP_THRESHOLD`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupSignal {
    pub t: f64,
    pub max_abs: f64,
}

/// One-step update operator for a fixed profile and step size.
pub struct Stepper<'a> {
    profile: &'a CoefficientProfile,
    dt: f64,
    nonlinearity: Nonlinearity,
    boundary: Boundary,
    inv_plus: Vec<f64>,
    minus: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(profile: &'a CoefficientProfile, dt: f64, nonlinearity: Nonlinearity, boundary: Boundary) -> Self {
        let half = 0.5 * dt;
        Stepper {
            profile,
            dt,
            nonlinearity,
            boundary,
            inv_plus: profile.a.iter().map(|a| 1.0 / (1.0 + a * half)).collect(),
            minus: profile.a.iter().map(|a| 1.0 - a * half).collect(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn n(&self) -> usize {
        self.profile.grid.n_cells()
    }

    /// `D2 u - V u + f(u)` at node `i`.
    #[inline]
    fn rhs(&self, u: &[f64], i: usize, left: usize, right: usize, inv_dx2: f64) -> f64 {
        (u[left] - 2.0 * u[i] + u[right]) * inv_dx2 - self.profile.v[i] * u[i] + self.nonlinearity.eval(u[i])
    }

    fn neighbours(&self, i: usize) -> (usize, usize) {
        let n = self.n();
        match self.boundary {
            Boundary::Dirichlet => (i - 1, i + 1),
            Boundary::Periodic => ((i + n - 1) % n, (i + 1) % n),
        }
    }

    fn active(&self) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::Dirichlet => 1..self.n(),
            Boundary::Periodic => 0..self.n(),
        }
    }

    fn close(&self, u: &mut [f64]) {
        let n = self.n();
        match self.boundary {
            Boundary::Dirichlet => {
                u[0] = 0.0;
                u[n] = 0.0;
            }
            Boundary::Periodic => u[n] = u[0],
        }
    }

    fn check(&self, u: &[f64], t: f64) -> std::result::Result<(), BlowupSignal> {
        let mut max_abs = 0.0_f64;
        for &x in u {
            if !x.is_finite() {
                return Err(BlowupSignal { t, max_abs: f64::INFINITY });
            }
            max_abs = max_abs.max(x.abs());
        }
        if max_abs > BLOWUP_THRESHOLD {
            return Err(BlowupSignal { t, max_abs });
        }
        Ok(())
    }

    /// State at `t = dt` from the second-order Taylor start
    /// `u^1 = u0 + dt u1 + dt^2/2 (D2 u0 - V u0 - a u1 + f(u0))`.
    pub fn start(&self, data: &InitialData) -> std::result::Result<WaveState, BlowupSignal> {
        let dt = self.dt;
        let inv_dx2 = 1.0 / (self.profile.grid.dx() * self.profile.grid.dx());
        let mut u1 = vec![0.0; self.n() + 1];
        for i in self.active() {
            let (l, r) = self.neighbours(i);
            let acc = self.rhs(&data.u0, i, l, r, inv_dx2) - self.profile.a[i] * data.u1[i];
            u1[i] = data.u0[i] + dt * data.u1[i] + 0.5 * dt * dt * acc;
        }
        self.close(&mut u1);
        self.check(&u1, dt)?;
        let v = data.u0.iter().zip(&u1).map(|(a, b)| 0.5 * dt * (a + b)).collect();
        Ok(WaveState {
            t: dt,
            step: 1,
            dt,
            u: u1,
            u_prev: data.u0.clone(),
            v,
        })
    }

    /// Writes `u^{n+1}` into `next` without touching `state`.
    pub fn compute_next(&self, state: &WaveState, next: &mut [f64]) -> std::result::Result<(), BlowupSignal> {
        let dt2 = self.dt * self.dt;
        let inv_dx2 = 1.0 / (self.profile.grid.dx() * self.profile.grid.dx());
        let (u, up) = (&state.u, &state.u_prev);
        for i in self.active() {
            let (l, r) = self.neighbours(i);
            next[i] = (2.0 * u[i] - self.minus[i] * up[i] + dt2 * self.rhs(u, i, l, r, inv_dx2)) * self.inv_plus[i];
        }
        self.close(next);
        self.check(next, state.t + self.dt)
    }

    /// Shifts levels: `u_prev <- u`, `u <- next`; the retired `u_prev`
    /// ends up in `next`.
    pub fn commit(&self, state: &mut WaveState, next: &mut Vec<f64>) {
        let half = 0.5 * self.dt;
        for ((v, a), b) in state.v.iter_mut().zip(&state.u).zip(next.iter()) {
            *v += half * (a + b);
        }
        std::mem::swap(&mut state.u_prev, &mut state.u);
        std::mem::swap(&mut state.u, next);
        state.step += 1;
        state.t = state.step as f64 * self.dt;
    }

    /// Advances the state by one step.
    pub fn step(&self, state: &WaveState) -> std::result::Result<WaveState, BlowupSignal> {
        let mut next = vec![0.0; state.u.len()];
        self.compute_next(state, &mut next)?;
        let mut out = state.clone();
        self.commit(&mut out, &mut next);
        Ok(out)
    }
}

/// Energy conserved by the undamped scheme between levels `u_old = u^n` and
/// `u_new = u^{n+1}`:
/// `1/2 |(u^{n+1} - u^n)/dt|^2 + 1/2 <D+ u^{n+1}, D+ u^n> + 1/2 <V u^{n+1}, u^n>`.
///
/// With damping, its decrease per step equals
/// `dt * sum a |(u^{n+1} - u^{n-1}) / (2 dt)|^2 dx`.
pub fn discrete_energy(profile: &CoefficientProfile, u_old: &[f64], u_new: &[f64], dt: f64) -> f64 {
    let dx = profile.grid.dx();
    let n = profile.grid.n_cells();
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for i in 1..n {
        let d = (u_new[i] - u_old[i]) / dt;
        kinetic += d * d;
        potential += profile.v[i] * u_new[i] * u_old[i];
    }
    let mut strain = 0.0;
    for c in 0..n {
        strain += (u_new[c + 1] - u_new[c]) * (u_old[c + 1] - u_old[c]);
    }
    0.5 * dx * (kinetic + potential) + 0.5 * strain / dx
}

/// Single-step convenience wrapper using the configured step size.
pub fn step(state: &WaveState, config: &RunConfig) -> std::result::Result<WaveState, BlowupSignal> {
    Stepper::new(&config.profile, state.dt, config.nonlinearity, config.boundary).step(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Termination {
    Completed,
    /// Semilinear run left the bounded regime.
    Blowup { t: f64 },
    /// Linear run produced non-finite or huge values.
    Instability { t: f64 },
}

impl Termination {
    pub fn token(&self) -> String {
        match self {
            Termination::Completed => "completed".to_string(),
            Termination::Blowup { t } => format!("blowup({t})"),
            Termination::Instability { t } => format!("instability({t})"),
        }
    }
}

/// Constants derived once per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub c_star: f64,
    pub validation: ValidationReport,
    pub multiplier: Option<MultiplierConfig>,
    pub norms: Option<DataNorms>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<EnergyRecord>,
    pub final_state: WaveState,
    pub termination: Termination,
    pub dt: f64,
    pub steps: usize,
    pub derived: DerivedConstants,
    pub summary: RunSummary,
    /// Largest `|u|` seen on the outermost [`EDGE_NODES`] nodes at each end.
    pub edge_max_abs: f64,
    /// Largest `|u0|, |u1|` on the same nodes, i.e. the truncated data tail.
    pub data_edge_amplitude: f64,
}

/// Grid resolution used to compute `C*` for a run: `dx = L / 100` on
/// `[-(L + 30), L + 30]`.
pub fn run_c_star(l: f64) -> Result<f64> {
    let half = l + 30.0;
    let cells = (2.0 * half / (l / 100.0)).ceil() as usize;
    let grid = Grid::symmetric(half, cells)?;
    Ok(estimate_c_star(&PoincareProblem::new(grid, l)?, 1e-10)?.c_star)
}

/// `C*`, hypothesis report, multiplier constants (when admissible) and data norms.
pub fn derive_constants(config: &RunConfig) -> Result<DerivedConstants> {
    let profile = &config.profile;
    let c_star = run_c_star(profile.l)?;
    let validation = validate_hypotheses(profile, c_star);
    let multiplier = if validation.all_passed() {
        derive_multiplier_config_with(profile, c_star, config.multiplier_eps).ok()
    } else {
        None
    };
    let norms = compute_data_norms(&config.data, profile).ok();
    Ok(DerivedConstants {
        c_star,
        validation,
        multiplier,
        norms,
    })
}

fn edge_abs(u: &[f64]) -> f64 {
    let n = u.len();
    let k = EDGE_NODES.min(n / 2);
    u[..k].iter().chain(&u[n - k..]).fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub type RecordHook<'h> = &'h mut dyn FnMut(&EnergyRecord);

/// Marches from `t = 0` to `t_end`, recording diagnostics every
/// `record_every` steps and at the final time.
pub fn run(config: &RunConfig, hook: Option<RecordHook>) -> Result<RunResult> {
    config.validate()?;
    let derived = derive_constants(config)?;
    run_with_constants(config, derived, hook)
}

pub fn run_with_constants(config: &RunConfig, derived: DerivedConstants, mut hook: Option<RecordHook>) -> Result<RunResult> {
    config.validate()?;
    let profile = &config.profile;
    let data = &config.data;
    let (steps, dt) = config.time_steps();
    let stepper = Stepper::new(profile, dt, config.nonlinearity, config.boundary);
    let n_nodes = profile.grid.n_nodes();

    let mut acc = Accumulator::new(profile, data, derived.multiplier);
    let mut records = Vec::with_capacity(steps / config.record_every + 2);
    let mut emit = |r: EnergyRecord, records: &mut Vec<EnergyRecord>| {
        if let Some(h) = hook.as_mut() {
            h(&r);
        }
        records.push(r);
    };

    let zeros = vec![0.0; n_nodes];
    if let Some(r) = acc.observe(
        &Snapshot {
            t: 0.0,
            u: &data.u0,
            ut: &data.u1,
            v: &zeros,
        },
        true,
    ) {
        emit(r, &mut records);
    }
    let data_edge_amplitude = edge_abs(&data.u0).max(edge_abs(&data.u1));
    let mut edge_max_abs = data_edge_amplitude;

    let signal = |s: BlowupSignal| {
        if config.nonlinearity.is_linear() {
            Termination::Instability { t: s.t }
        } else {
            Termination::Blowup { t: s.t }
        }
    };

    let mut state = match stepper.start(data) {
        Ok(s) => s,
        Err(s) => {
            let initial = WaveState {
                t: 0.0,
                step: 0,
                dt,
                u: data.u0.clone(),
                u_prev: data.u0.clone(),
                v: zeros.clone(),
            };
            return Ok(finish(records, initial, signal(s), dt, steps, derived, edge_max_abs, data_edge_amplitude));
        }
    };
    edge_max_abs = edge_max_abs.max(edge_abs(&state.u));

    let mut next = vec![0.0; n_nodes];
    let mut retired = vec![0.0; n_nodes];
    let mut ut = vec![0.0; n_nodes];
    let inv2dt = 0.5 / dt;
    let mut termination = Termination::Completed;
    for n in 1..=steps {
        let record = n % config.record_every == 0 || n == steps;
        if n < steps {
            if let Err(s) = stepper.compute_next(&state, &mut next) {
                termination = signal(s);
                break;
            }
            for i in 0..n_nodes {
                ut[i] = (next[i] - state.u_prev[i]) * inv2dt;
            }
        } else if n >= 2 {
            for i in 0..n_nodes {
                ut[i] = (3.0 * state.u[i] - 4.0 * state.u_prev[i] + retired[i]) * inv2dt;
            }
        } else {
            for i in 0..n_nodes {
                ut[i] = (state.u[i] - state.u_prev[i]) / dt;
            }
        }
        let snap = Snapshot {
            t: state.t,
            u: &state.u,
            ut: &ut,
            v: &state.v,
        };
        if let Some(r) = acc.observe(&snap, record) {
            emit(r, &mut records);
        }
        if n < steps {
            stepper.commit(&mut state, &mut next);
            std::mem::swap(&mut retired, &mut next);
            edge_max_abs = edge_max_abs.max(edge_abs(&state.u));
        }
    }
    Ok(finish(records, state, termination, dt, steps, derived, edge_max_abs, data_edge_amplitude))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    records: Vec<EnergyRecord>,
    final_state: WaveState,
    termination: Termination,
    dt: f64,
    steps: usize,
    derived: DerivedConstants,
    edge_max_abs: f64,
    data_edge_amplitude: f64,
) -> RunResult {
    let summary = summarize(&records, derived.norms.as_ref(), derived.multiplier.as_ref());
    RunResult {
        records,
        final_state,
        termination,
        dt,
        steps,
        derived,
        summary,
        edge_max_abs,
        data_edge_amplitude,
    }
}
