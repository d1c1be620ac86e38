//! Run configuration files.
//!
//! A configuration is a sectioned key-value file (TOML syntax); the grammar is
//! documented in `docs/config.md`. Required sections: `[potential]`,
//! `[damping]`, `[data]`, `[time]`. Optional: `[grid]`, `[nonlinearity]`,
//! `[multiplier]`, `[sweep]`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    build_damping_plateau_with_core, build_potential_example1, build_potential_gaussian, compute_data_norms,
    CoefficientProfile, DataShape, InitialData, Ramp, SampledDamping, SampledPotential, Support,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::solver::{make_domain_with_radius, Nonlinearity, RunConfig, DEFAULT_CFL, DEFAULT_RECORD_EVERY};

pub const REQUIRED_SECTIONS: [&str; 4] = ["potential", "damping", "data", "time"];
pub const DEFAULT_DX: f64 = 0.02;
pub const DEFAULT_PADDING: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "GridSection::is_default")]
    pub grid: GridSection,
    pub potential: PotentialSection,
    pub damping: DampingSection,
    pub data: DataSection,
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "NonlinearitySection::is_none")]
    pub nonlinearity: NonlinearitySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<MultiplierSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Either explicit bounds (`x_min`, `x_max`, `n_cells`) or a spacing `dx`
/// with the domain sized from the data support, `t_end` and `padding`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<f64>,
}

impl GridSection {
    fn is_default(&self) -> bool {
        *self == GridSection::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialFamily {
    Example1,
    Gaussian,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub family: PotentialFamily,
    #[serde(rename = "V0", default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Defaults to the damping radius.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingProfile {
    Plateau,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSection {
    pub profile: DampingProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp: Option<Ramp>,
    /// Radius of the undamped core, default `L / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Bump,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default)]
    pub center: f64,
    pub u0_amplitude: f64,
    pub u1_amplitude: f64,
    /// Rescale `(u0, u1)` so that the data size `I0` equals this value.
    #[serde(rename = "scale_to_I0", default, skip_serializing_if = "Option::is_none")]
    pub scale_to_i0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_record_every() -> usize {
    DEFAULT_RECORD_EVERY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    #[default]
    None,
    Power,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub kind: NonlinearityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl NonlinearitySection {
    fn is_none(&self) -> bool {
        *self == NonlinearitySection::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSection {
    /// `eps` of the `k` condition, default `eps1 / 2`.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p_values: Vec<f64>,
    #[serde(rename = "I0_values")]
    pub i0_values: Vec<f64>,
}

/// Line and column (1-based) of byte offset `pos` in `text`.
fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, col)
}

fn located(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(s) => {
            let (l, c) = line_col(text, s.start);
            format!("line {l}, column {c}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

impl Config {
    /// Parses configuration text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Config> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let table: toml::Table = text.parse().map_err(|e| parse_err(located(text, &e)))?;
        for section in REQUIRED_SECTIONS {
            match table.get(section) {
                None => return Err(parse_err(format!("missing [{section}] section"))),
                Some(v) if !v.is_table() => {
                    return Err(parse_err(format!("'{section}' must be a [{section}] section")))
                }
                _ => {}
            }
        }
        toml::from_str::<Config>(text).map_err(|e| parse_err(located(text, &e)))
    }

    pub fn load(path: &std::path::Path) -> Result<(Config, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: format!("not UTF-8: {e}"),
        })?;
        let cfg = Config::parse(text, &path.display().to_string())?;
        Ok((cfg, bytes))
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn shape(&self) -> Result<DataShape> {
        let d = &self.data;
        let shape = match d.shape {
            ShapeKind::Bump => DataShape::Bump {
                radius: d.radius.ok_or_else(|| missing("data", "radius"))?,
                center: d.center,
            },
            ShapeKind::Gaussian => DataShape::Gaussian {
                width: d.width.ok_or_else(|| missing("data", "width"))?,
                center: d.center,
            },
        };
        shape.check()?;
        Ok(shape)
    }

    /// Radius that bounds the data (their support, or the truncation radius
    /// for non-compact shapes).
    pub fn data_radius(&self) -> Result<f64> {
        let amp = self.data.u0_amplitude.abs().max(self.data.u1_amplitude.abs());
        let shape = self.shape()?;
        Ok(shape.truncation_radius(amp))
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        match (g.x_min, g.x_max, g.n_cells, g.dx) {
            (Some(a), Some(b), Some(n), None) => Grid::new(a, b, n),
            (None, None, None, dx) => make_domain_with_radius(
                self.data_radius()?,
                self.time.t_end,
                g.padding.unwrap_or(DEFAULT_PADDING),
                dx.unwrap_or(DEFAULT_DX),
            ),
            (_, _, _, Some(_)) => Err(Error::Config(
                "[grid] takes either x_min, x_max and n_cells, or dx and padding".into(),
            )),
            _ => Err(Error::Config("[grid] needs all of x_min, x_max and n_cells".into())),
        }
    }

    pub fn profile(&self, grid: &Grid) -> Result<CoefficientProfile> {
        let d = &self.damping;
        let damping = match d.profile {
            DampingProfile::Plateau => build_damping_plateau_with_core(
                d.eps1.ok_or_else(|| missing("damping", "eps1"))?,
                d.l,
                d.core.unwrap_or(0.5 * d.l),
                d.ramp.unwrap_or(Ramp::Sharp),
                grid,
            )?,
            DampingProfile::None => SampledDamping::none(d.l, grid),
        };
        let p = &self.potential;
        let potential = match p.family {
            PotentialFamily::Example1 => build_potential_example1(
                p.v0.ok_or_else(|| missing("potential", "V0"))?,
                p.beta.ok_or_else(|| missing("potential", "beta"))?,
                p.l.unwrap_or(d.l),
                grid,
            )?,
            PotentialFamily::Gaussian => build_potential_gaussian(
                p.v0.ok_or_else(|| missing("potential", "V0"))?,
                p.nu.ok_or_else(|| missing("potential", "nu"))?,
                grid,
            )?,
            PotentialFamily::Zero => SampledPotential::zero(grid),
        };
        CoefficientProfile::new(*grid, potential, damping)
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Ok(match self.nonlinearity.kind {
            NonlinearityKind::None => Nonlinearity::None,
            NonlinearityKind::Power => Nonlinearity::Power {
                p: self.nonlinearity.p.ok_or_else(|| missing("nonlinearity", "p"))?,
            },
        })
    }

    /// Assembles grid, coefficients and data into a run description.
    pub fn run_config(&self) -> Result<RunConfig> {
        let grid = self.grid()?;
        let profile = self.profile(&grid)?;
        let shape = self.shape()?;
        let mut data = InitialData::from_shape(&grid, shape, self.data.u0_amplitude, self.data.u1_amplitude);
        if let Some(target) = self.data.scale_to_i0 {
            if !(target >= 0.0) {
                return Err(Error::Config(format!("scale_to_I0 must be nonnegative, got {target}")));
            }
            let i0 = compute_data_norms(&data, &profile)?.i0;
            if !(i0 > 0.0) {
                return Err(Error::Config("cannot rescale zero data to a positive I0".into()));
            }
            data = data.scaled(target / i0);
        }
        if let Support::Compact(r) = data.support {
            if grid.x_min() > -r || grid.x_max() < r {
                return Err(Error::Config(format!("grid does not cover the data support |x| <= {r}")));
            }
        }
        let mut rc = RunConfig::new(profile, data, self.time.t_end);
        rc.cfl = self.time.cfl;
        rc.record_every = self.time.record_every;
        rc.nonlinearity = self.nonlinearity()?;
        rc.domain_padding = self.grid.padding.unwrap_or(0.0);
        rc.multiplier_eps = self.multiplier.as_ref().map(|m| m.eps);
        rc.validate()?;
        Ok(rc)
    }
}

fn missing(section: &str, key: &str) -> Error {
    Error::Config(format!("[{section}] needs '{key}'"))
}
