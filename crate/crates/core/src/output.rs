//! Time-series CSV, run manifests and the plotting-script generator.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::{Damping, Potential, ValidationReport};
use crate::diagnostics::{EnergyRecord, RunSummary};
use crate::error::{Error, Result};
use crate::solver::{DerivedConstants, RunResult};

pub const CSV_HEADER: &str =
    "t,E_u,l2_u,l2_local,dissipation_cum,G_k,identity_residual,lemma25_residual,lemma25_ratio,au2_cum";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed scientific format with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_fields(r: &EnergyRecord) -> [f64; 10] {
    [
        r.t,
        r.e_u,
        r.l2_u,
        r.l2_local,
        r.dissipation_cum,
        r.g_k,
        r.identity_residual,
        r.lemma25_residual,
        r.lemma25_ratio,
        r.au2_cum,
    ]
}

pub fn records_to_csv(records: &[EnergyRecord]) -> String {
    let mut s = String::with_capacity(200 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let row: Vec<String> = csv_fields(r).iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses a time-series CSV; fields not stored in the CSV come back as `NaN`.
pub fn records_from_csv(text: &str, origin: &str) -> Result<Vec<EnergyRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((_, h)) => return Err(err(1, format!("unexpected header '{h}'"))),
        None => return Err(err(1, "empty file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(i + 1, e.to_string()))?;
        if v.len() != 10 {
            return Err(err(i + 1, format!("expected 10 fields, found {}", v.len())));
        }
        out.push(EnergyRecord {
            t: v[0],
            e_u: v[1],
            l2_u: v[2],
            l2_local: v[3],
            dissipation_cum: v[4],
            g_k: v[5],
            identity_residual: v[6],
            lemma25_residual: v[7],
            lemma25_ratio: v[8],
            lemma25_lhs: f64::NAN,
            lemma25_rhs: f64::NAN,
            au2: f64::NAN,
            au2_cum: v[9],
            energy_cum: f64::NAN,
            ut_norm: f64::NAN,
            ux_norm: f64::NAN,
            sqrt_v_u_norm: f64::NAN,
        });
    }
    Ok(out)
}

pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Constants reported in the manifest; multiplier entries are `None` when the
/// profile admits no multiplier configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestConstants {
    pub c_star: f64,
    pub smallness_bound: f64,
    pub alpha: Option<f64>,
    pub eps2: Option<f64>,
    pub k: Option<f64>,
    pub gamma0: Option<f64>,
    pub p0: Option<f64>,
    pub eta0: Option<f64>,
    pub v_l: Option<f64>,
    pub v_l_prime: Option<f64>,
    pub i0: Option<f64>,
}

impl ManifestConstants {
    pub fn from_derived(d: &DerivedConstants) -> Self {
        let mc = d.multiplier.as_ref();
        ManifestConstants {
            c_star: d.c_star,
            smallness_bound: d.validation.smallness_bound,
            alpha: mc.map(|m| m.alpha),
            eps2: mc.map(|m| m.eps2),
            k: mc.map(|m| m.k),
            gamma0: mc.map(|m| m.gamma0),
            p0: mc.map(|m| m.p0),
            eta0: mc.map(|m| m.eta0),
            v_l: mc.map(|m| m.v_l),
            v_l_prime: mc.map(|m| m.v_l_prime),
            i0: d.norms.map(|n| n.i0),
        }
    }
}

/// Truncation of non-compact data to the computational domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTruncation {
    pub radius: f64,
    /// Largest `|u0|, |u1|` on the outermost nodes.
    pub edge_amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub artifact_version: String,
    pub derived_constants: ManifestConstants,
    pub termination: String,
    /// Paths relative to the manifest's directory.
    pub files: Vec<String>,
    pub validation: ValidationReport,
    pub free_wave: bool,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub boundary_max_abs: Option<f64>,
    pub data_truncation: Option<DataTruncation>,
    pub summary: Option<RunSummary>,
}

impl Manifest {
    pub fn for_run(config_bytes: &[u8], result: &RunResult, csv_name: &str, truncation: Option<DataTruncation>) -> Self {
        Manifest {
            kind: "run".into(),
            config_hash: config_hash(config_bytes),
            artifact_version: ARTIFACT_VERSION.into(),
            derived_constants: ManifestConstants::from_derived(&result.derived),
            termination: result.termination.token(),
            files: vec![csv_name.to_string()],
            validation: result.derived.validation.clone(),
            free_wave: false,
            dt: Some(result.dt),
            steps: Some(result.steps),
            boundary_max_abs: Some(result.edge_max_abs),
            data_truncation: truncation,
            summary: Some(result.summary.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn is_free_wave(potential: &Potential, damping: &Damping) -> bool {
    matches!(potential, Potential::Zero) && matches!(damping, Damping::None { .. })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Self-contained matplotlib script for the run described by `manifest_path`.
pub fn plot_script(manifest_path: &Path) -> Result<String> {
    let text = read_file(manifest_path)?;
    let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: manifest_path.display().to_string(),
        message: e.to_string(),
    })?;
    let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let csv = manifest["files"]
        .as_array()
        .and_then(|f| f.iter().filter_map(|v| v.as_str()).find(|f| f.ends_with(".csv")))
        .ok_or_else(|| Error::Parse {
            path: manifest_path.display().to_string(),
            message: "manifest lists no CSV file".into(),
        })?;
    let csv_path: PathBuf = dir.join(csv);
    let records = records_from_csv(&read_file(&csv_path)?, &csv_path.display().to_string())?;
    if records.is_empty() {
        return Err(Error::Config(format!(
            "{} holds no records; refusing to generate a plot script",
            csv_path.display()
        )));
    }
    let free_wave = manifest["free_wave"].as_bool().unwrap_or(false);
    let csv_literal = format!("{:?}", csv_path.display().to_string());
    let mut s = String::new();
    let _ = write!(
        s,
        r#"#!/usr/bin/env python3
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV = {csv_literal}
FREE_WAVE = {free}

d = np.genfromtxt(CSV, delimiter=",", names=True)
t = d["t"]
tp = 1.0 + t
fig, ax = plt.subplots(2, 2, figsize=(11, 8))

ax[0, 0].loglog(tp, d["E_u"] * tp, label="E_u (1+t)")
ax[0, 0].set_title("E_u(t) (1+t)")

if FREE_WAVE:
    ax[0, 1].loglog(tp, d["l2_u"] ** 2, label="||u||^2")
    ref = tp[len(tp) // 2]
    val = d["l2_u"][len(tp) // 2] ** 2
    ax[0, 1].loglog(tp, val * tp / ref, "k--", label="slope 1")
    ax[0, 1].set_title("||u(t)||^2")
else:
    ax[0, 1].loglog(tp, d["l2_u"], label="||u||")
    ax[0, 1].set_title("||u(t)||")

gk = d["G_k"]
ax[1, 0].loglog(tp[np.isfinite(gk)], np.abs(gk[np.isfinite(gk)]), label="|G_k|")
ax[1, 0].set_title("G_k(t)")

ax[1, 1].loglog(tp, np.abs(d["identity_residual"]) + 1e-300, label="energy identity")
ax[1, 1].loglog(tp, np.abs(d["lemma25_residual"]) + 1e-300, label="v-field identity")
ax[1, 1].set_title("relative residuals")

for a in ax.flat:
    a.set_xlabel("1 + t")
    a.legend()
fig.tight_layout()
fig.savefig(CSV[:-4] + ".png", dpi=120)
"#,
        free = if free_wave { "True" } else { "False" },
    );
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        let x = std::f64::consts::PI * 1e-7;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn csv_round_trip_of_stored_columns() {
        let r = EnergyRecord {
            t: 0.5,
            e_u: 1.25,
            l2_u: 0.3,
            l2_local: 0.1,
            dissipation_cum: 0.01,
            g_k: f64::NAN,
            identity_residual: -1e-9,
            lemma25_residual: 2e-7,
            lemma25_ratio: 0.05,
            lemma25_lhs: 1.0,
            lemma25_rhs: 1.0,
            au2: 0.0,
            au2_cum: 0.7,
            energy_cum: 0.0,
            ut_norm: 0.0,
            ux_norm: 0.0,
            sqrt_v_u_norm: 0.0,
        };
        let text = records_to_csv(&[r, r]);
        assert!(text.starts_with(CSV_HEADER));
        let back = records_from_csv(&text, "mem").unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].e_u, 1.25);
        assert!(back[0].g_k.is_nan());
        assert_eq!(back[1].au2_cum, 0.7);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(records_from_csv("t,E_u\n1,2\n", "x").is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(records_from_csv(&bad, "x").is_err());
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            config_hash(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
