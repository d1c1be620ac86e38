//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 parse or I/O error, 2 hypothesis/validation
//! failure, 3 runtime instability.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{fit_decay, semilinear_sweep, FIT_START};
use crate::coefficients::{validate_hypotheses, Potential, Support, ValidationReport};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::output::{
    config_hash, fmt_f64, is_free_wave, plot_script, read_file, records_from_csv, records_to_csv, write_file,
    DataTruncation, Manifest, ManifestConstants, ARTIFACT_VERSION,
};
use crate::solver::{derive_constants, run_c_star, run_with_constants, Termination, EDGE_NODES};
use crate::spectral::{estimate_c_star, PoincareProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INSTABILITY: i32 = 3;

pub const OUT_DIR_ENV: &str = "DAMPWAVE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dampwave", version, about = "Damped wave equations with localized damping and short-range potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the coefficient hypotheses and the smallness condition.
    Validate {
        config: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one simulation and write its time series and manifest.
    Run {
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
        out: PathBuf,
        /// Run even when hypotheses fail (e.g. free waves).
        #[arg(long)]
        allow_invalid: bool,
    },
    /// Semilinear outcome matrix over exponents and data sizes.
    Sweep {
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
        out: PathBuf,
        /// Exponents, overriding `[sweep] p_values`.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Data sizes, overriding `[sweep] I0_values`.
        #[arg(long = "i0", value_delimiter = ',')]
        i0: Vec<f64>,
    },
    /// Fit power-law exponents to a time-series CSV.
    Fit {
        csv: PathBuf,
        #[arg(long = "quantity", default_value = "E_u")]
        quantities: Vec<String>,
        #[arg(long, default_value_t = FIT_START, allow_negative_numbers = true)]
        from: f64,
        /// Defaults to the last record.
        #[arg(long)]
        to: Option<f64>,
        /// Claimed decay rate used for `sup_scaled`.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        rate: f64,
    },
    /// Estimate the Poincare-type constant for the inner radius `L`.
    Poincare {
        #[arg(long = "L")]
        l: f64,
        /// Half-width of the truncated domain.
        #[arg(long)]
        domain: f64,
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Generate a plotting script for a run manifest.
    Plot {
        manifest: PathBuf,
        /// Script path, default next to the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and executes the command,
/// writing to `stdout`/`stderr`. Returns the exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Hypothesis(_) => EXIT_VALIDATION,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate { config, json } => cmd_validate(&config, json, out),
        Command::Run {
            config,
            out: dir,
            allow_invalid,
        } => cmd_run(&config, &dir, allow_invalid, out),
        Command::Sweep { config, out: dir, p, i0 } => cmd_sweep(&config, &dir, &p, &i0, out),
        Command::Fit {
            csv,
            quantities,
            from,
            to,
            rate,
        } => cmd_fit(&csv, &quantities, from, to, rate, out),
        Command::Poincare { l, domain, nodes, tol } => cmd_poincare(l, domain, nodes, tol, out),
        Command::Plot { manifest, out: script } => cmd_plot(&manifest, script.as_deref(), out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("writing output", e))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

fn human_report(r: &ValidationReport) -> String {
    let mut s = String::new();
    for c in &r.checks {
        s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    s.push_str(&format!(
        "C* = {}  V(0) = {}  bound 1/(4C*) = {}\n",
        fmt_f64(r.c_star),
        fmt_f64(r.v_origin),
        fmt_f64(r.smallness_bound)
    ));
    s.push_str(if r.all_passed() { "result: pass\n" } else { "result: fail\n" });
    s
}

/// Validation report for a configuration; errors raised while building the
/// coefficients (e.g. a non-short-range potential) become failed checks.
pub fn validate_config(cfg: &Config) -> Result<ValidationReport> {
    let grid = cfg.grid()?;
    match cfg.profile(&grid) {
        Ok(profile) => {
            let c_star = run_c_star(profile.l)?;
            Ok(validate_hypotheses(&profile, c_star))
        }
        Err(Error::Hypothesis(msg)) => Ok(ValidationReport {
            checks: vec![crate::coefficients::HypothesisCheck {
                name: "family".into(),
                passed: false,
                detail: msg,
            }],
            v_origin: f64::NAN,
            c_star: f64::NAN,
            smallness_bound: f64::NAN,
            smallness_margin: f64::NAN,
        }),
        Err(e) => Err(e),
    }
}

pub fn cmd_validate(path: &Path, json: bool, out: &mut dyn Write) -> Result<i32> {
    let (cfg, _) = Config::load(path)?;
    let report = validate_config(&cfg)?;
    if json {
        emit(out, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    } else {
        emit(out, &human_report(&report))?;
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_VALIDATION })
}

pub fn cmd_run(path: &Path, dir: &Path, allow_invalid: bool, out: &mut dyn Write) -> Result<i32> {
    let (cfg, bytes) = Config::load(path)?;
    let rc = cfg.run_config()?;
    let derived = derive_constants(&rc)?;
    if !derived.validation.all_passed() && !allow_invalid {
        emit(out, &human_report(&derived.validation))?;
        return Ok(EXIT_VALIDATION);
    }
    let truncation = match rc.data.support {
        Support::Unbounded => Some(DataTruncation {
            radius: cfg.data_radius()?,
            edge_amplitude: 0.0,
        }),
        Support::Compact(_) => None,
    };
    let result = run_with_constants(&rc, derived, None)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let name = stem(path);
    let csv_name = format!("{name}.csv");
    write_file(&dir.join(&csv_name), &records_to_csv(&result.records))?;
    let truncation = truncation.map(|t| DataTruncation {
        edge_amplitude: result.data_edge_amplitude,
        ..t
    });
    let mut manifest = Manifest::for_run(&bytes, &result, &csv_name, truncation);
    manifest.free_wave = is_free_wave(&rc.profile.potential, &rc.profile.damping);
    let manifest_path = dir.join(format!("{name}.manifest.json"));
    write_file(&manifest_path, &manifest.to_json())?;
    emit(
        out,
        &format!(
            "termination: {}\nrecords: {}\nmanifest: {}\n",
            manifest.termination,
            result.records.len(),
            manifest_path.display()
        ),
    )?;
    if result.edge_max_abs > 1e-12 {
        emit(
            out,
            &format!(
                "warning: |u| reached {:e} on the outermost {EDGE_NODES} nodes\n",
                result.edge_max_abs
            ),
        )?;
    }
    Ok(match result.termination {
        Termination::Instability { .. } => EXIT_INSTABILITY,
        _ => EXIT_OK,
    })
}

pub fn cmd_sweep(path: &Path, dir: &Path, p: &[f64], i0: &[f64], out: &mut dyn Write) -> Result<i32> {
    let (cfg, bytes) = Config::load(path)?;
    let rc = cfg.run_config()?;
    let beta = match rc.profile.potential {
        Potential::Example1 { beta, .. } => beta,
        _ => return Err(Error::Config("sweep needs the power-law potential family".into())),
    };
    let from_file = cfg.sweep.clone();
    let p_values = if p.is_empty() {
        from_file.as_ref().map(|s| s.p_values.clone()).unwrap_or_default()
    } else {
        p.to_vec()
    };
    let i0_values = if i0.is_empty() {
        from_file.as_ref().map(|s| s.i0_values.clone()).unwrap_or_default()
    } else {
        i0.to_vec()
    };
    if p_values.is_empty() || i0_values.is_empty() {
        return Err(Error::Config("sweep needs p values and I0 values ([sweep] or --p/--i0)".into()));
    }
    let derived = derive_constants(&rc)?;
    if !derived.validation.all_passed() {
        emit(out, &human_report(&derived.validation))?;
        return Ok(EXIT_VALIDATION);
    }
    let sweep = semilinear_sweep(beta, &p_values, &i0_values, &rc)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let name = stem(path);
    let csv_name = format!("{name}.sweep.csv");
    let csv = sweep.to_csv();
    write_file(&dir.join(&csv_name), &csv)?;
    let manifest = Manifest {
        kind: "sweep".into(),
        config_hash: config_hash(&bytes),
        artifact_version: ARTIFACT_VERSION.into(),
        derived_constants: ManifestConstants::from_derived(&derived),
        termination: "completed".into(),
        files: vec![csv_name],
        validation: derived.validation.clone(),
        free_wave: false,
        dt: None,
        steps: None,
        boundary_max_abs: None,
        data_truncation: None,
        summary: None,
    };
    let manifest_path = dir.join(format!("{name}.sweep.manifest.json"));
    write_file(&manifest_path, &manifest.to_json())?;
    emit(out, &csv)?;
    emit(out, &format!("manifest: {}\n", manifest_path.display()))?;
    Ok(EXIT_OK)
}

pub fn cmd_fit(csv: &Path, quantities: &[String], from: f64, to: Option<f64>, rate: f64, out: &mut dyn Write) -> Result<i32> {
    let records = records_from_csv(&read_file(csv)?, &csv.display().to_string())?;
    let t_hi = to.unwrap_or_else(|| records.last().map(|r| r.t).unwrap_or(0.0));
    let mut s = String::from("quantity,t_lo,t_hi,exponent,r_squared,sup_scaled,claimed_rate,n_points\n");
    for q in quantities {
        let f = fit_decay(&records, q, [from, t_hi], rate)?;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f.quantity,
            fmt_f64(f.window[0]),
            fmt_f64(f.window[1]),
            fmt_f64(f.exponent),
            fmt_f64(f.r_squared),
            fmt_f64(f.sup_scaled),
            fmt_f64(f.claimed_rate),
            f.n_points
        ));
    }
    emit(out, &s)?;
    Ok(EXIT_OK)
}

pub fn cmd_poincare(l: f64, domain: f64, nodes: usize, tol: f64, out: &mut dyn Write) -> Result<i32> {
    let grid = Grid::with_nodes(-domain, domain, nodes)?;
    let est = estimate_c_star(&PoincareProblem::new(grid, l)?, tol)?;
    emit(
        out,
        &format!(
            "L,domain,nodes,c_star,lambda_min,residual\n{},{},{},{},{},{}\n",
            fmt_f64(l),
            fmt_f64(domain),
            nodes,
            fmt_f64(est.c_star),
            fmt_f64(est.lambda_min),
            fmt_f64(est.residual)
        ),
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_plot(manifest: &Path, script: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let text = plot_script(manifest)?;
    let target = match script {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
            let name = stem(manifest);
            dir.join(format!("{}.plot.py", name.trim_end_matches(".manifest")))
        }
    };
    write_file(&target, &text)?;
    emit(out, &format!("script: {}\n", target.display()))?;
    Ok(EXIT_OK)
}
