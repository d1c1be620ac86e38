mod common;

use std::process::Command;
use std::time::Instant;

use common::*;
use dampwave::analysis::*;
use dampwave::coefficients::*;
use dampwave::config::Config;
use dampwave::diagnostics::{check_energy_identity, check_lemma21, EnergyRecord};
use dampwave::solver::*;
use dampwave::spectral::*;
use dampwave::Grid;

const CONFIGS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn load(name: &str) -> Config {
    Config::load(std::path::Path::new(&format!("{CONFIGS}/{name}"))).unwrap().0
}

fn rel_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

/// Runs shared between criteria, kept so every record feeds the local-bound audit.
struct Runs {
    reference: RunResult,
    reference_secs: f64,
    refined: RunResult,
    long: RunResult,
    longer: RunResult,
    doubled: RunResult,
    audited: Vec<(RunResult, String)>,
}

fn reference_run(cells: usize, t_end: f64) -> (RunResult, f64) {
    let cfg = reference_config(cells, t_end);
    let start = Instant::now();
    let res = run(&cfg, None).unwrap();
    (res, start.elapsed().as_secs_f64())
}

fn i0(res: &RunResult) -> f64 {
    res.derived.norms.unwrap().i0
}

fn sup_scaled_energy(records: &[EnergyRecord], lo: f64, i0: f64) -> f64 {
    records
        .iter()
        .filter(|r| r.t >= lo)
        .map(|r| r.e_u * (1.0 + r.t) / (i0 * i0))
        .fold(0.0, f64::max)
}

fn max_l2_over_i0(records: &[EnergyRecord], i0: f64) -> f64 {
    records.iter().map(|r| r.l2_u / i0).fold(0.0, f64::max)
}

fn c1(runs: &Runs) -> Outcome {
    let a = check_energy_identity(&runs.reference.records).max_relative_residual;
    let b = check_energy_identity(&runs.refined.records).max_relative_residual;
    let ratio = a / b;
    outcome(
        a < 1e-4 && (3.5..=4.5).contains(&ratio) && runs.reference_secs < 30.0,
        format!(
            "identity residual {a:.3e} (refined {b:.3e}, ratio {ratio:.3}), runtime {:.2} s",
            runs.reference_secs
        ),
    )
}

fn c2(runs: &Runs) -> Outcome {
    let i0 = i0(&runs.long);
    let s200 = sup_scaled_energy(&runs.long.records, 10.0, i0);
    let s400 = sup_scaled_energy(&runs.longer.records, 10.0, i0);
    let change = rel_change(s200, s400);
    let fit = fit_decay(&runs.long.records, "E_u", [10.0, 200.0], 1.0).unwrap();
    outcome(
        s200.is_finite() && change < 0.1 && fit.exponent <= -0.9,
        format!(
            "sup E(1+t)/I0^2 {s200:.5} vs {s400:.5} (change {:.2}%), E_u exponent {:.3}",
            100.0 * change,
            fit.exponent
        ),
    )
}

fn c3(runs: &Runs) -> Outcome {
    let i0 = i0(&runs.long);
    let a = max_l2_over_i0(&runs.long.records, i0);
    let b = max_l2_over_i0(&runs.longer.records, i0);
    let change = rel_change(a, b);
    outcome(
        change <= 0.1,
        format!("max ||u||/I0 {a:.6} (t_end 200) vs {b:.6} (t_end 400), change {:.3}%", 100.0 * change),
    )
}

fn c4() -> Outcome {
    let rc = load("free_wave.toml").run_config().unwrap();
    let res = run(&rc, None).unwrap();
    let fit = fit_decay(&res.records, "l2_u_sq", [10.0, 100.0], 0.0).unwrap();
    outcome(
        (0.9..=1.1).contains(&fit.exponent),
        format!(
            "||u||^2 exponent {:.4} over [10, 100] (r^2 {:.5}), edge |u| {:.1e}",
            fit.exponent, fit.r_squared, res.edge_max_abs
        ),
    )
}

fn c5(runs: &Runs) -> Outcome {
    let g0 = runs.reference.records[0].g_k;
    let min = runs.reference.records.iter().map(|r| r.g_k).fold(f64::INFINITY, f64::min);
    let k = runs.reference.derived.multiplier.as_ref().unwrap().k;
    outcome(
        min >= -1e-10 * g0,
        format!("min G_k {min:.4e}, G_k(0) {g0:.4e}, k {k:.4}"),
    )
}

fn c6(runs: &Runs) -> Outcome {
    let mut records = 0;
    let mut violations = 0;
    let mut sources = 0;
    let all = [&runs.reference, &runs.refined, &runs.long, &runs.longer, &runs.doubled]
        .into_iter()
        .map(|r| (r, "reference"))
        .chain(runs.audited.iter().map(|(r, n)| (r, n.as_str())));
    let mut failing = Vec::new();
    for (res, name) in all {
        if !res.derived.validation.all_passed() {
            continue;
        }
        let mc = res.derived.multiplier.as_ref().unwrap();
        sources += 1;
        for r in &res.records {
            records += 1;
            if !check_lemma21(r, mc) {
                violations += 1;
                failing.push(format!("{name} t={}", r.t));
            }
        }
    }
    outcome(
        violations == 0 && records > 0,
        format!("{violations} violations over {records} records from {sources} runs {failing:?}"),
    )
}

fn c7() -> Outcome {
    let problem = PoincareProblem::new(Grid::with_nodes(-20.0, 20.0, 512).unwrap(), 1.0).unwrap();
    let est = estimate_c_star(&problem, 1e-12).unwrap();
    let oracle = dense_c_star(&problem);
    let rel = (est.c_star - oracle).abs() / oracle;
    let rep = verify_poincare_on_samples(&problem, &est, 1000, 2024);
    outcome(
        rel < 1e-6 && rep.ok() && rep.n_samples == 1000,
        format!(
            "C* {:.10} vs dense {oracle:.10} (rel {rel:.1e}); {} violations in {} samples, max ratio {:.6}",
            est.c_star, rep.violations, rep.n_samples, rep.max_ratio
        ),
    )
}

fn c8(runs: &Runs) -> Outcome {
    let residual = runs.reference.summary.lemma25_max_residual;
    let a = runs.reference.summary.lemma25_max_ratio;
    let b = runs.doubled.summary.lemma25_max_ratio;
    let change = rel_change(a, b);
    outcome(
        residual < 1e-3 && a.is_finite() && change < 0.1,
        format!(
            "residual {residual:.3e}; bound ratio {a:.4} (t_end 50) vs {b:.4} (t_end 100), change {:.2}%",
            100.0 * change
        ),
    )
}

fn c9() -> Outcome {
    let n = 2000;
    let s15 = [lemma31_scan(1.5, 1000.0, n).sup, lemma31_scan(1.5, 2000.0, n).sup];
    let s10 = [lemma31_scan(1.0, 1000.0, n).sup, lemma31_scan(1.0, 2000.0, n).sup];
    let c15 = rel_change(s15[0], s15[1]);
    let growth = s10[1] / s10[0] - 1.0;
    let flagged = matches!(check_lemma31(1.0, 1000.0, n), Err(dampwave::Error::Hypothesis(_)));
    outcome(
        c15 < 0.01 && growth > 0.05 && flagged,
        format!(
            "theta 1.5: {:.6} -> {:.6} ({:.3}%); theta 1.0: {:.6} -> {:.6} (+{:.2}%), rejected: {flagged}",
            s15[0],
            s15[1],
            100.0 * c15,
            s10[0],
            s10[1],
            100.0 * growth
        ),
    )
}

fn c10(audited: &mut Vec<(RunResult, String)>) -> Outcome {
    let cfg = load("semilinear.toml");
    let rc = cfg.run_config().unwrap();
    let start = Instant::now();
    let res = run(&rc, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let i0 = i0(&res);
    let completed = res.termination == Termination::Completed;
    let fit = fit_decay(&res.records, "energy_norm", [10.0, 100.0], 0.4);

    let mut long = cfg.clone();
    long.time.t_end = 200.0;
    let res2 = run(&long.run_config().unwrap(), None).unwrap();
    let a = max_l2_over_i0(&res.records, i0);
    let b = max_l2_over_i0(&res2.records, i0);
    let change = rel_change(a, b);
    let exponent = fit.as_ref().map(|f| f.exponent).unwrap_or(f64::NAN);
    let pass = completed
        && res2.termination == Termination::Completed
        && exponent <= -0.4
        && change <= 0.1
        && i0 <= 1e-3 * (1.0 + 1e-12)
        && secs < 60.0;
    let detail = format!(
        "p = 11 > p* = {}, I0 {i0:.3e}, {}; ||U||_E exponent {exponent:.3}; max ||u||/I0 {a:.4} vs {b:.4} ({:.2}%); runtime {secs:.2} s",
        p_star(2.0),
        res.termination.token(),
        100.0 * change
    );
    audited.push((res, "semilinear".into()));
    audited.push((res2, "semilinear t_end 200".into()));
    outcome(pass, detail)
}

fn c11() -> Outcome {
    let (a, b) = (p_star(2.0), p_star(0.0));
    outcome(a == 9.0 && b == 5.0, format!("p_star(2) = {a}, p_star(0) = {b}"))
}

fn c12() -> Outcome {
    let errs: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dx| dalembert_error(dx, 5.0, 1.5, 0.7)).collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        format!(
            "L2 errors {}, ratios {ratios:.3?}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" / ")
        ),
    )
}

fn c13() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{CONFIGS}/reference.toml");
    let mut bytes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_dampwave"))
            .args(["run", &config, "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        bytes.push(std::fs::read(out.join("reference.csv")).unwrap());
    }
    outcome(
        bytes[0] == bytes[1] && !bytes[0].is_empty(),
        format!("two CLI runs of reference.toml: {} and {} bytes, identical: {}", bytes[0].len(), bytes[1].len(), bytes[0] == bytes[1]),
    )
}

fn audit_runs() -> Vec<(RunResult, String)> {
    let g = Grid::symmetric(40.0, 4000).unwrap();
    let profiles = [
        ("example1 V0=0.01", example1_profile(g, 0.01, Ramp::Sharp)),
        ("example1 V0=0.08 smooth", example1_profile(g, REF_V0, Ramp::Smooth)),
        (
            "example1 beta=3 L=2",
            CoefficientProfile::new(
                g,
                build_potential_example1(0.05, 3.0, 2.0, &g).unwrap(),
                build_damping_plateau(2.0, 2.0, Ramp::Sharp, &g).unwrap(),
            )
            .unwrap(),
        ),
        (
            "gaussian",
            CoefficientProfile::new(
                g,
                build_potential_gaussian(0.05, 0.02, &g).unwrap(),
                build_damping_plateau(1.0, 1.0, Ramp::Smooth, &g).unwrap(),
            )
            .unwrap(),
        ),
    ];
    let shapes = [
        (DataShape::Bump { radius: 3.0, center: 0.0 }, 1.0, 1.0),
        (DataShape::Bump { radius: 1.0, center: 2.0 }, 0.0, 1.0),
        (DataShape::Gaussian { width: 1.5, center: -1.0 }, 1.0, -0.5),
    ];
    let mut out = Vec::new();
    for (name, p) in &profiles {
        for (shape, a0, a1) in shapes {
            let cfg = RunConfig::new(p.clone(), InitialData::from_shape(&g, shape, a0, a1), 30.0);
            out.push((run(&cfg, None).unwrap(), format!("{name} {shape:?}")));
        }
    }
    out
}

fn main() {
    let (reference, reference_secs) = reference_run(6000, 50.0);
    let runs_start = Instant::now();
    let mut audited = audit_runs();
    let c10 = c10(&mut audited);
    let runs = Runs {
        reference,
        reference_secs,
        refined: reference_run(12000, 50.0).0,
        long: reference_run(6000, 200.0).0,
        longer: reference_run(6000, 400.0).0,
        doubled: reference_run(6000, 100.0).0,
        audited,
    };
    let setup = runs_start.elapsed().as_secs_f64();

    let results = [
        c1(&runs),
        c2(&runs),
        c3(&runs),
        c4(),
        c5(&runs),
        c6(&runs),
        c7(),
        c8(&runs),
        c9(),
        c10,
        c11(),
        c12(),
        c13(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("[{}] criterion {}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed (shared runs {setup:.1} s)",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
