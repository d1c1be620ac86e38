mod common;

use common::{continuum_c_star, dense_c_star};
use dampwave::spectral::*;
use dampwave::Grid;

fn problem(l: f64, half_width: f64, nodes: usize) -> PoincareProblem {
    PoincareProblem::new(Grid::with_nodes(-half_width, half_width, nodes).unwrap(), l).unwrap()
}

#[test]
fn iterative_matches_dense_oracle() {
    for (l, hw) in [(1.0, 20.0), (0.5, 16.0), (2.0, 24.0)] {
        let p = problem(l, hw, 512);
        let est = estimate_c_star(&p, 1e-12).unwrap();
        let oracle = dense_c_star(&p);
        let rel = (est.c_star - oracle).abs() / oracle;
        assert!(rel < 1e-6, "L = {l}: {} vs {oracle}", est.c_star);
    }
}

#[test]
fn minimizer_attains_the_constant() {
    let p = problem(1.0, 20.0, 512);
    let est = estimate_c_star(&p, 1e-12).unwrap();
    assert!((p.poincare_ratio(&est.minimizer) / est.c_star - 1.0).abs() < 1e-10);
    assert!(est.minimizer.iter().all(|&w| w >= 0.0));
    let i0 = p.grid.nearest(0.0);
    assert!((est.minimizer[i0] - 1.0).abs() < 1e-12);
}

#[test]
fn random_samples_respect_the_bound() {
    let p = problem(1.0, 20.0, 512);
    let est = estimate_c_star(&p, 1e-12).unwrap();
    let rep = verify_poincare_on_samples(&p, &est, 1000, 11);
    assert!(rep.ok(), "{rep:?}");
    assert!(rep.max_ratio > 0.5 * est.c_star);
}

#[test]
fn converges_to_continuum_at_second_order() {
    let exact = continuum_c_star(1.0);
    let errs: Vec<f64> = [1001usize, 2001, 4001]
        .iter()
        .map(|&n| (c_star_for(1.0, 25.0, n, 1e-10).unwrap().c_star - exact).abs())
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "{errs:?}");
    }
}

#[test]
fn continuum_constant_for_unit_radius() {
    assert!((continuum_c_star(1.0) - 1.3510).abs() < 1e-4);
}

#[test]
fn truncated_minimizer_is_flagged() {
    match c_star_for(1.0, 3.0, 512, 1e-10) {
        Err(dampwave::Error::Domain(_)) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_radius_is_rejected() {
    let g = Grid::with_nodes(-5.0, 5.0, 101).unwrap();
    assert!(PoincareProblem::new(g, 0.0).is_err());
    assert!(PoincareProblem::new(g, 6.0).is_err());
    assert!(estimate_c_star(&PoincareProblem::new(g, 1.0).unwrap(), 0.0).is_err());
}
