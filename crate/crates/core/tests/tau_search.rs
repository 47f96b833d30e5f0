use std::f64::consts::{FRAC_PI_4, SQRT_2};

use supgnet::evaluation::default_theta_grid;
use supgnet::fem::build_mesh;
use supgnet::problems::{make_1d_validation, ProblemId};
use supgnet::stabilization::{mu_from_global_peclet, mu_from_local_peclet, tau_theory};
use supgnet::tau_search::{find_optimal_tau, sweep_optimal_tau, SearchSettings, SweepPoint};

fn validation_point(pe_h: f64) -> (supgnet::problems::ProblemSpec, f64) {
    let mu = mu_from_local_peclet(1.0, 0.05, pe_h).unwrap();
    (make_1d_validation(mu, 1.0).unwrap(), mu)
}

#[test]
fn linear_optimum_matches_theory_on_a_coarse_sweep() {
    let mesh = build_mesh(1, 20).unwrap();
    let settings = SearchSettings::default();
    for pe_h in [1.0, 10.0, 100.0, 250.0] {
        let (problem, mu) = validation_point(pe_h);
        let res = find_optimal_tau(&problem, &mesh, 1, &settings).unwrap();
        let theory = tau_theory(1.0, 0.05, mu, 1).unwrap();
        assert!(
            (res.tau_star - theory).abs() <= 0.02 * theory,
            "Pe_h {pe_h}: {} vs {theory}",
            res.tau_star
        );
    }
}

#[test]
fn narrower_bracket_example() {
    let mesh = build_mesh(1, 20).unwrap();
    let (problem, _) = validation_point(12.5);
    let settings = SearchSettings {
        bracket: (1e-6, 1.0),
        ..SearchSettings::default()
    };
    let res = find_optimal_tau(&problem, &mesh, 1, &settings).unwrap();
    assert!((res.tau_star - 0.0230).abs() <= 0.02 * 0.0230);
}

#[test]
fn widening_the_bracket_keeps_the_optimum() {
    let mesh = build_mesh(1, 20).unwrap();
    for (pe_h, r) in [(12.5, 1), (12.5, 3), (80.0, 2)] {
        let (problem, _) = validation_point(pe_h);
        let base = SearchSettings::default();
        let wide = SearchSettings {
            bracket: (base.bracket.0 / 10.0, base.bracket.1 * 10.0),
            ..base
        };
        let a = find_optimal_tau(&problem, &mesh, r, &base).unwrap();
        let b = find_optimal_tau(&problem, &mesh, r, &wide).unwrap();
        let shift = (a.tau_star.log10() - b.tau_star.log10()).abs();
        assert!(shift <= base.tol, "Pe_h {pe_h} r {r}: log10 shift {shift}");
    }
}

#[test]
fn identical_inputs_give_identical_results() {
    let mesh = build_mesh(2, 10).unwrap();
    let mu = mu_from_global_peclet(SQRT_2, 1.0, 700.0).unwrap();
    let problem = ProblemId::Training2d.build(mu, None).unwrap();
    let settings = SearchSettings::default();
    let a = find_optimal_tau(&problem, &mesh, 2, &settings).unwrap();
    let b = find_optimal_tau(&problem, &mesh, 2, &settings).unwrap();
    assert_eq!(a, b);
}

fn theta_sweep(thetas: &[Option<f64>]) -> Vec<f64> {
    let mu = mu_from_global_peclet(SQRT_2, 1.0, 7071.0).unwrap();
    let points: Vec<SweepPoint> = thetas
        .iter()
        .map(|&theta| SweepPoint {
            problem: ProblemId::ConstantForcing2d,
            r: 3,
            n: 20,
            mu,
            theta,
        })
        .collect();
    sweep_optimal_tau(&points, &SearchSettings::default())
        .into_iter()
        .map(|row| row.result.unwrap().tau_star)
        .collect()
}

#[test]
fn quarter_pi_reproduces_the_unrotated_problem() {
    let taus = theta_sweep(&[None, Some(FRAC_PI_4)]);
    assert_eq!(taus[0].to_bits(), taus[1].to_bits());
}

#[test]
fn optimal_tau_depends_on_the_advection_angle() {
    let thetas: Vec<Option<f64>> = default_theta_grid().into_iter().map(Some).collect();
    let taus = theta_sweep(&thetas);
    let lo = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().cloned().fold(0.0, f64::max);
    assert!(hi > 1.05 * lo, "{taus:?}");
}

#[test]
fn sweep_rows_keep_input_order_and_record_failures() {
    let mu = mu_from_local_peclet(1.0, 0.05, 12.5).unwrap();
    let points = vec![
        SweepPoint { problem: ProblemId::Validation1d, r: 1, n: 20, mu, theta: None },
        SweepPoint { problem: ProblemId::Validation1d, r: 9, n: 20, mu, theta: None },
        SweepPoint { problem: ProblemId::Validation1d, r: 2, n: 20, mu, theta: None },
    ];
    let rows = sweep_optimal_tau(&points, &SearchSettings::default());
    assert_eq!(rows.len(), 3);
    assert!(rows[0].result.is_ok() && rows[2].result.is_ok());
    assert!(rows[1].result.is_err());
    assert_eq!(rows[2].point.r, 2);
}
