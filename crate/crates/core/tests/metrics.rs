use supgnet::evaluation::NORM_TABLE_CASES;
use supgnet::fem::{build_mesh, build_space, SupgSolver};
use supgnet::metrics::{default_norm_degree, norms};
use supgnet::problems::{make_1d_validation, ProblemId};
use supgnet::stabilization::{mu_from_local_peclet, tau_theory};
use supgnet::tau_search::{log_grid, mesh_size, TauObjective};

/// Indices of strict local minima of `e`, endpoints included.
fn strict_local_minima(e: &[f64]) -> Vec<usize> {
    (0..e.len())
        .filter(|&i| {
            let left = i == 0 || e[i] < e[i - 1];
            let right = i + 1 == e.len() || e[i] < e[i + 1];
            left && right
        })
        .collect()
}

#[test]
fn nodal_error_has_a_single_minimum_in_tau() {
    let h = 1.0 / 20.0;
    let mu = mu_from_local_peclet(1.0, h, 12.5).unwrap();
    let problem = make_1d_validation(mu, 1.0).unwrap();
    for r in [1, 3] {
        let space = build_space(build_mesh(1, 20).unwrap(), r).unwrap();
        let objective = TauObjective::with_exact(&problem, &space).unwrap();
        let e: Vec<f64> = log_grid(1e-6, 1.0, 60)
            .into_iter()
            .map(|t| objective.eval(t).unwrap())
            .collect();
        let minima = strict_local_minima(&e);
        assert_eq!(minima.len(), 1, "r = {r}: minima at {minima:?} of {e:?}");
    }
}

#[test]
fn norms_are_stable_under_quadrature_refinement() {
    let problem_id = ProblemId::Training2d;
    let beta = problem_id.advection_norm();
    for &(r, n, pe_h) in &NORM_TABLE_CASES {
        let h = mesh_size(2, n);
        let mu = mu_from_local_peclet(beta, h, pe_h).unwrap();
        let problem = problem_id.build(mu, None).unwrap();
        let space = build_space(build_mesh(2, n).unwrap(), r).unwrap();
        let tau = tau_theory(beta, h, mu, r).unwrap();
        let sol = SupgSolver::new(&problem, &space).unwrap().solve(tau).unwrap();
        let exact = problem.exact.as_ref().unwrap();
        let q = default_norm_degree(r);
        let a = norms(&sol, exact, q).unwrap();
        let b = norms(&sol, exact, q + 2).unwrap();
        assert!((a.l2 - b.l2).abs() <= 1e-3 * b.l2, "r {r} n {n}: l2 {} vs {}", a.l2, b.l2);
        assert!((a.h1 - b.h1).abs() <= 1e-3 * b.h1, "r {r} n {n}: h1 {} vs {}", a.h1, b.h1);
    }
}
