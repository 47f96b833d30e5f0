use std::sync::Arc;

use supgnet::fem::{build_mesh, build_space, solve, solve_supg, DiscreteSolution, SupgOperator};
use supgnet::metrics::{nodal_error, values_at_dofs};
use supgnet::problems::{make_1d_validation, Advection, ExactSolution, ProblemId, ProblemSpec};
use supgnet::stabilization::{mu_from_local_peclet, tau_theory};

/// Problem whose exact solution is `p(s)` with `s = c + x + a y`, for a
/// polynomial `p` given by its value, first and second derivatives.
fn polynomial_problem(
    dim: usize,
    mu: f64,
    beta: [f64; 2],
    degree: i32,
) -> ProblemSpec {
    let a = if dim == 1 { 0.0 } else { 0.5 };
    let s = move |x: [f64; 2]| 0.3 + x[0] + a * x[1];
    let r = degree as f64;
    let p = move |x: [f64; 2]| s(x).powi(degree);
    let dp = move |x: [f64; 2]| r * s(x).powi(degree - 1);
    let ddp = move |x: [f64; 2]| if degree >= 2 { r * (r - 1.0) * s(x).powi(degree - 2) } else { 0.0 };
    let beta = if dim == 1 { [beta[0], 0.0] } else { beta };
    let forcing = move |x: [f64; 2]| {
        let lap = ddp(x) * (1.0 + a * a);
        -mu * lap + dp(x) * (beta[0] + a * beta[1])
    };
    ProblemSpec {
        id: if dim == 1 { ProblemId::Validation1d } else { ProblemId::Training2d },
        dim,
        mu,
        advection: Advection::Uniform(beta),
        forcing: Arc::new(forcing),
        dirichlet: Arc::new(p),
        exact: Some(ExactSolution {
            value: Arc::new(p),
            gradient: Some(Arc::new(move |x| [dp(x), a * dp(x)])),
        }),
        char_length: 1.0,
        theta: None,
    }
}

fn max_nodal_error(problem: &ProblemSpec, sol: &DiscreteSolution) -> f64 {
    let exact = problem.exact.as_ref().unwrap();
    sol.space()
        .dof_coords()
        .iter()
        .zip(sol.coefficients())
        .map(|(&x, &u)| (u - (exact.value)(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn galerkin_reproduces_polynomials_of_the_space_degree() {
    for dim in [1, 2] {
        for r in 1..=4 {
            let n = if dim == 1 { 5 } else { 3 };
            let space = build_space(build_mesh(dim, n).unwrap(), r).unwrap();
            for (mu, beta) in [(1.0, [0.0, 0.0]), (0.05, [1.0, 0.7])] {
                let problem = polynomial_problem(dim, mu, beta, r as i32);
                let sol = solve_supg(&problem, &space, 0.0).unwrap();
                let err = max_nodal_error(&problem, &sol);
                assert!(err <= 1e-9, "dim {dim} r {r} mu {mu}: error {err:e}");
            }
        }
    }
}

#[test]
fn supg_is_consistent_for_polynomial_solutions() {
    // The residual vanishes on the exact solution only if the diffusive
    // part of the strong residual is included for r >= 2.
    for dim in [1, 2] {
        for r in 1..=4 {
            let space = build_space(build_mesh(dim, 4).unwrap(), r).unwrap();
            let problem = polynomial_problem(dim, 0.01, [1.0, 1.0], r as i32);
            let sol = solve_supg(&problem, &space, 0.05).unwrap();
            let err = max_nodal_error(&problem, &sol);
            assert!(err <= 1e-9, "dim {dim} r {r}: error {err:e}");
        }
    }
}

#[test]
fn theoretical_tau_is_nodally_exact_in_1d() {
    let h = 1.0 / 20.0;
    let space = build_space(build_mesh(1, 20).unwrap(), 1).unwrap();
    for pe_h in [2.5, 12.5, 125.0] {
        let mu = mu_from_local_peclet(1.0, h, pe_h).unwrap();
        let problem = make_1d_validation(mu, 1.0).unwrap();
        let tau = tau_theory(1.0, h, mu, 1).unwrap();
        let sol = solve_supg(&problem, &space, tau).unwrap();
        let exact = values_at_dofs(&space, problem.exact.as_ref().unwrap()).unwrap();
        let e = nodal_error(&sol, &exact).unwrap();
        assert!(e <= 1e-8, "Pe_h {pe_h}: E = {e:e}");
    }
}

#[test]
fn unstabilized_galerkin_oscillates() {
    let h = 1.0 / 20.0;
    let space = build_space(build_mesh(1, 20).unwrap(), 1).unwrap();
    let mu = mu_from_local_peclet(1.0, h, 12.5).unwrap();
    let problem = make_1d_validation(mu, 1.0).unwrap();
    let sol = solve_supg(&problem, &space, 0.0).unwrap();
    let exact = values_at_dofs(&space, problem.exact.as_ref().unwrap()).unwrap();
    let errors: Vec<f64> = sol.coefficients().iter().zip(&exact).map(|(u, e)| u - e).collect();
    assert!(errors.iter().map(|e| e.abs()).fold(0.0, f64::max) > 0.1);
    let sign_changes = errors
        .windows(2)
        .filter(|w| w[0].abs() > 1e-3 && w[1].abs() > 1e-3 && w[0] * w[1] < 0.0)
        .count();
    assert!(sign_changes >= 2, "{errors:?}");
}

#[test]
fn pure_diffusion_parabola() {
    // -u'' = 2, u(0) = u(1) = 0 has u = x (1 - x); linear elements are
    // nodally exact in 1D.
    let problem = ProblemSpec {
        id: ProblemId::Validation1d,
        dim: 1,
        mu: 1.0,
        advection: Advection::Uniform([0.0, 0.0]),
        forcing: Arc::new(|_| 2.0),
        dirichlet: Arc::new(|_| 0.0),
        exact: None,
        char_length: 1.0,
        theta: None,
    };
    let space = build_space(build_mesh(1, 20).unwrap(), 1).unwrap();
    let sol = solve_supg(&problem, &space, 0.0).unwrap();
    for (&x, &u) in space.dof_coords().iter().zip(sol.coefficients()) {
        assert!((u - x[0] * (1.0 - x[0])).abs() <= 1e-10);
    }
}

#[test]
fn pure_diffusion_interior_block_is_symmetric() {
    for dim in [1, 2] {
        for r in 1..=3 {
            let problem = polynomial_problem(dim, 1.0, [0.0, 0.0], 1);
            let space = build_space(build_mesh(dim, 4).unwrap(), r).unwrap();
            let op = SupgOperator::assemble(&problem, &space).unwrap();
            let a = op.galerkin();
            let boundary = space.boundary_dof_flags();
            let mut worst: f64 = 0.0;
            for i in (0..a.n()).filter(|&i| !boundary[i]) {
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    if !boundary[j] {
                        worst = worst.max((v - a.get(j, i)).abs());
                    }
                }
            }
            assert!(worst <= 1e-12, "dim {dim} r {r}: {worst:e}");
        }
    }
}

#[test]
fn operator_split_matches_direct_assembly() {
    let problem = polynomial_problem(2, 0.01, [1.0, 1.0], 2);
    let space = build_space(build_mesh(2, 4).unwrap(), 2).unwrap();
    let op = SupgOperator::assemble(&problem, &space).unwrap();
    let tau = 0.037;
    let direct = supgnet::fem::assemble_supg(&problem, &space, tau).unwrap();
    let split = op.system(tau);
    let a = solve(&direct).unwrap();
    let b = solve(&split).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn evaluation_examples() {
    let space = build_space(build_mesh(1, 1).unwrap(), 2).unwrap();
    let sol = DiscreteSolution::interpolate(space, |x| x[0] * x[0]);
    assert!((sol.evaluate([0.5, 0.0]).unwrap() - 0.25).abs() <= 1e-12);

    let space = build_space(build_mesh(2, 3).unwrap(), 3).unwrap();
    let constant = DiscreteSolution::interpolate(space.clone(), |_| 1.75);
    for p in [[0.0, 0.0], [0.31, 0.77], [1.0, 0.5], [0.999, 0.001]] {
        assert!((constant.evaluate(p).unwrap() - 1.75).abs() <= 1e-12);
    }
    let field = DiscreteSolution::interpolate(space.clone(), |x| (3.0 * x[0]).sin() + x[1]);
    for (k, &x) in space.dof_coords().iter().enumerate() {
        assert!((field.evaluate(x).unwrap() - field.coefficients()[k]).abs() <= 1e-12);
    }
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let problem = ProblemId::Atan2d.build(1e-3, None).unwrap();
    let space = build_space(build_mesh(2, 10).unwrap(), 2).unwrap();
    let a = solve_supg(&problem, &space, 1e-2).unwrap();
    let b = solve_supg(&problem, &space, 1e-2).unwrap();
    assert_eq!(a.coefficients(), b.coefficients());
}
