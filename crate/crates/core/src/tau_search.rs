//! Minimization of the nodal error `E(τ)` over the stabilization parameter.
//!
//! The search is a golden-section bracketing on `log10 τ`. Probes whose
//! solve fails count as `+∞`, so the bracket moves away from them.

use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{build_mesh, build_space, FeSpace, Mesh, SupgSolver};
use crate::metrics::{nodal_error_of, values_at_dofs, ReferenceField};
use crate::problems::{reference_solution, ProblemId, ProblemSpec, REFERENCE_SUBDIVISIONS};
use crate::stabilization::tau_theory;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    /// Search interval `(lo, hi)` in `τ`.
    pub bracket: (f64, f64),
    /// Final bracket width in `log10 τ`.
    pub tol: f64,
    /// Maximum number of objective evaluations.
    pub budget: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            bracket: (1e-8, 1e2),
            tol: 1e-3,
            budget: 200,
        }
    }
}

impl SearchSettings {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::invalid(format!("invalid bracket ({lo}, {hi})")));
        }
        if !(self.tol > 1e-6 && self.tol < 1e-1) {
            return Err(Error::invalid(format!(
                "tolerance {} outside (1e-6, 1e-1)",
                self.tol
            )));
        }
        // both endpoints, two interior probes and the final midpoint
        if self.budget < 5 {
            return Err(Error::invalid("budget must allow at least 5 evaluations"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauOptResult {
    pub tau_star: f64,
    pub e_at_star: f64,
    pub evaluations: usize,
    /// Probes whose evaluation failed and were scored as `+∞`.
    pub failed_evaluations: usize,
    pub bracket: (f64, f64),
    /// Whether the bracket shrank below `tol` within the budget.
    pub converged: bool,
}

/// Golden-section search of `objective` over `log10 τ`.
///
/// The returned `τ*` is the midpoint of the final bracket, unless one of
/// the evaluated probes (the original endpoints included) scored strictly
/// lower, in which case that probe is returned.
pub fn golden_section_log10<F>(mut objective: F, settings: &SearchSettings) -> Result<TauOptResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    settings.validate()?;
    let mut probes = Probes {
        objective: &mut objective,
        evaluations: 0,
        failed: 0,
        best: (f64::NAN, f64::INFINITY),
    };

    let (lo, hi) = settings.bracket;
    let mut a = lo.log10();
    let mut b = hi.log10();
    probes.eval(a);
    probes.eval(b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = probes.eval(c);
    let mut fd = probes.eval(d);
    // one evaluation stays reserved for the midpoint
    while b - a > settings.tol && probes.evaluations + 2 <= settings.budget {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = probes.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = probes.eval(d);
        }
    }
    let converged = b - a <= settings.tol;
    let mid = 0.5 * (a + b);
    let e_mid = probes.eval(mid);

    let Probes {
        evaluations,
        failed,
        best,
        ..
    } = probes;
    if !best.1.is_finite() {
        return Err(Error::OptimizationFailure(format!(
            "all {evaluations} evaluations in ({lo:e}, {hi:e}) failed"
        )));
    }
    let (tau_star, e_at_star) = if e_mid <= best.1 {
        (10f64.powf(mid), e_mid)
    } else {
        best
    };
    Ok(TauOptResult {
        tau_star,
        e_at_star,
        evaluations,
        failed_evaluations: failed,
        bracket: settings.bracket,
        converged,
    })
}

struct Probes<'a, F> {
    objective: &'a mut F,
    evaluations: usize,
    failed: usize,
    /// Lowest `(τ, E)` seen so far.
    best: (f64, f64),
}

impl<F: FnMut(f64) -> Result<f64>> Probes<'_, F> {
    fn eval(&mut self, log_tau: f64) -> f64 {
        let tau = 10f64.powf(log_tau);
        self.evaluations += 1;
        let e = match (self.objective)(tau) {
            Ok(e) if e.is_finite() => e,
            Ok(e) => {
                warn!("E({tau:e}) = {e}; scored as +inf");
                self.failed += 1;
                f64::INFINITY
            }
            Err(err) => {
                warn!("E({tau:e}) failed: {err}; scored as +inf");
                self.failed += 1;
                f64::INFINITY
            }
        };
        if e < self.best.1 {
            self.best = (tau, e);
        }
        e
    }
}

/// `E(τ)` for one problem on one space: repeated SUPG solves sharing the
/// assembled operators, compared against fixed reference values at the dofs.
pub struct TauObjective {
    solver: SupgSolver,
    reference: Vec<f64>,
}

impl TauObjective {
    pub fn new(problem: &ProblemSpec, space: &Arc<FeSpace>, reference: &dyn ReferenceField) -> Result<Self> {
        let solver = SupgSolver::new(problem, space)?;
        let reference = values_at_dofs(space, reference)?;
        Ok(TauObjective { solver, reference })
    }

    /// Uses the closed-form exact solution, or fails for problems without one.
    pub fn with_exact(problem: &ProblemSpec, space: &Arc<FeSpace>) -> Result<Self> {
        let exact = problem.exact.as_ref().ok_or_else(|| {
            Error::UnsupportedMetric(format!("problem {} has no exact solution", problem.id))
        })?;
        Self::new(problem, space, exact)
    }

    pub fn solver(&self) -> &SupgSolver {
        &self.solver
    }

    pub fn reference_at_dofs(&self) -> &[f64] {
        &self.reference
    }

    pub fn eval(&self, tau: f64) -> Result<f64> {
        let sol = self.solver.solve(tau)?;
        nodal_error_of(sol.coefficients(), &self.reference)
    }

    pub fn minimize(&self, settings: &SearchSettings) -> Result<TauOptResult> {
        golden_section_log10(|tau| self.eval(tau), settings)
    }
}

/// Optimal `τ` of `problem` with degree-`r` elements on `mesh`, against
/// the exact solution.
pub fn find_optimal_tau(
    problem: &ProblemSpec,
    mesh: &Arc<Mesh>,
    r: usize,
    settings: &SearchSettings,
) -> Result<TauOptResult> {
    let space = build_space(mesh.clone(), r)?;
    TauObjective::with_exact(problem, &space)?.minimize(settings)
}

/// One configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub problem: ProblemId,
    pub r: usize,
    /// Mesh subdivisions per axis.
    pub n: usize,
    pub mu: f64,
    pub theta: Option<f64>,
}

impl SweepPoint {
    pub fn h(&self) -> f64 {
        mesh_size(self.problem.dim(), self.n)
    }
}

/// Element size of the structured meshes: `1/n` in 1D, `√2/n` in 2D.
pub fn mesh_size(dim: usize, n: usize) -> f64 {
    if dim == 1 {
        1.0 / n as f64
    } else {
        std::f64::consts::SQRT_2 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub tau_theory: f64,
    /// `E(τ̃_r)`
    pub e_theory: f64,
    pub result: std::result::Result<TauOptResult, String>,
}

/// Runs every configuration, in parallel, returning rows in input order.
/// Failures are recorded per row.
pub fn sweep_optimal_tau(points: &[SweepPoint], settings: &SearchSettings) -> Vec<SweepRow> {
    points
        .par_iter()
        .map(|&point| {
            let run = || -> Result<(f64, f64, TauOptResult)> {
                let problem = point.problem.build(point.mu, point.theta)?;
                let mesh = build_mesh(point.problem.dim(), point.n)?;
                let space = build_space(mesh, point.r)?;
                let objective = match &problem.exact {
                    Some(exact) => TauObjective::new(&problem, &space, exact)?,
                    None => {
                        let reference = reference_solution(&problem, REFERENCE_SUBDIVISIONS)?;
                        TauObjective::new(&problem, &space, &reference)?
                    }
                };
                let tau_t = tau_theory(problem.beta_norm(), point.h(), problem.mu, point.r)?;
                let e_t = objective.eval(tau_t).unwrap_or(f64::INFINITY);
                Ok((tau_t, e_t, objective.minimize(settings)?))
            };
            match run() {
                Ok((tau_theory, e_theory, res)) => SweepRow {
                    point,
                    tau_theory,
                    e_theory,
                    result: Ok(res),
                },
                Err(e) => {
                    warn!("sweep point {point:?} failed: {e}");
                    SweepRow {
                        point,
                        tau_theory: f64::NAN,
                        e_theory: f64::NAN,
                        result: Err(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

/// `count` points spaced evenly in `log10` over `[lo, hi]`, endpoints
/// included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
                    }
                })
                .collect()
        }
    }
}
