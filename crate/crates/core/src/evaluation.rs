//! Comparison of the theoretical, network-predicted and optimal
//! stabilization parameters on the benchmark problems.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{build_mesh, build_space, DiscreteSolution};
use crate::metrics::{default_norm_degree, extract_line, fmt_f64, norms, ReferenceField, Segment};
use crate::mlp::MlpModel;
use crate::problems::{reference_solution, ProblemId, ProblemSpec, REFERENCE_SUBDIVISIONS};
use crate::stabilization::{mu_from_global_peclet, mu_from_local_peclet, peclet, tau_theory};
use crate::tau_search::{log_grid, mesh_size, SearchSettings, TauObjective};

/// Fine-grid reference solutions of problems without a closed form, keyed
/// by problem and diffusion coefficient.
#[derive(Default)]
pub struct ReferenceCache {
    solutions: Mutex<HashMap<(ProblemId, u64, Option<u64>), Arc<DiscreteSolution>>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, problem: &ProblemSpec) -> Result<Arc<DiscreteSolution>> {
        let key = (problem.id, problem.mu.to_bits(), problem.theta.map(f64::to_bits));
        if let Some(s) = self.solutions.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let sol = Arc::new(reference_solution(problem, REFERENCE_SUBDIVISIONS)?);
        self.solutions
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert(sol.clone());
        Ok(sol)
    }
}

/// The field `problem` is measured against: its exact solution, or the
/// cached fine-grid reference.
pub fn reference_for(
    problem: &ProblemSpec,
    cache: &ReferenceCache,
) -> Result<Box<dyn ReferenceField + Send + Sync>> {
    Ok(match &problem.exact {
        Some(e) => Box::new(e.clone()),
        None => Box::new(cache.get(problem)?.as_ref().clone()),
    })
}

/// `E(τ)` at the theoretical, predicted and optimal parameters of one
/// configuration. Missing entries are `NaN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub problem: ProblemId,
    pub r: usize,
    pub n: usize,
    pub h: f64,
    pub mu: f64,
    pub pe_h: f64,
    pub pe_g: f64,
    pub theta: Option<f64>,
    pub tau_theory: f64,
    pub e_theory: f64,
    pub tau_ann: f64,
    pub e_ann: f64,
    pub tau_star: f64,
    pub e_star: f64,
}

impl Comparison {
    pub const CSV_HEADER: &'static str =
        "problem,r,h,mu,pe_h,pe_g,theta,tau_theory,e_theory,tau_ann,e_ann,tau_star,e_star";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.r,
            fmt_f64(self.h),
            fmt_f64(self.mu),
            fmt_f64(self.pe_h),
            fmt_f64(self.pe_g),
            self.theta.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.tau_theory),
            fmt_f64(self.e_theory),
            fmt_f64(self.tau_ann),
            fmt_f64(self.e_ann),
            fmt_f64(self.tau_star),
            fmt_f64(self.e_star)
        )
    }

    /// Column layout of the advection-angle study.
    pub const THETA_CSV_HEADER: &'static str = "theta,tau_star,tau_theory,tau_ann,e_star,e_theory,e_ann";

    pub fn theta_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(self.theta.unwrap_or(std::f64::consts::FRAC_PI_4)),
            fmt_f64(self.tau_star),
            fmt_f64(self.tau_theory),
            fmt_f64(self.tau_ann),
            fmt_f64(self.e_star),
            fmt_f64(self.e_theory),
            fmt_f64(self.e_ann)
        )
    }
}

/// One configuration to compare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparePoint {
    pub problem: ProblemId,
    pub r: usize,
    pub n: usize,
    pub mu: f64,
    pub theta: Option<f64>,
}

pub fn compare(
    point: ComparePoint,
    model: Option<&MlpModel>,
    search: Option<&SearchSettings>,
    cache: &ReferenceCache,
) -> Result<Comparison> {
    let problem = point.problem.build(point.mu, point.theta)?;
    let dim = point.problem.dim();
    let h = mesh_size(dim, point.n);
    let space = build_space(build_mesh(dim, point.n)?, point.r)?;
    let reference = reference_for(&problem, cache)?;
    let objective = TauObjective::new(&problem, &space, reference.as_ref())?;
    let beta = problem.beta_norm();
    let pe = peclet(beta, h, problem.char_length, problem.mu)?;
    let tau_t = tau_theory(beta, h, problem.mu, point.r)?;
    let e_t = objective.eval(tau_t)?;
    let (tau_ann, e_ann) = match model {
        Some(m) => {
            let t = m.predict_tau(point.r, h, pe.global)?;
            (t, objective.eval(t)?)
        }
        None => (f64::NAN, f64::NAN),
    };
    let (tau_star, e_star) = match search {
        Some(s) => {
            let res = objective.minimize(s)?;
            (res.tau_star, res.e_at_star)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(Comparison {
        problem: point.problem,
        r: point.r,
        n: point.n,
        h,
        mu: problem.mu,
        pe_h: pe.local,
        pe_g: pe.global,
        theta: point.theta,
        tau_theory: tau_t,
        e_theory: e_t,
        tau_ann,
        e_ann,
        tau_star,
        e_star,
    })
}

/// Runs [`compare`] over `points` in parallel; results keep input order.
pub fn compare_all(
    points: &[ComparePoint],
    model: Option<&MlpModel>,
    search: Option<&SearchSettings>,
    cache: &ReferenceCache,
) -> Result<Vec<Comparison>> {
    points
        .par_iter()
        .map(|&p| compare(p, model, search, cache))
        .collect()
}

/// `count` log-spaced global Péclet numbers over `[7, 70710]`.
pub fn default_pe_grid(count: usize) -> Vec<f64> {
    log_grid(7.0, 70710.0, count)
}

/// Configurations of an `E(τ)`-versus-`Pe_g` sweep.
pub fn pe_sweep_points(problem: ProblemId, n_list: &[usize], r_list: &[usize], pe_grid: &[f64]) -> Vec<ComparePoint> {
    let beta = problem.advection_norm();
    let mut out = Vec::new();
    for &n in n_list {
        for &r in r_list {
            for &pe_g in pe_grid {
                out.push(ComparePoint {
                    problem,
                    r,
                    n,
                    mu: mu_from_global_peclet(beta, 1.0, pe_g).expect("positive Péclet"),
                    theta: None,
                });
            }
        }
    }
    out
}

/// Norm comparison of one Test 1 configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub r: usize,
    pub n: usize,
    pub h: f64,
    pub pe_h: f64,
    pub tau_theory: f64,
    pub l2_theory: f64,
    pub h1_theory: f64,
    pub tau_ann: f64,
    pub l2_ann: f64,
    pub h1_ann: f64,
}

impl NormRow {
    pub const CSV_HEADER: &'static str = "r,h,pe_h,tau_theory,l2_theory,h1_theory,tau_ann,l2_ann,h1_ann";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.r,
            fmt_f64(self.h),
            fmt_f64(self.pe_h),
            fmt_f64(self.tau_theory),
            fmt_f64(self.l2_theory),
            fmt_f64(self.h1_theory),
            fmt_f64(self.tau_ann),
            fmt_f64(self.l2_ann),
            fmt_f64(self.h1_ann)
        )
    }
}

/// `(r, n, Pe_h)` of the norm table on the training problem.
pub const NORM_TABLE_CASES: [(usize, usize, f64); 6] = [
    (1, 10, 2.0),
    (2, 10, 2.0),
    (3, 10, 2.0),
    (1, 20, 500.0),
    (2, 20, 500.0),
    (3, 20, 500.0),
];

/// L² and H¹ errors on the training problem at local Péclet `pe_h`.
pub fn norm_row(r: usize, n: usize, pe_h: f64, model: Option<&MlpModel>) -> Result<NormRow> {
    let problem_id = ProblemId::Training2d;
    let beta = problem_id.advection_norm();
    let h = mesh_size(2, n);
    let mu = mu_from_local_peclet(beta, h, pe_h)?;
    let problem = problem_id.build(mu, None)?;
    let exact = problem.exact.clone().expect("training problem has an exact solution");
    let space = build_space(build_mesh(2, n)?, r)?;
    let solver = crate::fem::SupgSolver::new(&problem, &space)?;
    let q = default_norm_degree(r);
    let tau_t = tau_theory(beta, h, mu, r)?;
    let nt = norms(&solver.solve(tau_t)?, &exact, q)?;
    let (tau_ann, l2_ann, h1_ann) = match model {
        Some(m) => {
            let pe_g = peclet(beta, h, 1.0, mu)?.global;
            let t = m.predict_tau(r, h, pe_g)?;
            let na = norms(&solver.solve(t)?, &exact, q)?;
            (t, na.l2, na.h1)
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    Ok(NormRow {
        r,
        n,
        h,
        pe_h,
        tau_theory: tau_t,
        l2_theory: nt.l2,
        h1_theory: nt.h1,
        tau_ann,
        l2_ann,
        h1_ann,
    })
}

pub fn norm_table(model: Option<&MlpModel>) -> Result<Vec<NormRow>> {
    NORM_TABLE_CASES
        .par_iter()
        .map(|&(r, n, pe)| norm_row(r, n, pe, model))
        .collect()
}

/// Reference and discrete solutions sampled along one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineComparison {
    pub coordinate: Vec<f64>,
    pub reference: Vec<f64>,
    /// `(label, values)` per stabilization parameter.
    pub solutions: Vec<(String, Vec<f64>)>,
}

impl LineComparison {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("coordinate,reference");
        for (label, _) in &self.solutions {
            s.push(',');
            s.push_str(label);
        }
        s.push('\n');
        for i in 0..self.coordinate.len() {
            s.push_str(&fmt_f64(self.coordinate[i]));
            s.push(',');
            s.push_str(&fmt_f64(self.reference[i]));
            for (_, v) in &self.solutions {
                s.push(',');
                s.push_str(&fmt_f64(v[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Samples the reference and the SUPG solutions at each labelled `τ`
/// along `line`.
pub fn line_comparison(
    point: ComparePoint,
    taus: &[(&str, f64)],
    line: Segment,
    samples: usize,
    cache: &ReferenceCache,
) -> Result<LineComparison> {
    let problem = point.problem.build(point.mu, point.theta)?;
    let space = build_space(build_mesh(point.problem.dim(), point.n)?, point.r)?;
    let solver = crate::fem::SupgSolver::new(&problem, &space)?;
    let reference = reference_for(&problem, cache)?;
    let mut solutions = Vec::with_capacity(taus.len());
    let mut coordinate = Vec::new();
    let mut points = Vec::new();
    for (label, tau) in taus {
        let sol = solver.solve(*tau)?;
        let line = extract_line(&sol, line, samples)?;
        if coordinate.is_empty() {
            coordinate = line.iter().map(|s| s.coordinate).collect();
            points = line.iter().map(|s| s.point).collect();
        }
        solutions.push((label.to_string(), line.iter().map(|s| s.value).collect()));
    }
    if points.is_empty() {
        return Err(Error::invalid("no stabilization parameters to compare"));
    }
    let reference = points
        .iter()
        .map(|&p| reference.value(p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(LineComparison {
        coordinate,
        reference,
        solutions,
    })
}

/// Advection angles of the direction study, `π/12 .. π/2` in steps of
/// `π/12`.
pub fn default_theta_grid() -> Vec<f64> {
    (1..=6).map(|k| k as f64 * std::f64::consts::PI / 12.0).collect()
}

/// Configurations of the direction study on the forced problem.
pub fn theta_points(n: usize, r: usize, pe_g: f64, thetas: &[f64]) -> Vec<ComparePoint> {
    let problem = ProblemId::ConstantForcing2d;
    let mu = mu_from_global_peclet(problem.advection_norm(), 1.0, pe_g).expect("positive Péclet");
    thetas
        .iter()
        .map(|&t| ComparePoint {
            problem,
            r,
            n,
            mu,
            theta: Some(t),
        })
        .collect()
}

/// Network predictions and theoretical values over a grid of features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub r: usize,
    pub h: f64,
    pub pe_g: f64,
    pub tau_ann: f64,
    pub tau_theory: f64,
}

impl PredictionRow {
    pub const CSV_HEADER: &'static str = "r,h,pe_g,tau_ann,tau_theory";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.r,
            fmt_f64(self.h),
            fmt_f64(self.pe_g),
            fmt_f64(self.tau_ann),
            fmt_f64(self.tau_theory)
        )
    }
}

/// Predictions for the training problem family (`|β| = √2`, `L = 1`).
pub fn predict_row(model: &MlpModel, r: usize, h: f64, pe_g: f64) -> Result<PredictionRow> {
    let beta = ProblemId::Training2d.advection_norm();
    let mu = mu_from_global_peclet(beta, 1.0, pe_g)?;
    Ok(PredictionRow {
        r,
        h,
        pe_g,
        tau_ann: model.predict_tau(r, h, pe_g)?,
        tau_theory: tau_theory(beta, h, mu, r)?,
    })
}

pub fn prediction_grid(model: &MlpModel, r_list: &[usize], h_list: &[f64], pe_grid: &[f64]) -> Result<Vec<PredictionRow>> {
    let mut rows = Vec::new();
    for &r in r_list {
        for &h in h_list {
            for &pe in pe_grid {
                rows.push(predict_row(model, r, h, pe)?);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_spans_the_study() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 6);
        assert!((g[0] - std::f64::consts::PI / 12.0).abs() < 1e-15);
        assert!((g[5] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn comparison_without_model_or_search() {
        let point = ComparePoint {
            problem: ProblemId::ConstantForcing2d,
            r: 1,
            n: 8,
            mu: 0.01,
            theta: None,
        };
        let c = compare(point, None, None, &ReferenceCache::new()).unwrap();
        assert!(c.e_theory.is_finite() && c.e_theory >= 0.0);
        assert!(c.e_ann.is_nan() && c.tau_star.is_nan());
        assert_eq!(c.csv_row().split(',').count(), Comparison::CSV_HEADER.split(',').count());
    }

    #[test]
    fn pe_sweep_layout() {
        let pts = pe_sweep_points(ProblemId::Atan2d, &[10, 20], &[1, 2, 3], &default_pe_grid(4));
        assert_eq!(pts.len(), 24);
        assert_eq!((pts[0].n, pts[0].r), (10, 1));
        assert_eq!((pts[23].n, pts[23].r), (20, 3));
    }
}
