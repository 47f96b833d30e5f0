//! Error functionals: the nodal sum `E(τ)`, L² and H¹ norms by quadrature,
//! and sampling along axis-aligned lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::element::Tabulation;
use crate::fem::quadrature::QuadratureRule;
use crate::fem::{DiscreteSolution, FeSpace};
use crate::problems::{ExactSolution, ProblemSpec};
use crate::stabilization::peclet;

/// A field the discrete solution is compared against: a closed-form exact
/// solution or a reference finite-element solution.
pub trait ReferenceField: Sync {
    fn value(&self, x: [f64; 2]) -> Result<f64>;

    /// `None` when no gradient is available.
    fn value_and_gradient(&self, x: [f64; 2]) -> Result<(f64, Option<[f64; 2]>)>;
}

impl ReferenceField for ExactSolution {
    fn value(&self, x: [f64; 2]) -> Result<f64> {
        Ok((self.value)(x))
    }

    fn value_and_gradient(&self, x: [f64; 2]) -> Result<(f64, Option<[f64; 2]>)> {
        Ok(((self.value)(x), self.gradient.as_ref().map(|g| g(x))))
    }
}

impl ReferenceField for DiscreteSolution {
    fn value(&self, x: [f64; 2]) -> Result<f64> {
        self.evaluate(x)
    }

    fn value_and_gradient(&self, x: [f64; 2]) -> Result<(f64, Option<[f64; 2]>)> {
        let (v, g) = self.evaluate_with_gradient(x)?;
        Ok((v, Some(g)))
    }
}

/// Reference values at every dof of `space`.
pub fn values_at_dofs(space: &FeSpace, field: &dyn ReferenceField) -> Result<Vec<f64>> {
    space.dof_coords().iter().map(|&x| field.value(x)).collect()
}

/// `E = Σ_k |u_h(x_k) - u(x_k)|` over all dofs.
pub fn nodal_error(solution: &DiscreteSolution, exact_at_dofs: &[f64]) -> Result<f64> {
    nodal_error_of(solution.coefficients(), exact_at_dofs)
}

pub fn nodal_error_of(coefficients: &[f64], exact_at_dofs: &[f64]) -> Result<f64> {
    if coefficients.len() != exact_at_dofs.len() {
        return Err(Error::invalid(format!(
            "{} coefficients against {} reference values",
            coefficients.len(),
            exact_at_dofs.len()
        )));
    }
    Ok(coefficients
        .iter()
        .zip(exact_at_dofs)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    /// `|e|_{H¹}`
    pub h1_seminorm: f64,
    /// `sqrt(l2² + seminorm²)`
    pub h1: f64,
}

/// Quadrature degree of the base rule used by [`norms`] for degree-`r`
/// solutions.
pub fn default_norm_degree(r: usize) -> usize {
    2 * r + 2
}

/// Global relative accuracy of the adaptive norm integrals.
const NORM_TOL: f64 = 1e-6;
/// Local relative agreement treated as converged; below it the comparison
/// is dominated by rounding.
const NORM_ROUNDOFF: f64 = 1e-10;
/// Squared errors below this fraction of the squared exact norms count as
/// zero.
const NORM_FLOOR: f64 = 1e-24;
const NORM_MAX_DEPTH: usize = 40;

/// Gauss-Lobatto rule on `[0, 1]`. Panel endpoints are sampled, so a layer
/// sitting on a cell edge is seen by the first panel comparison.
struct Rule1d {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule1d {
    fn panel(&self, a: f64, b: f64, f: &mut dyn FnMut(f64) -> Result<[f64; 2]>) -> Result<[f64; 2]> {
        let mut acc = [0.0; 2];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(a + (b - a) * x)?;
            acc[0] += w * (b - a) * v[0];
            acc[1] += w * (b - a) * v[1];
        }
        Ok(acc)
    }

    /// Bisects `[a, b]` until each panel agrees with its halves to
    /// `density_tol` per unit length. `whole` is the panel value.
    fn adapt(
        &self,
        a: f64,
        b: f64,
        whole: [f64; 2],
        density_tol: [f64; 2],
        depth: usize,
        f: &mut dyn FnMut(f64) -> Result<[f64; 2]>,
    ) -> Result<[f64; 2]> {
        let m = 0.5 * (a + b);
        let left = self.panel(a, m, f)?;
        let right = self.panel(m, b, f)?;
        let sum = [left[0] + right[0], left[1] + right[1]];
        let converged = (0..2).all(|c| {
            let diff = (sum[c] - whole[c]).abs();
            diff <= density_tol[c] * (b - a) || diff <= NORM_ROUNDOFF * sum[c].abs()
        });
        if converged || depth >= NORM_MAX_DEPTH {
            return Ok(sum);
        }
        let l = self.adapt(a, m, left, density_tol, depth + 1, f)?;
        let r = self.adapt(m, b, right, density_tol, depth + 1, f)?;
        Ok([l[0] + r[0], l[1] + r[1]])
    }

    fn integrate(
        &self,
        a: f64,
        b: f64,
        density_tol: [f64; 2],
        f: &mut dyn FnMut(f64) -> Result<[f64; 2]>,
    ) -> Result<[f64; 2]> {
        let whole = self.panel(a, b, f)?;
        self.adapt(a, b, whole, density_tol, 0, f)
    }
}

/// `(e², |∇e|²)` at reference point `xi` of cell `k`, times the Jacobian.
fn error_density(
    space: &FeSpace,
    coefficients: &[f64],
    exact: &dyn ReferenceField,
    k: usize,
    geometry: &crate::fem::CellGeometry,
    xi: [f64; 2],
    tab: &mut Tabulation,
) -> Result<[f64; 2]> {
    space.element().tabulate_into(xi, tab);
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for (i, &d) in space.cell_dofs(k).iter().enumerate() {
        let c = coefficients[d];
        v += c * tab.values[i];
        let gi = geometry.map_gradient(tab.grads[i]);
        g[0] += c * gi[0];
        g[1] += c * gi[1];
    }
    let (u, du) = exact.value_and_gradient(geometry.to_physical(xi))?;
    let du = du.ok_or_else(|| Error::UnsupportedMetric("H1 norm needs the reference gradient".into()))?;
    let jac = geometry.det.abs();
    Ok([
        jac * (v - u).powi(2),
        jac * ((g[0] - du[0]).powi(2) + (g[1] - du[1]).powi(2)),
    ])
}

/// L² and H¹ norms of `u_h - u`.
///
/// Cell integrals are iterated one-dimensional adaptive Lobatto rules with
/// `quad_degree` exactness per panel: over `ξ` on intervals, and over `η`
/// then `ξ ∈ [0, 1 - η]` on triangles. A layer along a straight line is
/// then a point feature of at least one direction, so thin layers of the
/// exact solution cost a logarithmic number of panels.
pub fn norms(
    solution: &DiscreteSolution,
    exact: &dyn ReferenceField,
    quad_degree: usize,
) -> Result<Norms> {
    let space = solution.space();
    let dim = space.dim();
    let coefficients = solution.coefficients();
    let (nodes, weights) = crate::fem::quadrature::gauss_lobatto_unit(quad_degree / 2 + 2);
    let rule = Rule1d { nodes, weights };
    let mut tab = Tabulation::default();

    // A fixed-rule pass sets the scale of the absolute tolerances.
    let base = if dim == 1 {
        QuadratureRule::interval(quad_degree)
    } else {
        QuadratureRule::triangle(quad_degree)
    };
    let mut estimate = [0.0; 2];
    let mut magnitude = [0.0; 2];
    for k in 0..space.mesh().n_cells() {
        let geo = space.cell_geometry(k);
        let jac = geo.det.abs();
        for (p, w) in base.points.iter().zip(&base.weights) {
            let d = error_density(space, coefficients, exact, k, &geo, *p, &mut tab)?;
            estimate[0] += w * d[0];
            estimate[1] += w * d[1];
            let (u, du) = exact.value_and_gradient(geo.to_physical(*p))?;
            let du = du.unwrap_or([0.0; 2]);
            magnitude[0] += w * jac * u * u;
            magnitude[1] += w * jac * (du[0] * du[0] + du[1] * du[1]);
        }
    }
    let n_cells = space.mesh().n_cells() as f64;
    let area = if dim == 1 { 1.0 } else { 0.5 };
    // Per-cell budget, per unit reference area. The floor keeps errors at
    // rounding level from being refined indefinitely.
    let density_tol = [0, 1].map(|c| {
        (NORM_TOL * estimate[c]).max(NORM_FLOOR * magnitude[c]).max(f64::MIN_POSITIVE) / (n_cells * area)
    });

    let mut l2 = 0.0;
    let mut semi = 0.0;
    for k in 0..space.mesh().n_cells() {
        let geo = space.cell_geometry(k);
        let cell = if dim == 1 {
            rule.integrate(0.0, 1.0, density_tol, &mut |x| {
                error_density(space, coefficients, exact, k, &geo, [x, 0.0], &mut tab)
            })?
        } else {
            let mut inner_tab = Tabulation::default();
            rule.integrate(0.0, 1.0, density_tol, &mut |eta| {
                rule.integrate(0.0, 1.0 - eta, density_tol, &mut |xi| {
                    error_density(space, coefficients, exact, k, &geo, [xi, eta], &mut inner_tab)
                })
            })?
        };
        l2 += cell[0];
        semi += cell[1];
    }
    if !(l2.is_finite() && semi.is_finite()) {
        return Err(Error::UnsupportedMetric("non-finite error integrand".into()));
    }
    Ok(Norms {
        l2: l2.sqrt(),
        h1_seminorm: semi.sqrt(),
        h1: (l2 + semi).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub problem: String,
    pub r: usize,
    pub h: f64,
    pub pe_h: f64,
    pub pe_g: f64,
    pub tau: f64,
    pub e_nodal: f64,
    pub l2: f64,
    pub h1: f64,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "problem,r,h,pe_h,pe_g,tau,e_nodal,l2,h1";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.r,
            fmt_f64(self.h),
            fmt_f64(self.pe_h),
            fmt_f64(self.pe_g),
            fmt_f64(self.tau),
            fmt_f64(self.e_nodal),
            fmt_f64(self.l2),
            fmt_f64(self.h1)
        )
    }
}

/// Full error report of `solution` against `reference`.
pub fn error_report(
    problem: &ProblemSpec,
    solution: &DiscreteSolution,
    reference: &dyn ReferenceField,
) -> Result<ErrorReport> {
    let space = solution.space();
    let h = space.mesh().h();
    let pe = peclet(problem.beta_norm(), h, problem.char_length, problem.mu)?;
    let at_dofs = values_at_dofs(space, reference)?;
    let e_nodal = nodal_error(solution, &at_dofs)?;
    let n = norms(solution, reference, default_norm_degree(space.degree()))?;
    Ok(ErrorReport {
        problem: problem.id.to_string(),
        r: space.degree(),
        h,
        pe_h: pe.local,
        pe_g: pe.global,
        tau: solution.tau_used(),
        e_nodal,
        l2: n.l2,
        h1: n.h1,
    })
}

/// Axis-aligned segment inside the closure of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl Segment {
    /// The line `x = x0` for `y ∈ [0, 1]`.
    pub fn vertical(x0: f64) -> Self {
        Segment {
            start: [x0, 0.0],
            end: [x0, 1.0],
        }
    }

    /// The line `y = y0` for `x ∈ [0, 1]`.
    pub fn horizontal(y0: f64) -> Self {
        Segment {
            start: [0.0, y0],
            end: [1.0, y0],
        }
    }

    /// Index of the coordinate that varies along the segment.
    fn axis(&self) -> Option<usize> {
        match (self.start[0] == self.end[0], self.start[1] == self.end[1]) {
            (true, false) => Some(1),
            (false, true) => Some(0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    /// Coordinate along the varying axis.
    pub coordinate: f64,
    pub point: [f64; 2],
    pub value: f64,
}

/// `samples` equispaced values along `line`, endpoints included.
pub fn extract_line(
    solution: &DiscreteSolution,
    line: Segment,
    samples: usize,
) -> Result<Vec<LineSample>> {
    let dim = solution.space().dim();
    let axis = if dim == 1 {
        if line.start[1] != 0.0 || line.end[1] != 0.0 || line.start[0] == line.end[0] {
            return Err(Error::invalid("1D lines run along x with y = 0"));
        }
        0
    } else {
        line.axis()
            .ok_or_else(|| Error::invalid("line must be axis-aligned and non-degenerate"))?
    };
    if samples < 2 {
        return Err(Error::invalid("a line needs at least 2 samples"));
    }
    let tol = 1e-12;
    let inside = |p: [f64; 2]| (0..dim).all(|d| p[d] >= -tol && p[d] <= 1.0 + tol);
    if !inside(line.start) || !inside(line.end) {
        return Err(Error::invalid(format!(
            "segment {:?} -> {:?} leaves the domain",
            line.start, line.end
        )));
    }
    (0..samples)
        .map(|i| {
            let s = i as f64 / (samples - 1) as f64;
            let point = if i == samples - 1 {
                line.end
            } else {
                [
                    line.start[0] + s * (line.end[0] - line.start[0]),
                    line.start[1] + s * (line.end[1] - line.start[1]),
                ]
            };
            Ok(LineSample {
                coordinate: point[axis],
                point,
                value: solution.evaluate(point)?,
            })
        })
        .collect()
}

/// Scientific notation with 17 significant digits, enough to round-trip
/// every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
