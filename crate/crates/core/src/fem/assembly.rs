use std::sync::Arc;

use super::element::Tabulation;
use super::quadrature::QuadratureRule;
use super::solution::DiscreteSolution;
use super::space::FeSpace;
use super::sparse::{CsrMatrix, LinearSystem, SparseLu};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;

/// The SUPG system split by its dependence on the stabilization parameter:
/// `A(τ) = A_G + τ A_S`, `b(τ) = b_G + τ b_S`, before Dirichlet rows are set.
///
/// `A_S` collects `∫_K (-μ Δφ_j + β·∇φ_j) ½(∇·(β φ_i) + β·∇φ_i)` over all
/// cells and `b_S` the matching forcing term.
#[derive(Clone)]
pub struct SupgOperator {
    space: Arc<FeSpace>,
    galerkin: CsrMatrix,
    stabilization: CsrMatrix,
    rhs_galerkin: Vec<f64>,
    rhs_stabilization: Vec<f64>,
    boundary_values: Vec<f64>,
}

impl SupgOperator {
    pub fn assemble(problem: &ProblemSpec, space: &Arc<FeSpace>) -> Result<Self> {
        if problem.dim != space.dim() {
            return Err(Error::invalid(format!(
                "problem {} is {}D but the space is {}D",
                problem.id,
                problem.dim,
                space.dim()
            )));
        }
        if !(problem.mu.is_finite() && problem.mu > 0.0) {
            return Err(Error::invalid("diffusion coefficient must be positive"));
        }
        let mu = problem.mu;
        let pattern = sparsity_pattern(space);
        let mut galerkin = pattern.clone();
        let mut stabilization = pattern;
        let n = space.n_dofs();
        let mut rhs_galerkin = vec![0.0; n];
        let mut rhs_stabilization = vec![0.0; n];

        let degree = space.degree();
        let rule = if space.dim() == 1 {
            QuadratureRule::interval(2 * degree + 2)
        } else {
            QuadratureRule::triangle(2 * degree + 2)
        };
        let element = space.element();
        let tabs: Vec<Tabulation> = rule.points.iter().map(|&p| element.tabulate(p)).collect();
        let nloc = space.dofs_per_cell();
        let boundary = space.boundary_dof_flags();

        let mut a_g = vec![0.0; nloc * nloc];
        let mut a_s = vec![0.0; nloc * nloc];
        let mut b_g = vec![0.0; nloc];
        let mut b_s = vec![0.0; nloc];
        let mut grads = vec![[0.0; 2]; nloc];
        let mut laps = vec![0.0; nloc];
        let mut conv = vec![0.0; nloc];
        let mut test = vec![0.0; nloc];

        for k in 0..space.mesh().n_cells() {
            let geo = space.cell_geometry(k);
            let jac = geo.det.abs();
            a_g.fill(0.0);
            a_s.fill(0.0);
            b_g.fill(0.0);
            b_s.fill(0.0);
            for (q, tab) in tabs.iter().enumerate() {
                let x = geo.to_physical(rule.points[q]);
                let w = rule.weights[q] * jac;
                let (beta, div_beta) = problem.advection.at(x);
                let f = (problem.forcing)(x);
                if !(f.is_finite() && beta[0].is_finite() && beta[1].is_finite() && div_beta.is_finite())
                {
                    return Err(Error::AssemblyFailure {
                        cell: k,
                        reason: format!("non-finite coefficient at {x:?}"),
                    });
                }
                for i in 0..nloc {
                    let g = geo.map_gradient(tab.grads[i]);
                    grads[i] = g;
                    laps[i] = if degree > 1 {
                        geo.map_laplacian(tab.hessians[i])
                    } else {
                        0.0
                    };
                    conv[i] = beta[0] * g[0] + beta[1] * g[1];
                    test[i] = conv[i] + 0.5 * div_beta * tab.values[i];
                }
                for i in 0..nloc {
                    let phi = tab.values[i];
                    b_g[i] += w * f * phi;
                    b_s[i] += w * f * test[i];
                    let row_g = &mut a_g[i * nloc..(i + 1) * nloc];
                    for j in 0..nloc {
                        let diff = grads[j][0] * grads[i][0] + grads[j][1] * grads[i][1];
                        row_g[j] += w * (mu * diff + conv[j] * phi);
                    }
                    let row_s = &mut a_s[i * nloc..(i + 1) * nloc];
                    for j in 0..nloc {
                        row_s[j] += w * (-mu * laps[j] + conv[j]) * test[i];
                    }
                }
            }
            let dofs = space.cell_dofs(k);
            for (i, &gi) in dofs.iter().enumerate() {
                if boundary[gi] {
                    continue;
                }
                rhs_galerkin[gi] += b_g[i];
                rhs_stabilization[gi] += b_s[i];
                for (j, &gj) in dofs.iter().enumerate() {
                    let pos = galerkin.position(gi, gj).expect("cell coupling in pattern");
                    galerkin.values_mut()[pos] += a_g[i * nloc + j];
                    stabilization.values_mut()[pos] += a_s[i * nloc + j];
                }
            }
        }

        let mut boundary_values = vec![0.0; n];
        for (i, x) in space.dof_coords().iter().enumerate() {
            if boundary[i] {
                let g = (problem.dirichlet)(*x);
                if !g.is_finite() {
                    return Err(Error::AssemblyFailure {
                        cell: usize::MAX,
                        reason: format!("non-finite Dirichlet value at {x:?}"),
                    });
                }
                boundary_values[i] = g;
            }
        }

        Ok(SupgOperator {
            space: space.clone(),
            galerkin,
            stabilization,
            rhs_galerkin,
            rhs_stabilization,
            boundary_values,
        })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    /// Galerkin part, without boundary rows.
    pub fn galerkin(&self) -> &CsrMatrix {
        &self.galerkin
    }

    pub fn stabilization(&self) -> &CsrMatrix {
        &self.stabilization
    }

    /// Full system at `tau`, Dirichlet rows replaced by identity rows.
    pub fn system(&self, tau: f64) -> LinearSystem {
        let mut matrix = self.galerkin.clone();
        for (v, s) in matrix.values_mut().iter_mut().zip(self.stabilization.values()) {
            *v += tau * s;
        }
        let mut rhs: Vec<f64> = self
            .rhs_galerkin
            .iter()
            .zip(&self.rhs_stabilization)
            .map(|(g, s)| g + tau * s)
            .collect();
        for (i, &b) in self.space.boundary_dof_flags().iter().enumerate() {
            if b {
                let pos = matrix.position(i, i).expect("diagonal in pattern");
                matrix.values_mut()[pos] = 1.0;
                rhs[i] = self.boundary_values[i];
            }
        }
        LinearSystem { matrix, rhs }
    }
}

/// Row couplings of the space; Dirichlet rows keep only their diagonal.
fn sparsity_pattern(space: &FeSpace) -> CsrMatrix {
    let n = space.n_dofs();
    let boundary = space.boundary_dof_flags();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(k);
        for &i in dofs {
            if !boundary[i] {
                rows[i].extend_from_slice(dofs);
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for (i, row) in rows.iter_mut().enumerate() {
        if boundary[i] {
            row.push(i);
        }
        row.sort_unstable();
        row.dedup();
        col_idx.extend_from_slice(row);
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_pattern(n, row_ptr, col_idx)
}

/// Assembles the SUPG system `a(u, v) + b_h(u, v) = F(v) + τ Σ_K ∫_K f ...`
/// with Dirichlet rows imposed. `tau = 0` gives the plain Galerkin method.
pub fn assemble_supg(problem: &ProblemSpec, space: &Arc<FeSpace>, tau: f64) -> Result<LinearSystem> {
    check_tau(tau)?;
    Ok(SupgOperator::assemble(problem, space)?.system(tau))
}

/// Assembles and solves in one step.
pub fn solve_supg(problem: &ProblemSpec, space: &Arc<FeSpace>, tau: f64) -> Result<DiscreteSolution> {
    let system = assemble_supg(problem, space, tau)?;
    let coefficients = super::sparse::solve(&system)?;
    DiscreteSolution::new(space.clone(), coefficients, tau)
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "stabilization parameter must be finite and non-negative, got {tau}"
        )))
    }
}

/// Repeated solves of one problem on one space at varying `τ`, sharing the
/// assembled operators and the symbolic factorization.
pub struct SupgSolver {
    operator: SupgOperator,
    lu: SparseLu,
}

impl SupgSolver {
    pub fn new(problem: &ProblemSpec, space: &Arc<FeSpace>) -> Result<Self> {
        let operator = SupgOperator::assemble(problem, space)?;
        let lu = SparseLu::analyze(&operator.system(0.0).matrix)?;
        Ok(SupgSolver { operator, lu })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        self.operator.space()
    }

    pub fn operator(&self) -> &SupgOperator {
        &self.operator
    }

    pub fn solve(&self, tau: f64) -> Result<DiscreteSolution> {
        check_tau(tau)?;
        let system = self.operator.system(tau);
        let coefficients = self.lu.solve(&system.matrix, &system.rhs)?;
        DiscreteSolution::new(self.operator.space().clone(), coefficients, tau)
    }
}
