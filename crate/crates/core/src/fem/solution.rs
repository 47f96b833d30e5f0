use std::sync::Arc;

use super::space::FeSpace;
use crate::error::{Error, Result};

/// Coefficient vector over the dofs of a space, with the `τ` it was
/// computed with.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    space: Arc<FeSpace>,
    coefficients: Vec<f64>,
    tau_used: f64,
}

impl DiscreteSolution {
    pub fn new(space: Arc<FeSpace>, coefficients: Vec<f64>, tau_used: f64) -> Result<Self> {
        if coefficients.len() != space.n_dofs() {
            return Err(Error::invalid(format!(
                "{} coefficients for a space with {} dofs",
                coefficients.len(),
                space.n_dofs()
            )));
        }
        Ok(DiscreteSolution {
            space,
            coefficients,
            tau_used,
        })
    }

    /// Lagrange interpolant of `f`.
    pub fn interpolate(space: Arc<FeSpace>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let coefficients = space.dof_coords().iter().map(|&x| f(x)).collect();
        DiscreteSolution {
            space,
            coefficients,
            tau_used: 0.0,
        }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn tau_used(&self) -> f64 {
        self.tau_used
    }

    pub fn evaluate(&self, point: [f64; 2]) -> Result<f64> {
        Ok(self.space.evaluate_with_gradient(&self.coefficients, point)?.0)
    }

    pub fn evaluate_with_gradient(&self, point: [f64; 2]) -> Result<(f64, [f64; 2])> {
        self.space.evaluate_with_gradient(&self.coefficients, point)
    }
}
