//! Benchmark advection-diffusion problems `-μ Δu + β·∇u = f`, `u = g` on the
//! boundary, with closed-form solutions where they exist.
//!
//! Exponential boundary-layer profiles are evaluated with negative exponents
//! only, so they stay finite for arbitrarily small `μ`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, DiscreteSolution, Mesh};

pub type ScalarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Mesh subdivisions of the fine-grid reference used when no exact solution
/// exists (`h = √2/400`).
pub const REFERENCE_SUBDIVISIONS: usize = 400;

#[derive(Clone)]
pub enum Advection {
    Uniform([f64; 2]),
    Field {
        velocity: VectorField,
        divergence: ScalarField,
        /// Magnitude used for Péclet numbers and stabilization parameters.
        reference_norm: f64,
    },
}

impl Advection {
    /// Velocity and its divergence at `x`.
    #[inline]
    pub fn at(&self, x: [f64; 2]) -> ([f64; 2], f64) {
        match self {
            Advection::Uniform(b) => (*b, 0.0),
            Advection::Field {
                velocity,
                divergence,
                ..
            } => (velocity(x), divergence(x)),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            Advection::Uniform(b) => b[0].hypot(b[1]),
            Advection::Field { reference_norm, .. } => *reference_norm,
        }
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: Option<VectorField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemId {
    #[serde(rename = "val1d")]
    Validation1d,
    #[serde(rename = "train2d")]
    Training2d,
    #[serde(rename = "forced2d")]
    ConstantForcing2d,
    #[serde(rename = "homog2d")]
    Homogeneous2d,
    #[serde(rename = "atan2d")]
    Atan2d,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] = [
        ProblemId::Validation1d,
        ProblemId::Training2d,
        ProblemId::ConstantForcing2d,
        ProblemId::Homogeneous2d,
        ProblemId::Atan2d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Validation1d => "val1d",
            ProblemId::Training2d => "train2d",
            ProblemId::ConstantForcing2d => "forced2d",
            ProblemId::Homogeneous2d => "homog2d",
            ProblemId::Atan2d => "atan2d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ProblemId::Validation1d => 1,
            _ => 2,
        }
    }

    /// `|β|` of the catalog problem (`1` in 1D, `√2` for the 2D problems).
    pub fn advection_norm(self) -> f64 {
        match self {
            ProblemId::Validation1d => 1.0,
            _ => std::f64::consts::SQRT_2,
        }
    }

    /// Builds the problem for diffusion `mu`; `theta` rotates the 2D
    /// advection to angle `theta` with the x-axis at unchanged magnitude.
    pub fn build(self, mu: f64, theta: Option<f64>) -> Result<ProblemSpec> {
        let beta = match (self, theta) {
            (ProblemId::Validation1d, Some(_)) => {
                return Err(Error::invalid("advection angle is only defined in 2D"))
            }
            (_, Some(theta)) => advection_at_angle(theta),
            (_, None) => [1.0, 1.0],
        };
        let mut p = match self {
            ProblemId::Validation1d => make_1d_validation(mu, 1.0)?,
            ProblemId::Training2d => training_2d(mu, beta)?,
            ProblemId::ConstantForcing2d => constant_forcing_2d(mu, beta)?,
            ProblemId::Homogeneous2d => homogeneous_2d(mu, beta)?,
            ProblemId::Atan2d => atan_2d(mu, beta)?,
        };
        p.theta = theta;
        Ok(p)
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown problem id {s:?} (expected one of val1d, train2d, forced2d, homog2d, atan2d)"
                ))
            })
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub dim: usize,
    pub mu: f64,
    pub advection: Advection,
    pub forcing: ScalarField,
    pub dirichlet: ScalarField,
    pub exact: Option<ExactSolution>,
    pub char_length: f64,
    /// Advection angle, when the problem was built rotated.
    pub theta: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("mu", &self.mu)
            .field("beta_norm", &self.advection.norm())
            .field("has_exact", &self.exact.is_some())
            .field("char_length", &self.char_length)
            .field("theta", &self.theta)
            .finish()
    }
}

impl ProblemSpec {
    pub fn beta_norm(&self) -> f64 {
        self.advection.norm()
    }

    pub fn exact_value(&self, x: [f64; 2]) -> Option<f64> {
        self.exact.as_ref().map(|e| (e.value)(x))
    }

    /// Strong residual `-μ Δu + β·∇u - f` of a twice-differentiable field,
    /// supplied through its value, gradient and Laplacian at `x`.
    pub fn strong_residual(&self, x: [f64; 2], grad: [f64; 2], laplacian: f64) -> f64 {
        let (b, _) = self.advection.at(x);
        -self.mu * laplacian + b[0] * grad[0] + b[1] * grad[1] - (self.forcing)(x)
    }
}

/// `β = (|β| cos θ, |β| sin θ)` with `|β| = √2`, obtained by rotating
/// `(1, 1)` through `θ - π/4` so that `θ = π/4` yields exactly `(1, 1)`.
pub fn advection_at_angle(theta: f64) -> [f64; 2] {
    let d = theta - std::f64::consts::FRAC_PI_4;
    let (s, c) = d.sin_cos();
    [c - s, s + c]
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "diffusion coefficient must be positive and finite, got {mu}"
        )))
    }
}

/// `(e^{a s} - 1)/(e^a - 1)` and its derivative, for `a > 0`, evaluated as
/// `e^{a(s-1)} (1 - e^{-a s}) / (1 - e^{-a})`.
#[inline]
fn layer(a: f64, s: f64) -> (f64, f64) {
    let den = -(-a).exp_m1();
    let e = (a * (s - 1.0)).exp();
    let v = e * (-(-a * s).exp_m1()) / den;
    (v, a * e / den)
}

/// 1D validation problem on `(0, 1)`: `f = 0`, `u(0) = 0`, `u(1) = 1`.
pub fn make_1d_validation(mu: f64, beta: f64) -> Result<ProblemSpec> {
    check_mu(mu)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("advection must be positive, got {beta}")));
    }
    let a = beta / mu;
    let value: ScalarField = Arc::new(move |x| layer(a, x[0]).0);
    let gradient: VectorField = Arc::new(move |x| [layer(a, x[0]).1, 0.0]);
    Ok(ProblemSpec {
        id: ProblemId::Validation1d,
        dim: 1,
        mu,
        advection: Advection::Uniform([beta, 0.0]),
        forcing: Arc::new(|_| 0.0),
        dirichlet: value.clone(),
        exact: Some(ExactSolution {
            value,
            gradient: Some(gradient),
        }),
        char_length: 1.0,
        theta: None,
    })
}

/// Training problem on `(0, 1)²` with `β = (1, 1)`, `f = 0` and solution
/// `u = U(x) + U(y)`, `U(s) = (e^{s/μ} - 1)/(e^{1/μ} - 1)`.
pub fn make_2d_training(mu: f64) -> Result<ProblemSpec> {
    training_2d(mu, [1.0, 1.0])
}

/// Same solution as [`make_2d_training`] for an arbitrary constant `β`; the
/// forcing `(β₁ - 1) U'(x) + (β₂ - 1) U'(y)` keeps it exact (zero for `β = (1, 1)`).
fn training_2d(mu: f64, beta: [f64; 2]) -> Result<ProblemSpec> {
    check_mu(mu)?;
    let a = 1.0 / mu;
    let value: ScalarField = Arc::new(move |x| layer(a, x[0]).0 + layer(a, x[1]).0);
    let gradient: VectorField = Arc::new(move |x| [layer(a, x[0]).1, layer(a, x[1]).1]);
    let forcing: ScalarField =
        Arc::new(move |x| (beta[0] - 1.0) * layer(a, x[0]).1 + (beta[1] - 1.0) * layer(a, x[1]).1);
    Ok(ProblemSpec {
        id: ProblemId::Training2d,
        dim: 2,
        mu,
        advection: Advection::Uniform(beta),
        forcing,
        dirichlet: value.clone(),
        exact: Some(ExactSolution {
            value,
            gradient: Some(gradient),
        }),
        char_length: 1.0,
        theta: None,
    })
}

/// Unseen problem with `f = 1`, `β = (1, 1)` and solution
/// `u = (x + y)/2 + (1 - (e^{x/μ} + e^{y/μ})/2)/(e^{1/μ} - 1)`.
pub fn make_2d_constant_forcing(mu: f64) -> Result<ProblemSpec> {
    constant_forcing_2d(mu, [1.0, 1.0])
}

/// Rotated variant of [`make_2d_constant_forcing`]: the solution is kept and
/// the forcing is manufactured from it; it equals `1` for `β = (1, 1)`.
pub fn make_2d_constant_forcing_at_angle(mu: f64, theta: f64) -> Result<ProblemSpec> {
    ProblemId::ConstantForcing2d.build(mu, Some(theta))
}

fn constant_forcing_2d(mu: f64, beta: [f64; 2]) -> Result<ProblemSpec> {
    check_mu(mu)?;
    let a = 1.0 / mu;
    let den = -(-a).exp_m1();
    let ea = (-a).exp();
    let value: ScalarField = Arc::new(move |x| {
        let ex = (a * (x[0] - 1.0)).exp();
        let ey = (a * (x[1] - 1.0)).exp();
        0.5 * (x[0] + x[1]) + (ea - 0.5 * ex - 0.5 * ey) / den
    });
    let gradient: VectorField = Arc::new(move |x| {
        let ex = (a * (x[0] - 1.0)).exp();
        let ey = (a * (x[1] - 1.0)).exp();
        [0.5 - 0.5 * a * ex / den, 0.5 - 0.5 * a * ey / den]
    });
    let forcing: ScalarField = Arc::new(move |x| {
        let ex = (a * (x[0] - 1.0)).exp();
        let ey = (a * (x[1] - 1.0)).exp();
        0.5 * (beta[0] + beta[1]) + 0.5 * a * ((1.0 - beta[0]) * ex + (1.0 - beta[1]) * ey) / den
    });
    Ok(ProblemSpec {
        id: ProblemId::ConstantForcing2d,
        dim: 2,
        mu,
        advection: Advection::Uniform(beta),
        forcing,
        dirichlet: value.clone(),
        exact: Some(ExactSolution {
            value,
            gradient: Some(gradient),
        }),
        char_length: 1.0,
        theta: None,
    })
}

/// `f = 1`, `β = (1, 1)`, `u = 0` on the boundary; no closed-form solution.
/// See [`reference_solution`].
pub fn make_2d_homogeneous(mu: f64) -> Result<ProblemSpec> {
    homogeneous_2d(mu, [1.0, 1.0])
}

fn homogeneous_2d(mu: f64, beta: [f64; 2]) -> Result<ProblemSpec> {
    check_mu(mu)?;
    Ok(ProblemSpec {
        id: ProblemId::Homogeneous2d,
        dim: 2,
        mu,
        advection: Advection::Uniform(beta),
        forcing: Arc::new(|_| 1.0),
        dirichlet: Arc::new(|_| 0.0),
        exact: None,
        char_length: 1.0,
        theta: None,
    })
}

/// Non-constant forcing problem with solution
/// `u = -atan((x - ½)² + (y - ½)² - 1/16)/√μ` and `β = (1, 1)`.
pub fn make_2d_atan(mu: f64) -> Result<ProblemSpec> {
    atan_2d(mu, [1.0, 1.0])
}

fn atan_2d(mu: f64, beta: [f64; 2]) -> Result<ProblemSpec> {
    check_mu(mu)?;
    let sq = mu.sqrt();
    let q = |x: [f64; 2]| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - 1.0 / 16.0;
    let value: ScalarField = Arc::new(move |x| -q(x).atan() / sq);
    let gradient: VectorField = Arc::new(move |x| {
        let s = -1.0 / (sq * (1.0 + q(x).powi(2)));
        [s * 2.0 * (x[0] - 0.5), s * 2.0 * (x[1] - 0.5)]
    });
    // -μ Δu + β·∇u with Δu = -(4/(1+q²) - 2q|∇q|²/(1+q²)²)/√μ
    let forcing: ScalarField = Arc::new(move |x| {
        let qv = q(x);
        let qx = 2.0 * (x[0] - 0.5);
        let qy = 2.0 * (x[1] - 0.5);
        let d = 1.0 + qv * qv;
        let lap_term = 4.0 / d - 2.0 * qv * (qx * qx + qy * qy) / (d * d);
        sq * lap_term - (beta[0] * qx + beta[1] * qy) / (sq * d)
    });
    Ok(ProblemSpec {
        id: ProblemId::Atan2d,
        dim: 2,
        mu,
        advection: Advection::Uniform(beta),
        forcing,
        dirichlet: value.clone(),
        exact: Some(ExactSolution {
            value,
            gradient: Some(gradient),
        }),
        char_length: 1.0,
        theta: None,
    })
}

/// Fine-grid reference for problems without a closed form: unstabilized
/// linear elements on `h = √2/subdivisions`.
pub fn reference_solution(problem: &ProblemSpec, subdivisions: usize) -> Result<DiscreteSolution> {
    let mesh = if problem.dim == 1 {
        Mesh::interval(subdivisions)?
    } else {
        Mesh::unit_square(subdivisions)?
    };
    let space = Arc::new(fem::FeSpace::new(Arc::new(mesh), 1)?);
    fem::solve_supg(problem, &space, 0.0)
}
