//! Péclet numbers and the classical SUPG stabilization parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this argument the upwind function switches to its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PecletPair {
    /// `|β| h / (2 μ)`
    pub local: f64,
    /// `|β| L / (2 μ)`
    pub global: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

pub fn peclet(beta_norm: f64, h: f64, char_length: f64, mu: f64) -> Result<PecletPair> {
    positive("|beta|", beta_norm)?;
    positive("h", h)?;
    positive("L", char_length)?;
    positive("mu", mu)?;
    Ok(PecletPair {
        local: beta_norm * h / (2.0 * mu),
        global: beta_norm * char_length / (2.0 * mu),
    })
}

/// Diffusion coefficient giving local Péclet `pe_h`.
pub fn mu_from_local_peclet(beta_norm: f64, h: f64, pe_h: f64) -> Result<f64> {
    positive("Pe_h", pe_h)?;
    Ok(beta_norm * h / (2.0 * pe_h))
}

/// Diffusion coefficient giving global Péclet `pe_g`.
pub fn mu_from_global_peclet(beta_norm: f64, char_length: f64, pe_g: f64) -> Result<f64> {
    positive("Pe_g", pe_g)?;
    Ok(beta_norm * char_length / (2.0 * pe_g))
}

/// Upwind function `ξ(t) = coth t - 1/t`.
pub fn upwind_xi(t: f64) -> Result<f64> {
    positive("upwind argument", t)?;
    if t < SERIES_THRESHOLD {
        return Ok(t / 3.0 - t.powi(3) / 45.0);
    }
    // coth t = 1 + 2/(e^{2t} - 1), saturating cleanly for large t
    let coth = 1.0 + 2.0 / (2.0 * t).exp_m1();
    Ok(coth - 1.0 / t)
}

/// `τ̃_r = h/(2|β| r) ξ(Pe_h / r)`; `r = 1` is the nodally exact 1D choice.
pub fn tau_theory(beta_norm: f64, h: f64, mu: f64, degree: usize) -> Result<f64> {
    if !(1..=crate::fem::MAX_DEGREE).contains(&degree) {
        return Err(Error::UnsupportedDegree(degree));
    }
    let pe = peclet(beta_norm, h, 1.0, mu)?;
    let r = degree as f64;
    Ok(h / (2.0 * beta_norm * r) * upwind_xi(pe.local / r)?)
}
