//! Evaporation source model for the mass balance.
//!
//! Moisture is removed at a rate gated by two logistic factors: a smooth
//! stand-in for `max(T - T_evap, 0)` that switches evaporation on above the
//! evaporation temperature, and a moisture-dependent rate coefficient that
//! shuts the process down as the residual level `M_b` is approached:
//!
//! ```text
//! dM/dt = -kappa(M) * s(T - T_evap)
//! s(dT) = dT / (1 + exp(-beta dT))
//! kappa(M) = k / (1 + exp(-gamma (M - M_b)))
//! ```
//!
//! Both logistics are evaluated in an overflow-safe form: the exponent is
//! clamped to [`EXP_CLAMP`], which keeps every intermediate finite for any
//! finite input while leaving the result unchanged wherever the unclamped
//! exponent would not have over- or underflowed anyway.

use crate::error::{Error, Result};

/// Bound on the magnitude of arguments passed to `exp`. Slightly below
/// ln(f64::MAX) = 709.78, so exp never overflows.
pub const EXP_CLAMP: f64 = 700.0;

/// Default steepness of the temperature activation logistic (K^-1).
pub const DEFAULT_BETA: f64 = 3.0;

/// Evaporation-kinetics parameters.
///
/// `k` carries units of (K s)^-1 so that `kappa(M) * (T - T_evap)` has
/// units of s^-1, matching dM/dt for the dimensionless moisture.
///
/// The fitter constrains `(k, M_b, gamma)` to the calibration box (see
/// [`crate::estimation::Bounds`]); free-standing simulations accept any
/// nonnegative `k` (zero disables evaporation entirely).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvapParams {
    /// Evaporation rate coefficient ((K s)^-1).
    pub k: f64,
    /// Residual moisture level at which drying slows down (dimensionless).
    pub m_b: f64,
    /// Steepness of the moisture logistic (dimensionless).
    pub gamma: f64,
    /// Steepness of the temperature activation logistic (K^-1). Fixed, not
    /// fitted; the default of 3 keeps the activation negligible at the
    /// initial 30 K temperature deficit.
    pub beta: f64,
}

impl EvapParams {
    pub fn new(k: f64, m_b: f64, gamma: f64) -> Self {
        EvapParams {
            k,
            m_b,
            gamma,
            beta: DEFAULT_BETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("m_b", self.m_b),
            ("gamma", self.gamma),
            ("beta", self.beta),
        ] {
            if !v.is_finite() {
                return Err(Error::config(
                    format!("kinetics.{name}"),
                    format!("must be finite, got {v}"),
                ));
            }
        }
        if self.k < 0.0 {
            return Err(Error::config("kinetics.k", "must be nonnegative"));
        }
        if self.beta <= 0.0 {
            return Err(Error::config("kinetics.beta", "must be strictly positive"));
        }
        Ok(())
    }
}

impl Default for EvapParams {
    /// Calibrated parameter triple from the reference fit.
    fn default() -> Self {
        EvapParams::new(9.99e-4, 9.75e-2, 1.49e2)
    }
}

/// Logistic sigmoid with the exponent clamped to [`EXP_CLAMP`].
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x.clamp(-EXP_CLAMP, EXP_CLAMP)).exp())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::domain(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

/// Smooth approximation of `max(delta_t, 0)`:
/// `delta_t / (1 + exp(-beta delta_t))` (K).
///
/// Vanishes like `delta_t * exp(beta delta_t)` below zero, so a fabric 30 K
/// under the evaporation temperature sees an activation of order 1e-38.
pub fn smoothed_max(delta_t: f64, beta: f64) -> Result<f64> {
    check_finite("delta_t", delta_t)?;
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::domain(format!(
            "beta must be finite and strictly positive, got {beta}"
        )));
    }
    Ok(delta_t * sigmoid(beta * delta_t))
}

/// Moisture-dependent evaporation rate coefficient `kappa(M)`, strictly
/// between 0 and `k`, with midpoint `k/2` at `M = M_b`.
pub fn evap_rate(m: f64, params: &EvapParams) -> Result<f64> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::domain(format!(
            "moisture must be finite and nonnegative, got {m}"
        )));
    }
    Ok(params.k * sigmoid(params.gamma * (m - params.m_b)))
}

/// Right-hand side of the mass balance, `dM/dt = -kappa(M) s(T - T_evap)`
/// (s^-1). Nonpositive whenever `T >= T_evap`.
pub fn moisture_rhs(t: f64, m: f64, params: &EvapParams, t_evap: f64) -> Result<f64> {
    check_finite("temperature", t)?;
    check_finite("t_evap", t_evap)?;
    let kappa = evap_rate(m, params)?;
    let activation = smoothed_max(t - t_evap, params.beta)?;
    Ok(-kappa * activation)
}
