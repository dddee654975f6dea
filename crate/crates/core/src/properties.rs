//! Moisture-dependent effective thermophysical properties of the wet fabric.
//!
//! The wet fabric is treated as a single effective medium of fibers plus
//! liquid. With `M` the local liquid-to-fiber mass ratio, the effective
//! properties are
//!
//! ```text
//! c(M)      = (M c_l + c_f) / (M + 1)                  mass-weighted average
//! lambda(M) = M (lambda_l - lambda_f) / M_c + lambda_f  for 0 <= M <= M_c,
//!             lambda_l                                  for M > M_c
//! rho(M)    = (M + 1) rho_l rho_f / (M rho_f + rho_l)   mixture of volumes
//! ```
//!
//! The conductivity law is linear up to the critical moisture level `M_c`
//! and clamps to the liquid conductivity above it, so the curve has a kink
//! at `M = M_c` but stays continuous.

use crate::error::{Error, Result};

/// Thermophysical constants of the liquid permeating the fabric.
///
/// Shipped defaults are standard-reference water values at roughly 45 °C,
/// the evaporation temperature at the 0.1 bar operating pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidProps {
    /// Specific heat of the liquid (J kg^-1 K^-1).
    pub c_l: f64,
    /// Thermal conductivity of the liquid (W m^-1 K^-1).
    pub lambda_l: f64,
    /// Density of the liquid (kg m^-3).
    pub rho_l: f64,
    /// Latent heat of vaporization (J kg^-1).
    pub h_lv: f64,
    /// Evaporation temperature at operating pressure (K).
    pub t_evap: f64,
    /// Thermal conductivity of the vapor phase (W m^-1 K^-1).
    pub lambda_vap: f64,
}

impl Default for FluidProps {
    fn default() -> Self {
        FluidProps {
            c_l: 4180.0,
            lambda_l: 0.63,
            rho_l: 990.0,
            // Steam-table value at ~45 C; latent heat decreases mildly with
            // temperature, this is the saturation value near 0.1 bar.
            h_lv: 2.39e6,
            t_evap: 318.15,
            lambda_vap: 0.02,
        }
    }
}

impl FluidProps {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_l", self.c_l),
            ("lambda_l", self.lambda_l),
            ("rho_l", self.rho_l),
            ("h_lv", self.h_lv),
            ("t_evap", self.t_evap),
            ("lambda_vap", self.lambda_vap),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::config(
                    format!("fluid.{name}"),
                    format!("must be finite and strictly positive, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Thermophysical constants of the dry fabric.
///
/// `rho_f` is the bulk density of the porous fabric, not the fiber solid
/// density; the mixture rule for `rho(M)` assumes bulk volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct FabricProps {
    /// Specific heat of the dry fabric (J kg^-1 K^-1).
    pub c_f: f64,
    /// Thermal conductivity of the dry fabric (W m^-1 K^-1).
    pub lambda_f: f64,
    /// Bulk density of the dry fabric (kg m^-3).
    pub rho_f: f64,
    /// Critical moisture level above which the wet-fabric conductivity
    /// equals the liquid conductivity (dimensionless).
    pub m_c: f64,
}

impl Default for FabricProps {
    fn default() -> Self {
        // Generic cotton fabric values.
        FabricProps {
            c_f: 1300.0,
            lambda_f: 0.06,
            rho_f: 400.0,
            m_c: 2.0,
        }
    }
}

impl FabricProps {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_f", self.c_f),
            ("lambda_f", self.lambda_f),
            ("rho_f", self.rho_f),
            ("m_c", self.m_c),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::config(
                    format!("fabric.{name}"),
                    format!("must be finite and strictly positive, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Fluid and fabric constants bundled, with the cross invariants checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Materials {
    pub fluid: FluidProps,
    pub fabric: FabricProps,
}

impl Materials {
    pub fn validate(&self) -> Result<()> {
        self.fluid.validate()?;
        self.fabric.validate()?;
        // The linear conductivity law assumes the liquid conducts better
        // than the dry fabric.
        if self.fabric.lambda_f >= self.fluid.lambda_l {
            return Err(Error::config(
                "fabric.lambda_f",
                format!(
                    "must be below fluid.lambda_l ({} >= {})",
                    self.fabric.lambda_f, self.fluid.lambda_l
                ),
            ));
        }
        Ok(())
    }
}

fn check_moisture(m: f64) -> Result<()> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::domain(format!(
            "moisture must be finite and nonnegative, got {m}"
        )));
    }
    Ok(())
}

/// Specific heat of the wet fabric (J kg^-1 K^-1), mass-weighted average
/// of the liquid and fiber heat capacities.
pub fn heat_capacity(m: f64, fluid: &FluidProps, fabric: &FabricProps) -> Result<f64> {
    check_moisture(m)?;
    Ok((m * fluid.c_l + fabric.c_f) / (m + 1.0))
}

/// Thermal conductivity of the wet fabric (W m^-1 K^-1). Linear in `M` up
/// to the critical level `M_c`, equal to the liquid conductivity above it.
pub fn thermal_conductivity(m: f64, fluid: &FluidProps, fabric: &FabricProps) -> Result<f64> {
    check_moisture(m)?;
    if m > fabric.m_c {
        Ok(fluid.lambda_l)
    } else {
        Ok(m * (fluid.lambda_l - fabric.lambda_f) / fabric.m_c + fabric.lambda_f)
    }
}

/// Density of the wet fabric (kg m^-3), total mass over total volume of
/// the liquid/fiber mixture.
pub fn density(m: f64, fluid: &FluidProps, fabric: &FabricProps) -> Result<f64> {
    check_moisture(m)?;
    Ok((m + 1.0) * fluid.rho_l * fabric.rho_f / (m * fabric.rho_f + fluid.rho_l))
}
