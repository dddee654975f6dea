//! External heat-exchange coefficient for the free surface of the fabric.
//!
//! The surface not in contact with the heated cylinder exchanges heat with
//! the chamber through convection and radiation. The combined coefficient
//! `z_ht = h_conv + h_irr` enters the Robin flux condition of the solver.
//!
//! Convection uses the mixed-regime correlation
//! `Nu = 0.11 (0.5 Re^2 + Gr Pr)^0.35`, with `h_conv = Nu lambda_vap / D`.
//! Radiation assumes the cylinder sits inside a concentric cylindrical
//! enclosure, so the view factor is the diameter ratio; the coefficient is
//! the ratio form of the enclosure exchange formula, which stays finite
//! when the two temperatures coincide.

use crate::error::{Error, Result};

/// Stefan-Boltzmann constant (W m^-2 K^-4), CODATA value.
pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;

/// Geometry, emissivities and flow numbers for the free-surface exchange.
///
/// `Re`, `Gr` and `Pr` characterize the chamber atmosphere at operating
/// conditions and are supplied by the configuration; they are not derived
/// from the machine geometry here.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeConfig {
    /// Heated cylinder diameter (m).
    pub d_cyl: f64,
    /// Enclosure diameter (m).
    pub d_env: f64,
    /// Cylinder-side surface emissivity, in (0, 1].
    pub eps_cyl: f64,
    /// Enclosure emissivity, in (0, 1].
    pub eps_env: f64,
    /// Reynolds number of the chamber flow.
    pub re: f64,
    /// Grashof number of the chamber atmosphere.
    pub gr: f64,
    /// Prandtl number of the chamber atmosphere.
    pub pr: f64,
    /// Environment temperature inside the chamber (K).
    pub t_env: f64,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            d_cyl: 0.5,
            d_env: 1.0,
            eps_cyl: 0.9,
            eps_env: 0.9,
            re: 20.0,
            gr: 1e5,
            pr: 0.7,
            t_env: 318.15,
        }
    }
}

impl ExchangeConfig {
    /// View factor from the enclosure to the cylinder, the diameter ratio.
    pub fn view_factor(&self) -> f64 {
        self.d_cyl / self.d_env
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_cyl", self.d_cyl),
            ("d_env", self.d_env),
            ("t_env", self.t_env),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::config(
                    format!("exchange.{name}"),
                    format!("must be finite and strictly positive, got {v}"),
                ));
            }
        }
        if self.d_cyl >= self.d_env {
            return Err(Error::config(
                "exchange.d_cyl",
                "cylinder diameter must be smaller than the enclosure diameter",
            ));
        }
        for (name, v) in [("eps_cyl", self.eps_cyl), ("eps_env", self.eps_env)] {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::config(
                    format!("exchange.{name}"),
                    format!("emissivity must lie in (0, 1], got {v}"),
                ));
            }
        }
        for (name, v) in [("re", self.re), ("gr", self.gr), ("pr", self.pr)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    format!("exchange.{name}"),
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Nusselt number for the mixed convection regime:
/// `Nu = 0.11 (0.5 Re^2 + Gr Pr)^0.35`.
pub fn nusselt(re: f64, gr: f64, pr: f64) -> Result<f64> {
    for (name, v) in [("Re", re), ("Gr", gr), ("Pr", pr)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::domain(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    let arg = 0.5 * re * re + gr * pr;
    if arg <= 0.0 {
        return Err(Error::domain(
            "0.5 Re^2 + Gr Pr must be positive for the correlation".to_string(),
        ));
    }
    Ok(0.11 * arg.powf(0.35))
}

/// Convective coefficient `h_conv = Nu lambda_vap / D` (W m^-2 K^-1).
pub fn h_conv(nu: f64, lambda_vap: f64, d_cyl: f64) -> Result<f64> {
    if !d_cyl.is_finite() || d_cyl <= 0.0 {
        return Err(Error::domain(format!(
            "cylinder diameter must be strictly positive, got {d_cyl}"
        )));
    }
    Ok(nu * lambda_vap / d_cyl)
}

/// Radiative coefficient between the cylinder and its enclosure
/// (W m^-2 K^-1):
///
/// ```text
/// h_irr = sigma (T_cyl^2 + T_env^2)(T_cyl + T_env)
///         / [ (1 - eps_cyl)/eps_cyl + 1 + F (1 - eps_env)/eps_env ]
/// ```
///
/// The expression is the blackbody exchange flux divided by the
/// temperature difference, with the singularity cancelled algebraically,
/// so it is well defined even at `T_cyl = T_env`.
pub fn h_irr(t_cyl: f64, t_env: f64, cfg: &ExchangeConfig) -> Result<f64> {
    for (name, v) in [("T_cyl", t_cyl), ("T_env", t_env)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::domain(format!(
                "{name} must be a positive absolute temperature, got {v}"
            )));
        }
    }
    for (name, v) in [("eps_cyl", cfg.eps_cyl), ("eps_env", cfg.eps_env)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::domain(format!(
                "{name} must lie in (0, 1], got {v}"
            )));
        }
    }
    let f = cfg.view_factor();
    let denom = (1.0 - cfg.eps_cyl) / cfg.eps_cyl + 1.0 + f * (1.0 - cfg.eps_env) / cfg.eps_env;
    let num = STEFAN_BOLTZMANN * (t_cyl * t_cyl + t_env * t_env) * (t_cyl + t_env);
    Ok(num / denom)
}

/// Combined free-surface exchange coefficient `z_ht = h_conv + h_irr`
/// (W m^-2 K^-1), computed once per simulation from the cylinder
/// temperature and the exchange configuration.
pub fn z_ht(t_cyl: f64, cfg: &ExchangeConfig, lambda_vap: f64) -> Result<f64> {
    let nu = nusselt(cfg.re, cfg.gr, cfg.pr)?;
    let conv = h_conv(nu, lambda_vap, cfg.d_cyl)?;
    let irr = h_irr(t_cyl, cfg.t_env, cfg)?;
    Ok(conv + irr)
}
