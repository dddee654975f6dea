//! Run configuration: flat `section.key = value` text with strict
//! parsing.
//!
//! Unknown or duplicate keys are errors; a silent typo in a physical
//! constant would otherwise change the physics without a trace. All keys
//! are optional and default to the shipped reference values (water at the
//! 0.1 bar operating point, generic cotton fabric, the fitted kinetics
//! triple). Temperatures may be written in celsius by declaring
//! `units.temperature = celsius`; they are converted to kelvin at load
//! time and always serialized back in kelvin.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::{Bounds, FitOptions};
use crate::kinetics::EvapParams;
use crate::solver::MachineConfig;

/// Fitter setup: the calibration box, the initial triple and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub bounds: Bounds,
    /// Initial `[k, M_b, gamma]` for the trust-region iteration.
    pub init: [f64; 3],
    pub options: FitOptions,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            bounds: Bounds::default(),
            init: [5e-4, 0.1, 70.0],
            options: FitOptions::default(),
        }
    }
}

/// Everything a workbench run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub machine: MachineConfig,
    /// Default cylinder temperature for simulations without a dataset (K).
    pub t_cyl: f64,
    /// Operating chamber pressure (bar); annotation only, the physics
    /// enters through `fluid.t_evap`.
    pub pressure_bar: f64,
    /// Kinetics used by `simulate` and `predict` when no override is
    /// given; `beta` is shared with the fitter.
    pub kinetics: EvapParams,
    pub fit: FitSettings,
    pub dataset_path: Option<String>,
    pub out_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            machine: MachineConfig::default(),
            t_cyl: 403.15,
            pressure_bar: 0.1,
            kinetics: EvapParams::default(),
            fit: FitSettings::default(),
            dataset_path: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.machine.validate()?;
        self.kinetics.validate()?;
        self.fit.bounds.validate()?;
        if !self.t_cyl.is_finite() || self.t_cyl <= 0.0 {
            return Err(Error::config("operating.t_cyl", "must be positive"));
        }
        if !self.pressure_bar.is_finite() || self.pressure_bar <= 0.0 {
            return Err(Error::config("operating.pressure_bar", "must be positive"));
        }
        if !self.fit.bounds.contains(self.fit.init) {
            return Err(Error::config(
                "fit.k0/m_b0/gamma0",
                "initial guess must lie within the fit bounds",
            ));
        }
        for (key, v) in [
            ("fit.ftol", self.fit.options.ftol),
            ("fit.xtol", self.fit.options.xtol),
            ("fit.gtol", self.fit.options.gtol),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        Ok(())
    }

    /// Serializes the configuration in canonical form (kelvin, fixed key
    /// order). Loading the output reproduces the configuration exactly.
    pub fn to_config_string(&self) -> String {
        let m = &self.machine;
        let f = &m.materials.fluid;
        let fb = &m.materials.fabric;
        let ex = &m.exchange;
        let mut s = String::new();
        let _ = writeln!(s, "units.temperature = kelvin");
        let _ = writeln!(s);
        let _ = writeln!(s, "fluid.c_l = {}", f.c_l);
        let _ = writeln!(s, "fluid.lambda_l = {}", f.lambda_l);
        let _ = writeln!(s, "fluid.rho_l = {}", f.rho_l);
        let _ = writeln!(s, "fluid.h_lv = {}", f.h_lv);
        let _ = writeln!(s, "fluid.t_evap = {}", f.t_evap);
        let _ = writeln!(s, "fluid.lambda_vap = {}", f.lambda_vap);
        let _ = writeln!(s);
        let _ = writeln!(s, "fabric.c_f = {}", fb.c_f);
        let _ = writeln!(s, "fabric.lambda_f = {}", fb.lambda_f);
        let _ = writeln!(s, "fabric.rho_f = {}", fb.rho_f);
        let _ = writeln!(s, "fabric.m_c = {}", fb.m_c);
        let _ = writeln!(s);
        let _ = writeln!(s, "exchange.d_cyl = {}", ex.d_cyl);
        let _ = writeln!(s, "exchange.d_env = {}", ex.d_env);
        let _ = writeln!(s, "exchange.eps_cyl = {}", ex.eps_cyl);
        let _ = writeln!(s, "exchange.eps_env = {}", ex.eps_env);
        let _ = writeln!(s, "exchange.re = {}", ex.re);
        let _ = writeln!(s, "exchange.gr = {}", ex.gr);
        let _ = writeln!(s, "exchange.pr = {}", ex.pr);
        let _ = writeln!(s, "exchange.t_env = {}", ex.t_env);
        let _ = writeln!(s);
        let _ = writeln!(s, "operating.t0 = {}", m.t0);
        let _ = writeln!(s, "operating.t_cyl = {}", self.t_cyl);
        let _ = writeln!(s, "operating.pressure_bar = {}", self.pressure_bar);
        let _ = writeln!(s);
        let _ = writeln!(s, "solver.n_nodes = {}", m.n_nodes);
        let _ = writeln!(s, "solver.dt = {}", m.dt);
        let fractions: Vec<String> = m.stage_fractions.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "solver.stage_fractions = {}", fractions.join(","));
        let _ = writeln!(s);
        let _ = writeln!(s, "kinetics.k = {}", self.kinetics.k);
        let _ = writeln!(s, "kinetics.m_b = {}", self.kinetics.m_b);
        let _ = writeln!(s, "kinetics.gamma = {}", self.kinetics.gamma);
        let _ = writeln!(s, "kinetics.beta = {}", self.kinetics.beta);
        let _ = writeln!(s);
        let _ = writeln!(s, "fit.k_min = {}", self.fit.bounds.lower[0]);
        let _ = writeln!(s, "fit.k_max = {}", self.fit.bounds.upper[0]);
        let _ = writeln!(s, "fit.m_b_min = {}", self.fit.bounds.lower[1]);
        let _ = writeln!(s, "fit.m_b_max = {}", self.fit.bounds.upper[1]);
        let _ = writeln!(s, "fit.gamma_min = {}", self.fit.bounds.lower[2]);
        let _ = writeln!(s, "fit.gamma_max = {}", self.fit.bounds.upper[2]);
        let _ = writeln!(s, "fit.k0 = {}", self.fit.init[0]);
        let _ = writeln!(s, "fit.m_b0 = {}", self.fit.init[1]);
        let _ = writeln!(s, "fit.gamma0 = {}", self.fit.init[2]);
        let _ = writeln!(s, "fit.ftol = {}", self.fit.options.ftol);
        let _ = writeln!(s, "fit.xtol = {}", self.fit.options.xtol);
        let _ = writeln!(s, "fit.gtol = {}", self.fit.options.gtol);
        let _ = writeln!(s, "fit.max_iter = {}", self.fit.options.max_iter);
        if let Some(p) = &self.dataset_path {
            let _ = writeln!(s, "paths.dataset = {p}");
        }
        if let Some(p) = &self.out_dir {
            let _ = writeln!(s, "paths.out_dir = {p}");
        }
        s
    }
}

/// Temperature keys subject to the `units.temperature` declaration.
const TEMPERATURE_KEYS: [&str; 4] = [
    "fluid.t_evap",
    "exchange.t_env",
    "operating.t0",
    "operating.t_cyl",
];

const KNOWN_KEYS: [&str; 41] = [
    "units.temperature",
    "fluid.c_l",
    "fluid.lambda_l",
    "fluid.rho_l",
    "fluid.h_lv",
    "fluid.t_evap",
    "fluid.lambda_vap",
    "fabric.c_f",
    "fabric.lambda_f",
    "fabric.rho_f",
    "fabric.m_c",
    "exchange.d_cyl",
    "exchange.d_env",
    "exchange.eps_cyl",
    "exchange.eps_env",
    "exchange.re",
    "exchange.gr",
    "exchange.pr",
    "exchange.t_env",
    "operating.t0",
    "operating.t_cyl",
    "operating.pressure_bar",
    "solver.n_nodes",
    "solver.dt",
    "solver.stage_fractions",
    "kinetics.k",
    "kinetics.m_b",
    "kinetics.gamma",
    "kinetics.beta",
    "fit.k_min",
    "fit.k_max",
    "fit.m_b_min",
    "fit.m_b_max",
    "fit.gamma_min",
    "fit.gamma_max",
    "fit.k0",
    "fit.m_b0",
    "fit.gamma0",
    "fit.ftol",
    "fit.xtol",
    "fit.gtol",
];

// max_iter is an integer key handled separately from the float keys.
const INT_KEYS: [&str; 2] = ["solver.n_nodes", "fit.max_iter"];

fn parse_float(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::config(key, format!("cannot parse '{value}' as a number")))
}

/// Parses a configuration from text; see [`load_config`] for files.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", idx + 1),
                format!("expected 'key = value', got '{line}'"),
            ));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let known = KNOWN_KEYS.contains(&key.as_str())
            || key == "fit.max_iter"
            || key == "paths.dataset"
            || key == "paths.out_dir";
        if !known {
            return Err(Error::config(&key, "unknown key"));
        }
        if let Some(first) = seen.insert(key.clone(), idx + 1) {
            return Err(Error::config(
                &key,
                format!("duplicate (first at line {first}, again at line {})", idx + 1),
            ));
        }
        entries.push((key, value));
    }

    // The units declaration applies to every temperature key regardless
    // of ordering, so resolve it first.
    let mut celsius = false;
    for (key, value) in &entries {
        if key == "units.temperature" {
            celsius = match value.as_str() {
                "kelvin" => false,
                "celsius" => true,
                other => {
                    return Err(Error::config(
                        "units.temperature",
                        format!("expected 'kelvin' or 'celsius', got '{other}'"),
                    ))
                }
            };
        }
    }

    let mut cfg = RunConfig::default();
    for (key, value) in &entries {
        let key = key.as_str();
        if key == "units.temperature" {
            continue;
        }
        if key == "paths.dataset" {
            cfg.dataset_path = Some(value.clone());
            continue;
        }
        if key == "paths.out_dir" {
            cfg.out_dir = Some(value.clone());
            continue;
        }
        if key == "solver.stage_fractions" {
            let fractions: Result<Vec<f64>> = value
                .split(',')
                .map(|v| parse_float(key, v.trim()))
                .collect();
            cfg.machine.stage_fractions = fractions?;
            continue;
        }
        if INT_KEYS.contains(&key) {
            let n: usize = value
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse '{value}' as an integer")))?;
            match key {
                "solver.n_nodes" => cfg.machine.n_nodes = n,
                "fit.max_iter" => cfg.fit.options.max_iter = n,
                _ => unreachable!(),
            }
            continue;
        }
        let mut v = parse_float(key, value)?;
        if celsius && TEMPERATURE_KEYS.contains(&key) {
            v += 273.15;
        }
        let m = &mut cfg.machine;
        match key {
            "fluid.c_l" => m.materials.fluid.c_l = v,
            "fluid.lambda_l" => m.materials.fluid.lambda_l = v,
            "fluid.rho_l" => m.materials.fluid.rho_l = v,
            "fluid.h_lv" => m.materials.fluid.h_lv = v,
            "fluid.t_evap" => m.materials.fluid.t_evap = v,
            "fluid.lambda_vap" => m.materials.fluid.lambda_vap = v,
            "fabric.c_f" => m.materials.fabric.c_f = v,
            "fabric.lambda_f" => m.materials.fabric.lambda_f = v,
            "fabric.rho_f" => m.materials.fabric.rho_f = v,
            "fabric.m_c" => m.materials.fabric.m_c = v,
            "exchange.d_cyl" => m.exchange.d_cyl = v,
            "exchange.d_env" => m.exchange.d_env = v,
            "exchange.eps_cyl" => m.exchange.eps_cyl = v,
            "exchange.eps_env" => m.exchange.eps_env = v,
            "exchange.re" => m.exchange.re = v,
            "exchange.gr" => m.exchange.gr = v,
            "exchange.pr" => m.exchange.pr = v,
            "exchange.t_env" => m.exchange.t_env = v,
            "operating.t0" => m.t0 = v,
            "operating.t_cyl" => cfg.t_cyl = v,
            "operating.pressure_bar" => cfg.pressure_bar = v,
            "solver.dt" => m.dt = v,
            "kinetics.k" => cfg.kinetics.k = v,
            "kinetics.m_b" => cfg.kinetics.m_b = v,
            "kinetics.gamma" => cfg.kinetics.gamma = v,
            "kinetics.beta" => cfg.kinetics.beta = v,
            "fit.k_min" => cfg.fit.bounds.lower[0] = v,
            "fit.k_max" => cfg.fit.bounds.upper[0] = v,
            "fit.m_b_min" => cfg.fit.bounds.lower[1] = v,
            "fit.m_b_max" => cfg.fit.bounds.upper[1] = v,
            "fit.gamma_min" => cfg.fit.bounds.lower[2] = v,
            "fit.gamma_max" => cfg.fit.bounds.upper[2] = v,
            "fit.k0" => cfg.fit.init[0] = v,
            "fit.m_b0" => cfg.fit.init[1] = v,
            "fit.gamma0" => cfg.fit.init[2] = v,
            "fit.ftol" => cfg.fit.options.ftol = v,
            "fit.xtol" => cfg.fit.options.xtol = v,
            "fit.gtol" => cfg.fit.options.gtol = v,
            _ => unreachable!("key list out of sync: {key}"),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
