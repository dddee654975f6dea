//! Calibration of the evaporation parameters against experimental drying
//! records, plus prediction metrics and drying classification.
//!
//! A dataset is a list of [`Sample`]s, each pairing the process inputs
//! `(tau, L, T_cyl, M_0)` with the measured final average moisture
//! `M_tau`. The residual vector is `M_tau,i - Mhat_tau,i`, where each
//! prediction requires a full machine simulation; with the `parallel`
//! feature the independent simulations of one evaluation fan out across
//! threads, with results identical to sequential evaluation.

pub mod trust_region;

use crate::error::{Error, Result};
use crate::kinetics::EvapParams;
use crate::solver::{average_moisture, simulate_machine, MachineConfig, SampleInputs};

pub use trust_region::{Bounds, ConvergenceStatus, Minimum, ResidualFn, TrOptions};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One experimental drying record.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Unique identifier.
    pub key: String,
    /// Total drying time (s).
    pub tau: f64,
    /// Fabric thickness (m).
    pub thickness: f64,
    /// Cylinder temperature (K).
    pub t_cyl: f64,
    /// Initial moisture (dimensionless).
    pub m0: f64,
    /// Measured final average moisture (dimensionless).
    pub m_tau: f64,
}

impl Sample {
    /// Checks the record invariants; the failure message names the
    /// offending field.
    pub fn validate(&self) -> Result<()> {
        if self.key.is_empty() {
            return Err(Error::domain("sample key must be nonempty".to_string()));
        }
        for (name, v) in [
            ("tau_s", self.tau),
            ("thickness_m", self.thickness),
            ("T_cyl_K", self.t_cyl),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::domain(format!(
                    "sample '{}': {name} must be finite and positive, got {v}",
                    self.key
                )));
            }
        }
        if !self.m_tau.is_finite() || self.m_tau < 0.0 {
            return Err(Error::domain(format!(
                "sample '{}': M_tau must be finite and nonnegative, got {}",
                self.key, self.m_tau
            )));
        }
        if !self.m0.is_finite() || self.m0 <= self.m_tau {
            return Err(Error::domain(format!(
                "sample '{}': M0 must exceed M_tau, got M0={} M_tau={}",
                self.key, self.m0, self.m_tau
            )));
        }
        Ok(())
    }

    fn inputs(&self) -> SampleInputs {
        SampleInputs {
            tau: self.tau,
            thickness: self.thickness,
            t_cyl: self.t_cyl,
            m0: self.m0,
        }
    }
}

fn predict_one(sample: &Sample, params: &EvapParams, cfg: &MachineConfig) -> Result<f64> {
    simulate_machine(&sample.inputs(), params, cfg, None)
        .map(|state| average_moisture(&state))
        .map_err(|e| Error::Sample {
            key: sample.key.clone(),
            source: Box::new(e),
        })
}

/// Predicted final average moisture per sample, sequentially.
pub fn predictions_seq(
    dataset: &[Sample],
    params: &EvapParams,
    cfg: &MachineConfig,
) -> Result<Vec<f64>> {
    dataset
        .iter()
        .map(|s| predict_one(s, params, cfg))
        .collect()
}

/// Predicted final average moisture per sample, in dataset order. The
/// simulations are independent and run in parallel when the `parallel`
/// feature is enabled; the result is identical to [`predictions_seq`].
pub fn predictions(
    dataset: &[Sample],
    params: &EvapParams,
    cfg: &MachineConfig,
) -> Result<Vec<f64>> {
    #[cfg(feature = "parallel")]
    {
        dataset
            .par_iter()
            .map(|s| predict_one(s, params, cfg))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        predictions_seq(dataset, params, cfg)
    }
}

/// Residual vector `M_tau,i - Mhat_tau,i` in dataset order.
pub fn residuals(
    params: &EvapParams,
    dataset: &[Sample],
    cfg: &MachineConfig,
) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::Fit("dataset must be nonempty".into()));
    }
    let preds = predictions(dataset, params, cfg)?;
    Ok(dataset
        .iter()
        .zip(preds)
        .map(|(s, p)| s.m_tau - p)
        .collect())
}

/// Adapter exposing the dataset residuals as a [`ResidualFn`] over the
/// parameter triple `[k, M_b, gamma]`; `beta` stays fixed.
pub struct DatasetResiduals<'a> {
    pub dataset: &'a [Sample],
    pub cfg: &'a MachineConfig,
    pub beta: f64,
}

impl ResidualFn for DatasetResiduals<'_> {
    fn eval(&self, p: [f64; 3]) -> Result<Vec<f64>> {
        let mut params = EvapParams::new(p[0], p[1], p[2]);
        params.beta = self.beta;
        residuals(&params, self.dataset, self.cfg)
    }
}

/// Forward-difference Jacobian of the dataset residuals with respect to
/// `(k, M_b, gamma)`, as rows of length 3. Evaluates the residuals once at
/// the base point and once per parameter (four evaluations total).
/// `steps` overrides the default relative increments; increments are
/// flipped inward at active bounds.
pub fn fd_jacobian(
    params: &EvapParams,
    dataset: &[Sample],
    cfg: &MachineConfig,
    bounds: &Bounds,
    steps: Option<[f64; 3]>,
) -> Result<Vec<[f64; 3]>> {
    let f = DatasetResiduals {
        dataset,
        cfg,
        beta: params.beta,
    };
    let p = [params.k, params.m_b, params.gamma];
    let f_base = f.eval(p)?;
    let mut n_evals = 1;
    trust_region::fd_columns(
        &f,
        p,
        &f_base,
        bounds,
        TrOptions::default().fd_scale,
        steps,
        &mut n_evals,
    )
}

/// Controls for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub ftol: f64,
    pub xtol: f64,
    pub gtol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        let tr = TrOptions::default();
        FitOptions {
            ftol: tr.ftol,
            xtol: tr.xtol,
            gtol: tr.gtol,
            max_iter: tr.max_iter,
        }
    }
}

/// Outcome of a calibration run.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Calibrated parameters (with the fixed `beta` carried through).
    pub params: EvapParams,
    /// Residual vector at the solution, in dataset order.
    pub residuals: Vec<f64>,
    /// Mean of the squared residuals.
    pub mse: f64,
    /// Mean of the absolute residuals.
    pub mae: f64,
    pub n_iterations: usize,
    pub n_residual_evals: usize,
    pub status: ConvergenceStatus,
    /// Cost (`||f||^2`) of the initial point and each accepted iterate.
    pub cost_history: Vec<f64>,
}

/// Calibrates `(k, M_b, gamma)` by bound-constrained nonlinear least
/// squares over the dataset, starting from `init` (which must lie within
/// `bounds`); `init.beta` is held fixed throughout.
pub fn fit(
    dataset: &[Sample],
    bounds: &Bounds,
    init: &EvapParams,
    cfg: &MachineConfig,
    opts: &FitOptions,
) -> Result<FitResult> {
    if dataset.is_empty() {
        return Err(Error::Fit("dataset must be nonempty".into()));
    }
    for s in dataset {
        s.validate()?;
    }
    init.validate()?;
    let f = DatasetResiduals {
        dataset,
        cfg,
        beta: init.beta,
    };
    let tr_opts = TrOptions {
        ftol: opts.ftol,
        xtol: opts.xtol,
        gtol: opts.gtol,
        max_iter: opts.max_iter,
        ..TrOptions::default()
    };
    let minimum = trust_region::minimize(&f, bounds, [init.k, init.m_b, init.gamma], &tr_opts)?;
    let mut params = EvapParams::new(minimum.params[0], minimum.params[1], minimum.params[2]);
    params.beta = init.beta;
    let n = minimum.residuals.len() as f64;
    let mse = minimum.residuals.iter().map(|r| r * r).sum::<f64>() / n;
    let mae = minimum.residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
    Ok(FitResult {
        params,
        residuals: minimum.residuals,
        mse,
        mae,
        n_iterations: minimum.n_iterations,
        n_residual_evals: minimum.n_residual_evals,
        status: minimum.status,
        cost_history: minimum.cost_history,
    })
}

/// Default classification threshold on `M_tau - Mhat_tau`.
pub const DRYING_THRESHOLD: f64 = 0.015;

/// Drying outcome of one sample relative to the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DryingLabel {
    /// `|M_tau - Mhat_tau| <= threshold`.
    CorrectlyDried,
    /// `M_tau - Mhat_tau > threshold` (measured wetter than predicted).
    OverDried,
    /// `M_tau - Mhat_tau < -threshold` (measured drier than predicted).
    UnderDried,
}

impl std::fmt::Display for DryingLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DryingLabel::CorrectlyDried => "correctly dried",
            DryingLabel::OverDried => "over-dried",
            DryingLabel::UnderDried => "under-dried",
        };
        f.write_str(name)
    }
}

/// Classifies a prediction: the signed difference `m_true - m_pred` beyond
/// `+threshold` is over-dried, beyond `-threshold` under-dried, inside the
/// band correctly dried.
pub fn classify(m_true: f64, m_pred: f64, threshold: f64) -> DryingLabel {
    let diff = m_true - m_pred;
    if diff.abs() <= threshold {
        DryingLabel::CorrectlyDried
    } else if diff > threshold {
        DryingLabel::OverDried
    } else {
        DryingLabel::UnderDried
    }
}

/// Absolute and relative prediction error of one sample; the relative
/// error is undefined (absent) when the measured value is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleError {
    pub absolute: f64,
    pub relative: Option<f64>,
}

/// Aggregate prediction metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Mean of squared signed residuals.
    pub mse: f64,
    /// Mean absolute residual.
    pub mae: f64,
    pub per_sample: Vec<SampleError>,
}

/// Computes MSE, MAE and per-sample errors; `relative = |true - pred| /
/// true`.
pub fn metrics(true_values: &[f64], predictions: &[f64]) -> Result<Metrics> {
    if true_values.is_empty() || true_values.len() != predictions.len() {
        return Err(Error::Fit(format!(
            "metrics need equal nonempty vectors, got {} and {}",
            true_values.len(),
            predictions.len()
        )));
    }
    let mut per_sample = Vec::with_capacity(true_values.len());
    let mut sq = 0.0;
    let mut abs = 0.0;
    for (&t, &p) in true_values.iter().zip(predictions) {
        let r = t - p;
        sq += r * r;
        abs += r.abs();
        per_sample.push(SampleError {
            absolute: r.abs(),
            relative: if t != 0.0 { Some(r.abs() / t) } else { None },
        });
    }
    let n = true_values.len() as f64;
    Ok(Metrics {
        mse: sq / n,
        mae: abs / n,
        per_sample,
    })
}

#[cfg(test)]
mod tests;
