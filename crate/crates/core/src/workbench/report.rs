//! Plain-text prediction reports in the layout of the validation tables:
//! KEY, TRUE, PRED, RELATIVE ERROR, ABSOLUTE ERROR, UNDER-OVER DRIED,
//! followed by a footer with MSE, MAE and the parameter triple.
//!
//! Formatting is deterministic: values in scientific notation with three
//! significant digits, errors with four decimals, so identical inputs
//! produce byte-identical files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::{classify, metrics, FitResult, DRYING_THRESHOLD};
use crate::kinetics::EvapParams;

/// One report line: a sample key with its measured and predicted final
/// average moisture.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub key: String,
    pub true_value: f64,
    pub pred_value: f64,
}

/// Renders the report text. With `fit` present, the footer also carries
/// the iteration counts and convergence status of the calibration.
pub fn render_report(
    rows: &[ReportRow],
    params: &EvapParams,
    fit: Option<&FitResult>,
) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Fit("report needs at least one row".into()));
    }
    let truths: Vec<f64> = rows.iter().map(|r| r.true_value).collect();
    let preds: Vec<f64> = rows.iter().map(|r| r.pred_value).collect();
    let m = metrics(&truths, &preds)?;

    let mut out = String::new();
    out.push_str(&format!(
        "{:>5} {:>10} {:>10} {:>16} {:>16}   {}\n",
        "KEY", "TRUE", "PRED", "RELATIVE ERROR", "ABSOLUTE ERROR", "UNDER-OVER DRIED"
    ));
    for (row, err) in rows.iter().zip(&m.per_sample) {
        let label = classify(row.true_value, row.pred_value, DRYING_THRESHOLD);
        let rel = match err.relative {
            Some(r) => format!("{r:.4}"),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:>5} {:>10} {:>10} {:>16} {:>16.4}   {}\n",
            row.key,
            format!("{:.2E}", row.true_value),
            format!("{:.2E}", row.pred_value),
            rel,
            err.absolute,
            label
        ));
    }
    out.push('\n');
    out.push_str(&format!("MSE: {:.6}   MAE: {:.4}\n", m.mse, m.mae));
    out.push_str(&format!(
        "parameters: k = {:.2E}, M_b = {:.2E}, gamma = {:.2E}, beta = {}\n",
        params.k, params.m_b, params.gamma, params.beta
    ));
    if let Some(fit) = fit {
        out.push_str(&format!(
            "fit: {} iterations, {} residual evaluations, status {}\n",
            fit.n_iterations, fit.n_residual_evals, fit.status
        ));
    }
    Ok(out)
}

/// Renders and writes the report to `path`.
pub fn emit_report(
    rows: &[ReportRow],
    params: &EvapParams,
    fit: Option<&FitResult>,
    path: &Path,
) -> Result<()> {
    let text = render_report(rows, params, fit)?;
    std::fs::write(path, text)?;
    Ok(())
}
