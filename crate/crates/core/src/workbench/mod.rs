//! Workbench: configuration, dataset ingestion, embedded validation
//! tables, and report emission. The command-line interface is built on
//! top of this module.

pub mod config;
pub mod dataset;
pub mod fixtures;
pub mod report;

pub use config::{load_config, parse_config, FitSettings, RunConfig};
pub use dataset::{load_dataset, parse_dataset, DATASET_HEADER};
pub use fixtures::{FixtureRow, FixtureTable, TABLES, TABLE_ALT_HIGH_K, TABLE_ALT_LOW_K, TABLE_FITTED};
pub use report::{emit_report, render_report, ReportRow};

use crate::error::Result;
use crate::estimation::{classify, metrics, DRYING_THRESHOLD};

/// Tolerances for checking the embedded tables against their published
/// aggregate metrics: they absorb the three-significant-figure rounding of
/// the TRUE/PRED columns.
pub const FIXTURE_MAE_TOL: f64 = 5e-4;
pub const FIXTURE_MSE_TOL: f64 = 5e-6;

/// Outcome of recomputing one embedded table.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCheck {
    pub table: &'static str,
    pub mse: f64,
    pub mae: f64,
    pub mse_ok: bool,
    pub mae_ok: bool,
    /// Keys whose recomputed label disagrees with the recorded one.
    pub label_mismatches: Vec<u32>,
}

impl FixtureCheck {
    pub fn passed(&self) -> bool {
        self.mse_ok && self.mae_ok && self.label_mismatches.is_empty()
    }
}

/// Recomputes MSE, MAE and all drying labels of one embedded table from
/// its TRUE/PRED columns and compares them with the published values.
pub fn check_fixture_table(table: &'static FixtureTable) -> Result<FixtureCheck> {
    let truths: Vec<f64> = table.rows.iter().map(|r| r.true_value).collect();
    let preds: Vec<f64> = table.rows.iter().map(|r| r.pred_value).collect();
    let m = metrics(&truths, &preds)?;
    let label_mismatches = table
        .rows
        .iter()
        .filter(|r| classify(r.true_value, r.pred_value, DRYING_THRESHOLD) != r.expected_label)
        .map(|r| r.key)
        .collect();
    Ok(FixtureCheck {
        table: table.name,
        mse: m.mse,
        mae: m.mae,
        mse_ok: (m.mse - table.mse).abs() <= FIXTURE_MSE_TOL,
        mae_ok: (m.mae - table.mae).abs() <= FIXTURE_MAE_TOL,
        label_mismatches,
    })
}

/// Runs [`check_fixture_table`] on all three embedded tables.
pub fn check_all_fixtures() -> Result<Vec<FixtureCheck>> {
    TABLES.iter().map(|t| check_fixture_table(t)).collect()
}
