//! Cluster-count, attribute-count and attribute-quality sweeps.
//!
//! Each row clusters with its own seed, derived from the configured seed
//! and the row's variable, so rows are independent of evaluation order.
//! Random columns are keyed by `(seed, column)` only, so rows are nested:
//! the H = 5 row extends the H = 4 row by one column.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{self, FeatureError, FeatureMatrix, DEFAULT_ATTRIBUTES, FLEX_MAX, TOTAL_USAGE};
use crate::kmeans::{self, KMeansConfig, KMeansError};
use crate::rng::{self, domain};
use crate::validity::{self, DbiPolicy, IndexReport, ValidityError};

/// Cluster count used by the attribute sweeps.
pub const ATTRIBUTE_SWEEP_K: usize = 4;
/// Largest attribute count in the attribute-count sweep.
pub const MAX_SWEEP_ATTRIBUTES: usize = 7;
const SWEEP_DBI_POLICY: DbiPolicy = DbiPolicy::Suppress;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
    #[error("invalid cluster range {k_min}..={k_max} for {rows} rows (need 2 <= k_min <= k_max <= rows)")]
    InvalidRange { k_min: usize, k_max: usize, rows: usize },
    #[error("malformed sweep document: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentError::Feature(e) => e.name(),
            ExperimentError::KMeans(e) => e.name(),
            ExperimentError::Validity(e) => e.name(),
            ExperimentError::InvalidRange { .. } => "InvalidRange",
            ExperimentError::Json(_) => "MalformedJson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Clusters,
    AttributeCount,
    AttributeQuality,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Clusters => "clusters",
            SweepKind::AttributeCount => "attribute_count",
            SweepKind::AttributeQuality => "attribute_quality",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Cluster count, attribute count or number of replaced attributes.
    pub variable: usize,
    pub report: IndexReport,
    /// Report divided by attribute count, when requested.
    pub adjusted: Option<IndexReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    /// Ascending by `variable`.
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub config: KMeansConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// k-means configuration for the row with the given variable.
pub fn row_config(config: &KMeansConfig, variable: usize) -> KMeansConfig {
    KMeansConfig {
        seed: rng::derive_seed(config.seed, domain::SWEEP_ROW, variable as u64),
        ..*config
    }
}

fn evaluate(
    matrix: &FeatureMatrix,
    k: usize,
    config: &KMeansConfig,
    variable: usize,
) -> Result<IndexReport, ExperimentError> {
    let clustering = kmeans::kmeans(matrix, k, &row_config(config, variable))?;
    Ok(validity::index_report(&clustering, matrix, SWEEP_DBI_POLICY)?)
}

/// One row per K in `k_min..=k_max`. DBI is suppressed for any K whose
/// clustering contains a singleton.
pub fn sweep_clusters(
    matrix: &FeatureMatrix,
    k_min: usize,
    k_max: usize,
    config: &KMeansConfig,
) -> Result<SweepResult, ExperimentError> {
    if !(2 <= k_min && k_min <= k_max && k_max <= matrix.n_rows()) {
        return Err(ExperimentError::InvalidRange {
            k_min,
            k_max,
            rows: matrix.n_rows(),
        });
    }
    let rows = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            Ok(SweepRow {
                variable: k,
                report: evaluate(matrix, k, config, k)?,
                adjusted: None,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(SweepResult {
        kind: SweepKind::Clusters,
        rows,
        seed: config.seed,
        config: *config,
    })
}

/// Rows for H = 2 (total_usage, flex_max), H = 3 (all real attributes) and
/// H = 4..=7 (the real attributes plus 1..=4 uniform random columns), each
/// with raw and per-attribute adjusted reports at K = 4.
pub fn sweep_attribute_count(
    matrix: &FeatureMatrix,
    seed: u64,
    config: &KMeansConfig,
) -> Result<SweepResult, ExperimentError> {
    let base = matrix.select(&DEFAULT_ATTRIBUTES)?;
    let rows = (2..=MAX_SWEEP_ATTRIBUTES)
        .into_par_iter()
        .map(|h| {
            let m = match h {
                2 => base.select(&[TOTAL_USAGE, FLEX_MAX])?,
                _ => features::augment_random(&base, h - DEFAULT_ATTRIBUTES.len(), seed),
            };
            let report = evaluate(&m, ATTRIBUTE_SWEEP_K, config, h)?;
            Ok(SweepRow {
                variable: h,
                adjusted: Some(validity::adjust_for_attribute_count(&report)),
                report,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(SweepResult {
        kind: SweepKind::AttributeCount,
        rows,
        seed,
        config: *config,
    })
}

/// Rows for 0..=3 real attributes replaced by random columns at K = 4;
/// H stays 3.
pub fn sweep_attribute_quality(
    matrix: &FeatureMatrix,
    seed: u64,
    config: &KMeansConfig,
) -> Result<SweepResult, ExperimentError> {
    let base = matrix.select(&DEFAULT_ATTRIBUTES)?;
    let rows = (0..=DEFAULT_ATTRIBUTES.len())
        .into_par_iter()
        .map(|replaced| {
            let m = features::substitute_random(&base, replaced, seed)?;
            Ok(SweepRow {
                variable: replaced,
                report: evaluate(&m, ATTRIBUTE_SWEEP_K, config, replaced)?,
                adjusted: None,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(SweepResult {
        kind: SweepKind::AttributeQuality,
        rows,
        seed,
        config: *config,
    })
}

impl SweepResult {
    /// `sweep_<kind>_<seed>.<ext>`
    pub fn file_name(&self, format: TableFormat) -> String {
        format!("sweep_{}_{}.{}", self.kind.as_str(), self.seed, format.extension())
    }

    /// The same sweep with each row's adjusted report promoted to the main
    /// report. `None` unless every row carries one.
    pub fn adjusted_view(&self) -> Option<SweepResult> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.adjusted.clone().map(|adjusted| SweepRow {
                    variable: r.variable,
                    report: adjusted,
                    adjusted: None,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(SweepResult {
            rows,
            ..self.clone()
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn cell(value: Option<f64>, two_dp: bool) -> String {
    match value {
        None => String::new(),
        Some(v) if two_dp => format!("{v:.2}"),
        Some(v) => format!("{v}"),
    }
}

/// Renders `variable,mia,cdi,smi,dbi,ball` as csv, or the whole result as
/// JSON. `two_dp` rounds csv cells to two decimals; JSON always keeps full
/// precision. Absent indexes are empty csv cells and JSON nulls.
pub fn emit_table(result: &SweepResult, format: TableFormat, two_dp: bool) -> String {
    match format {
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(result).expect("sweep results always serialize");
            s.push('\n');
            s
        }
        TableFormat::Csv => {
            let mut out = String::from("variable,mia,cdi,smi,dbi,ball\n");
            for row in &result.rows {
                let r = &row.report;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    row.variable,
                    cell(Some(r.mia), two_dp),
                    cell(r.cdi, two_dp),
                    cell(r.smi, two_dp),
                    cell(r.dbi, two_dp),
                    cell(Some(r.ball), two_dp),
                );
            }
            out
        }
    }
}
