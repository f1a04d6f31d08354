//! Per-day statistics, household flexibility records and the feature matrix.

use std::collections::HashMap;

use chrono::NaiveDate;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EveningSlice;
use crate::rng::{self, domain};
use crate::{SLOTS_PER_DAY, SLOT_MINUTES};

pub const TOTAL_USAGE: &str = "total_usage";
pub const FLEX_MAX: &str = "flex_max";
pub const FLEX_MIN: &str = "flex_min";

/// Attributes clustered by default, in matrix column order.
pub const DEFAULT_ATTRIBUTES: [&str; 3] = [TOTAL_USAGE, FLEX_MAX, FLEX_MIN];

const RANDOM_PREFIX: &str = "rand_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("slice has no filled slots")]
    EmptySlice,
    #[error("at least 2 days are required, found {found}")]
    InsufficientDays { found: usize },
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("household {household}: no value for attribute {attribute:?}")]
    MissingAttributeValue { household: String, attribute: String },
    #[error("cannot replace {requested} attributes of a {available}-attribute matrix")]
    BadCount { requested: usize, available: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("row {row}, attribute {attribute:?}: value is not finite")]
    NonFinite { row: usize, attribute: String },
    #[error("attribute {0:?} appears twice")]
    DuplicateAttribute(String),
    #[error("slices belong to more than one household ({0:?} and {1:?})")]
    MixedHouseholds(String, String),
}

impl FeatureError {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureError::EmptySlice => "EmptySlice",
            FeatureError::InsufficientDays { .. } => "InsufficientDays",
            FeatureError::UnknownAttribute(_) => "UnknownAttribute",
            FeatureError::MissingAttributeValue { .. } => "MissingAttributeValue",
            FeatureError::BadCount { .. } => "BadCount",
            FeatureError::DimensionMismatch { .. } => "DimensionMismatch",
            FeatureError::NonFinite { .. } => "NonFinite",
            FeatureError::DuplicateAttribute(_) => "DuplicateAttribute",
            FeatureError::MixedHouseholds(..) => "MixedHouseholds",
        }
    }
}

/// Peak and trough time plus energy for one evening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyStats {
    pub date: NaiveDate,
    /// Minutes after 16:00 of the highest reading (earliest on ties).
    pub peak_minute: u32,
    /// Minutes after 16:00 of the lowest reading (earliest on ties).
    pub trough_minute: u32,
    /// kWh over the window, rescaled to a full 48 slots when readings are missing.
    pub energy: f64,
}

pub fn daily_stats(slice: &EveningSlice) -> Result<DailyStats, FeatureError> {
    let mut peak: Option<(usize, f64)> = None;
    let mut trough: Option<(usize, f64)> = None;
    let mut sum = 0.0;
    let mut filled = 0usize;
    for (i, w) in slice.slots.iter().enumerate() {
        let Some(w) = *w else { continue };
        sum += w;
        filled += 1;
        if peak.is_none_or(|(_, p)| w > p) {
            peak = Some((i, w));
        }
        if trough.is_none_or(|(_, t)| w < t) {
            trough = Some((i, w));
        }
    }
    let (Some((peak_slot, _)), Some((trough_slot, _))) = (peak, trough) else {
        return Err(FeatureError::EmptySlice);
    };
    let slot_hours = SLOT_MINUTES as f64 / 60.0;
    let energy = sum * slot_hours / 1000.0 * (SLOTS_PER_DAY as f64 / filled as f64);
    Ok(DailyStats {
        date: slice.date,
        peak_minute: peak_slot as u32 * SLOT_MINUTES,
        trough_minute: trough_slot as u32 * SLOT_MINUTES,
        energy,
    })
}

/// Sample standard deviation (n − 1 divisor) of minute offsets.
pub fn flexibility(values: &[f64]) -> Result<f64, FeatureError> {
    let n = values.len();
    if n < 2 {
        return Err(FeatureError::InsufficientDays { found: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

/// Augmented representative record for one household.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdRecord {
    pub household_id: String,
    /// Mean evening energy in kWh.
    pub total_usage: f64,
    /// Standard deviation of daily peak minute.
    pub flex_max: f64,
    /// Standard deviation of daily trough minute.
    pub flex_min: f64,
    /// Mean watts per slot over the days the slot was filled.
    pub slot_averages: Option<Vec<Option<f64>>>,
    pub extra_attributes: Vec<(String, f64)>,
    pub day_count: usize,
}

/// Column name for the slot average at `slot`: `slot_000` … `slot_235`.
pub fn slot_attribute_name(slot: usize) -> String {
    format!("slot_{:03}", slot as u32 * SLOT_MINUTES)
}

fn parse_slot_attribute(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("slot_")?;
    if digits.len() != 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let minute: u32 = digits.parse().ok()?;
    let slot = (minute / SLOT_MINUTES) as usize;
    (minute.is_multiple_of(SLOT_MINUTES) && slot < SLOTS_PER_DAY).then_some(slot)
}

impl HouseholdRecord {
    /// Value of a named attribute.
    pub fn attribute(&self, name: &str) -> Result<f64, FeatureError> {
        let missing = || FeatureError::MissingAttributeValue {
            household: self.household_id.clone(),
            attribute: name.to_owned(),
        };
        match name {
            TOTAL_USAGE => return Ok(self.total_usage),
            FLEX_MAX => return Ok(self.flex_max),
            FLEX_MIN => return Ok(self.flex_min),
            _ => {}
        }
        if let Some(slot) = parse_slot_attribute(name) {
            return self
                .slot_averages
                .as_ref()
                .and_then(|s| s[slot])
                .ok_or_else(missing);
        }
        self.extra_attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| FeatureError::UnknownAttribute(name.to_owned()))
    }
}

/// Summarises one household's qualifying days.
pub fn representative_record(slices: &[EveningSlice]) -> Result<HouseholdRecord, FeatureError> {
    if slices.len() < 2 {
        return Err(FeatureError::InsufficientDays { found: slices.len() });
    }
    let household_id = &slices[0].household_id;
    if let Some(other) = slices.iter().find(|s| &s.household_id != household_id) {
        return Err(FeatureError::MixedHouseholds(
            household_id.clone(),
            other.household_id.clone(),
        ));
    }
    let stats = slices.iter().map(daily_stats).collect::<Result<Vec<_>, _>>()?;
    let peaks: Vec<f64> = stats.iter().map(|s| s.peak_minute as f64).collect();
    let troughs: Vec<f64> = stats.iter().map(|s| s.trough_minute as f64).collect();

    let mut slot_sum = [0.0; SLOTS_PER_DAY];
    let mut slot_n = [0usize; SLOTS_PER_DAY];
    for slice in slices {
        for (i, w) in slice.slots.iter().enumerate() {
            if let Some(w) = w {
                slot_sum[i] += w;
                slot_n[i] += 1;
            }
        }
    }
    let slot_averages = slot_sum
        .iter()
        .zip(&slot_n)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect();

    Ok(HouseholdRecord {
        household_id: household_id.clone(),
        total_usage: stats.iter().map(|s| s.energy).sum::<f64>() / stats.len() as f64,
        flex_max: flexibility(&peaks)?,
        flex_min: flexibility(&troughs)?,
        slot_averages: Some(slot_averages),
        extra_attributes: Vec::new(),
        day_count: stats.len(),
    })
}

/// Records for every household, plus households skipped for having too few days.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HouseholdSummary {
    /// In order of each household's first slice.
    pub records: Vec<HouseholdRecord>,
    pub skipped: Vec<(String, FeatureError)>,
}

pub fn records_from_slices(slices: &[EveningSlice]) -> HouseholdSummary {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<EveningSlice>> = HashMap::new();
    for slice in slices {
        let id = slice.household_id.as_str();
        groups
            .entry(id)
            .or_insert_with(|| {
                order.push(id);
                Vec::new()
            })
            .push(slice.clone());
    }
    let results: Vec<_> = order
        .par_iter()
        .map(|id| (id, representative_record(&groups[id])))
        .collect();

    let mut summary = HouseholdSummary::default();
    for (id, result) in results {
        match result {
            Ok(record) => summary.records.push(record),
            Err(e) => summary.skipped.push((id.to_string(), e)),
        }
    }
    summary
}

/// Per-attribute min-max parameters retained by [`FeatureMatrix::normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeRange {
    pub min: f64,
    pub max: f64,
    /// Constant attribute: every value mapped to 0.
    pub degenerate: bool,
}

impl AttributeRange {
    /// Range of a column generated directly on [0, 1).
    pub const UNIT: AttributeRange = AttributeRange {
        min: 0.0,
        max: 1.0,
        degenerate: false,
    };
}

/// M households × H named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    row_ids: Vec<String>,
    attribute_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    normalization: Option<Vec<AttributeRange>>,
}

impl FeatureMatrix {
    pub fn new(
        row_ids: Vec<String>,
        attribute_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, FeatureError> {
        for (i, name) in attribute_names.iter().enumerate() {
            if attribute_names[..i].contains(name) {
                return Err(FeatureError::DuplicateAttribute(name.clone()));
            }
        }
        if row_ids.len() != rows.len() {
            return Err(FeatureError::DimensionMismatch {
                row: row_ids.len().min(rows.len()),
                expected: row_ids.len(),
                found: rows.len(),
            });
        }
        let h = attribute_names.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != h {
                return Err(FeatureError::DimensionMismatch {
                    row: r,
                    expected: h,
                    found: row.len(),
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite {
                    row: r,
                    attribute: attribute_names[c].clone(),
                });
            }
        }
        Ok(Self {
            row_ids,
            attribute_names,
            rows,
            normalization: None,
        })
    }

    /// Unlabelled matrix; rows are named `r0`, `r1`, ….
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, FeatureError> {
        let h = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let names = (0..h).map(|j| format!("a{j}")).collect();
        Self::new(ids, names, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn normalization(&self) -> Option<&[AttributeRange]> {
        self.normalization.as_deref()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    /// Names of attributes flagged constant by the last normalization.
    pub fn degenerate_attributes(&self) -> Vec<&str> {
        self.normalization
            .iter()
            .flat_map(|ranges| ranges.iter().zip(&self.attribute_names))
            .filter(|(r, _)| r.degenerate)
            .map(|(_, n)| n.as_str())
            .collect()
    }

    pub fn column(&self, h: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[h]).collect()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|n| n == name)
    }

    /// Sub-matrix with the named columns in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, FeatureError> {
        let idx = names
            .iter()
            .map(|n| {
                self.attribute_index(n.as_ref())
                    .ok_or_else(|| FeatureError::UnknownAttribute(n.as_ref().to_owned()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = Self::new(
            self.row_ids.clone(),
            idx.iter().map(|&i| self.attribute_names[i].clone()).collect(),
            self.rows
                .iter()
                .map(|row| idx.iter().map(|&i| row[i]).collect())
                .collect(),
        )?;
        out.normalization = self
            .normalization
            .as_ref()
            .map(|ranges| idx.iter().map(|&i| ranges[i]).collect());
        Ok(out)
    }

    /// Min-max scales every attribute onto [0, 1].
    ///
    /// Constant attributes become 0 and are flagged degenerate.
    pub fn normalize(&self) -> Self {
        let ranges: Vec<AttributeRange> = (0..self.n_attributes())
            .map(|h| {
                let (min, max) = self
                    .rows
                    .iter()
                    .map(|r| r[h])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if self.rows.is_empty() {
                    AttributeRange { min: 0.0, max: 0.0, degenerate: true }
                } else {
                    AttributeRange { min, max, degenerate: max <= min }
                }
            })
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&ranges)
                    .map(|(&v, r)| if r.degenerate { 0.0 } else { (v - r.min) / (r.max - r.min) })
                    .collect()
            })
            .collect();
        Self {
            row_ids: self.row_ids.clone(),
            attribute_names: self.attribute_names.clone(),
            rows,
            normalization: Some(ranges),
        }
    }

    fn push_column(&mut self, name: String, values: Vec<f64>) {
        for (row, v) in self.rows.iter_mut().zip(values) {
            row.push(v);
        }
        self.attribute_names.push(name);
        if let Some(ranges) = &mut self.normalization {
            ranges.push(AttributeRange::UNIT);
        }
    }
}

/// Builds the matrix in record order from the selected attributes.
pub fn build_matrix<S: AsRef<str>>(
    records: &[HouseholdRecord],
    attribute_selection: &[S],
) -> Result<FeatureMatrix, FeatureError> {
    let names: Vec<String> = attribute_selection.iter().map(|s| s.as_ref().to_owned()).collect();
    let rows = records
        .iter()
        .map(|rec| names.iter().map(|n| rec.attribute(n)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let ids = records.iter().map(|r| r.household_id.clone()).collect();
    FeatureMatrix::new(ids, names, rows)
}

/// Column of i.i.d. uniform [0, 1) values keyed by `(seed, index)` only.
pub fn random_column(rows: usize, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, domain::RANDOM_COLUMN, index);
    (0..rows).map(|_| rng.random::<f64>()).collect()
}

pub fn random_attribute_name(index: u64) -> String {
    format!("{RANDOM_PREFIX}{index}")
}

/// Appends `count` uniform [0, 1) columns named `rand_1`, `rand_2`, ….
///
/// Column `rand_j` depends only on `(seed, j)`, so asking for more columns
/// never changes the earlier ones. Indices already used by the matrix are
/// skipped.
pub fn augment_random(matrix: &FeatureMatrix, count: usize, seed: u64) -> FeatureMatrix {
    let mut out = matrix.clone();
    let mut index = 0u64;
    for _ in 0..count {
        let name = loop {
            index += 1;
            let name = random_attribute_name(index);
            if out.attribute_index(&name).is_none() {
                break name;
            }
        };
        out.push_column(name, random_column(matrix.n_rows(), seed, index));
    }
    out
}

/// Replaces the last `replace_count` columns with fresh uniform columns.
///
/// The last column becomes `rand_1`, the one before it `rand_2`, and so on;
/// with the default attributes that replaces flex_min, then flex_max, then
/// total_usage. The random columns match those of [`augment_random`] for the
/// same seed.
pub fn substitute_random(
    matrix: &FeatureMatrix,
    replace_count: usize,
    seed: u64,
) -> Result<FeatureMatrix, FeatureError> {
    let h = matrix.n_attributes();
    if replace_count > h {
        return Err(FeatureError::BadCount {
            requested: replace_count,
            available: h,
        });
    }
    let mut out = matrix.clone();
    for i in 1..=replace_count {
        let col = h - i;
        let values = random_column(matrix.n_rows(), seed, i as u64);
        for (row, v) in out.rows.iter_mut().zip(values) {
            row[col] = v;
        }
        out.attribute_names[col] = random_attribute_name(i as u64);
        if let Some(ranges) = &mut out.normalization {
            ranges[col] = AttributeRange::UNIT;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn slice_from(values: &[(usize, f64)]) -> EveningSlice {
        let mut s = EveningSlice::new("H1", "2011-03-07".parse().unwrap());
        for &(i, w) in values {
            s.slots[i] = Some(w);
        }
        s
    }

    fn full_slice(date: &str, f: impl Fn(usize) -> f64) -> EveningSlice {
        let mut s = EveningSlice::new("H1", date.parse().unwrap());
        for i in 0..SLOTS_PER_DAY {
            s.slots[i] = Some(f(i));
        }
        s
    }

    fn record(id: &str, usage: f64, fmax: f64, fmin: f64) -> HouseholdRecord {
        HouseholdRecord {
            household_id: id.into(),
            total_usage: usage,
            flex_max: fmax,
            flex_min: fmin,
            slot_averages: None,
            extra_attributes: vec![],
            day_count: 2,
        }
    }

    #[test]
    fn peak_at_slot_18() {
        let s = full_slice("2011-03-07", |i| if i == 18 { 1200.0 } else { 300.0 });
        assert_eq!(daily_stats(&s).unwrap().peak_minute, 90);
    }

    #[test]
    fn peak_tie_takes_earliest() {
        // 17:00 is slot 12, 18:30 is slot 30.
        let s = full_slice("2011-03-07", |i| if i == 12 || i == 30 { 900.0 } else { 100.0 });
        assert_eq!(daily_stats(&s).unwrap().peak_minute, 60);
    }

    #[test]
    fn flat_day() {
        let st = daily_stats(&full_slice("2011-03-07", |_| 100.0)).unwrap();
        assert!((st.energy - 0.4).abs() < 1e-12);
        assert_eq!((st.peak_minute, st.trough_minute), (0, 0));
    }

    #[test]
    fn partial_day_energy_rescaled() {
        let s = slice_from(&[(0, 100.0), (1, 300.0)]);
        let st = daily_stats(&s).unwrap();
        // mean 200 W over the full 4 h window
        assert!((st.energy - 0.8).abs() < 1e-12);
        assert_eq!(st.trough_minute, 0);
        assert_eq!(st.peak_minute, 5);
        assert_eq!(daily_stats(&slice_from(&[])).unwrap_err(), FeatureError::EmptySlice);
    }

    #[test]
    fn flexibility_examples() {
        assert!((flexibility(&[60.0, 90.0, 120.0]).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(flexibility(&[75.0, 75.0, 75.0]).unwrap(), 0.0);
        assert_eq!(
            flexibility(&[60.0]).unwrap_err(),
            FeatureError::InsufficientDays { found: 1 }
        );
    }

    #[test]
    fn representative_record_examples() {
        let a = full_slice("2011-03-07", |_| 100.0);
        let b = full_slice("2011-03-08", |_| 150.0);
        let rec = representative_record(&[a.clone(), b]).unwrap();
        assert!((rec.total_usage - 0.5).abs() < 1e-12);
        assert_eq!(rec.day_count, 2);
        assert_eq!(rec.slot_averages.as_ref().unwrap()[5], Some(125.0));

        let days: Vec<_> = [12usize, 18, 24]
            .iter()
            .enumerate()
            .map(|(d, &peak)| {
                full_slice(&format!("2011-03-{:02}", 7 + d), move |i| {
                    if i == peak {
                        2000.0
                    } else if i == 0 {
                        10.0
                    } else {
                        200.0
                    }
                })
            })
            .collect();
        let rec = representative_record(&days).unwrap();
        assert!((rec.flex_max - 30.0).abs() < 1e-12);
        assert_eq!(rec.flex_min, 0.0);

        assert_eq!(
            representative_record(&[a]).unwrap_err(),
            FeatureError::InsufficientDays { found: 1 }
        );
    }

    #[test]
    fn mixed_households_rejected() {
        let a = full_slice("2011-03-07", |_| 1.0);
        let mut b = full_slice("2011-03-08", |_| 1.0);
        b.household_id = "H2".into();
        assert!(matches!(representative_record(&[a, b]), Err(FeatureError::MixedHouseholds(..))));
    }

    #[test]
    fn summary_keeps_first_appearance_order() {
        let mut slices = Vec::new();
        for id in ["H9", "H1"] {
            for d in ["2011-03-07", "2011-03-08"] {
                let mut s = full_slice(d, |_| 100.0);
                s.household_id = id.into();
                slices.push(s);
            }
        }
        let mut lonely = full_slice("2011-03-07", |_| 1.0);
        lonely.household_id = "H5".into();
        slices.push(lonely);
        let summary = records_from_slices(&slices);
        let ids: Vec<_> = summary.records.iter().map(|r| r.household_id.as_str()).collect();
        assert_eq!(ids, ["H9", "H1"]);
        assert_eq!(summary.skipped.len(), 1);
        assert_eq!(summary.skipped[0].0, "H5");
    }

    #[test]
    fn build_matrix_selection() {
        let records: Vec<_> = (0..180).map(|i| record(&format!("H{i}"), i as f64, 1.0, 2.0)).collect();
        let m = build_matrix(&records, &DEFAULT_ATTRIBUTES).unwrap();
        assert_eq!((m.n_rows(), m.n_attributes()), (180, 3));
        let m2 = build_matrix(&records, &[TOTAL_USAGE, FLEX_MAX]).unwrap();
        assert_eq!((m2.n_rows(), m2.n_attributes()), (180, 2));
        assert_eq!(m2.row_ids()[7], "H7");
        assert_eq!(
            build_matrix(&records, &["flex_mx"]).unwrap_err(),
            FeatureError::UnknownAttribute("flex_mx".into())
        );
    }

    #[test]
    fn slot_and_extra_attributes() {
        let mut rec = record("H1", 1.0, 2.0, 3.0);
        assert!(matches!(rec.attribute("slot_005"), Err(FeatureError::MissingAttributeValue { .. })));
        let mut slots = vec![None; SLOTS_PER_DAY];
        slots[1] = Some(42.0);
        rec.slot_averages = Some(slots);
        rec.extra_attributes.push(("night_ratio".into(), 0.3));
        assert_eq!(rec.attribute("slot_005").unwrap(), 42.0);
        assert_eq!(rec.attribute("night_ratio").unwrap(), 0.3);
        assert!(matches!(rec.attribute("slot_240"), Err(FeatureError::UnknownAttribute(_))));
        assert!(matches!(rec.attribute("slot_003"), Err(FeatureError::UnknownAttribute(_))));
        assert_eq!(slot_attribute_name(47), "slot_235");
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            FeatureMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]),
            Err(FeatureError::DimensionMismatch { row: 1, .. })
        ));
        assert!(matches!(
            FeatureMatrix::from_rows(vec![vec![f64::NAN]]),
            Err(FeatureError::NonFinite { row: 0, .. })
        ));
        assert!(matches!(
            FeatureMatrix::new(vec!["a".into()], vec!["x".into(), "x".into()], vec![vec![1.0, 2.0]]),
            Err(FeatureError::DuplicateAttribute(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        let m = FeatureMatrix::from_rows(vec![vec![2.0, 5.0, 0.0], vec![4.0, 5.0, 1.0], vec![6.0, 5.0, 0.25]])
            .unwrap()
            .normalize();
        assert_eq!(m.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.column(1), vec![0.0, 0.0, 0.0]);
        assert_eq!(m.column(2), vec![0.0, 1.0, 0.25]);
        assert_eq!(m.degenerate_attributes(), vec!["a1"]);
        let r = m.normalization().unwrap();
        assert_eq!((r[0].min, r[0].max), (2.0, 6.0));
    }

    #[test]
    fn random_augmentation() {
        let base = FeatureMatrix::from_rows(vec![vec![0.1, 0.2, 0.3]; 10]).unwrap().normalize();
        assert_eq!(augment_random(&base, 0, 3), base);
        let aug = augment_random(&base, 5, 3);
        assert_eq!(aug.n_attributes(), 8);
        assert_eq!(aug.attribute_names()[3..], ["rand_1", "rand_2", "rand_3", "rand_4", "rand_5"]);
        assert_eq!(aug, augment_random(&base, 5, 3));
        assert_ne!(aug.column(3), augment_random(&base, 5, 4).column(3));
        // nested: the first four random columns do not depend on the count
        assert_eq!(augment_random(&base, 4, 3).rows(), aug.select(&aug.attribute_names()[..7]).unwrap().rows());
        assert!(aug.rows().iter().flatten().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn random_substitution() {
        let base = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            DEFAULT_ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
        )
        .unwrap();
        assert_eq!(substitute_random(&base, 0, 1).unwrap(), base);
        let one = substitute_random(&base, 1, 1).unwrap();
        assert_eq!(one.attribute_names(), ["total_usage", "flex_max", "rand_1"]);
        let three = substitute_random(&base, 3, 1).unwrap();
        assert_eq!(three.attribute_names(), ["rand_3", "rand_2", "rand_1"]);
        assert_eq!(three.column(2), one.column(2));
        assert_eq!(three.column(2), augment_random(&base, 1, 1).column(3));
        assert_eq!(
            substitute_random(&base, 4, 1).unwrap_err(),
            FeatureError::BadCount { requested: 4, available: 3 }
        );
    }

    fn arb_matrix() -> impl Strategy<Value = FeatureMatrix> {
        (1usize..6, 1usize..20).prop_flat_map(|(h, m)| {
            prop::collection::vec(prop::collection::vec(-1e3f64..1e3, h), m)
                .prop_map(|rows| FeatureMatrix::from_rows(rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn flexibility_translation_and_scale(
            v in prop::collection::vec(0.0f64..235.0, 2..40),
            c in -500.0f64..500.0,
            s in -10.0f64..10.0,
        ) {
            let base = flexibility(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
            prop_assert!((flexibility(&shifted).unwrap() - base).abs() <= 1e-9 * (1.0 + base));
            prop_assert!((flexibility(&scaled).unwrap() - s.abs() * base).abs() <= 1e-9 * (1.0 + s.abs() * base));
        }

        #[test]
        fn normalize_properties(m in arb_matrix()) {
            let n = m.normalize();
            prop_assert!(n.rows().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
            let again = n.normalize();
            prop_assert_eq!(again.rows(), n.rows());
            for (h, range) in n.normalization().unwrap().iter().enumerate() {
                if !range.degenerate {
                    let col = n.column(h);
                    prop_assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
                    prop_assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
                }
            }
        }

        #[test]
        fn augment_then_drop_recovers_input(m in arb_matrix(), count in 0usize..6, seed: u64) {
            let n = m.normalize();
            let aug = augment_random(&n, count, seed);
            let back = aug.select(n.attribute_names()).unwrap();
            prop_assert_eq!(back, n);
        }

        #[test]
        fn daily_stats_scale_invariant(
            w in prop::collection::vec(0.0f64..5000.0, SLOTS_PER_DAY),
            s in 1e-3f64..1e3,
        ) {
            let a = full_slice("2011-03-07", |i| w[i]);
            let b = full_slice("2011-03-07", |i| w[i] * s);
            let (sa, sb) = (daily_stats(&a).unwrap(), daily_stats(&b).unwrap());
            prop_assert_eq!(sa.peak_minute, sb.peak_minute);
            prop_assert_eq!(sa.trough_minute, sb.trough_minute);
            prop_assert!(sa.peak_minute % 5 == 0 && sa.peak_minute <= 235);
        }
    }
}
