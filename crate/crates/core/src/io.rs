//! Delimited-text and JSON file formats.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{slot_attribute_name, FeatureError, FeatureMatrix, HouseholdRecord, FLEX_MAX, FLEX_MIN, TOTAL_USAGE};
use crate::ingest::MeterReading;
use crate::kmeans::{Clustering, KMeansConfig};
use crate::SLOTS_PER_DAY;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {reason}")]
    Format { line: u64, reason: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

impl IoError {
    pub fn name(&self) -> &'static str {
        match self {
            IoError::Io(_) => "Io",
            IoError::Csv(_) => "MalformedCsv",
            IoError::Json(_) => "MalformedJson",
            IoError::Format { .. } => "MalformedLine",
            IoError::Feature(e) => e.name(),
        }
    }
}

fn format_error(record: &csv::StringRecord, reason: impl Into<String>) -> IoError {
    IoError::Format {
        line: record.position().map_or(0, |p| p.line()),
        reason: reason.into(),
    }
}

fn parse_f64(record: &csv::StringRecord, idx: usize, what: &str) -> Result<f64, IoError> {
    record[idx]
        .trim()
        .parse()
        .map_err(|_| format_error(record, format!("{what} {:?} is not a number", &record[idx])))
}

/// `household_id,timestamp,watts` with a header line.
pub fn write_readings<W: Write>(out: W, readings: &[MeterReading]) -> Result<(), IoError> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "household_id,timestamp,watts")?;
    for r in readings {
        writeln!(
            w,
            "{},{},{}",
            r.household_id,
            r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, false),
            r.power
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `household_id,archetype`.
pub fn write_ground_truth<W: Write>(out: W, labels: &[(String, String)]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["household_id", "archetype"])?;
    for (id, label) in labels {
        w.write_record([id, label])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth<R: Read>(input: R) -> Result<Vec<(String, String)>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    r.records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(format_error(&rec, "expected household_id,archetype"));
            }
            Ok((rec[0].to_owned(), rec[1].to_owned()))
        })
        .collect()
}

const RECORD_FIXED: [&str; 5] = ["household_id", TOTAL_USAGE, FLEX_MAX, FLEX_MIN, "day_count"];

/// Household records with header
/// `household_id,total_usage,flex_max,flex_min,day_count[,slot_000…slot_235][,extra…]`.
///
/// Slot columns are written when `include_slots` is set; a slot never
/// observed for a household is an empty cell, as is a missing extra.
pub fn write_records<W: Write>(out: W, records: &[HouseholdRecord], include_slots: bool) -> Result<(), IoError> {
    let mut extras: Vec<&str> = Vec::new();
    for rec in records {
        for (name, _) in &rec.extra_attributes {
            if !extras.contains(&name.as_str()) {
                extras.push(name);
            }
        }
    }
    let mut header: Vec<String> = RECORD_FIXED.iter().map(|s| s.to_string()).collect();
    if include_slots {
        header.extend((0..SLOTS_PER_DAY).map(slot_attribute_name));
    }
    header.extend(extras.iter().map(|s| s.to_string()));

    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for rec in records {
        let mut row = vec![
            rec.household_id.clone(),
            rec.total_usage.to_string(),
            rec.flex_max.to_string(),
            rec.flex_min.to_string(),
            rec.day_count.to_string(),
        ];
        if include_slots {
            let slots = rec.slot_averages.as_deref();
            row.extend((0..SLOTS_PER_DAY).map(|i| {
                slots
                    .and_then(|s| s[i])
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            }));
        }
        row.extend(extras.iter().map(|name| {
            rec.extra_attributes
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default()
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<HouseholdRecord>, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < RECORD_FIXED.len() || header.iter().zip(RECORD_FIXED).any(|(a, b)| a != b) {
        return Err(format_error(&header, format!("header must start with {}", RECORD_FIXED.join(","))));
    }
    let slot_names: Vec<String> = (0..SLOTS_PER_DAY).map(slot_attribute_name).collect();
    let rest: Vec<&str> = header.iter().skip(RECORD_FIXED.len()).collect();
    let has_slots = rest.len() >= SLOTS_PER_DAY && rest[..SLOTS_PER_DAY].iter().zip(&slot_names).all(|(a, b)| a == b);
    let extra_start = RECORD_FIXED.len() + if has_slots { SLOTS_PER_DAY } else { 0 };

    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let day_count = rec[4]
            .parse()
            .map_err(|_| format_error(&rec, format!("day_count {:?} is not a count", &rec[4])))?;
        let slot_averages = if has_slots {
            let mut slots = Vec::with_capacity(SLOTS_PER_DAY);
            for i in 0..SLOTS_PER_DAY {
                let idx = RECORD_FIXED.len() + i;
                slots.push(if rec[idx].is_empty() { None } else { Some(parse_f64(&rec, idx, "slot average")?) });
            }
            Some(slots)
        } else {
            None
        };
        let mut extra_attributes = Vec::new();
        for idx in extra_start..header.len() {
            if !rec[idx].is_empty() {
                extra_attributes.push((header[idx].to_owned(), parse_f64(&rec, idx, &header[idx])?));
            }
        }
        records.push(HouseholdRecord {
            household_id: rec[0].to_owned(),
            total_usage: parse_f64(&rec, 1, TOTAL_USAGE)?,
            flex_max: parse_f64(&rec, 2, FLEX_MAX)?,
            flex_min: parse_f64(&rec, 3, FLEX_MIN)?,
            slot_averages,
            extra_attributes,
            day_count,
        });
    }
    Ok(records)
}

/// `household_id,<attribute>…`, one row per household.
pub fn write_matrix<W: Write>(out: W, matrix: &FeatureMatrix) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["household_id".to_owned()];
    header.extend(matrix.attribute_names().iter().cloned());
    w.write_record(&header)?;
    for (id, row) in matrix.row_ids().iter().zip(matrix.rows()) {
        let mut cells = vec![id.clone()];
        cells.extend(row.iter().map(f64::to_string));
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<FeatureMatrix, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("household_id") {
        return Err(format_error(&header, "first column must be household_id"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        ids.push(rec[0].to_owned());
        rows.push(
            (1..rec.len())
                .map(|i| parse_f64(&rec, i, &header[i]))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(FeatureMatrix::new(ids, names, rows)?)
}

/// `household_id,cluster`.
pub fn write_assignments<W: Write>(out: W, ids: &[String], clustering: &Clustering) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["household_id", "cluster"])?;
    for (id, a) in ids.iter().zip(&clustering.assignments) {
        w.write_record([id.as_str(), &a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_assignments<R: Read>(input: R) -> Result<Vec<(String, usize)>, IoError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(format_error(&rec, "expected household_id,cluster"));
        }
        let label = rec[1]
            .parse()
            .map_err(|_| format_error(&rec, format!("cluster {:?} is not a label", &rec[1])))?;
        out.push((rec[0].to_owned(), label));
    }
    Ok(out)
}

/// Orders assignment labels to match the matrix rows.
pub fn align_assignments(matrix: &FeatureMatrix, assignments: &[(String, usize)]) -> Result<Vec<usize>, IoError> {
    let lookup: HashMap<&str, usize> = assignments.iter().map(|(id, a)| (id.as_str(), *a)).collect();
    if lookup.len() != assignments.len() {
        return Err(IoError::Format {
            line: 0,
            reason: "duplicate household in assignments".into(),
        });
    }
    matrix
        .row_ids()
        .iter()
        .map(|id| {
            lookup.get(id.as_str()).copied().ok_or_else(|| IoError::Format {
                line: 0,
                reason: format!("household {id} has no cluster assignment"),
            })
        })
        .collect()
}

/// JSON companion to the assignments file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringMetadata {
    pub k: usize,
    pub attributes: Vec<String>,
    pub centres: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub wcss: f64,
    pub seed: u64,
    pub restarts: usize,
    pub merged_clusters: usize,
}

impl ClusteringMetadata {
    pub fn new(clustering: &Clustering, matrix: &FeatureMatrix, config: &KMeansConfig) -> Self {
        Self {
            k: clustering.k,
            attributes: matrix.attribute_names().to_vec(),
            centres: clustering.centres.clone(),
            sizes: clustering.sizes.clone(),
            wcss: clustering.wcss,
            seed: config.seed,
            restarts: config.restarts,
            merged_clusters: clustering.merged_clusters,
        }
    }
}
