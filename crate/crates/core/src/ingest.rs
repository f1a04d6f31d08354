//! Reading ingestion, working-day calendar and evening-window slot alignment.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use thiserror::Error;

use crate::{SLOTS_PER_DAY, SLOT_MINUTES};

const WINDOW_START_HOUR: u32 = 16;
const WINDOW_SECONDS: i64 = SLOTS_PER_DAY as i64 * SLOT_MINUTES as i64 * 60;
const SLOT_SECONDS: i64 = SLOT_MINUTES as i64 * 60;
/// Half a slot: readings further than this from every slot time are discarded.
const SNAP_TOLERANCE_SECONDS: i64 = SLOT_SECONDS / 2;

/// Default minimum fraction of filled slots for a day to be kept.
pub const DEFAULT_MIN_COMPLETENESS: f64 = 0.8;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed reading: {reason}")]
    MalformedLine { line: u64, reason: String },
    #[error("line {line}: negative power {watts} W")]
    NegativePower { line: u64, watts: f64 },
    #[error("line {line}: malformed holiday date {value:?}")]
    MalformedHoliday { line: u64, value: String },
    #[error("min_completeness must lie in [0, 1], got {0}")]
    InvalidCompleteness(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub fn name(&self) -> &'static str {
        match self {
            IngestError::MalformedLine { .. } => "MalformedLine",
            IngestError::NegativePower { .. } => "NegativePower",
            IngestError::MalformedHoliday { .. } => "MalformedHoliday",
            IngestError::InvalidCompleteness(_) => "InvalidCompleteness",
            IngestError::Io(_) => "Io",
        }
    }
}

/// One timestamped power observation for one household.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterReading {
    pub household_id: String,
    pub timestamp: DateTime<FixedOffset>,
    /// Watts, never negative.
    pub power: f64,
}

/// Parses `household_id,timestamp,watts` lines.
///
/// An optional `household_id,timestamp,watts` header is skipped. Blank lines
/// are ignored. The first bad line aborts parsing with its 1-based line number.
pub fn parse_readings<R: Read>(input: R) -> Result<Vec<MeterReading>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut readings = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| csv_error(e, &record))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if std::mem::take(&mut first) && is_reading_header(&record) {
            continue;
        }
        readings.push(parse_reading_record(&record, line)?);
    }
    Ok(readings)
}

fn csv_error(err: csv::Error, record: &csv::StringRecord) -> IngestError {
    let line = err
        .position()
        .or_else(|| record.position())
        .map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::MalformedLine {
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn is_reading_header(record: &csv::StringRecord) -> bool {
    record.len() == 3
        && record[0].eq_ignore_ascii_case("household_id")
        && record[1].eq_ignore_ascii_case("timestamp")
        && record[2].eq_ignore_ascii_case("watts")
}

fn parse_reading_record(record: &csv::StringRecord, line: u64) -> Result<MeterReading, IngestError> {
    let malformed = |reason: String| IngestError::MalformedLine { line, reason };
    if record.len() != 3 {
        return Err(malformed(format!("expected 3 fields, found {}", record.len())));
    }
    let household_id = &record[0];
    if household_id.is_empty() {
        return Err(malformed("empty household id".into()));
    }
    let timestamp = DateTime::parse_from_rfc3339(&record[1])
        .map_err(|e| malformed(format!("timestamp {:?}: {e}", &record[1])))?;
    let power: f64 = record[2]
        .parse()
        .map_err(|_| malformed(format!("watts {:?} is not a number", &record[2])))?;
    if !power.is_finite() {
        return Err(malformed(format!("watts {:?} is not finite", &record[2])));
    }
    if power < 0.0 {
        return Err(IngestError::NegativePower { line, watts: power });
    }
    Ok(MeterReading {
        household_id: household_id.to_owned(),
        timestamp,
        power,
    })
}

/// Weekend days and holidays; everything else is a working day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayCalendar {
    weekend: [bool; 7],
    holidays: BTreeSet<NaiveDate>,
}

impl Default for DayCalendar {
    fn default() -> Self {
        Self::new([Weekday::Sat, Weekday::Sun], [])
    }
}

impl DayCalendar {
    pub fn new(
        weekend_days: impl IntoIterator<Item = Weekday>,
        holidays: impl IntoIterator<Item = NaiveDate>,
    ) -> Self {
        let mut weekend = [false; 7];
        for day in weekend_days {
            weekend[day.num_days_from_monday() as usize] = true;
        }
        Self {
            weekend,
            holidays: holidays.into_iter().collect(),
        }
    }

    /// Saturday/Sunday weekend plus the given holidays.
    pub fn with_holidays(holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self::new([Weekday::Sat, Weekday::Sun], holidays)
    }

    pub fn weekend_days(&self) -> impl Iterator<Item = Weekday> + '_ {
        (0u8..7)
            .filter(|&i| self.weekend[i as usize])
            .map(|i| Weekday::try_from(i).expect("0..7 is a weekday"))
    }

    pub fn holidays(&self) -> &BTreeSet<NaiveDate> {
        &self.holidays
    }

    pub fn is_working_day(&self, date: NaiveDate) -> bool {
        !self.weekend[date.weekday().num_days_from_monday() as usize] && !self.holidays.contains(&date)
    }
}

/// Free function form of [`DayCalendar::is_working_day`].
pub fn is_working_day(date: NaiveDate, calendar: &DayCalendar) -> bool {
    calendar.is_working_day(date)
}

/// Parses a holiday list: one ISO-8601 date per line, blank lines and `#`
/// comments ignored.
pub fn parse_holidays<R: Read>(mut input: R) -> Result<BTreeSet<NaiveDate>, IngestError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut dates = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let value = raw.trim();
        if value.is_empty() || value.starts_with('#') {
            continue;
        }
        let date = value.parse::<NaiveDate>().map_err(|_| IngestError::MalformedHoliday {
            line: idx as u64 + 1,
            value: value.to_owned(),
        })?;
        dates.insert(date);
    }
    Ok(dates)
}

/// Maps reading instants to local civil time and locates them in the
/// 16:00–20:00 window.
///
/// With no configured offset each reading is read in its own offset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EveningWindow {
    pub local_offset: Option<FixedOffset>,
}

impl EveningWindow {
    pub fn with_offset(offset: FixedOffset) -> Self {
        Self {
            local_offset: Some(offset),
        }
    }

    pub fn local_time(&self, timestamp: &DateTime<FixedOffset>) -> NaiveDateTime {
        match self.local_offset {
            Some(offset) => timestamp.with_timezone(&offset).naive_local(),
            None => timestamp.naive_local(),
        }
    }

    /// Seconds after 16:00 on the local date, if inside [16:00, 20:00).
    fn offset_seconds(&self, timestamp: &DateTime<FixedOffset>) -> Option<(NaiveDate, i64)> {
        let local = self.local_time(timestamp);
        let start = NaiveTime::from_hms_opt(WINDOW_START_HOUR, 0, 0).expect("valid time");
        let secs = (local.time() - start).num_seconds();
        (0..WINDOW_SECONDS).contains(&secs).then_some((local.date(), secs))
    }

    pub fn contains(&self, timestamp: &DateTime<FixedOffset>) -> bool {
        self.offset_seconds(timestamp).is_some()
    }
}

/// Keeps readings whose local time lies in [16:00, 20:00).
pub fn filter_window(readings: &[MeterReading], window: &EveningWindow) -> Vec<MeterReading> {
    readings
        .iter()
        .filter(|r| window.contains(&r.timestamp))
        .cloned()
        .collect()
}

/// One household-day on the 48-slot evening grid. Slot `i` is 16:00 + 5·i minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct EveningSlice {
    pub household_id: String,
    pub date: NaiveDate,
    pub slots: [Option<f64>; SLOTS_PER_DAY],
}

impl EveningSlice {
    pub fn new(household_id: impl Into<String>, date: NaiveDate) -> Self {
        Self {
            household_id: household_id.into(),
            date,
            slots: [None; SLOTS_PER_DAY],
        }
    }

    pub fn filled_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn completeness(&self) -> f64 {
        self.filled_count() as f64 / SLOTS_PER_DAY as f64
    }
}

/// A slice dropped for falling below the completeness threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteDay {
    pub household_id: String,
    pub date: NaiveDate,
    pub completeness: f64,
}

/// Output of [`build_day_slices`] with accounting for everything discarded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliceReport {
    /// Kept slices ordered by (household_id, date).
    pub slices: Vec<EveningSlice>,
    pub incomplete: Vec<IncompleteDay>,
    /// Household-days dropped because the date is not a working day.
    pub non_working_days: usize,
    /// Readings outside the window or further than 150 s from every slot.
    pub off_grid_readings: usize,
    /// Readings that overwrote an earlier reading in the same slot.
    pub duplicate_slots: usize,
}

/// Groups readings into per-household working-day slices on the slot grid.
///
/// Readings snap to the nearest slot within ±150 s; a later reading for an
/// occupied slot replaces the earlier one.
pub fn build_day_slices(
    readings: &[MeterReading],
    calendar: &DayCalendar,
    window: &EveningWindow,
    min_completeness: f64,
) -> Result<SliceReport, IngestError> {
    if !(0.0..=1.0).contains(&min_completeness) {
        return Err(IngestError::InvalidCompleteness(min_completeness));
    }
    let mut report = SliceReport::default();
    let mut days: BTreeMap<(&str, NaiveDate), [Option<f64>; SLOTS_PER_DAY]> = BTreeMap::new();

    for reading in readings {
        let Some((date, secs)) = window.offset_seconds(&reading.timestamp) else {
            report.off_grid_readings += 1;
            continue;
        };
        let slot = (secs + SNAP_TOLERANCE_SECONDS) / SLOT_SECONDS;
        if slot as usize >= SLOTS_PER_DAY || (secs - slot * SLOT_SECONDS).abs() > SNAP_TOLERANCE_SECONDS {
            report.off_grid_readings += 1;
            continue;
        }
        let slots = days
            .entry((reading.household_id.as_str(), date))
            .or_insert([None; SLOTS_PER_DAY]);
        if slots[slot as usize].replace(reading.power).is_some() {
            report.duplicate_slots += 1;
        }
    }

    for ((household_id, date), slots) in days {
        if !calendar.is_working_day(date) {
            report.non_working_days += 1;
            continue;
        }
        let slice = EveningSlice {
            household_id: household_id.to_owned(),
            date,
            slots,
        };
        let completeness = slice.completeness();
        if completeness < min_completeness {
            report.incomplete.push(IncompleteDay {
                household_id: slice.household_id,
                date,
                completeness,
            });
        } else {
            report.slices.push(slice);
        }
    }
    Ok(report)
}
