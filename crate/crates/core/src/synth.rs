//! Seeded synthetic households with known behavioural archetypes.
//!
//! Each household has a flat base load. Every working evening it adds one
//! peak event and one dip to half the base load. The peak and trough slots
//! are drawn from Gaussians truncated to the window, so an archetype's
//! jitter directly controls the spread of its daily peak and trough times.

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, TimeZone, Weekday};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::MeterReading;
use crate::rng::{self, domain, StreamRng};
use crate::{SLOTS_PER_DAY, SLOT_MINUTES};

const LAST_MINUTE: f64 = ((SLOTS_PER_DAY - 1) as u32 * SLOT_MINUTES) as f64;
/// Relative standard deviation of the per-household usage multiplier.
const HOUSEHOLD_SPREAD: f64 = 0.1;
const TROUGH_FRACTION: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("at least one archetype is required")]
    NoArchetypes,
    #[error("archetype {0:?} has no households")]
    ZeroCount(String),
    #[error("at least 2 days are required, got {0}")]
    TooFewDays(usize),
    #[error("archetype {name:?}: {reason}")]
    InvalidArchetype { name: String, reason: String },
}

impl SynthError {
    pub fn name(&self) -> &'static str {
        match self {
            SynthError::NoArchetypes => "NoArchetypes",
            SynthError::ZeroCount(_) => "ZeroCount",
            SynthError::TooFewDays(_) => "TooFewDays",
            SynthError::InvalidArchetype { .. } => "InvalidArchetype",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// Watts drawn in every slot.
    pub base_load: f64,
    /// Extra watts in the peak slot.
    pub peak_magnitude: f64,
    /// Minutes after 16:00.
    pub peak_time_mean: f64,
    /// Standard deviation of the daily peak time, minutes.
    pub peak_time_jitter: f64,
    pub trough_time_mean: f64,
    pub trough_time_jitter: f64,
    /// Multiplier on all watt values.
    pub energy_scale: f64,
}

impl Archetype {
    fn validate(&self) -> Result<(), SynthError> {
        let invalid = |reason: &str| SynthError::InvalidArchetype {
            name: self.name.clone(),
            reason: reason.to_owned(),
        };
        let quantities = [
            self.base_load,
            self.peak_magnitude,
            self.peak_time_jitter,
            self.trough_time_jitter,
            self.energy_scale,
        ];
        if quantities.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("watt, minute and scale quantities must be finite and non-negative"));
        }
        for t in [self.peak_time_mean, self.trough_time_mean] {
            if !(0.0..=LAST_MINUTE).contains(&t) {
                return Err(invalid("mean times must lie in [0, 235] minutes"));
            }
        }
        Ok(())
    }

    fn preset(name: &str, base_load: f64, peak_magnitude: f64, jitter: f64) -> Self {
        Self {
            name: name.to_owned(),
            base_load,
            peak_magnitude,
            peak_time_mean: 120.0,
            peak_time_jitter: jitter,
            trough_time_mean: 60.0,
            trough_time_jitter: jitter,
            energy_scale: 1.0,
        }
    }
}

/// Archetypes with household counts, number of working days and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    archetypes: Vec<(Archetype, usize)>,
    days: usize,
    seed: u64,
    start_date: NaiveDate,
}

impl SynthSpec {
    pub fn new(archetypes: Vec<(Archetype, usize)>, days: usize, seed: u64) -> Result<Self, SynthError> {
        if archetypes.is_empty() {
            return Err(SynthError::NoArchetypes);
        }
        for (a, n) in &archetypes {
            a.validate()?;
            if *n == 0 {
                return Err(SynthError::ZeroCount(a.name.clone()));
            }
        }
        if days < 2 {
            return Err(SynthError::TooFewDays(days));
        }
        Ok(Self {
            archetypes,
            days,
            seed,
            start_date: NaiveDate::from_ymd_opt(2011, 1, 3).expect("valid date"),
        })
    }

    /// First calendar day; generation starts at the first weekday on or after it.
    pub fn with_start_date(mut self, date: NaiveDate) -> Self {
        self.start_date = date;
        self
    }

    /// Four usage × variability archetypes, 45 households each.
    pub fn default_corpus(seed: u64) -> Self {
        Self::four_archetypes(45, 250, seed)
    }

    pub fn four_archetypes(per_archetype: usize, days: usize, seed: u64) -> Self {
        let archetypes = vec![
            (Archetype::preset("low_steady", 150.0, 800.0, 10.0), per_archetype),
            (Archetype::preset("low_variable", 150.0, 800.0, 60.0), per_archetype),
            (Archetype::preset("high_steady", 500.0, 3000.0, 10.0), per_archetype),
            (Archetype::preset("high_variable", 500.0, 3000.0, 60.0), per_archetype),
        ];
        Self::new(archetypes, days, seed).expect("preset archetypes are valid")
    }

    /// Two archetypes that differ only in peak-time jitter (5 vs 60 minutes).
    pub fn jitter_pair(per_archetype: usize, days: usize, seed: u64) -> Self {
        let archetypes = vec![
            (Archetype::preset("steady", 300.0, 1500.0, 5.0), per_archetype),
            (Archetype::preset("variable", 300.0, 1500.0, 60.0), per_archetype),
        ];
        Self::new(archetypes, days, seed).expect("preset archetypes are valid")
    }

    pub fn archetypes(&self) -> &[(Archetype, usize)] {
        &self.archetypes
    }

    pub fn days(&self) -> usize {
        self.days
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn household_count(&self) -> usize {
        self.archetypes.iter().map(|(_, n)| n).sum()
    }

    pub fn household_id(&self, index: usize) -> String {
        let width = self.household_count().to_string().len().max(3);
        format!("H{:0width$}", index + 1)
    }

    /// Archetype index per household, shuffled by seed.
    fn layout(&self) -> Vec<usize> {
        let mut layout: Vec<usize> = self
            .archetypes
            .iter()
            .enumerate()
            .flat_map(|(i, (_, n))| std::iter::repeat_n(i, *n))
            .collect();
        layout.shuffle(&mut rng::stream(self.seed, domain::SYNTH_LAYOUT, 0));
        layout
    }

    /// The first `days` Monday–Friday dates from the start date.
    pub fn working_dates(&self) -> Vec<NaiveDate> {
        self.start_date
            .iter_days()
            .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
            .take(self.days)
            .collect()
    }
}

/// Household id → archetype name, in household order.
pub fn ground_truth_labels(spec: &SynthSpec) -> Vec<(String, String)> {
    spec.layout()
        .into_iter()
        .enumerate()
        .map(|(i, a)| (spec.household_id(i), spec.archetypes[a].0.name.clone()))
        .collect()
}

fn draw_slot(rng: &mut StreamRng, mean: f64, jitter: f64) -> usize {
    let minute = if jitter > 0.0 {
        let normal = Normal::new(mean, jitter).expect("validated jitter");
        (0..64)
            .map(|_| normal.sample(rng))
            .find(|m| (0.0..=LAST_MINUTE).contains(m))
            .unwrap_or(mean)
    } else {
        mean
    };
    ((minute / SLOT_MINUTES as f64).round() as usize).min(SLOTS_PER_DAY - 1)
}

fn household_readings(spec: &SynthSpec, index: usize, archetype: &Archetype, dates: &[NaiveDate]) -> Vec<MeterReading> {
    let mut rng = rng::stream(spec.seed, domain::SYNTH_HOUSEHOLD, index as u64);
    let spread = Normal::new(0.0, HOUSEHOLD_SPREAD).expect("positive spread");
    let factor = archetype.energy_scale * (1.0 + spread.sample(&mut rng)).clamp(0.5, 1.5);
    let base = archetype.base_load * factor;
    let peak = archetype.peak_magnitude * factor;
    let id = spec.household_id(index);
    let utc = FixedOffset::east_opt(0).expect("zero offset");

    let mut out = Vec::with_capacity(dates.len() * SLOTS_PER_DAY);
    for date in dates {
        let peak_slot = draw_slot(&mut rng, archetype.peak_time_mean, archetype.peak_time_jitter);
        let mut trough_slot = draw_slot(&mut rng, archetype.trough_time_mean, archetype.trough_time_jitter);
        if trough_slot == peak_slot {
            trough_slot = if peak_slot + 1 < SLOTS_PER_DAY { peak_slot + 1 } else { peak_slot - 1 };
        }
        let start: DateTime<FixedOffset> = utc
            .from_local_datetime(&date.and_hms_opt(16, 0, 0).expect("valid time"))
            .single()
            .expect("fixed offset is unambiguous");
        for slot in 0..SLOTS_PER_DAY {
            let mut watts = base;
            if slot == peak_slot {
                watts += peak;
            } else if slot == trough_slot {
                watts = base * TROUGH_FRACTION;
            }
            out.push(MeterReading {
                household_id: id.clone(),
                timestamp: start + Duration::minutes((slot as u32 * SLOT_MINUTES) as i64),
                power: watts,
            });
        }
    }
    out
}

/// Readings for every household and working day, ordered by household,
/// date and slot.
pub fn generate(spec: &SynthSpec) -> Vec<MeterReading> {
    let dates = spec.working_dates();
    let layout = spec.layout();
    let per_household: Vec<Vec<MeterReading>> = layout
        .par_iter()
        .enumerate()
        .map(|(i, &a)| household_readings(spec, i, &spec.archetypes[a].0, &dates))
        .collect();
    per_household.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{self, FLEX_MAX};
    use crate::ingest::{build_day_slices, DayCalendar, EveningWindow};

    fn records(spec: &SynthSpec) -> Vec<features::HouseholdRecord> {
        let readings = generate(spec);
        let rep = build_day_slices(&readings, &DayCalendar::default(), &EveningWindow::default(), 1.0).unwrap();
        let summary = features::records_from_slices(&rep.slices);
        assert!(summary.skipped.is_empty());
        summary.records
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    #[test]
    fn spec_validation() {
        assert_eq!(SynthSpec::new(vec![], 10, 0).unwrap_err(), SynthError::NoArchetypes);
        let a = Archetype::preset("a", 1.0, 1.0, 0.0);
        assert!(matches!(SynthSpec::new(vec![(a.clone(), 0)], 10, 0), Err(SynthError::ZeroCount(_))));
        assert_eq!(SynthSpec::new(vec![(a.clone(), 1)], 1, 0).unwrap_err(), SynthError::TooFewDays(1));
        let bad = Archetype { peak_time_mean: 240.0, ..a.clone() };
        assert!(matches!(SynthSpec::new(vec![(bad, 1)], 5, 0), Err(SynthError::InvalidArchetype { .. })));
        let bad = Archetype { base_load: -1.0, ..a };
        assert!(matches!(SynthSpec::new(vec![(bad, 1)], 5, 0), Err(SynthError::InvalidArchetype { .. })));
    }

    #[test]
    fn readings_in_window_on_working_days() {
        let spec = SynthSpec::four_archetypes(2, 12, 5);
        let readings = generate(&spec);
        assert_eq!(readings.len(), 8 * 12 * SLOTS_PER_DAY);
        let window = EveningWindow::default();
        let cal = DayCalendar::default();
        assert!(readings.iter().all(|r| window.contains(&r.timestamp)));
        assert!(readings.iter().all(|r| cal.is_working_day(r.timestamp.date_naive())));
        assert!(readings.iter().all(|r| r.power >= 0.0));
        assert_eq!(readings, generate(&spec));
    }

    #[test]
    fn labels() {
        let spec = SynthSpec::jitter_pair(45, 10, 3);
        let labels = ground_truth_labels(&spec);
        assert_eq!(labels.len(), 90);
        assert_eq!(labels.iter().filter(|(_, a)| a == "steady").count(), 45);
        assert_eq!(labels[0].0, "H001");
        let longer = SynthSpec::jitter_pair(45, 30, 3);
        assert_eq!(ground_truth_labels(&longer), labels);
    }

    #[test]
    fn zero_jitter_gives_zero_flex_and_constant_energy() {
        let a = Archetype::preset("still", 200.0, 900.0, 0.0);
        let spec = SynthSpec::new(vec![(a, 3)], 8, 11).unwrap();
        let readings = generate(&spec);
        let rep = build_day_slices(&readings, &DayCalendar::default(), &EveningWindow::default(), 1.0).unwrap();
        for rec in features::records_from_slices(&rep.slices).records {
            assert_eq!(rec.flex_max, 0.0);
            assert_eq!(rec.flex_min, 0.0);
        }
        let energies: Vec<f64> = rep
            .slices
            .iter()
            .filter(|s| s.household_id == "H001")
            .map(|s| features::daily_stats(s).unwrap().energy)
            .collect();
        assert_eq!(energies.len(), 8);
        assert!(energies.iter().all(|&e| e == energies[0]));
    }

    #[test]
    fn jitter_orders_flexibility() {
        let grid = [0.0, 15.0, 30.0, 60.0];
        let medians: Vec<f64> = grid
            .iter()
            .map(|&jitter| {
                let per_seed: Vec<f64> = (0..20)
                    .map(|seed| {
                        let a = Archetype {
                            peak_time_jitter: jitter,
                            ..Archetype::preset("a", 300.0, 1500.0, 0.0)
                        };
                        let spec = SynthSpec::new(vec![(a, 3)], 30, seed).unwrap();
                        let recs = records(&spec);
                        median(recs.iter().map(|r| r.attribute(FLEX_MAX).unwrap()).collect())
                    })
                    .collect();
                median(per_seed)
            })
            .collect();
        for w in medians.windows(2) {
            assert!(w[0] <= w[1], "{medians:?}");
        }
    }
}
