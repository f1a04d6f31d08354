//! Household load-profile clustering for interval electricity meter data.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`ingest`] parses `household_id,timestamp,watts` readings. It keeps
//!    working-day readings in the 16:00–20:00 evening peak and aligns them
//!    onto a 48-slot, five-minute grid.
//! 2. [`features`] reduces each household to a representative record: mean
//!    evening energy plus the day-to-day standard deviation of its peak and
//!    trough times. It then builds and min-max normalizes the feature matrix.
//! 3. [`kmeans`] partitions households with seeded, multi-restart Lloyd
//!    iterations. An exhaustive oracle checks small instances.
//! 4. [`validity`] scores a clustering with MIA, CDI, SMI, DBI and the
//!    Ball–Hall index.
//! 5. [`experiments`] runs the cluster-count, attribute-count and
//!    attribute-quality sweeps.
//!
//! [`synth`] generates seeded households with known behavioural archetypes,
//! and [`io`] holds the delimited-text and JSON file formats.

pub mod experiments;
pub mod features;
pub mod ingest;
pub mod io;
pub mod kmeans;
pub mod rng;
pub mod synth;
pub mod validity;

pub use experiments::{SweepKind, SweepResult, SweepRow, TableFormat};
pub use features::{DailyStats, FeatureError, FeatureMatrix, HouseholdRecord};
pub use ingest::{DayCalendar, EveningSlice, EveningWindow, IngestError, MeterReading};
pub use kmeans::{Clustering, KMeansConfig, KMeansError};
pub use synth::{Archetype, SynthSpec};
pub use validity::{DbiPolicy, IndexFlag, IndexReport, ValidityError};

/// Number of five-minute slots in the 16:00–20:00 window.
pub const SLOTS_PER_DAY: usize = 48;

/// Slot spacing in minutes.
pub const SLOT_MINUTES: u32 = 5;
