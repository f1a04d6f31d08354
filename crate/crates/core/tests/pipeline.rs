use std::collections::HashMap;

use loadflex::experiments::{self, TableFormat};
use loadflex::features::{self, DEFAULT_ATTRIBUTES, FLEX_MAX};
use loadflex::ingest::{self, DEFAULT_MIN_COMPLETENESS};
use loadflex::io;
use loadflex::synth::{self, SynthSpec};
use loadflex::validity;
use loadflex::{Archetype, DayCalendar, DbiPolicy, EveningWindow, HouseholdRecord, KMeansConfig};

fn records(spec: &SynthSpec) -> Vec<HouseholdRecord> {
    let readings = synth::generate(spec);
    let report = ingest::build_day_slices(
        &readings,
        &DayCalendar::default(),
        &EveningWindow::default(),
        DEFAULT_MIN_COMPLETENESS,
    )
    .unwrap();
    assert!(report.incomplete.is_empty());
    assert_eq!(report.off_grid_readings, 0);
    let summary = features::records_from_slices(&report.slices);
    assert!(summary.skipped.is_empty());
    summary.records
}

#[test]
fn readings_survive_a_file_round_trip() {
    let spec = SynthSpec::four_archetypes(2, 5, 11);
    let readings = synth::generate(&spec);
    let mut buf = Vec::new();
    io::write_readings(&mut buf, &readings).unwrap();
    assert_eq!(ingest::parse_readings(&buf[..]).unwrap(), readings);
}

#[test]
fn steady_archetype_has_zero_flexibility() {
    let steady = Archetype {
        name: "clockwork".into(),
        base_load: 200.0,
        peak_magnitude: 1000.0,
        peak_time_mean: 90.0,
        peak_time_jitter: 0.0,
        trough_time_mean: 30.0,
        trough_time_jitter: 0.0,
        energy_scale: 1.0,
    };
    let spec = SynthSpec::new(vec![(steady, 3)], 20, 1).unwrap();
    for rec in records(&spec) {
        assert_eq!(rec.flex_max, 0.0);
        assert_eq!(rec.flex_min, 0.0);
        assert_eq!(rec.day_count, 20);
    }
}

#[test]
fn jitter_pair_separates_on_flex_max() {
    let spec = SynthSpec::jitter_pair(10, 40, 3);
    let recs = records(&spec);
    let matrix = features::build_matrix(&recs, &[FLEX_MAX]).unwrap().normalize();
    let fit = loadflex::kmeans::kmeans(&matrix, 2, &KMeansConfig::with_seed(3)).unwrap();
    let truth: HashMap<_, _> = synth::ground_truth_labels(&spec).into_iter().collect();
    let mut cluster_of: HashMap<&str, usize> = HashMap::new();
    for (id, &label) in matrix.row_ids().iter().zip(&fit.assignments) {
        let archetype = truth[id].as_str();
        assert_eq!(*cluster_of.entry(archetype).or_insert(label), label, "{id}");
    }
    assert_eq!(cluster_of.len(), 2);
    assert_ne!(cluster_of["steady"], cluster_of["variable"]);
}

#[test]
fn records_to_sweep_tables() {
    let recs = records(&SynthSpec::four_archetypes(5, 15, 2));
    let mut buf = Vec::new();
    io::write_records(&mut buf, &recs, false).unwrap();
    let reread = io::read_records(&buf[..]).unwrap();
    let matrix = features::build_matrix(&reread, &DEFAULT_ATTRIBUTES).unwrap().normalize();

    let config = KMeansConfig::with_seed(2);
    let clustering = loadflex::kmeans::kmeans(&matrix, 4, &config).unwrap();
    let report = validity::index_report(&clustering, &matrix, DbiPolicy::Suppress).unwrap();
    assert_eq!((report.k, report.h), (4, 3));
    assert!((report.ball - report.mia * report.mia).abs() < 1e-9);

    let sweep = experiments::sweep_attribute_quality(&matrix, 2, &config).unwrap();
    let csv = experiments::emit_table(&sweep, TableFormat::Csv, true);
    assert_eq!(csv.lines().count(), 5);
    let json = experiments::emit_table(&sweep, TableFormat::Json, false);
    assert_eq!(loadflex::SweepResult::from_json(&json).unwrap(), sweep);
}
