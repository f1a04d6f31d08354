//! `loadflex` command-line front end.
//!
//! Subcommands follow the analysis flow: `synth` → `features` → `cluster` →
//! `indexes`, plus the three sweeps and `plotdata`. Commands that consume
//! household records accept either a readings file or a records file; with
//! no `--input` they run on the default synthetic corpus for `--seed`.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a data error (the
//! error's name is printed on stderr).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::FixedOffset;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use loadflex::experiments::{self, ExperimentError};
use loadflex::features::{self, FeatureError, DEFAULT_ATTRIBUTES};
use loadflex::ingest::{self, DEFAULT_MIN_COMPLETENESS};
use loadflex::io::{self as lfio, ClusteringMetadata, IoError};
use loadflex::kmeans::{self, KMeansError};
use loadflex::synth::{self, SynthError, SynthSpec};
use loadflex::validity::{self, ValidityError};
use loadflex::{
    Clustering, DayCalendar, DbiPolicy, EveningWindow, FeatureMatrix, HouseholdRecord, IngestError, KMeansConfig,
    SweepResult, TableFormat,
};

pub const TOOL_VERSION: &str = concat!("loadflex ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "loadflex", version, about = "Evening-peak load flexibility clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic readings corpus with ground-truth archetypes.
    Synth(SynthArgs),
    /// Turn meter readings into per-household records.
    Features(FeaturesArgs),
    /// Cluster household records with k-means.
    Cluster(ClusterArgs),
    /// Compute validity indexes for an existing clustering.
    Indexes(IndexesArgs),
    /// Validity indexes over a range of cluster counts.
    SweepK(SweepKArgs),
    /// Validity indexes as random attributes are added (K = 4).
    SweepAttrs(SweepArgs),
    /// Validity indexes as real attributes are replaced by random ones (K = 4).
    SweepQuality(SweepArgs),
    /// Whitespace-separated scatter data: attribute columns then cluster.
    Plotdata(PlotArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Features(_) => "features",
            Command::Cluster(_) => "cluster",
            Command::Indexes(_) => "indexes",
            Command::SweepK(_) => "sweep-k",
            Command::SweepAttrs(_) => "sweep-attrs",
            Command::SweepQuality(_) => "sweep-quality",
            Command::Plotdata(_) => "plotdata",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Corpus {
    /// Four usage × variability archetypes.
    Four,
    /// Two archetypes differing only in peak-time jitter.
    JitterPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Exclude,
    Suppress,
}

impl From<PolicyArg> for DbiPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Exclude => DbiPolicy::Exclude,
            PolicyArg::Suppress => DbiPolicy::Suppress,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Json => TableFormat::Json,
        }
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

fn utc_offset(s: &str) -> Result<FixedOffset, String> {
    s.parse::<FixedOffset>()
        .map_err(|_| format!("{s:?} is not an offset like +01:00"))
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory for all artifacts; created if missing.
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

/// Where household records come from.
#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Readings (`household_id,timestamp,watts`) or records csv. Omit to use
    /// the default synthetic corpus.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Seed for synthesis, random attributes and k-means.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum fraction of the 48 evening slots a day needs to be kept.
    #[arg(long, default_value_t = DEFAULT_MIN_COMPLETENESS, value_parser = fraction)]
    pub min_completeness: f64,
    /// Holiday list, one ISO date per line.
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    /// Read timestamps in this offset instead of their own.
    #[arg(long, value_parser = utc_offset, allow_hyphen_values = true)]
    pub utc_offset: Option<FixedOffset>,
}

#[derive(Debug, Args)]
pub struct KMeansArgs {
    #[arg(long, default_value_t = 25, value_parser = positive)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub max_iterations: usize,
    /// Merge clusters smaller than this into their nearest neighbour.
    #[arg(long, default_value_t = 0)]
    pub min_cluster_size: usize,
    /// Cluster raw attribute values instead of min-max normalized ones.
    #[arg(long)]
    pub no_normalize: bool,
}

impl KMeansArgs {
    fn config(&self, seed: u64) -> KMeansConfig {
        KMeansConfig {
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            min_cluster_size: self.min_cluster_size,
            seed,
            ..KMeansConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Round csv cells to two decimals, as in printed tables.
    #[arg(long = "display-2dp")]
    pub display_2dp: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "four")]
    pub corpus: Corpus,
    #[arg(long, default_value_t = 45, value_parser = positive)]
    pub households_per_archetype: usize,
    #[arg(long, default_value_t = 250)]
    pub days: usize,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write the 48 per-slot averages.
    #[arg(long)]
    pub slots: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[arg(long, default_value_t = 4, value_parser = positive)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ATTRIBUTES.map(String::from))]
    pub attrs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IndexesArgs {
    /// Matrix csv as written by `cluster`.
    #[arg(long)]
    pub input: PathBuf,
    /// `household_id,cluster` csv.
    #[arg(long)]
    pub assignments: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value = "suppress")]
    pub dbi_policy: PolicyArg,
}

#[derive(Debug, Args)]
pub struct SweepKArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 20)]
    pub k_max: usize,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ATTRIBUTES.map(String::from))]
    pub attrs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[command(flatten)]
    pub table: TableArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[arg(long, default_value_t = 4, value_parser = positive)]
    pub k: usize,
    /// Two or three attributes; they are both clustered and plotted.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ATTRIBUTES.map(String::from))]
    pub attrs: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error("no household has enough complete working days")]
    NoHouseholds,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::File { .. } => "Io",
            CliError::NoHouseholds => "NoHouseholds",
            CliError::Ingest(e) => e.name(),
            CliError::Feature(e) => e.name(),
            CliError::KMeans(e) => e.name(),
            CliError::Validity(e) => e.name(),
            CliError::Experiment(e) => e.name(),
            CliError::Synth(e) => e.name(),
            CliError::Io(e) => e.name(),
            CliError::Json(_) => "MalformedJson",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

/// Written last by every successful run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub config: KMeansConfig,
    pub outputs: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest_{command}.json")
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            e.exit_code()
        }
    }
}

/// Tracks the artifacts of one invocation.
struct Artifacts {
    dir: PathBuf,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::File {
            path: dir.to_owned(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_owned(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|source| CliError::File {
            path: path.clone(),
            source,
        })?;
        self.outputs.push(path.display().to_string());
        Ok(BufWriter::new(file))
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        w.write_all(contents).and_then(|_| w.flush()).map_err(|source| CliError::File {
            path: self.dir.join(name),
            source,
        })
    }

    fn finish(mut self, command: &str, seed: u64, config: KMeansConfig) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_owned(),
            inputs: std::mem::take(&mut self.inputs),
            seed,
            config,
            outputs: std::mem::take(&mut self.outputs),
            tool_version: TOOL_VERSION.to_owned(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(RunManifest::file_name(command));
        fs::write(&path, text).map_err(|source| CliError::File { path, source })
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::File {
        path: path.to_owned(),
        source,
    })
}

fn is_records_file(bytes: &[u8]) -> bool {
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let mut fields = first.split(|&b| b == b',').map(|f| String::from_utf8_lossy(f).trim().to_owned());
    fields.next().as_deref() == Some("household_id") && fields.next().as_deref() == Some(features::TOTAL_USAGE)
}

/// Loads household records per `source`, noting consumed files in `artifacts`.
fn load_records(source: &SourceArgs, artifacts: &mut Artifacts) -> Result<Vec<HouseholdRecord>, CliError> {
    let readings = match &source.input {
        None => synth::generate(&SynthSpec::default_corpus(source.seed)),
        Some(path) => {
            artifacts.inputs.push(path.display().to_string());
            let bytes = read_file(path)?;
            if is_records_file(&bytes) {
                return Ok(lfio::read_records(&bytes[..])?);
            }
            ingest::parse_readings(&bytes[..])?
        }
    };
    let holidays = match &source.holidays {
        Some(path) => {
            artifacts.inputs.push(path.display().to_string());
            ingest::parse_holidays(&read_file(path)?[..])?
        }
        None => Default::default(),
    };
    let calendar = DayCalendar::with_holidays(holidays);
    let window = source.utc_offset.map(EveningWindow::with_offset).unwrap_or_default();
    let report = ingest::build_day_slices(&readings, &calendar, &window, source.min_completeness)?;
    let summary = features::records_from_slices(&report.slices);
    eprintln!(
        "ingest: {} readings, {} day slices kept, {} incomplete, {} non-working, {} off-grid, {} duplicate; \
         {} households, {} skipped",
        readings.len(),
        report.slices.len(),
        report.incomplete.len(),
        report.non_working_days,
        report.off_grid_readings,
        report.duplicate_slots,
        summary.records.len(),
        summary.skipped.len(),
    );
    if summary.records.is_empty() {
        return Err(CliError::NoHouseholds);
    }
    Ok(summary.records)
}

fn prepare_matrix<S: AsRef<str>>(
    records: &[HouseholdRecord],
    attrs: &[S],
    normalize: bool,
) -> Result<FeatureMatrix, CliError> {
    let matrix = features::build_matrix(records, attrs)?;
    if !normalize {
        return Ok(matrix);
    }
    let matrix = matrix.normalize();
    let degenerate = matrix.degenerate_attributes();
    if !degenerate.is_empty() {
        eprintln!("warning: constant attributes mapped to 0: {}", degenerate.join(", "));
    }
    Ok(matrix)
}

fn execute(command: &Command) -> Result<(), CliError> {
    let name = command.name();
    match command {
        Command::Synth(a) => {
            // The presets only accept valid sizes.
            if a.days < 2 {
                return Err(SynthError::TooFewDays(a.days).into());
            }
            let spec = match a.corpus {
                Corpus::Four => SynthSpec::four_archetypes(a.households_per_archetype, a.days, a.seed),
                Corpus::JitterPair => SynthSpec::jitter_pair(a.households_per_archetype, a.days, a.seed),
            };
            let mut out = Artifacts::new(&a.output.output_dir)?;
            let readings = synth::generate(&spec);
            lfio::write_readings(out.create("readings.csv")?, &readings)?;
            lfio::write_ground_truth(out.create("ground_truth.csv")?, &synth::ground_truth_labels(&spec))?;
            out.finish(name, a.seed, KMeansConfig::with_seed(a.seed))
        }
        Command::Features(a) => {
            let mut out = Artifacts::new(&a.output.output_dir)?;
            let records = load_records(&a.source, &mut out)?;
            lfio::write_records(out.create("records.csv")?, &records, a.slots)?;
            out.finish(name, a.source.seed, KMeansConfig::with_seed(a.source.seed))
        }
        Command::Cluster(a) => {
            let config = a.kmeans.config(a.source.seed);
            let mut out = Artifacts::new(&a.output.output_dir)?;
            let records = load_records(&a.source, &mut out)?;
            let matrix = prepare_matrix(&records, &a.attrs, !a.kmeans.no_normalize)?;
            let clustering = kmeans::kmeans(&matrix, a.k, &config)?;
            lfio::write_assignments(out.create("assignments.csv")?, matrix.row_ids(), &clustering)?;
            let mut meta = serde_json::to_string_pretty(&ClusteringMetadata::new(&clustering, &matrix, &config))?;
            meta.push('\n');
            out.write("clustering.json", meta.as_bytes())?;
            lfio::write_matrix(out.create("matrix.csv")?, &matrix)?;
            out.finish(name, config.seed, config)
        }
        Command::Indexes(a) => {
            let mut out = Artifacts::new(&a.output.output_dir)?;
            out.inputs.push(a.input.display().to_string());
            out.inputs.push(a.assignments.display().to_string());
            let matrix = lfio::read_matrix(&read_file(&a.input)?[..])?;
            let assignments = lfio::read_assignments(&read_file(&a.assignments)?[..])?;
            let labels = lfio::align_assignments(&matrix, &assignments)?;
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let clustering = Clustering::from_assignments(matrix.rows(), labels, k)?;
            let report = validity::index_report(&clustering, &matrix, a.dbi_policy.into())?;
            for (file, value) in [
                ("indexes.json", &report),
                ("indexes_adjusted.json", &validity::adjust_for_attribute_count(&report)),
            ] {
                let mut text = serde_json::to_string_pretty(value)?;
                text.push('\n');
                out.write(file, text.as_bytes())?;
            }
            out.finish(name, 0, KMeansConfig::default())
        }
        Command::SweepK(a) => {
            let config = a.kmeans.config(a.source.seed);
            let mut out = Artifacts::new(&a.output.output_dir)?;
            let records = load_records(&a.source, &mut out)?;
            let matrix = prepare_matrix(&records, &a.attrs, !a.kmeans.no_normalize)?;
            let result = experiments::sweep_clusters(&matrix, a.k_min, a.k_max, &config)?;
            write_table(&mut out, &result, &a.table, None)?;
            out.finish(name, config.seed, config)
        }
        Command::SweepAttrs(a) | Command::SweepQuality(a) => {
            let config = a.kmeans.config(a.source.seed);
            let mut out = Artifacts::new(&a.output.output_dir)?;
            let records = load_records(&a.source, &mut out)?;
            let matrix = prepare_matrix(&records, &DEFAULT_ATTRIBUTES, !a.kmeans.no_normalize)?;
            let seed = a.source.seed;
            if matches!(command, Command::SweepAttrs(_)) {
                let result = experiments::sweep_attribute_count(&matrix, seed, &config)?;
                write_table(&mut out, &result, &a.table, None)?;
                if let Some(adjusted) = result.adjusted_view() {
                    write_table(&mut out, &adjusted, &a.table, Some("adjusted"))?;
                }
            } else {
                let result = experiments::sweep_attribute_quality(&matrix, seed, &config)?;
                write_table(&mut out, &result, &a.table, None)?;
            }
            out.finish(name, seed, config)
        }
        Command::Plotdata(a) => {
            if !(2..=3).contains(&a.attrs.len()) {
                return Err(CliError::Usage(format!(
                    "plotdata needs 2 or 3 attributes, got {}",
                    a.attrs.len()
                )));
            }
            let config = a.kmeans.config(a.source.seed);
            let mut out = Artifacts::new(&a.output.output_dir)?;
            let records = load_records(&a.source, &mut out)?;
            let matrix = prepare_matrix(&records, &a.attrs, !a.kmeans.no_normalize)?;
            let clustering = kmeans::kmeans(&matrix, a.k, &config)?;
            out.write("plotdata.dat", plot_columns(&matrix, &clustering).as_bytes())?;
            out.finish(name, config.seed, config)
        }
    }
}

fn write_table(
    out: &mut Artifacts,
    result: &SweepResult,
    table: &TableArgs,
    suffix: Option<&str>,
) -> Result<(), CliError> {
    let format = TableFormat::from(table.format);
    let mut file = result.file_name(format);
    if let Some(suffix) = suffix {
        let dot = file.rfind('.').expect("sweep file names carry an extension");
        file.insert_str(dot, &format!("_{suffix}"));
    }
    out.write(&file, experiments::emit_table(result, format, table.display_2dp).as_bytes())
}

/// `# <attr>… cluster` header, then one line per household.
pub fn plot_columns(matrix: &FeatureMatrix, clustering: &Clustering) -> String {
    let mut s = String::from("#");
    for name in matrix.attribute_names() {
        s.push(' ');
        s.push_str(name);
    }
    s.push_str(" cluster\n");
    for (row, label) in matrix.rows().iter().zip(&clustering.assignments) {
        for v in row {
            s.push_str(&v.to_string());
            s.push(' ');
        }
        s.push_str(&label.to_string());
        s.push('\n');
    }
    s
}
