//! Experiment harness: runs the five-variant comparison with N-run
//! averaging over re-drawn stratified splits, and renders text/CSV reports
//! with confusion matrices and accuracy summaries.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{self, AudioClip, DatasetError, InstrumentClass};
use crate::features::{self, FeatureVector, Variant};
use crate::mlp::{self, ConfusionMatrix, MlpError, Sample, TrainConfig};

/// Reference mean accuracies for the full 1244-sample corpus, used as a
/// comparison column in summary tables.
pub const REFERENCE_ACCURACY: [(Variant, f64); 5] = [
    (Variant::Base, 0.935),
    (Variant::AttackOnly, 0.802),
    (Variant::WithoutAttack, 0.732),
    (Variant::First100Hz, 0.642),
    (Variant::Following900Hz, 0.906),
];

/// Where the corpus comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// CSV manifest referencing WAV files (paths resolved against the
    /// manifest's directory).
    Manifest(PathBuf),
    /// In-memory synthetic corpus with this many clips per class.
    Synthetic { per_class: usize },
}

/// One experiment: a variant, a run count, and a base seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub variant: Variant,
    pub runs: usize,
    pub seed: u64,
    pub source: DataSource,
}

/// Outcome of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub best_epoch: usize,
    pub test_size: usize,
    pub confusion: ConfusionMatrix,
}

/// Aggregated outcome of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub variant: Variant,
    pub base_seed: u64,
    pub total_clips: usize,
    /// Clips that failed the variant's feature preconditions and were left
    /// out (e.g. no detectable onset).
    pub skipped_clips: usize,
    pub per_run: Vec<RunResult>,
    pub mean_accuracy: f64,
    pub pooled_confusion: ConfusionMatrix,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("data source: {0}")]
    DataSource(#[from] DatasetError),
    #[error("all {total} clips were skipped for variant {variant}")]
    AllClipsSkipped { variant: Variant, total: usize },
    #[error(transparent)]
    Train(#[from] MlpError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report line {line}: {message}")]
    ParseReport { line: usize, message: String },
}

/// Loads the corpus behind a data source.
pub fn load_corpus(source: &DataSource) -> Result<Vec<AudioClip>, ExperimentError> {
    match source {
        DataSource::Synthetic { per_class } => {
            // The corpus seed is fixed so every experiment of a comparison
            // sees the same clips; run-to-run variation comes from splits
            // and weight init.
            Ok(dataset::generate_synthetic_corpus(0xC0FFEE, *per_class))
        }
        DataSource::Manifest(path) => {
            let manifest = dataset::load_manifest(path)?;
            let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            let mut clips = Vec::with_capacity(manifest.entries.len());
            for entry in &manifest.entries {
                clips.push(dataset::load_clip(entry, &root)?);
            }
            Ok(clips)
        }
    }
}

/// Extracts features for one variant, skipping clips that fail the
/// variant's preconditions (each skip is logged).
pub fn extract_corpus_features(
    clips: &[AudioClip],
    variant: Variant,
) -> Result<(Vec<FeatureVector>, usize), ExperimentError> {
    let mut features_out = Vec::with_capacity(clips.len());
    let mut skipped = 0usize;
    for clip in clips {
        match features::extract_features(clip, variant) {
            Ok(fv) => features_out.push(fv),
            Err(err) => {
                skipped += 1;
                log::warn!("skipping {} for {}: {err}", clip.source_id, variant.key());
            }
        }
    }
    if features_out.is_empty() {
        return Err(ExperimentError::AllClipsSkipped { variant, total: clips.len() });
    }
    Ok((features_out, skipped))
}

/// Feature vectors for the given source ids, in corpus order, as training
/// samples.
pub fn samples_for_ids(features: &[FeatureVector], ids: &[String]) -> Vec<Sample> {
    let wanted: HashSet<&str> = ids.iter().map(|s| s.as_str()).collect();
    features
        .iter()
        .filter(|f| wanted.contains(f.source_id.as_str()))
        .map(|f| Sample::new(f.values.clone(), f.label.class_index()))
        .collect()
}

fn single_run(
    features: &[FeatureVector],
    run: usize,
    base_seed: u64,
) -> Result<RunResult, ExperimentError> {
    let seed = base_seed + run as u64;
    let items: Vec<(String, InstrumentClass)> =
        features.iter().map(|f| (f.source_id.clone(), f.label)).collect();
    let split = dataset::stratified_split(&items, (0.6, 0.2, 0.2), seed)?;
    let train = samples_for_ids(features, &split.train_ids);
    let validation = samples_for_ids(features, &split.validation_ids);
    let test = samples_for_ids(features, &split.test_ids);

    let cfg = TrainConfig::with_seed(seed);
    let outcome = mlp::train_early_stopping(&train, &validation, &cfg)?;
    let (confusion, accuracy) = mlp::evaluate(&outcome.model, &test)?;
    log::info!(
        "run {run} (seed {seed}): accuracy {accuracy:.4}, best epoch {}, {} epochs",
        outcome.best_epoch,
        outcome.epochs_run
    );
    Ok(RunResult {
        run,
        seed,
        accuracy,
        best_epoch: outcome.best_epoch,
        test_size: test.len(),
        confusion,
    })
}

/// Runs one experiment on an already loaded corpus.
pub fn run_experiment_on_clips(
    clips: &[AudioClip],
    variant: Variant,
    runs: usize,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    assert!(runs >= 1, "an experiment needs at least one run");
    let (features, skipped) = extract_corpus_features(clips, variant)?;
    log::info!(
        "{}: {} clips usable, {skipped} skipped",
        variant.key(),
        features.len()
    );

    // Runs are independent (disjoint seeds, shared features); collect in
    // run order so reports are deterministic.
    let per_run: Vec<RunResult> = (1..=runs)
        .into_par_iter()
        .map(|run| single_run(&features, run, seed))
        .collect::<Result<_, _>>()?;

    let mean_accuracy = per_run.iter().map(|r| r.accuracy).sum::<f64>() / per_run.len() as f64;
    let mut pooled_confusion = ConfusionMatrix::new(dataset::CLASS_COUNT);
    for r in &per_run {
        pooled_confusion.add(&r.confusion);
    }
    Ok(ExperimentReport {
        variant,
        base_seed: seed,
        total_clips: clips.len(),
        skipped_clips: skipped,
        per_run,
        mean_accuracy,
        pooled_confusion,
    })
}

/// Loads the corpus and runs one experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    let clips = load_corpus(&spec.source)?;
    run_experiment_on_clips(&clips, spec.variant, spec.runs, spec.seed)
}

/// Runs all five variants over a single corpus with the same seed schedule.
pub fn run_all(
    source: &DataSource,
    runs: usize,
    seed: u64,
) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let clips = load_corpus(source)?;
    Variant::ALL
        .iter()
        .map(|&variant| run_experiment_on_clips(&clips, variant, runs, seed))
        .collect()
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

/// Renders the human-readable report: run table, pooled confusion matrix
/// with class names, per-class recall, and overall accuracy.
pub fn render_report_text(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("experiment: {}\n", report.variant.label()));
    out.push_str(&format!(
        "runs: {} (seeds {}..={}, averaging over {} runs)\n",
        report.per_run.len(),
        report.base_seed + 1,
        report.base_seed + report.per_run.len() as u64,
        report.per_run.len(),
    ));
    out.push_str(&format!(
        "clips: {} total, {} skipped\n",
        report.total_clips, report.skipped_clips
    ));
    out.push_str(&format!("mean accuracy: {:.4}\n", report.mean_accuracy));
    out.push_str("\nper-run results:\n");
    out.push_str("  run  seed  accuracy  best_epoch  test_size\n");
    for r in &report.per_run {
        out.push_str(&format!(
            "  {:>3}  {:>4}  {:>8.4}  {:>10}  {:>9}\n",
            r.run, r.seed, r.accuracy, r.best_epoch, r.test_size
        ));
    }

    out.push_str("\npooled confusion matrix (rows true, columns predicted):\n");
    let names: Vec<&str> = InstrumentClass::ALL.iter().map(|c| c.name()).collect();
    out.push_str(&format!("  {:>12}", ""));
    for name in &names {
        out.push_str(&format!("  {name:>11}"));
    }
    out.push('\n');
    for (i, name) in names.iter().enumerate() {
        out.push_str(&format!("  {name:>12}"));
        for j in 0..names.len() {
            out.push_str(&format!("  {:>11}", report.pooled_confusion.count(i, j)));
        }
        out.push('\n');
    }

    out.push_str("\nper-class recall:\n");
    for (i, name) in names.iter().enumerate() {
        match report.pooled_confusion.recall(i) {
            Some(r) => out.push_str(&format!("  {name:>12}  {r:.4}\n")),
            None => out.push_str(&format!("  {name:>12}  n/a (no samples)\n")),
        }
    }
    out.push_str(&format!("\naccuracy: {:.4}\n", report.pooled_confusion.accuracy()));
    out
}

/// Renders the machine-readable report: one `cell` row per pooled confusion
/// cell plus per-run and summary rows.
pub fn render_report_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("record,run,seed,true_class,predicted_class,count,value\n");
    out.push_str(&format!("variant,,,,,,{}\n", report.variant.key()));
    out.push_str(&format!("runs,,,,,,{}\n", report.per_run.len()));
    out.push_str(&format!("total_clips,,,,,{},\n", report.total_clips));
    out.push_str(&format!("skipped_clips,,,,,{},\n", report.skipped_clips));
    out.push_str(&format!("mean_accuracy,,,,,,{:.9e}\n", report.mean_accuracy));
    for r in &report.per_run {
        out.push_str(&format!("run_accuracy,{},{},,,,{:.9e}\n", r.run, r.seed, r.accuracy));
        out.push_str(&format!("run_best_epoch,{},{},,,{},\n", r.run, r.seed, r.best_epoch));
        out.push_str(&format!("run_test_size,{},{},,,{},\n", r.run, r.seed, r.test_size));
    }
    for (i, true_class) in InstrumentClass::ALL.iter().enumerate() {
        for (j, predicted) in InstrumentClass::ALL.iter().enumerate() {
            out.push_str(&format!(
                "cell,,,{},{},{},\n",
                true_class.name(),
                predicted.name(),
                report.pooled_confusion.count(i, j)
            ));
        }
    }
    out
}

/// Writes a report in the requested format.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, out: &Path) -> Result<(), ExperimentError> {
    let text = match format {
        ReportFormat::Text => render_report_text(report),
        ReportFormat::Csv => render_report_csv(report),
    };
    std::fs::write(out, text).map_err(|source| ExperimentError::Io {
        path: out.display().to_string(),
        source,
    })
}

/// Summary table over a set of reports, one row per experiment, with the
/// reference accuracies alongside for comparison.
pub fn render_summary_table(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<18}  {:>4}  {:>13}  {:>9}\n", "experiment", "runs", "mean accuracy", "reference"));
    for report in reports {
        let reference = REFERENCE_ACCURACY
            .iter()
            .find(|(v, _)| *v == report.variant)
            .map(|(_, a)| format!("{a:>9.3}"))
            .unwrap_or_else(|| format!("{:>9}", "-"));
        out.push_str(&format!(
            "{:<18}  {:>4}  {:>13.4}  {}\n",
            report.variant.label(),
            report.per_run.len(),
            report.mean_accuracy,
            reference
        ));
    }
    out
}

/// Parsed form of a CSV report, for consumers that verify or post-process
/// emitted files.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReportCsv {
    pub variant: Variant,
    pub runs: usize,
    pub total_clips: usize,
    pub skipped_clips: usize,
    pub mean_accuracy: f64,
    pub run_accuracies: Vec<f64>,
    pub run_test_sizes: Vec<usize>,
    pub pooled_counts: Vec<Vec<u64>>,
}

/// Parses a CSV report produced by [`render_report_csv`].
pub fn parse_report_csv(text: &str) -> Result<ParsedReportCsv, ExperimentError> {
    let err = |line: usize, message: String| ExperimentError::ParseReport { line, message };
    let mut variant = None;
    let mut runs = 0usize;
    let mut total_clips = 0usize;
    let mut skipped_clips = 0usize;
    let mut mean_accuracy = None;
    let mut run_accuracies = Vec::new();
    let mut run_test_sizes = Vec::new();
    let mut pooled_counts = vec![vec![0u64; dataset::CLASS_COUNT]; dataset::CLASS_COUNT];

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.starts_with("record,") || raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 7 {
            return Err(err(line, format!("expected 7 fields, got {}", fields.len())));
        }
        match fields[0] {
            "variant" => {
                variant = Variant::from_key(fields[6]);
                if variant.is_none() {
                    return Err(err(line, format!("unknown variant {:?}", fields[6])));
                }
            }
            "runs" => runs = fields[6].parse().map_err(|e| err(line, format!("{e}")))?,
            "total_clips" => total_clips = fields[5].parse().map_err(|e| err(line, format!("{e}")))?,
            "skipped_clips" => skipped_clips = fields[5].parse().map_err(|e| err(line, format!("{e}")))?,
            "mean_accuracy" => {
                mean_accuracy = Some(fields[6].parse().map_err(|e| err(line, format!("{e}")))?)
            }
            "run_accuracy" => run_accuracies.push(fields[6].parse().map_err(|e| err(line, format!("{e}")))?),
            "run_test_size" => run_test_sizes.push(fields[5].parse().map_err(|e| err(line, format!("{e}")))?),
            "run_best_epoch" => {}
            "cell" => {
                let t = InstrumentClass::from_name(fields[3])
                    .ok_or_else(|| err(line, format!("unknown class {:?}", fields[3])))?;
                let p = InstrumentClass::from_name(fields[4])
                    .ok_or_else(|| err(line, format!("unknown class {:?}", fields[4])))?;
                pooled_counts[t.class_index()][p.class_index()] =
                    fields[5].parse().map_err(|e| err(line, format!("{e}")))?;
            }
            other => return Err(err(line, format!("unknown record {other:?}"))),
        }
    }

    Ok(ParsedReportCsv {
        variant: variant.ok_or_else(|| err(0, "missing variant record".into()))?,
        runs,
        total_clips,
        skipped_clips,
        mean_accuracy: mean_accuracy.ok_or_else(|| err(0, "missing mean_accuracy record".into()))?,
        run_accuracies,
        run_test_sizes,
        pooled_counts,
    })
}
