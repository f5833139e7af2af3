//! Experiment harness CLI: generate synthetic corpora, extract feature
//! files, train single models, and run the five-variant comparison.
//!
//! Logging verbosity is controlled by the `TIMBRE_LOG` environment variable
//! (error|warn|info|debug).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use timbre::dataset::{self, DatasetManifest, ManifestEntry};
use timbre::experiment::{self, DataSource, ExperimentReport, ExperimentSpec, ReportFormat};
use timbre::features::{self, Variant};
use timbre::mlp::{self, ModelFile, TrainConfig};

#[derive(Parser)]
#[command(name = "timbre", about = "Musical-instrument classification experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    #[value(name = "base")]
    Base,
    #[value(name = "only-attack")]
    OnlyAttack,
    #[value(name = "without-attack")]
    WithoutAttack,
    #[value(name = "first-100hz")]
    First100Hz,
    #[value(name = "following-900hz")]
    Following900Hz,
}

impl From<VariantArg> for Variant {
    fn from(arg: VariantArg) -> Variant {
        match arg {
            VariantArg::Base => Variant::Base,
            VariantArg::OnlyAttack => Variant::AttackOnly,
            VariantArg::WithoutAttack => Variant::WithoutAttack,
            VariantArg::First100Hz => Variant::First100Hz,
            VariantArg::Following900Hz => Variant::Following900Hz,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus: WAV files plus manifest.csv.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Clips per instrument class.
        #[arg(long = "per-class", default_value_t = 10)]
        per_class: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract a feature CSV for one variant from a manifest of WAV files.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one early-stopped model on a feature CSV and save it as JSON.
    Train {
        /// Feature CSV produced by `features`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output model path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment comparison and write reports.
    Experiment(ExperimentCmd),
}

#[derive(Args)]
struct ExperimentCmd {
    #[command(flatten)]
    source: SourceArgs,
    /// Run a single variant.
    #[arg(long, value_enum, conflicts_with = "all")]
    variant: Option<VariantArg>,
    /// Run all five variants.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Directory for text and CSV reports.
    #[arg(long = "report-dir")]
    report_dir: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Manifest of a WAV corpus.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Use a synthetic corpus with this many clips per class.
    #[arg(long)]
    synthetic: Option<usize>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TIMBRE_LOG", "warn")).init();
    match Cli::parse().command {
        Command::Synth { seed, per_class, out } => synth(seed, per_class, &out),
        Command::Features { manifest, variant, out } => features_cmd(&manifest, variant.into(), &out),
        Command::Train { features, seed, out } => train(&features, seed, &out),
        Command::Experiment(cmd) => run_experiments(cmd),
    }
}

fn synth(seed: u64, per_class: usize, out: &Path) -> Result<()> {
    anyhow::ensure!(per_class >= 1, "--per-class must be at least 1");
    let wav_dir = out.join("wav");
    std::fs::create_dir_all(&wav_dir).with_context(|| format!("creating {}", wav_dir.display()))?;

    let clips = dataset::generate_synthetic_corpus(seed, per_class);
    let mut entries = Vec::with_capacity(clips.len());
    for clip in &clips {
        let file_name = format!("wav/{}.wav", clip.source_id.replace('#', "s"));
        dataset::write_clip_wav(clip, &out.join(&file_name))?;
        entries.push(ManifestEntry {
            path: file_name,
            instrument: clip.instrument,
            tone: clip.tone,
        });
    }
    let manifest = DatasetManifest { entries };
    let manifest_path = out.join("manifest.csv");
    std::fs::write(&manifest_path, manifest.to_csv_string())
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    println!("wrote {} clips and manifest.csv to {}", clips.len(), out.display());
    Ok(())
}

fn features_cmd(manifest_path: &Path, variant: Variant, out: &Path) -> Result<()> {
    let manifest = dataset::load_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut clips = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        clips.push(dataset::load_clip(entry, root)?);
    }
    let (features, skipped) = experiment::extract_corpus_features(&clips, variant)?;
    features::write_features_csv(out, &features)?;
    println!(
        "wrote {} feature vectors ({} skipped) for {} to {}",
        features.len(),
        skipped,
        variant.key(),
        out.display()
    );
    Ok(())
}

fn train(features_path: &Path, seed: u64, out: &Path) -> Result<()> {
    let features = features::read_features_csv(features_path)?;
    anyhow::ensure!(!features.is_empty(), "feature file {} is empty", features_path.display());
    let items: Vec<_> = features.iter().map(|f| (f.source_id.clone(), f.label)).collect();
    let split = dataset::stratified_split(&items, (0.6, 0.2, 0.2), seed)?;
    let train = experiment::samples_for_ids(&features, &split.train_ids);
    let validation = experiment::samples_for_ids(&features, &split.validation_ids);
    let test = experiment::samples_for_ids(&features, &split.test_ids);

    let cfg = TrainConfig::with_seed(seed);
    let outcome = mlp::train_early_stopping(&train, &validation, &cfg)?;
    let (_, accuracy) = mlp::evaluate(&outcome.model, &test)?;
    println!(
        "trained {} epochs, best epoch {} (validation loss {:.4e}), test accuracy {:.4}",
        outcome.epochs_run,
        outcome.best_epoch,
        outcome.validation_error_curve[outcome.best_epoch],
        accuracy
    );
    mlp::save_model(out, &ModelFile::new(outcome.model, cfg))?;
    println!("saved model to {}", out.display());
    Ok(())
}

fn run_experiments(cmd: ExperimentCmd) -> Result<()> {
    anyhow::ensure!(cmd.runs >= 1, "--runs must be at least 1");
    anyhow::ensure!(
        cmd.all || cmd.variant.is_some(),
        "pass --all or --variant <VARIANT>"
    );
    let source = match (&cmd.source.manifest, cmd.source.synthetic) {
        (Some(path), None) => DataSource::Manifest(path.clone()),
        (None, Some(per_class)) => DataSource::Synthetic { per_class },
        _ => unreachable!("clap enforces exactly one source"),
    };

    let reports = if cmd.all {
        experiment::run_all(&source, cmd.runs, cmd.seed)?
    } else {
        let spec = ExperimentSpec {
            variant: cmd.variant.expect("checked above").into(),
            runs: cmd.runs,
            seed: cmd.seed,
            source,
        };
        vec![experiment::run_experiment(&spec)?]
    };

    std::fs::create_dir_all(&cmd.report_dir)
        .with_context(|| format!("creating {}", cmd.report_dir.display()))?;
    for report in &reports {
        let stem = report.variant.key().replace('-', "_");
        emit_pair(report, &cmd.report_dir, &stem)?;
    }
    let summary = experiment::render_summary_table(&reports);
    std::fs::write(cmd.report_dir.join("summary.txt"), &summary)
        .with_context(|| "writing summary.txt")?;
    print!("{summary}");
    Ok(())
}

fn emit_pair(report: &ExperimentReport, dir: &Path, stem: &str) -> Result<()> {
    experiment::emit_report(report, ReportFormat::Text, &dir.join(format!("{stem}.txt")))?;
    experiment::emit_report(report, ReportFormat::Csv, &dir.join(format!("{stem}.csv")))?;
    Ok(())
}
