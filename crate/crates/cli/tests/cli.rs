//! End-to-end subcommand behavior: corpus generation, feature extraction,
//! training, reports, and failure exit codes.

use std::path::Path;
use std::process::{Command, Output};

use timbre::dataset;
use timbre::experiment;
use timbre::features::{self, Variant};
use timbre::mlp;

fn timbre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timbre"))
        .args(args)
        .env("TIMBRE_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = timbre(args);
    assert!(
        out.status.success(),
        "timbre {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn synth_features_train_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["synth", "--seed", "1", "--per-class", "5", "--out", corpus.to_str().unwrap()]);

    let manifest = dataset::load_manifest(&corpus.join("manifest.csv")).unwrap();
    assert_eq!(manifest.entries.len(), 40);
    assert!(corpus.join(&manifest.entries[0].path).exists());

    let csv = dir.path().join("base.csv");
    ok(&[
        "features",
        "--manifest",
        corpus.join("manifest.csv").to_str().unwrap(),
        "--variant",
        "base",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let features = features::read_features_csv(&csv).unwrap();
    assert_eq!(features.len(), 40);
    assert!(features.iter().all(|f| f.variant == Variant::Base));
    assert!(features.iter().flat_map(|f| &f.values).all(|&v| (0.0..=1.0).contains(&v)));

    let model_path = dir.path().join("model.json");
    let out = ok(&[
        "train",
        "--features",
        csv.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        model_path.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("test accuracy"));
    let model = mlp::load_model(&model_path).unwrap();
    assert_eq!(model.version, mlp::MODEL_FILE_VERSION);
    assert_eq!(model.model.input_dim, 50);
    assert_eq!(model.model.hidden_dim, 30);
    assert_eq!(model.model.output_dim, 8);
    assert_eq!(model.loss_function, "cross_entropy");
}

#[test]
fn synth_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["synth", "--seed", "9", "--per-class", "2", "--out", out.to_str().unwrap()]);
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a.join("manifest.csv")), read(&b.join("manifest.csv")));
    let manifest = dataset::load_manifest(&a.join("manifest.csv")).unwrap();
    for entry in &manifest.entries {
        assert_eq!(read(&a.join(&entry.path)), read(&b.join(&entry.path)), "{}", entry.path);
    }
}

#[test]
fn experiment_single_variant_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let out = ok(&[
        "experiment",
        "--synthetic",
        "5",
        "--variant",
        "base",
        "--runs",
        "1",
        "--seed",
        "1",
        "--report-dir",
        reports.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Base experiment"));
    assert!(reports.join("base.txt").exists());
    assert!(reports.join("summary.txt").exists());
    let parsed =
        experiment::parse_report_csv(&std::fs::read_to_string(reports.join("base.csv")).unwrap())
            .unwrap();
    assert_eq!(parsed.variant, Variant::Base);
    assert_eq!(parsed.runs, 1);
    assert_eq!(parsed.total_clips, 40);
    assert_eq!(parsed.run_accuracies.len(), 1);
    assert_eq!(parsed.mean_accuracy, parsed.run_accuracies[0]);
}

#[test]
fn experiment_with_manifest_source() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["synth", "--seed", "3", "--per-class", "5", "--out", corpus.to_str().unwrap()]);
    let reports = dir.path().join("reports");
    ok(&[
        "experiment",
        "--manifest",
        corpus.join("manifest.csv").to_str().unwrap(),
        "--variant",
        "first-100hz",
        "--runs",
        "1",
        "--seed",
        "2",
        "--report-dir",
        reports.to_str().unwrap(),
    ]);
    assert!(reports.join("first_100hz.csv").exists());
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // Missing manifest.
    let out = timbre(&["features", "--manifest", "/nonexistent.csv", "--variant", "base", "--out", "/tmp/x.csv"]);
    assert!(!out.status.success());

    // Unknown variant name.
    let out = timbre(&["features", "--manifest", "/tmp/m.csv", "--variant", "everything", "--out", "/tmp/x.csv"]);
    assert!(!out.status.success());

    // Experiment without a data source.
    let out = timbre(&["experiment", "--variant", "base", "--report-dir", "/tmp/r"]);
    assert!(!out.status.success());

    // Malformed manifest row: error mentions the line number.
    let manifest = dir.path().join("bad.csv");
    std::fs::write(&manifest, "path,instrument,pitch_class,octave\nx.wav,Banjo,A\n").unwrap();
    let out = timbre(&[
        "features",
        "--manifest",
        manifest.to_str().unwrap(),
        "--variant",
        "base",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // Wrong octave.
    std::fs::write(&manifest, "x.wav,Banjo,A,5\n").unwrap();
    let out = timbre(&[
        "features",
        "--manifest",
        manifest.to_str().unwrap(),
        "--variant",
        "base",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("octave"));
}
