//! The `npcluster` binary: outputs, exit codes and error messages.

use std::path::Path;
use std::process::{Command, Output};

use npcluster::formats::{self, Format};
use npcluster_core::{EmbeddingMatrix, FeatureMatrix, LabelVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn npcluster(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npcluster")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two well separated 5-D blobs of 60 points, labelled.
fn write_blobs(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2u32 {
        for _ in 0..60 {
            values.extend((0..5).map(|_| c as f32 * 12.0 + rng.random_range(-1.0..1.0f32)));
            labels.push(c);
        }
    }
    let x = FeatureMatrix::new(120, 5, values).unwrap();
    formats::write_features(&x, Some(&LabelVector::new(labels)), &dir.join("blobs.fmat"), Format::Binary).unwrap();
}

const FAST: [&str; 4] = ["--neighbors", "10", "--epochs", "60"];

#[test]
fn pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    let o = npcluster(
        &[&["pipeline", "--features", "blobs.fmat", "--out", "out", "--deterministic"][..], &FAST].concat(),
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["embedding.fmat", "labels.txt", "model.json", "metrics.json", "plot.svg", "manifest.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["ari"], 1.0);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["umap"]["n_neighbors"], 10);
    assert_eq!(manifest["replications"][0]["cluster"]["inferred_k"], 2);
    assert!(manifest["replications"][0]["cluster"]["final_elbo"].is_f64());
}

#[test]
fn deterministic_embeddings_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    for out in ["a", "b"] {
        let args = [&["embed", "--features", "blobs.fmat", "--out", out, "--deterministic", "--seed", "3"][..], &FAST]
            .concat();
        let o = npcluster(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &str| std::fs::read(dir.path().join(d).join("embedding.fmat")).unwrap();
    assert_eq!(read("a"), read("b"));
    let y = formats::read_embedding(&dir.path().join("a/embedding.fmat"), Format::Binary).unwrap();
    assert_eq!((y.n(), y.p()), (120, 2));
}

#[test]
fn three_blob_embedding_reports_three_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let centers = [[0.0, 0.0], [12.0, 0.0], [6.0, 10.0]];
    let rows: Vec<[f64; 2]> = (0..150)
        .map(|i| {
            let c = centers[i % 3];
            [c[0] + rng.random_range(-1.0..1.0), c[1] + rng.random_range(-1.0..1.0)]
        })
        .collect();
    let y = EmbeddingMatrix::from_rows(&rows).unwrap();
    formats::write_embedding(&y, &dir.path().join("y.fmat"), Format::Binary).unwrap();
    let o = npcluster(&["cluster", "--embedding", "y.fmat", "--out", "c"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["replications"][0]["inferred_k"], 3);
    assert!(manifest["replications"][0]["final_elbo"].is_f64());
}

#[test]
fn replications_write_seeded_files_and_an_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    let args =
        [&["pipeline", "--features", "blobs.fmat", "--out", "out", "--seed", "5", "--replications", "2"][..], &FAST]
            .concat();
    let o = npcluster(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert!(out.join("labels_seed5.txt").exists() && out.join("labels_seed6.txt").exists());
    let agg: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["replications"], 2);
    assert!(agg["ari"]["mean"].is_f64() && agg["ari"]["std"].is_f64());
}

#[test]
fn cluster_and_plot_an_existing_embedding() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    let o = npcluster(&[&["embed", "--features", "blobs.fmat", "--out", "e"][..], &FAST].concat(), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = npcluster(
        &["cluster", "--embedding", "e/embedding.fmat", "--algorithm", "kmeans", "--k", "2", "--out", "c"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let model: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c/model.json")).unwrap()).unwrap();
    assert_eq!(model["algorithm"], "kmeans");
    let o = npcluster(
        &["plot", "--embedding", "e/embedding.fmat", "--labels", "c/labels.txt", "--out", "p.svg"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("p.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 120);
}

#[test]
fn evaluate_identical_labels() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "0\n0\n1\n2\n").unwrap();
    let o = npcluster(&["evaluate", "--pred", "a.txt", "--labels", "a.txt", "--out", "m.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["acc", "nmi", "ari"] {
        assert_eq!(report[key], 1.0);
    }
    assert_eq!(report["n"], 4);
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(written, report);
}

#[test]
fn missing_input_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = npcluster(&["embed", "--features", "nowhere.fmat"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.fmat"), "{}", stderr(&o));
}

#[test]
fn kmeans_without_k_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    let o = npcluster(&["pipeline", "--features", "blobs.fmat", "--algorithm", "kmeans"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--k"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    std::fs::write(dir.path().join("run.toml"), "[umap]\nneighbours = 5\n").unwrap();
    let o = npcluster(&["embed", "--features", "blobs.fmat", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatched_label_lengths_are_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "0\n1\n").unwrap();
    std::fs::write(dir.path().join("b.txt"), "0\n1\n1\n").unwrap();
    let o = npcluster(&["evaluate", "--pred", "a.txt", "--labels", "b.txt"], dir.path());
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("evaluate stage"), "{}", stderr(&o));
}

#[test]
fn plotting_a_three_dimensional_embedding_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    let o = npcluster(
        &[&["embed", "--features", "blobs.fmat", "--out", "e", "--dim", "3"][..], &FAST].concat(),
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = npcluster(&["plot", "--embedding", "e/embedding.fmat", "--out", "p.svg"], dir.path());
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("p=2"), "{}", stderr(&o));
}

#[test]
fn unlabelled_input_skips_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    write_blobs(dir.path());
    let (x, _) = formats::read_features(&dir.path().join("blobs.fmat"), Format::Binary, false).unwrap();
    formats::write_features(&x, None, &dir.path().join("plain.csv"), Format::Csv).unwrap();
    let o = npcluster(&[&["pipeline", "--features", "plain.csv", "--out", "out"][..], &FAST].concat(), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert!(!out.join("metrics.json").exists());
    assert!(out.join("plot.svg").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["evaluation"], "skipped: no labels");
}
