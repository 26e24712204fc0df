//! Subcommand drivers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use npcluster_core::baselines::{self, KmeansResult, DEFAULT_MAX_ITER};
use npcluster_core::dpgmm::{self, ClusterResult, DpgmmState};
use npcluster_core::manifold::{self, UmapOutput};
use npcluster_core::metrics::{self, MetricsReport};
use npcluster_core::{EmbeddingMatrix, FeatureMatrix, LabelVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Cli, ClusterArgs, Command, EmbedArgs, EvaluateArgs, InputArgs, PipelineArgs, PlotArgs};
use crate::config::{Algorithm, PipelineConfig};
use crate::error::{CliError, Result, StageExt};
use crate::formats::{self, Format, EMBEDDING_VERSION, FEATURE_VERSION};
use crate::plot;

const DEFAULT_OUT: &str = "npcluster_out";

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Embed(a) => cmd_embed(&a),
        Command::Cluster(a) => cmd_cluster(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Pipeline(a) => cmd_pipeline(&a),
    }
}

fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// `name.ext`, or `name_seed{s}.ext` when several replications share a directory.
fn output_name(name: &str, ext: &str, seed: u64, replicated: bool) -> String {
    if replicated {
        format!("{name}_seed{seed}.{ext}")
    } else {
        format!("{name}.{ext}")
    }
}

fn load_inputs(cfg: &PipelineConfig, input: &InputArgs) -> Result<(FeatureMatrix, Option<LabelVector>)> {
    let path = cfg.paths.features.as_ref().ok_or_else(|| CliError::config("--features is required"))?;
    let format = input.format.unwrap_or_else(|| Format::from_path(path));
    let (x, file_labels) = formats::read_features(path, format, input.csv_labels).stage("load")?;
    let labels = match &cfg.paths.labels {
        Some(p) => Some(formats::read_labels(p).stage("load")?),
        None => file_labels,
    };
    if let Some(l) = &labels {
        if l.len() != x.n() {
            return Err(
                CliError::precondition(format!("{} labels for {} feature rows", l.len(), x.n())).in_stage("load")
            );
        }
    }
    log::info!("loaded {} x {} features from {}", x.n(), x.d(), path.display());
    Ok((x, labels))
}

#[derive(Debug, Serialize)]
struct EmbedSummary {
    seed: u64,
    n_neighbors: usize,
    n_neighbors_clamped: bool,
    n_epochs: usize,
    curve_a: f64,
    curve_b: f64,
    graph_edges: usize,
    seconds: f64,
}

fn embed_stage(x: &FeatureMatrix, cfg: &PipelineConfig, seed: u64) -> Result<(UmapOutput, EmbedSummary)> {
    let (umap, clamped) = cfg.umap_for(seed).clamped_to(x.n());
    if clamped {
        log::warn!("n_neighbors lowered from {} to {} for {} points", cfg.umap.n_neighbors, umap.n_neighbors, x.n());
    }
    let start = Instant::now();
    let out = manifold::embed_detailed(x, &umap).stage("embed")?;
    let summary = EmbedSummary {
        seed,
        n_neighbors: umap.n_neighbors,
        n_neighbors_clamped: clamped,
        n_epochs: umap.epochs_for(x.n()),
        curve_a: out.curve.a,
        curve_b: out.curve.b,
        graph_edges: out.graph.edges().len(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((out, summary))
}

struct Clustering {
    labels: LabelVector,
    inferred_k: usize,
    model: Value,
    summary: Value,
}

fn dpgmm_model(state: &DpgmmState, result: &ClusterResult) -> Value {
    json!({
        "algorithm": "dpgmm",
        "inferred_k": result.inferred_k,
        "final_elbo": state.final_elbo(),
        "iterations": state.iterations,
        "converged": state.converged,
        "init_seed": state.init_seed,
        "prior": state.prior,
        "mixture_weights": result.mixture_weights,
        "component_means": result.component_means,
        "component_covariances": result.component_covariances,
        "elbo_trace": state.elbo_trace,
    })
}

fn kmeans_model(r: &KmeansResult) -> Value {
    let centers: Vec<&[f64]> = (0..r.k).map(|c| r.center(c)).collect();
    json!({
        "algorithm": "kmeans",
        "k": r.k,
        "inertia": r.inertia,
        "iterations": r.iterations,
        "converged": r.converged,
        "seeding": r.seeding,
        "centers": centers,
        "inertia_trace": r.inertia_trace,
    })
}

fn cluster_stage(y: &EmbeddingMatrix, cfg: &PipelineConfig, seed: u64) -> Result<Clustering> {
    let start = Instant::now();
    let mut out = match cfg.algorithm {
        Algorithm::Dpgmm => {
            let (state, result) = dpgmm::fit(y, &cfg.dpgmm_for(seed)).stage("cluster")?;
            Clustering {
                model: dpgmm_model(&state, &result),
                summary: json!({
                    "algorithm": "dpgmm",
                    "seed": seed,
                    "inferred_k": result.inferred_k,
                    "final_elbo": state.final_elbo(),
                    "iterations": state.iterations,
                    "converged": state.converged,
                    "best_init_seed": state.init_seed,
                }),
                inferred_k: result.inferred_k,
                labels: result.labels,
            }
        }
        Algorithm::Kmeans => {
            let k = cfg.kmeans_k.expect("validated");
            let r = baselines::kmeans_fit(y, k, cfg.kmeans_n_init, DEFAULT_MAX_ITER, seed).stage("cluster")?;
            let inferred_k = r.labels.distinct();
            Clustering {
                model: kmeans_model(&r),
                summary: json!({
                    "algorithm": "kmeans",
                    "seed": seed,
                    "k": k,
                    "inferred_k": inferred_k,
                    "inertia": r.inertia,
                    "iterations": r.iterations,
                    "converged": r.converged,
                }),
                inferred_k,
                labels: r.labels,
            }
        }
    };
    out.summary["seconds"] = json!(start.elapsed().as_secs_f64());
    log::info!("seed {seed}: {} clusters", out.inferred_k);
    Ok(out)
}

fn formats_echo() -> Value {
    json!({ "features": FEATURE_VERSION, "embedding": EMBEDDING_VERSION, "labels": "text, one integer per line" })
}

fn manifest(command: &str, cfg: &PipelineConfig, extra: Value) -> Value {
    let mut m = json!({
        "tool": "npcluster",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "seeds": cfg.replication_seeds(),
        "formats": formats_echo(),
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    m
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; absent for a single replication.
    pub std: Option<f64>,
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    MeanStd { mean, std }
}

fn aggregate(seeds: &[u64], inferred: &[usize], reports: &[Option<MetricsReport>]) -> Value {
    let ks: Vec<f64> = inferred.iter().map(|&k| k as f64).collect();
    let mut agg = json!({ "replications": seeds.len(), "seeds": seeds, "inferred_k": mean_std(&ks) });
    let reports: Vec<&MetricsReport> = reports.iter().flatten().collect();
    if !reports.is_empty() {
        let pick = |f: fn(&MetricsReport) -> f64| mean_std(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        agg["acc"] = json!(pick(|r| r.acc));
        agg["nmi"] = json!(pick(|r| r.nmi));
        agg["ari"] = json!(pick(|r| r.ari));
    }
    agg
}

fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    let cfg = crate::args::resolve_config(&a.common, &a.input, &a.umap, None)?;
    let (x, _) = load_inputs(&cfg, &a.input)?;
    let dir = out_dir(&cfg);
    let (out, summary) = embed_stage(&x, &cfg, cfg.seed)?;
    let path = dir.join("embedding.fmat");
    formats::write_embedding(&out.embedding, &path, Format::Binary).stage("write")?;
    if cfg.dump_graph {
        formats::write_fuzzy_graph(&out.graph, &dir.join("fuzzy_graph.txt")).stage("write")?;
    }
    let m = manifest(
        "embed",
        &cfg,
        json!({
            "input": { "n": x.n(), "d": x.d() },
            "embedding": { "path": path, "n": out.embedding.n(), "p": out.embedding.p() },
            "embed": summary,
        }),
    );
    formats::write_json(&m, &dir.join("manifest.json")).stage("write")?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    let mut cfg = crate::args::resolve_config(&a.common, &a.input, &a.umap, Some(&a.cluster))?;
    if let Some(e) = &a.embedding {
        cfg.paths.embedding = Some(e.clone());
    }
    let dir = out_dir(&cfg);
    let (y, labels, embed_info) = match cfg.paths.embedding.clone() {
        Some(path) => {
            let y = formats::read_embedding(&path, Format::from_path(&path)).stage("load")?;
            let labels = cfg.paths.labels.as_ref().map(|p| formats::read_labels(p)).transpose().stage("load")?;
            (y, labels, Value::Null)
        }
        None => {
            let (x, labels) = load_inputs(&cfg, &a.input)?;
            let (out, summary) = embed_stage(&x, &cfg, cfg.seed)?;
            formats::write_embedding(&out.embedding, &dir.join("embedding.fmat"), Format::Binary).stage("write")?;
            (out.embedding, labels, json!(summary))
        }
    };
    if let Some(l) = &labels {
        if l.len() != y.n() {
            return Err(
                CliError::precondition(format!("{} labels for {} embedded points", l.len(), y.n())).in_stage("load")
            );
        }
    }
    let seeds = cfg.replication_seeds();
    let replicated = seeds.len() > 1;
    let runs: Vec<(Value, usize, Option<MetricsReport>)> = seeds
        .par_iter()
        .map(|&seed| {
            let c = cluster_stage(&y, &cfg, seed)?;
            let labels_path = dir.join(output_name("labels", "txt", seed, replicated));
            formats::write_labels(&c.labels, &labels_path).stage("write")?;
            formats::write_json(&c.model, &dir.join(output_name("model", "json", seed, replicated))).stage("write")?;
            let report = labels.as_ref().map(|t| metrics::evaluate(t, &c.labels)).transpose().stage("evaluate")?;
            if let Some(r) = &report {
                formats::write_json(r, &dir.join(output_name("metrics", "json", seed, replicated))).stage("write")?;
            }
            let mut s = c.summary;
            s["labels"] = json!(labels_path);
            s["metrics"] = json!(report);
            Ok((s, c.inferred_k, report))
        })
        .collect::<Result<_>>()?;
    let inferred: Vec<usize> = runs.iter().map(|r| r.1).collect();
    let reports: Vec<Option<MetricsReport>> = runs.iter().map(|r| r.2.clone()).collect();
    let agg = aggregate(&seeds, &inferred, &reports);
    if replicated {
        formats::write_json(&agg, &dir.join("aggregate.json")).stage("write")?;
    }
    let m = manifest(
        "cluster",
        &cfg,
        json!({
            "input": { "n": y.n(), "p": y.p() },
            "embed": embed_info,
            "replications": runs.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
            "aggregate": agg,
        }),
    );
    formats::write_json(&m, &dir.join("manifest.json")).stage("write")?;
    for (s, k, _) in &runs {
        println!("seed {}: inferred_k = {k}", s["seed"]);
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let pred = formats::read_labels(&a.pred).stage("load")?;
    let truth = formats::read_labels(&a.labels).stage("load")?;
    let mut report = metrics::evaluate(&truth, &pred).stage("evaluate")?;
    report.nmi = metrics::nmi_with(&truth, &pred, a.nmi.into()).stage("evaluate")?;
    if let Some(out) = &a.out {
        formats::write_json(&report, out).stage("write")?;
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn plot_file(y: &EmbeddingMatrix, labels: Option<&LabelVector>, path: &Path) -> Result<()> {
    let svg = plot::render_svg(y, labels).stage("plot")?;
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e)).stage("plot")
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let y = formats::read_embedding(&a.embedding, Format::from_path(&a.embedding)).stage("load")?;
    let labels = a.labels.as_ref().map(|p| formats::read_labels(p)).transpose().stage("load")?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    plot_file(&y, labels.as_ref(), &a.out)
}

fn cmd_pipeline(a: &PipelineArgs) -> Result<()> {
    let cfg = crate::args::resolve_config(&a.common, &a.input, &a.umap, Some(&a.cluster))?;
    let (x, labels) = load_inputs(&cfg, &a.input)?;
    let dir = out_dir(&cfg);
    let seeds = cfg.replication_seeds();
    let replicated = seeds.len() > 1;
    let runs: Vec<(Value, usize, Option<MetricsReport>)> = seeds
        .par_iter()
        .map(|&seed| {
            let (out, embed_summary) = embed_stage(&x, &cfg, seed)?;
            let y = &out.embedding;
            formats::write_embedding(y, &dir.join(output_name("embedding", "fmat", seed, replicated)), Format::Binary)
                .stage("write")?;
            if cfg.dump_graph {
                formats::write_fuzzy_graph(&out.graph, &dir.join(output_name("fuzzy_graph", "txt", seed, replicated)))
                    .stage("write")?;
            }
            let c = cluster_stage(y, &cfg, seed)?;
            formats::write_labels(&c.labels, &dir.join(output_name("labels", "txt", seed, replicated)))
                .stage("write")?;
            formats::write_json(&c.model, &dir.join(output_name("model", "json", seed, replicated))).stage("write")?;
            let report = labels.as_ref().map(|t| metrics::evaluate(t, &c.labels)).transpose().stage("evaluate")?;
            if let Some(r) = &report {
                formats::write_json(r, &dir.join(output_name("metrics", "json", seed, replicated))).stage("write")?;
            }
            let plot_note = if y.p() == 2 {
                plot_file(y, Some(&c.labels), &dir.join(output_name("plot", "svg", seed, replicated)))?;
                json!("written")
            } else {
                json!(format!("skipped: plot requires p=2, embedding has p={}", y.p()))
            };
            let summary = json!({
                "seed": seed,
                "embed": embed_summary,
                "cluster": c.summary,
                "evaluation": match &report {
                    Some(r) => json!(r),
                    None => json!("skipped: no labels"),
                },
                "plot": plot_note,
            });
            Ok((summary, c.inferred_k, report))
        })
        .collect::<Result<_>>()?;
    let inferred: Vec<usize> = runs.iter().map(|r| r.1).collect();
    let reports: Vec<Option<MetricsReport>> = runs.iter().map(|r| r.2.clone()).collect();
    let agg = aggregate(&seeds, &inferred, &reports);
    if replicated {
        formats::write_json(&agg, &dir.join("aggregate.json")).stage("write")?;
    }
    let m = manifest(
        "pipeline",
        &cfg,
        json!({
            "input": { "n": x.n(), "d": x.d(), "labelled": labels.is_some() },
            "evaluation": if labels.is_some() { "done" } else { "skipped: no labels" },
            "replications": runs.iter().map(|r| r.0.clone()).collect::<Vec<_>>(),
            "aggregate": agg,
        }),
    );
    formats::write_json(&m, &dir.join("manifest.json")).stage("write")?;
    for (i, (_, k, report)) in runs.iter().enumerate() {
        match report {
            Some(r) => println!(
                "seed {}: inferred_k = {k}, acc = {:.2}, nmi = {:.2}, ari = {:.2}",
                seeds[i], r.acc, r.nmi, r.ari
            ),
            None => println!("seed {}: inferred_k = {k}", seeds[i]),
        }
    }
    Ok(())
}
