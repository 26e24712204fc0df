//! Command-line surface. Flags override the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use npcluster_core::manifold::InitMethod;
use npcluster_core::metrics::NmiNormalization;

use crate::config::{Algorithm, PipelineConfig};
use crate::error::{Result, StageExt};
use crate::formats::Format;

#[derive(Debug, Parser)]
#[command(
    name = "npcluster",
    version,
    about = "Manifold projection and Dirichlet-process mixture clustering of feature vectors"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project features to a low-dimensional embedding.
    Embed(EmbedArgs),
    /// Cluster an embedding (or features, embedding them first).
    Cluster(ClusterArgs),
    /// Score predicted labels against reference labels.
    Evaluate(EvaluateArgs),
    /// Draw a 2-D embedding as an SVG scatter plot.
    Plot(PlotArgs),
    /// embed, cluster, evaluate (when labels exist) and plot.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Single-worker embedding optimizer with bitwise reproducible output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Feature file (FMAT or CSV).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Reference labels: text file with one integer per line, or FMAT with labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// The last CSV column holds integer labels.
    #[arg(long)]
    pub csv_labels: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Spectral,
    Random,
}

#[derive(Debug, Args)]
pub struct UmapArgs {
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub min_dist: Option<f64>,
    /// Embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Also write the fuzzy graph as an edge list.
    #[arg(long)]
    pub dump_graph: bool,
}

#[derive(Debug, Args)]
pub struct ClusterOpts {
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    /// Number of clusters for k-means.
    #[arg(long)]
    pub k: Option<usize>,
    /// Truncation level of the mixture.
    #[arg(long)]
    pub max_components: Option<usize>,
    /// Dirichlet-process concentration.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Prior precision scaling of component means.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub umap: UmapArgs,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Embedding file; takes precedence over --features.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[command(flatten)]
    pub umap: UmapArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub umap: UmapArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NmiArg {
    Arithmetic,
    Geometric,
}

impl From<NmiArg> for NmiNormalization {
    fn from(a: NmiArg) -> Self {
        match a {
            NmiArg::Arithmetic => NmiNormalization::Arithmetic,
            NmiArg::Geometric => NmiNormalization::Geometric,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted labels.
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference labels.
    #[arg(long)]
    pub labels: PathBuf,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "arithmetic")]
    pub nmi: NmiArg,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    /// Colour points by these labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// SVG output path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Loads the config file (if any) and applies flag overrides.
pub fn resolve_config(
    common: &CommonArgs,
    input: &InputArgs,
    umap: &UmapArgs,
    cluster: Option<&ClusterOpts>,
) -> Result<PipelineConfig> {
    let mut c = match &common.config {
        Some(path) => PipelineConfig::load(path).stage("config")?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = common.seed {
        c.seed = v;
    }
    if common.deterministic {
        c.deterministic = true;
    }
    if let Some(v) = &common.out {
        c.paths.out = Some(v.clone());
    }
    if let Some(v) = &input.features {
        c.paths.features = Some(v.clone());
    }
    if let Some(v) = &input.labels {
        c.paths.labels = Some(v.clone());
    }
    if let Some(v) = umap.neighbors {
        c.umap.n_neighbors = v;
    }
    if let Some(v) = umap.min_dist {
        c.umap.min_dist = v;
    }
    if let Some(v) = umap.dim {
        c.umap.p = v;
    }
    if let Some(v) = umap.epochs {
        c.umap.n_epochs = Some(v);
    }
    if let Some(v) = umap.init {
        c.umap.init = match v {
            InitArg::Spectral => InitMethod::Spectral,
            InitArg::Random => InitMethod::Random,
        };
    }
    if umap.dump_graph {
        c.dump_graph = true;
    }
    if let Some(o) = cluster {
        if let Some(v) = o.algorithm {
            c.algorithm = v;
        }
        if let Some(v) = o.k {
            c.kmeans_k = Some(v);
        }
        if let Some(v) = o.max_components {
            c.dpgmm.max_components = v;
        }
        if let Some(v) = o.alpha {
            c.dpgmm.concentration = v;
        }
        if let Some(v) = o.gamma {
            c.dpgmm.mean_precision = v;
        }
        if let Some(v) = o.replications {
            c.replications = v;
        }
    }
    c.validate().stage("config")?;
    Ok(c)
}
