//! Run configuration: a TOML file with command-line overrides on top.

use std::path::{Path, PathBuf};

use npcluster_core::dpgmm::DpgmmConfig;
use npcluster_core::manifold::{SgdMode, UmapConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Dpgmm,
    Kmeans,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub features: Option<PathBuf>,
    pub embedding: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base seed; replication `r` runs every stage with `seed + r`.
    pub seed: u64,
    pub algorithm: Algorithm,
    pub kmeans_k: Option<usize>,
    pub kmeans_n_init: usize,
    pub replications: usize,
    /// Single-worker, bitwise reproducible embedding optimizer.
    pub deterministic: bool,
    /// Write the fuzzy graph as an `i j weight` edge list.
    pub dump_graph: bool,
    pub umap: UmapConfig,
    pub dpgmm: DpgmmConfig,
    pub paths: Paths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            algorithm: Algorithm::Dpgmm,
            kmeans_k: None,
            kmeans_n_init: 5,
            replications: 1,
            deterministic: false,
            dump_graph: false,
            umap: UmapConfig::default(),
            dpgmm: DpgmmConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::Kmeans && self.kmeans_k.is_none() {
            return Err(CliError::config("algorithm kmeans requires --k (kmeans_k)"));
        }
        if self.kmeans_k == Some(0) {
            return Err(CliError::config("k must be at least 1"));
        }
        if self.replications == 0 {
            return Err(CliError::config("replications must be at least 1"));
        }
        if self.kmeans_n_init == 0 {
            return Err(CliError::config("kmeans_n_init must be at least 1"));
        }
        self.umap.validate()?;
        self.dpgmm.validate(self.umap.p)?;
        Ok(())
    }

    pub fn replication_seeds(&self) -> Vec<u64> {
        (0..self.replications as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }

    /// Embedding settings for one replication seed.
    pub fn umap_for(&self, seed: u64) -> UmapConfig {
        UmapConfig {
            seed,
            mode: if self.deterministic { SgdMode::Deterministic } else { SgdMode::Parallel },
            ..self.umap.clone()
        }
    }

    pub fn dpgmm_for(&self, seed: u64) -> DpgmmConfig {
        DpgmmConfig { seed, ..self.dpgmm.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let text = r#"
            seed = 7
            algorithm = "kmeans"
            kmeans_k = 4

            [umap]
            n_neighbors = 15
            init = "random"

            [dpgmm]
            concentration = 0.5
        "#;
        let c: PipelineConfig = toml::from_str(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.algorithm, Algorithm::Kmeans);
        assert_eq!(c.umap.n_neighbors, 15);
        assert_eq!(c.umap.min_dist, 0.5);
        assert_eq!(c.dpgmm.concentration, 0.5);
        assert_eq!(c.dpgmm.max_components, 50);
        c.validate().unwrap();
        let back: PipelineConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn kmeans_needs_k() {
        let c = PipelineConfig { algorithm: Algorithm::Kmeans, ..Default::default() };
        assert!(c.validate().unwrap_err().message.contains("--k"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("sede = 3").is_err());
        assert!(toml::from_str::<PipelineConfig>("[umap]\nneighbours = 3").is_err());
    }
}
