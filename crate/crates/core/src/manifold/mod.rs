//! UMAP projection: kNN graph, fuzzy simplicial set, fitted output kernel,
//! initial layout and SGD on the cross-entropy.

mod curve;
mod fuzzy;
mod init;
mod knn;
mod optimize;

pub use curve::{fit_curve_params, fit_curve_params_with_residual, target_profile, CurveParams};
pub use fuzzy::{
    calibrate_smooth_knn, fuzzy_simplicial_set, fuzzy_union, membership_mass, Calibration, FuzzyEdge, FuzzyGraph,
};
pub use init::{initialize_embedding, random_layout, InitMethod};
pub use knn::{build_knn, exact_knn, nn_descent, recall, KnnGraph, NnDescentParams, EXACT_KNN_LIMIT};
pub use optimize::{optimize_embedding, SgdMode, SgdParams};

use alloc::format;

use crate::{EmbeddingMatrix, Error, FeatureMatrix, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct UmapConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    /// Output dimension.
    pub p: usize,
    /// `None` picks 500 epochs below 10 000 points and 200 from there on.
    pub n_epochs: Option<usize>,
    pub negative_sample_rate: usize,
    pub initial_learning_rate: f64,
    pub init: InitMethod,
    pub seed: u64,
    pub mode: SgdMode,
}

impl Default for UmapConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 100,
            min_dist: 0.5,
            spread: 1.0,
            p: 2,
            n_epochs: None,
            negative_sample_rate: 5,
            initial_learning_rate: 1.0,
            init: InitMethod::Spectral,
            seed: 0,
            mode: SgdMode::Deterministic,
        }
    }
}

impl UmapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors < 2 {
            return Err(Error::InvalidArgument(format!("n_neighbors must be at least 2, got {}", self.n_neighbors)));
        }
        if !(self.min_dist >= 0.0) || !self.min_dist.is_finite() {
            return Err(Error::InvalidArgument(format!("min_dist must be non-negative, got {}", self.min_dist)));
        }
        if !(self.spread > 0.0) || !self.spread.is_finite() {
            return Err(Error::InvalidArgument(format!("spread must be positive, got {}", self.spread)));
        }
        if self.min_dist > self.spread {
            return Err(Error::InvalidArgument(format!(
                "min_dist ({}) must not exceed spread ({})",
                self.min_dist, self.spread
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if !(self.initial_learning_rate > 0.0) || !self.initial_learning_rate.is_finite() {
            return Err(Error::InvalidArgument("initial_learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn epochs_for(&self, n: usize) -> usize {
        self.n_epochs.unwrap_or(if n < 10_000 { 500 } else { 200 })
    }

    /// Copy with `n_neighbors` lowered to `n - 1` when the data set is too
    /// small for the configured value. The flag reports whether it changed.
    pub fn clamped_to(&self, n: usize) -> (Self, bool) {
        let mut c = self.clone();
        if n >= 3 && c.n_neighbors >= n {
            c.n_neighbors = n - 1;
            return (c, true);
        }
        (c, false)
    }
}

/// Everything [`embed_detailed`] produced along the way.
#[derive(Debug, Clone)]
pub struct UmapOutput {
    pub embedding: EmbeddingMatrix,
    pub graph: FuzzyGraph,
    pub curve: CurveParams,
}

/// Projects `features` to `config.p` dimensions.
pub fn embed(features: &FeatureMatrix, config: &UmapConfig) -> Result<EmbeddingMatrix> {
    embed_detailed(features, config).map(|o| o.embedding)
}

pub fn embed_detailed(features: &FeatureMatrix, config: &UmapConfig) -> Result<UmapOutput> {
    config.validate()?;
    let n = features.n();
    if n <= config.n_neighbors {
        return Err(Error::Precondition(format!(
            "need more points than n_neighbors ({n} points, n_neighbors = {})",
            config.n_neighbors
        )));
    }
    let knn = build_knn(features, config.n_neighbors, config.seed)?;
    let calibration = calibrate_smooth_knn(&knn);
    let graph = fuzzy_simplicial_set(&knn, calibration);
    drop(knn);
    let curve = fit_curve_params(config.min_dist, config.spread)?;
    let init = initialize_embedding(&graph, config.p, config.init, config.seed)?;
    let params = SgdParams {
        n_epochs: config.epochs_for(n),
        negative_sample_rate: config.negative_sample_rate,
        initial_learning_rate: config.initial_learning_rate,
        repulsion_strength: 1.0,
        curve,
        mode: config.mode,
        seed: config.seed,
    };
    let embedding = optimize_embedding(&graph, &init, &params)?;
    Ok(UmapOutput { embedding, graph, curve })
}
