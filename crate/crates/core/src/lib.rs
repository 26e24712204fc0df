//! Clustering of deep feature vectors by manifold projection followed by a
//! truncated Dirichlet-process Gaussian mixture fit with mean-field
//! variational inference.
//!
//! The crate is `no_std` and only needs `alloc`. The `std` feature turns on `std` in
//! the dependencies; `parallel` adds rayon-backed code paths for the
//! kNN search, the embedding optimizer and the multi-start loops.
//!
//! Pipeline stages:
//!
//! * [`manifold`] builds a kNN graph, its fuzzy simplicial set and a
//!   low-dimensional layout (UMAP).
//! * [`dpgmm`] fits the stick-breaking mixture and extracts hard labels and
//!   the inferred number of clusters.
//! * [`baselines`] holds k-means, used both as initializer and as the fixed-K
//!   comparison.
//! * [`metrics`] scores a labelling against ground truth (ACC, NMI, ARI).

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod data;
pub mod dpgmm;
mod error;
pub mod linalg;
pub mod manifold;
pub mod metrics;
pub mod rng;
pub mod special;

pub use data::{relabel_contiguous, EmbeddingMatrix, FeatureMatrix, LabelVector};
pub use error::{Error, Result};
