//! Collaborative contextual bandits.
//!
//! Users are reduced to k-means clusters; a column-stochastic similarity matrix
//! over clusters lets what one cluster learns inform its neighbours. The crate
//! provides M-LinUCB (independent per-cluster LinUCB), CoLin (collaborative
//! LinUCB over the similarity matrix) and FactorUCB (CoLin plus learned per-arm
//! latent factors), together with a replay evaluator for logged click data and
//! synthetic environments with known ground truth.

pub mod clustering;
pub mod error;
pub mod formats;
pub mod linalg;
pub mod policies;
pub mod replay;
pub mod similarity;
pub mod synth;

pub use clustering::{fit_kmeans, ClusterModel};
pub use error::{ClusterError, FormatError, LinalgError, PolicyError, SimilarityError};
pub use linalg::{InverseState, Matrix};
pub use policies::{Algo, BanditPolicy, Candidate, Policy, PolicyConfig};
pub use replay::{replay, EventRecord, MetricsSeries, ReplayOptions};
pub use similarity::{build_w, sparsify, SimilarityMatrix};
