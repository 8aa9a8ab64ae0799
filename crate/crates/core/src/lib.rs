//! Folded concave Laplacian spectral (FCLS) penalties for block-diagonal
//! sparsity, fitted with the local linear approximation (LLA) algorithm.
//!
//! A parameter `β ∈ R^D`, `D = d(d-1)/2`, is viewed as the edge weights of
//! an undirected graph on `d` nodes. Penalizing the Laplacian spectrum of
//! `|β|` with a concave SCAD-like function pushes the graph toward several
//! connected components, i.e. block-diagonal structure up to permutation.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64`/`*32`
//! aliases below name the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod initializers;
pub mod io;
pub mod linalg;
pub mod lla;
pub mod multiarray;
pub mod penalty;
pub mod scalar;
pub mod solvers;
mod union_find;

pub use error::{FclsError, Result};
pub use graph::{
    block_support, connected_components, edge_count, edge_index, edge_pair, laplacian, laplacian_norms,
    spectral_gap, spectral_summary, AdjacencyMatrix, BlockSupport, ComponentLabeling, EdgeVector,
    LaplacianNorms, SpectralSummary,
};
pub use initializers::{
    cv_select_lasso, cv_select_threshold, generalized_threshold, CvChoice, InitKind, InitSpec, ThresholdKind,
};
pub use lla::{
    lla_run, lla_step, surrogate_weights, tau_grid, tau_max, LlaMode, LlaOptions, LlaTrace, SurrogateWeights,
};
pub use multiarray::{bipartite_embed, hypergraph_adjacency, multiarray_blocks, MultiArrayParam, RectParam};
pub use penalty::{fcls_value, Penalty, PenaltyKind, PenaltySpec, TauSpec};
pub use scalar::Scalar;
pub use solvers::{
    block_oracle, kkt_residual, LinearModel, LogisticModel, LossModel, ShrinkageModel, SolverOptions,
};

pub type EdgeVector64 = EdgeVector<f64>;
pub type EdgeVector32 = EdgeVector<f32>;
pub type Penalty64 = Penalty<f64>;
pub type Penalty32 = Penalty<f32>;
pub type SurrogateWeights64 = SurrogateWeights<f64>;
pub type SurrogateWeights32 = SurrogateWeights<f32>;
pub type LlaTrace64 = LlaTrace<f64>;
pub type LlaTrace32 = LlaTrace<f32>;
pub type LlaOptions64 = LlaOptions<f64>;
pub type LlaOptions32 = LlaOptions<f32>;
pub type ShrinkageModel64 = ShrinkageModel<f64>;
pub type ShrinkageModel32 = ShrinkageModel<f32>;
pub type LinearModel64 = LinearModel<f64>;
pub type LinearModel32 = LinearModel<f32>;
pub type LogisticModel64 = LogisticModel<f64>;
pub type LogisticModel32 = LogisticModel<f32>;
pub type RectParam64 = RectParam<f64>;
pub type RectParam32 = RectParam<f32>;
pub type MultiArrayParam64 = MultiArrayParam<f64>;
pub type MultiArrayParam32 = MultiArrayParam<f32>;
