//! Clique-count community recovery in the stochastic block model, with exact
//! moment oracles and low-degree polynomial tooling.

pub mod clique;
pub mod error;
pub mod ld;
pub mod mom;
pub mod num;
pub mod oracles;
pub mod sbm;

pub use clique::{block_partition, clique_stat, partial_stats, BlockPartition};
pub use error::{Error, Result};
pub use ld::{LdContext, Matching, Template};
pub use mom::{clustering_error, recover, MomConfig, PairwiseEstimate, Partition};
pub use oracles::{regime_report, RegimeReport};
pub use sbm::{center_adjacency, Assignment, CenteredMatrix, Conditioning, Graph, SbmParams};
