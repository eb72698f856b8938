//! Uncertainty quantification for statistics of a single observed network by
//! subsampling: node, row and node-pair schemes on a common scale, percentile
//! bootstrap intervals, and a double bootstrap for the sampling fraction.

pub mod bootstrap;
pub mod community;
pub mod error;
pub mod generators;
pub mod graph;
pub mod regression;
pub mod rng;
pub mod statistics;
pub mod subsampling;

pub use bootstrap::{bootstrap_ci, choose_q, BootstrapRun, QSelection, SelectionSize};
pub use error::{Error, Result};
pub use graph::{Graph, Laplacian};
pub use rng::Stream;
pub use statistics::{StatValue, Statistic, StatisticId};
pub use subsampling::{Resampler, SamplingPlan, Scheme, Subsample};
