//! Graph-conditioned time-series generation.
//!
//! Windows are discretized into quantile states, summarized as first-order
//! transition graphs, and paired with a latent-variable model that learns to
//! generate windows from a graph. The metrics module scores a synthetic set
//! against a real one.

pub mod autodiff;
pub mod dataset;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod quantile_graph;
pub mod tensor;

pub use dataset::{DatasetSplit, NormStats, RawSeries, SynthKind, TimeSeriesWindow};
pub use error::{Error, Result};
pub use metrics::{evaluate, EvalOptions, MetricsReport};
pub use model::{generate, train, Graph2Ts, TrainConfig, TrainOutcome, Variant};
pub use quantile_graph::{QuantileBoundaries, QuantileGraph, StateSequence};
pub use tensor::Tensor2;
