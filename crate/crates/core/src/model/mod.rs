//! The graph-conditioned variational autoencoder: architecture, objective,
//! training loop, and sampling.

mod config;
mod generate;
mod network;
mod train;

pub use config::{beta_schedule, TrainConfig, Variant};
pub use generate::{embed_windows, generate};
pub use network::{
    decode, decode_deterministic, encode_graph, encode_ts, loss_align, loss_dist, loss_kl, loss_recon,
    objective, param_shapes, posterior, reparameterize, Graph2Ts, LossBreakdown, ObjectiveVars,
    PosteriorParams, LOGVAR_LIMIT, LOG_TEMP,
};
pub use train::{conditioning_matrix, standard_normal, train, window_matrix, EpochLog, TrainOutcome};
