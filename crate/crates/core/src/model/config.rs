use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which generator is trained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Graph-conditioned VAE with all four loss terms.
    #[default]
    Full,
    /// Same network, but every conditioning graph is the identity matrix.
    NoGraph,
    /// No posterior or latent: the decoder maps the normalized graph
    /// embedding straight to a series.
    Deterministic,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoGraph => "no_graph",
            Variant::Deterministic => "deterministic",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, Variant::Deterministic)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "no_graph" => Ok(Variant::NoGraph),
            "deterministic" => Ok(Variant::Deterministic),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub window_length: usize,
    pub num_states: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub w_align: f64,
    pub w_recon: f64,
    pub w_dist: f64,
    pub beta_max: f64,
    pub kl_warmup_epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub temperature_init: f64,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window_length: 32,
            num_states: 10,
            embed_dim: 128,
            hidden_dim: 128,
            latent_dim: 32,
            w_align: 1.0,
            w_recon: 5.0,
            w_dist: 1.0,
            beta_max: 0.05,
            kl_warmup_epochs: 50,
            lr: 3e-4,
            batch_size: 4096,
            epochs: 300,
            temperature_init: 0.07,
            seed: 0,
            variant: Variant::Full,
        }
    }
}

impl TrainConfig {
    /// Width of a flattened conditioning graph.
    pub fn graph_dim(&self) -> usize {
        self.num_states * self.num_states
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("window_length", self.window_length),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("latent_dim", self.latent_dim),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("`{name}` must be positive")));
        }
        if self.num_states < 2 {
            return Err(Error::Config("`num_states` must be at least 2".into()));
        }
        let weights = [
            ("w_align", self.w_align),
            ("w_recon", self.w_recon),
            ("w_dist", self.w_dist),
            ("beta_max", self.beta_max),
        ];
        if let Some((name, _)) = weights.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("`{name}` must be finite and non-negative")));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config("`lr` must be positive".into()));
        }
        if !(self.temperature_init.is_finite() && self.temperature_init > 0.0) {
            return Err(Error::Config("`temperature_init` must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Linear KL warm-up from 0 to `beta_max` over `warmup` epochs (0-based).
pub fn beta_schedule(epoch: usize, warmup: usize, beta_max: f64) -> f64 {
    if warmup == 0 {
        return beta_max;
    }
    beta_max * (epoch as f64 / warmup as f64).min(1.0)
}
