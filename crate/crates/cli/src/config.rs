//! Run configuration: a sectioned TOML file whose every table rejects
//! unknown keys. Command-line flags are applied on top afterwards.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use graph2ts::model::TrainConfig;
use graph2ts::SynthKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: DataConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Numeric text file to window; ignored when `synth` is set.
    pub input: Option<PathBuf>,
    pub column: usize,
    pub synth: Option<SynthKind>,
    /// Number of synthetic windows.
    pub n: usize,
    pub eval_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            input: None,
            column: 0,
            synth: None,
            n: 2000,
            eval_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// `None` means half the window length.
    pub max_lag: Option<usize>,
    pub coverage_quantiles: Vec<f64>,
    pub n_per_graph: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_lag: None,
            coverage_quantiles: vec![0.5, 0.9],
            n_per_graph: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            out_dir: PathBuf::from("run"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Defaults, or the file's contents when a path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graph2ts::Variant;

    #[test]
    fn sections_are_optional() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        let c = RunConfig::from_toml("[train]\nepochs = 7\nvariant = \"no_graph\"\n[data]\nsynth = \"ar1\"\n").unwrap();
        assert_eq!(c.train.epochs, 7);
        assert_eq!(c.train.variant, Variant::NoGraph);
        assert_eq!(c.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(c.data.synth, Some(SynthKind::Ar1));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[train]\nepochz = 7\n").is_err());
        assert!(RunConfig::from_toml("[extra]\na = 1\n").is_err());
        assert!(RunConfig::from_toml("[eval]\nmax_lag = 4\nfoo = 1\n").is_err());
    }
}
