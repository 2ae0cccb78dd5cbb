//! Run configuration: one TOML file that, together with CLI overrides,
//! determines every output byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSpec;
use crate::metrics::ScoringParams;
use crate::views::RenderParams;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 20250101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub global_seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusSpec,
    pub render: RenderParams,
    pub scoring: ScoringParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            global_seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
            corpus: CorpusSpec::default(),
            render: RenderParams::default(),
            scoring: ScoringParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::config("<file>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config { field, message } if field == "<file>" => {
                Error::config(path.display().to_string(), message)
            }
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        if self.render.size < 8 {
            return Err(Error::config("render.size", "must be at least 8 pixels"));
        }
        self.render
            .stft
            .validate()
            .map_err(|e| Error::config("render.stft", e.to_string()))?;
        if self.render.constellation_stride == Some(0) {
            return Err(Error::config("render.constellation_stride", "must be positive"));
        }
        if let Some(tol) = self.scoring.spe_tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::config("scoring.spe_tolerance", "must be nonnegative"));
            }
        }
        let m = &self.scoring.metrics;
        if !(m.bleu_epsilon > 0.0 && m.bleu_epsilon < 1.0) {
            return Err(Error::config("scoring.metrics.bleu_epsilon", "must lie in (0, 1)"));
        }
        if !(m.rouge_beta > 0.0) {
            return Err(Error::config("scoring.metrics.rouge_beta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&m.meteor_alpha) {
            return Err(Error::config("scoring.metrics.meteor_alpha", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&m.meteor_gamma) {
            return Err(Error::config("scoring.metrics.meteor_gamma", "must lie in [0, 1]"));
        }
        if !(m.cider_scale > 0.0) {
            return Err(Error::config("scoring.metrics.cider_scale", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let config = RunConfig::default();
        let text = config.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), config);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = RunConfig::from_toml("global_seed = 5\n").unwrap();
        assert_eq!(c.global_seed, 5);
        assert_eq!(c.corpus, CorpusSpec::default());
    }

    #[test]
    fn bad_field_is_named() {
        let text = RunConfig::default()
            .to_toml()
            .unwrap()
            .replace("bench_fraction = 0.2", "bench_fraction = 1.5");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("corpus.bench_fraction"), "{err}");
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }
}
