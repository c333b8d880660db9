//! Experiment configuration. Flags override file values.

use std::path::Path;

use serde::Deserialize;
use stereoreader::adapter::{DEFAULT_IN_FLIGHT, DEFAULT_MAX_SCENE_TOKENS};
use stereoreader::metrics::{DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use stereoreader::parser::{DEFAULT_CHAR_WIDTH, DEFAULT_TOLERANCE};
use stereoreader::reader::ReaderConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub parse: ParseConfig,
    pub reader: ReaderConfig,
    pub prompt: PromptConfig,
    pub evaluate: EvaluateConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParseConfig {
    pub tolerance: usize,
    pub char_width: f64,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig {
            tolerance: DEFAULT_TOLERANCE,
            char_width: DEFAULT_CHAR_WIDTH,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    pub max_scene_tokens: usize,
    pub in_flight: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            max_scene_tokens: DEFAULT_MAX_SCENE_TOKENS,
            in_flight: DEFAULT_IN_FLIGHT,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub resamples: usize,
    pub level: f64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> stereoreader::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| stereoreader::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| stereoreader::Error::Invalid(format!("{}: {e}", path.display())))
    }

    /// The seed in effect: the flag, then the file, then 0.
    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reader_table_overrides_defaults() {
        let cfg: Config = toml::from_str("seed = 3\n[reader]\nd_model = 16\noptimizer = \"adam\"\n").unwrap();
        assert_eq!(cfg.seed(None), 3);
        assert_eq!(cfg.seed(Some(9)), 9);
        assert_eq!(cfg.reader.d_model, 16);
        assert_eq!(cfg.reader.epochs, ReaderConfig::default().epochs);
        assert_eq!(cfg.evaluate.resamples, DEFAULT_RESAMPLES);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("[reader]\nd_modle = 16\n").is_err());
    }
}
