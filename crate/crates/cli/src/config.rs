//! Optional TOML defaults. Flags and environment variables win over the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::output::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub solve: SolveConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    pub replay_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_retries: Option<u32>,
    pub timeout: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub time_budget: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::input(format!("invalid config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let config: FileConfig = toml::from_str(
            "seed = 3\n[llm]\nmodel = \"m\"\ntemperature = 0.2\nreplay_dir = \"r\"\n[solve]\ntime_budget = 1.5\n",
        )
        .unwrap();
        assert_eq!(config.seed, Some(3));
        assert_eq!(config.llm.model.as_deref(), Some("m"));
        assert_eq!(config.llm.replay_dir, Some(PathBuf::from("r")));
        assert_eq!(config.solve.time_budget, Some(1.5));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("[llm]\nmodle = \"m\"\n").is_err());
    }

    #[test]
    fn no_path_means_defaults() {
        let config = FileConfig::load(None).unwrap();
        assert!(config.seed.is_none() && config.llm.endpoint.is_none());
    }
}
