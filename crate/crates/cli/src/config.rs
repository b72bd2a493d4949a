use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ukcs::inca::DEFAULT_MIN_COUNT;
use ukcs::langid::DEFAULT_PROFILE_SIZE;
use ukcs::{FilterConfig, NoiseConfig};

use crate::CliError;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "UKCS_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub workers: Option<usize>,
    pub stats_out: Option<PathBuf>,
    pub filter: FilterConfig,
    pub noise: NoiseConfig,
    pub romanize: RomanizeSection,
    pub inca: IncaSection,
    pub langid: LangIdSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RomanizeSection {
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncaSection {
    pub vocab: Option<PathBuf>,
    pub min_count: u64,
}

impl Default for IncaSection {
    fn default() -> Self {
        IncaSection {
            vocab: None,
            min_count: DEFAULT_MIN_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LangIdSection {
    pub model: Option<PathBuf>,
    pub profile_size: usize,
}

impl Default for LangIdSection {
    fn default() -> Self {
        LangIdSection {
            model: None,
            profile_size: DEFAULT_PROFILE_SIZE,
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.filter
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.noise
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        if self.inca.min_count == 0 {
            return Err(CliError::Usage("inca.min_count must be at least 1".into()));
        }
        if self.langid.profile_size == 0 {
            return Err(CliError::Usage(
                "langid.profile_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = PipelineConfig::parse("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.filter.ratio_min, 0.67);
        assert_eq!(cfg.inca.min_count, 2);
    }

    #[test]
    fn sections_parse() {
        let cfg = PipelineConfig::parse(
            r#"
            workers = 3
            [filter]
            ratio_max = 2.0
            exempt_corpora = ["XLEnt", "Tatoeba"]
            [noise]
            p_add_punct = 0.5
            seed = 9
            [langid]
            model = "m.txt"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.workers, Some(3));
        assert_eq!(cfg.filter.ratio_max, 2.0);
        assert_eq!(cfg.filter.exempt_corpora.len(), 2);
        assert_eq!(cfg.noise.seed, 9);
        assert_eq!(cfg.noise.p_lowercase_all, 0.05);
        assert_eq!(cfg.langid.model.as_deref(), Some(Path::new("m.txt")));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(PipelineConfig::parse("wrokers = 3").is_err());
        assert!(PipelineConfig::parse("[noise]\np_add_punkt = 0.1").is_err());
        assert!(PipelineConfig::parse("[noise]\np_add_punct = 2.0").is_err());
        assert!(PipelineConfig::parse("[filter]\nratio_min = 1.5").is_err());
        assert!(PipelineConfig::parse("workers = 0").is_err());
    }
}
