use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use claimcheck_core::digest::tagged_digest;
use claimcheck_core::{Language, NormalizeConfig, PromptConfig, Split};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("{0}")]
    Invalid(String),
}

/// Another corpus file folded in by a `merge` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraCorpus {
    pub path: PathBuf,
    pub language: Language,
    /// Translate into the experiment language before merging.
    #[serde(default)]
    pub translate: bool,
}

/// One step of the training-data recipe, applied in order to the train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AugmentStep {
    Translate {
        target: Language,
        #[serde(default = "default_translator")]
        translator: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        endpoint: Option<String>,
    },
    Merge {
        corpora: Vec<ExtraCorpus>,
        #[serde(default = "default_translator")]
        translator: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        endpoint: Option<String>,
    },
    Undersample {
        seed: u64,
    },
    Oversample {
        seed: u64,
    },
    Sample {
        fraction: f64,
        seed: u64,
    },
    StyleTransfer {
        exemplars: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        language_name: Option<String>,
    },
}

fn default_translator() -> String {
    "mock".into()
}

fn default_eval_splits() -> Vec<Split> {
    vec![Split::DevTest]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub language: Language,
    pub corpus_paths: BTreeMap<Split, PathBuf>,
    #[serde(default = "default_eval_splits")]
    pub eval_splits: Vec<Split>,
    #[serde(default)]
    pub normalize: NormalizeConfig,
    #[serde(default)]
    pub augmentation: Vec<AugmentStep>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub prompt: PromptConfig,
    #[serde(default)]
    pub free_params: BTreeMap<String, serde_json::Value>,
}

impl ExperimentConfig {
    pub fn from_toml(raw: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(raw)
    }

    /// Reads a TOML config; relative corpus paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&raw)
            .map_err(|source| ConfigError::Parse { path: path.into(), source: Box::new(source) })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus_paths.values_mut().for_each(fix);
        for step in &mut self.augmentation {
            if let AugmentStep::Merge { corpora, .. } = step {
                corpora.iter_mut().for_each(|c| fix(&mut c.path));
            }
        }
    }

    /// Checks everything that can be checked without touching files.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.name.trim().is_empty() {
            return invalid("name must not be empty".into());
        }
        if self.eval_splits.is_empty() {
            return invalid("eval_splits must not be empty".into());
        }
        for split in &self.eval_splits {
            if !split.requires_labels() {
                return invalid(format!("cannot evaluate on unlabeled split {split}"));
            }
            if !self.corpus_paths.contains_key(split) {
                return invalid(format!("no corpus path for evaluated split {split}"));
            }
        }
        if !self.augmentation.is_empty() && !self.corpus_paths.contains_key(&Split::Train) {
            return invalid("augmentation needs a train corpus path".into());
        }
        self.normalize.validate().map_err(|e| ConfigError::Invalid(format!("normalize: {e}")))?;
        self.prompt.validate().map_err(|e| ConfigError::Invalid(format!("prompt: {e}")))?;
        self.backend.validate().map_err(|e| ConfigError::Invalid(format!("backend: {e}")))?;
        Ok(())
    }

    /// Digest of the canonical JSON form; equal configs give equal digests.
    pub fn fingerprint(&self) -> String {
        tagged_digest("claimcheck/config/v1", self.canonical_json().as_bytes())
    }

    pub fn canonical_json(&self) -> String {
        // serde_json maps are ordered, so this rendering is canonical.
        serde_json::to_value(self).expect("config serializes").to_string()
    }
}
