use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use chrono::{DateTime, Utc};
use claimcheck_core::augment::StyleTransferExemplars;
use claimcheck_core::corpus::merge_tagged;
use claimcheck_core::metrics::{compute_metrics, confusion};
use claimcheck_core::normalize::normalize_text;
use claimcheck_core::{Corpus, MetricsReport, PredictionSet, Split};
use serde::{Deserialize, Serialize};

use super::config::{AugmentStep, ExperimentConfig};
use super::store::{RunStore, StoreError};
use crate::augment::{style_transfer_corpus, translate_corpus, translator_by_name, TranslateOptions};
use crate::backend::ChatBackend;
use crate::cache::ResponseCache;
use crate::clock::Clock;
use crate::predict::{predict_batch, BatchOptions};
use crate::tsv::read_corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub name: String,
    pub config_fingerprint: String,
    pub config: ExperimentConfig,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub status: RunStatus,
    #[serde(default)]
    pub backend_fingerprint: Option<String>,
    #[serde(default)]
    pub metrics_by_split: BTreeMap<Split, MetricsReport>,
    /// Relative to the run store root.
    #[serde(default)]
    pub prediction_paths: BTreeMap<Split, PathBuf>,
    /// Cause chain, outermost first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub error: Vec<String>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

/// Shared services for runs.
pub struct RunContext<'a> {
    pub cache: &'a ResponseCache,
    pub clock: &'a dyn Clock,
    /// Used instead of building one from the config.
    pub backend: Option<Arc<dyn ChatBackend>>,
    pub api_key: Option<String>,
}

struct Outcome {
    backend_fingerprint: String,
    metrics: BTreeMap<Split, MetricsReport>,
    predictions: BTreeMap<Split, PredictionSet>,
    train: Option<Corpus>,
}

fn load(config: &ExperimentConfig, split: Split) -> anyhow::Result<Corpus> {
    let path = config.corpus_paths.get(&split).ok_or_else(|| anyhow!("no corpus path for split {split}"))?;
    let corpus = read_corpus(path, config.language, split, true).with_context(|| format!("loading {split} corpus"))?;
    if config.normalize.is_identity() {
        return Ok(corpus);
    }
    Ok(corpus.map_texts(|t| normalize_text(t, &config.normalize))?)
}

fn augment(
    config: &ExperimentConfig,
    mut train: Corpus,
    backend: &dyn ChatBackend,
    ctx: &RunContext<'_>,
) -> anyhow::Result<Corpus> {
    let opts = TranslateOptions { retry: config.backend.retry_policy(), ..TranslateOptions::default() };
    for (i, step) in config.augmentation.iter().enumerate() {
        let ctx_msg = || format!("augmentation step {} ({step:?})", i + 1);
        train = match step {
            AugmentStep::Translate { target, translator, endpoint } => {
                let t = translator_by_name(translator, endpoint.as_deref())?;
                translate_corpus(&train, *target, t.as_ref(), &opts, Some(ctx.cache), ctx.clock)
                    .with_context(ctx_msg)?
            }
            AugmentStep::Merge { corpora, translator, endpoint } => {
                let mut parts = Vec::with_capacity(corpora.len());
                for extra in corpora {
                    let c = read_corpus(&extra.path, extra.language, Split::Train, true).with_context(ctx_msg)?;
                    let c = if extra.translate && extra.language != config.language {
                        let t = translator_by_name(translator, endpoint.as_deref())?;
                        translate_corpus(&c, config.language, t.as_ref(), &opts, Some(ctx.cache), ctx.clock)
                            .with_context(ctx_msg)?
                    } else {
                        c
                    };
                    parts.push((extra.language.code(), c));
                }
                let mut tagged = vec![(train.language().code(), &train)];
                tagged.extend(parts.iter().map(|(tag, c)| (*tag, c)));
                merge_tagged(&tagged, config.language).with_context(ctx_msg)?
            }
            AugmentStep::Undersample { seed } => train.undersample(*seed).with_context(ctx_msg)?,
            AugmentStep::Oversample { seed } => train.oversample(*seed).with_context(ctx_msg)?,
            AugmentStep::Sample { fraction, seed } => train.sample_fraction(*fraction, *seed).with_context(ctx_msg)?,
            AugmentStep::StyleTransfer { exemplars, language_name } => {
                let ex = StyleTransferExemplars::from_slice(exemplars).with_context(ctx_msg)?;
                let lang = language_name.clone().unwrap_or_else(|| config.language.name().to_owned());
                let options = BatchOptions::from(&config.backend);
                style_transfer_corpus(&train, &ex, &lang, backend, &options, ctx.cache, ctx.clock)
                    .with_context(ctx_msg)?
            }
        };
    }
    Ok(train)
}

fn execute(config: &ExperimentConfig, ctx: &RunContext<'_>) -> anyhow::Result<Outcome> {
    config.validate()?;
    for (split, path) in &config.corpus_paths {
        if !path.is_file() {
            return Err(anyhow!("{split} corpus {} does not exist", path.display()));
        }
    }
    let backend = match &ctx.backend {
        Some(b) => b.clone(),
        None => config.backend.build(ctx.api_key.clone())?,
    };
    let train = if config.augmentation.is_empty() {
        None
    } else {
        Some(augment(config, load(config, Split::Train)?, backend.as_ref(), ctx)?)
    };

    let options = BatchOptions::from(&config.backend);
    let mut metrics = BTreeMap::new();
    let mut predictions = BTreeMap::new();
    for &split in &config.eval_splits {
        let gold = load(config, split)?;
        let preds = predict_batch(&gold, backend.as_ref(), &options, &config.prompt, ctx.cache, ctx.clock)
            .with_context(|| format!("predicting {split}"))?;
        let cm = confusion(&preds, &gold).with_context(|| format!("scoring {split}"))?;
        metrics.insert(split, compute_metrics(&cm)?);
        predictions.insert(split, preds);
    }
    Ok(Outcome { backend_fingerprint: backend.fingerprint(), metrics, predictions, train })
}

/// Runs normalize → augmentation → prediction → metrics for one config and
/// persists the result.
///
/// Pipeline errors produce a `failed` record carrying the cause chain; only
/// store IO errors are returned as `Err`. Prediction files are written before
/// the record, so an `ok` record always points at complete files.
pub fn run_experiment(
    config: &ExperimentConfig,
    store: &RunStore,
    ctx: &RunContext<'_>,
) -> Result<RunRecord, StoreError> {
    let run_id = store.new_run_id();
    let started = ctx.clock.now_utc();
    log::info!("run {run_id} ({}) started", config.name);
    let outcome = store.check_name(config).map_err(anyhow::Error::from).and_then(|()| execute(config, ctx));

    let mut record = RunRecord {
        run_id: run_id.clone(),
        name: config.name.clone(),
        config_fingerprint: config.fingerprint(),
        config: config.clone(),
        started,
        finished: started,
        status: RunStatus::Failed,
        backend_fingerprint: None,
        metrics_by_split: BTreeMap::new(),
        prediction_paths: BTreeMap::new(),
        error: Vec::new(),
    };
    match outcome {
        Ok(out) => {
            for (split, preds) in &out.predictions {
                record.prediction_paths.insert(*split, store.write_predictions(&run_id, *split, preds)?);
            }
            if let Some(train) = &out.train {
                store.write_train(&run_id, train)?;
            }
            record.status = RunStatus::Ok;
            record.backend_fingerprint = Some(out.backend_fingerprint);
            record.metrics_by_split = out.metrics;
        }
        Err(e) => {
            log::error!("run {run_id} failed: {e:#}");
            record.error = e.chain().map(|c| c.to_string()).collect();
        }
    }
    record.finished = ctx.clock.now_utc();
    store.save(&record)?;
    Ok(record)
}
