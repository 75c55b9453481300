//! Corpus translation and style transfer drivers.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use claimcheck_core::augment::{build_style_transfer_prompt_in, StyleTransferExemplars, TranslateError, Translator};
use claimcheck_core::digest::cache_key;
use claimcheck_core::retry::RetryPolicy;
use claimcheck_core::{Corpus, CorpusError, LabeledInstance, Language};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::backend::ChatBackend;
use crate::cache::{CacheError, CacheRecord, ResponseCache};
use crate::clock::Clock;
use crate::predict::{complete_batch, BatchItem, BatchOptions, PredictError};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("corpus is already in {0}")]
    SameLanguage(Language),
    #[error("translation of {id} failed after {attempts} attempt(s): {source}")]
    TranslatorFailure { id: String, attempts: u32, source: TranslateError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("unknown translator {0:?} (expected \"mock\" or \"http-generic\")")]
    UnknownTranslator(String),
}

#[derive(Debug, Clone, Copy)]
pub struct TranslateOptions {
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        Self { concurrency: 4, retry: RetryPolicy::default() }
    }
}

/// Generated text must fit on one TSV line.
fn single_line(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ").trim().to_owned()
}

/// Translates every text of `corpus` into `target`.
///
/// Up to `options.concurrency` calls run at once; results are assembled in
/// corpus order. If any instance still fails after retries the whole
/// translation is abandoned, since a partially translated training set skews
/// class balance. Responses go through `cache` when one is given.
pub fn translate_corpus(
    corpus: &Corpus,
    target: Language,
    translator: &(dyn Translator + Sync),
    options: &TranslateOptions,
    cache: Option<&ResponseCache>,
    clock: &dyn Clock,
) -> Result<Corpus, AugmentError> {
    let source = corpus.language();
    if source == target {
        return Err(AugmentError::SameLanguage(target));
    }
    let instances = corpus.instances();
    let model = format!("translate/{}/{}-{}", translator.id(), source, target);
    let out: Mutex<Vec<Option<String>>> = Mutex::new(vec![None; instances.len()]);
    let failure: Mutex<Option<AugmentError>> = Mutex::new(None);
    let abort = AtomicBool::new(false);
    let next = AtomicUsize::new(0);

    let work = |inst: &LabeledInstance| -> Result<String, AugmentError> {
        let key = cache_key(&model, &inst.text);
        if let Some(hit) = cache.and_then(|c| c.get(&key)) {
            return Ok(hit);
        }
        let (res, attempts) =
            options.retry.run(|_| translator.translate(&inst.text, source, target), |ms| clock.sleep_ms(ms));
        let text = res.map_err(|e| AugmentError::TranslatorFailure { id: inst.id.clone(), attempts, source: e })?;
        let text = single_line(&text);
        if let Some(c) = cache {
            c.put(CacheRecord { key, model_name: model.clone(), response: text.clone(), created_at: clock.now_utc() })?;
        }
        Ok(text)
    };

    std::thread::scope(|s| {
        for _ in 0..options.concurrency.max(1).min(instances.len().max(1)) {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(inst) = instances.get(i) else { return };
                match work(inst) {
                    Ok(t) => out.lock().unwrap()[i] = Some(t),
                    Err(e) => {
                        abort.store(true, Ordering::SeqCst);
                        failure.lock().unwrap().get_or_insert(e);
                        return;
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }

    let texts = out.into_inner().unwrap();
    let translated = instances
        .iter()
        .zip(texts)
        .map(|(inst, t)| LabeledInstance {
            id: inst.id.clone(),
            text: t.expect("every instance translated"),
            label: inst.label,
            language: target,
        })
        .collect();
    let step = format!("translate({source}→{target}, translator={})", translator.id());
    let provenance = if corpus.provenance().is_empty() { step } else { format!("{}; {}", corpus.provenance(), step) };
    Ok(Corpus::new(target, corpus.split(), translated, provenance)?)
}

/// Rewrites every text as a tweet via a chat backend, reusing the
/// prediction batch machinery in raw-response mode.
#[allow(clippy::too_many_arguments)]
pub fn style_transfer_corpus(
    corpus: &Corpus,
    exemplars: &StyleTransferExemplars,
    language_name: &str,
    backend: &dyn ChatBackend,
    options: &BatchOptions,
    cache: &ResponseCache,
    clock: &dyn Clock,
) -> Result<Corpus, AugmentError> {
    let items: Vec<BatchItem> = corpus
        .instances()
        .iter()
        .map(|inst| BatchItem {
            id: inst.id.clone(),
            prompt: build_style_transfer_prompt_in(&inst.text, exemplars, language_name),
            instance_text: inst.text.clone(),
        })
        .collect();
    let raw = complete_batch(&items, backend, cache, options, clock)?;
    let mut responses = raw.into_iter();
    let restyled = corpus.map_texts(|original| {
        let r = single_line(&responses.next().expect("one response per instance").response);
        if r.is_empty() {
            log::warn!("style transfer returned nothing; keeping original text");
            original.to_owned()
        } else {
            r
        }
    })?;
    let step = format!("style-transfer(model={})", backend.model_name());
    let provenance = if corpus.provenance().is_empty() { step } else { format!("{}; {}", corpus.provenance(), step) };
    Ok(restyled.with_provenance(provenance))
}

/// Generic HTTP translation adapter.
///
/// `POST {endpoint}` with `{"text", "source", "target"}` (language codes);
/// expects `{"translation": "..."}`. 429/5xx and transport errors are
/// transient.
pub struct HttpTranslator {
    agent: ureq::Agent,
    endpoint: String,
}

impl HttpTranslator {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { agent, endpoint: endpoint.into() }
    }
}

#[derive(Deserialize)]
struct TranslationReply {
    translation: String,
}

impl Translator for HttpTranslator {
    fn id(&self) -> String {
        format!("http-generic({})", self.endpoint)
    }

    fn translate(&self, text: &str, source: Language, target: Language) -> Result<String, TranslateError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(json!({ "text": text, "source": source.code(), "target": target.code() }))
            .map_err(|e| TranslateError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| TranslateError::Transient(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str::<TranslationReply>(&body)
                .map(|r| r.translation)
                .map_err(|e| TranslateError::Fatal(format!("bad reply: {e}"))),
            429 | 500..=599 => Err(TranslateError::Transient(format!("HTTP {status}"))),
            _ => Err(TranslateError::Fatal(format!("HTTP {status}: {body}"))),
        }
    }
}

/// Resolves a translator adapter by configuration name.
pub fn translator_by_name(
    name: &str,
    endpoint: Option<&str>,
) -> Result<Box<dyn Translator + Send + Sync>, AugmentError> {
    match (name, endpoint) {
        ("mock", _) => Ok(Box::new(claimcheck_core::augment::MockTranslator)),
        ("http-generic", Some(url)) => Ok(Box::new(HttpTranslator::new(url, Duration::from_secs(60)))),
        _ => Err(AugmentError::UnknownTranslator(name.into())),
    }
}
