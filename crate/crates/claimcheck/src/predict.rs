//! Batch inference with caching, bounded concurrency, rate limiting and
//! retries.
//!
//! Results always come back in input order regardless of completion order.
//! The cache is consulted before any backend call and fresh responses are
//! written to it before the batch returns.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use claimcheck_core::digest::{cache_key, corpus_fingerprint};
use claimcheck_core::prompt::{build_checkworthy_prompt, parse_label};
use claimcheck_core::ratelimit::RateWindow;
use claimcheck_core::retry::RetryPolicy;
use claimcheck_core::{Corpus, Prediction, PredictionSet, PromptConfig, PromptError};
use thiserror::Error;

use crate::backend::{BackendConfig, BackendError, ChatBackend, CompletionRequest};
use crate::cache::{CacheError, CacheRecord, ResponseCache};
use crate::clock::Clock;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("backend unavailable for {id} after {attempts} attempt(s): {source}")]
    BackendUnavailable { id: String, attempts: u32, source: BackendError },
    #[error("unparseable response for {id}: {raw:?}")]
    UnparseableResponse { id: String, raw: String },
    #[error(transparent)]
    Cache(#[from] CacheError),
}

#[derive(Debug, Clone, Copy)]
pub struct BatchOptions {
    pub max_in_flight: usize,
    pub requests_per_minute: usize,
    pub retry: RetryPolicy,
}

impl From<&BackendConfig> for BatchOptions {
    fn from(c: &BackendConfig) -> Self {
        Self { max_in_flight: c.max_in_flight, requests_per_minute: c.requests_per_minute, retry: c.retry_policy() }
    }
}

/// One item of a raw batch.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub id: String,
    pub prompt: String,
    pub instance_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCompletion {
    pub response: String,
    pub from_cache: bool,
    pub latency_ms: u64,
    /// Backend calls made; 0 for cache hits.
    pub attempts: u32,
}

/// Runs every item through cache-or-backend and returns raw responses.
pub fn complete_batch(
    items: &[BatchItem],
    backend: &dyn ChatBackend,
    cache: &ResponseCache,
    options: &BatchOptions,
    clock: &dyn Clock,
) -> Result<Vec<RawCompletion>, PredictError> {
    let results: Mutex<Vec<Option<RawCompletion>>> = Mutex::new(vec![None; items.len()]);
    let failure: Mutex<Option<PredictError>> = Mutex::new(None);
    let abort = AtomicBool::new(false);
    let next = AtomicUsize::new(0);
    let limiter = Mutex::new(RateWindow::per_minute(options.requests_per_minute));
    let workers = options.max_in_flight.max(1).min(items.len().max(1));

    let acquire = || loop {
        let wait = {
            let mut w = limiter.lock().unwrap();
            match w.try_acquire(clock.now_ms()) {
                Ok(()) => return,
                Err(wait) => wait,
            }
        };
        clock.sleep_ms(wait);
    };

    let work = |item: &BatchItem| -> Result<RawCompletion, PredictError> {
        let key = cache_key(backend.model_name(), &item.prompt);
        if let Some(response) = cache.get(&key) {
            return Ok(RawCompletion { response, from_cache: true, latency_ms: 0, attempts: 0 });
        }
        let request = CompletionRequest { prompt: &item.prompt, instance_text: &item.instance_text };
        let started = clock.now_ms();
        let (result, attempts) = options.retry.run(
            |_| {
                if backend.rate_limited() {
                    acquire();
                }
                backend.complete(&request)
            },
            |ms| clock.sleep_ms(ms),
        );
        let response =
            result.map_err(|source| PredictError::BackendUnavailable { id: item.id.clone(), attempts, source })?;
        let latency_ms = clock.now_ms().saturating_sub(started);
        cache.put(CacheRecord {
            key,
            model_name: backend.model_name().to_owned(),
            response: response.clone(),
            created_at: clock.now_utc(),
        })?;
        Ok(RawCompletion { response, from_cache: false, latency_ms, attempts })
    };

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { return };
                match work(item) {
                    Ok(done) => results.lock().unwrap()[i] = Some(done),
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
    Ok(results.into_inner().unwrap().into_iter().map(|r| r.expect("every item completed")).collect())
}

/// Predicts a label for every instance of `corpus`.
pub fn predict_batch(
    corpus: &Corpus,
    backend: &dyn ChatBackend,
    options: &BatchOptions,
    prompt: &PromptConfig,
    cache: &ResponseCache,
    clock: &dyn Clock,
) -> Result<PredictionSet, PredictError> {
    if corpus.is_empty() {
        return Err(PredictError::EmptyCorpus);
    }
    prompt.validate()?;
    let items = corpus
        .instances()
        .iter()
        .map(|inst| {
            Ok(BatchItem {
                id: inst.id.clone(),
                prompt: build_checkworthy_prompt(&inst.text, prompt)?,
                instance_text: inst.text.clone(),
            })
        })
        .collect::<Result<Vec<_>, PromptError>>()?;
    let raw = complete_batch(&items, backend, cache, options, clock)?;

    let mut predictions = Vec::with_capacity(items.len());
    for (item, done) in items.into_iter().zip(raw) {
        let parsed = parse_label(&done.response, prompt)
            .map_err(|_| PredictError::UnparseableResponse { id: item.id.clone(), raw: done.response.clone() })?;
        if parsed.fallback {
            log::warn!("{}: unparseable response {:?}, using fallback {}", item.id, done.response, parsed.label);
        }
        predictions.push(Prediction {
            instance_id: item.id,
            label: parsed.label,
            raw_response: done.response,
            from_cache: done.from_cache,
            flagged_fallback: parsed.fallback,
            latency_ms: done.latency_ms,
        });
    }
    Ok(PredictionSet {
        backend_fingerprint: backend.fingerprint(),
        corpus_fingerprint: corpus_fingerprint(corpus),
        predictions,
    })
}
