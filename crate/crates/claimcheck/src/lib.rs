//! File formats, model backends, experiment runs and the command line for
//! the claimcheck harness. Pure logic lives in `claimcheck_core`.

pub mod annotate;
pub mod augment;
pub mod backend;
pub mod cache;
pub mod cli;
pub mod clock;
pub mod experiment;
pub mod finetune;
pub mod fsutil;
pub mod jsonl;
pub mod predict;
pub mod tsv;

pub use claimcheck_core as core;

/// Bearer token for remote backends.
pub const API_KEY_ENV: &str = "CLAIMCHECK_API_KEY";
/// Overrides the response-cache file location.
pub const CACHE_ENV: &str = "CLAIMCHECK_CACHE";
pub const DEFAULT_CACHE_PATH: &str = ".claimcheck/cache.jsonl";
