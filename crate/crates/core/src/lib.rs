//! Core of the claimcheck check-worthiness harness.
//!
//! Everything in this crate is a pure function of its inputs and only needs
//! `alloc`: corpus parsing and resampling, tweet-style normalization, prompt
//! rendering and response parsing, classification metrics and annotator
//! agreement, plus the small scheduling primitives (rate window, retry
//! schedule) the IO layer drives. File access, HTTP and the command line live
//! in the `claimcheck` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod augment;
pub mod corpus;
pub mod digest;
pub mod label;
pub mod metrics;
pub mod normalize;
pub mod prediction;
pub mod prompt;
pub mod ratelimit;
pub mod retry;
mod sampling;

pub use corpus::{ClassCounts, Corpus, CorpusError, LabeledInstance};
pub use label::{Label, Language, Split};
pub use metrics::{AgreementReport, ConfusionMatrix, Labeling, MetricsError, MetricsReport};
pub use normalize::NormalizeConfig;
pub use prediction::{Prediction, PredictionSet};
pub use prompt::{ParseMode, ParsedLabel, PromptConfig, PromptError};
