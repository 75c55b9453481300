//! One backend's verdicts over a corpus.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::label::Label;
use crate::metrics::Labeling;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub label: Label,
    pub raw_response: String,
    pub from_cache: bool,
    pub flagged_fallback: bool,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub backend_fingerprint: String,
    pub corpus_fingerprint: String,
    pub predictions: Vec<Prediction>,
}

impl PredictionSet {
    pub fn labeling(&self) -> Labeling {
        self.predictions.iter().map(|p| (p.instance_id.clone(), p.label)).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Prediction> {
        self.predictions.iter().find(|p| p.instance_id == id)
    }

    /// True when the prediction ids are unique and equal the corpus ids.
    pub fn covers(&self, corpus: &Corpus) -> bool {
        let ids: BTreeSet<&str> = self.predictions.iter().map(|p| p.instance_id.as_str()).collect();
        ids.len() == self.predictions.len()
            && ids.len() == corpus.len()
            && corpus.instances().iter().all(|i| ids.contains(i.id.as_str()))
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}
