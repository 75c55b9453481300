use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use claimcheck_core::{Corpus, PredictionSet, Split};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ExperimentConfig;
use super::run::{RunRecord, RunStatus};
use crate::fsutil::write_atomic;
use crate::jsonl::{predictions_to_jsonl, read_predictions, LabelFileError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("run store IO error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt run file {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("unknown run {0}")]
    UnknownRun(String),
    #[error("run name {name:?} is already used by a different config (fingerprint {existing})")]
    NameConflict { name: String, existing: String },
    #[error("run {run_id} has no predictions for {split}")]
    NoPredictions { run_id: String, split: Split },
    #[error(transparent)]
    Predictions(#[from] LabelFileError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub run_id: String,
    pub name: String,
    pub config_fingerprint: String,
    pub status: RunStatus,
    pub started: DateTime<Utc>,
}

/// Directory of run records:
/// `runs/<run_id>/record.json`, `runs/<run_id>/preds-<split>.jsonl`,
/// `runs/<run_id>/train-augmented.tsv` and the index `runs/index.json`.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.into(), source }
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    fn index_path(&self) -> PathBuf {
        self.runs_dir().join("index.json")
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.runs_dir().join(run_id)
    }

    /// Time-ordered unique id.
    pub fn new_run_id(&self) -> String {
        uuid::Uuid::now_v7().simple().to_string()
    }

    pub fn index(&self) -> Result<Vec<IndexEntry>, StoreError> {
        let path = self.index_path();
        match std::fs::read_to_string(&path) {
            Ok(raw) => serde_json::from_str(&raw).map_err(|source| StoreError::Json { path, source }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(io(&path)(e)),
        }
    }

    /// A name may be reused only by an identical config.
    pub fn check_name(&self, config: &ExperimentConfig) -> Result<(), StoreError> {
        let fp = config.fingerprint();
        match self.index()?.into_iter().find(|e| e.name == config.name && e.config_fingerprint != fp) {
            Some(e) => Err(StoreError::NameConflict { name: e.name, existing: e.config_fingerprint }),
            None => Ok(()),
        }
    }

    pub fn write_predictions(&self, run_id: &str, split: Split, preds: &PredictionSet) -> Result<PathBuf, StoreError> {
        let rel = Path::new("runs").join(run_id).join(format!("preds-{split}.jsonl"));
        let path = self.root.join(&rel);
        write_atomic(&path, predictions_to_jsonl(preds).as_bytes()).map_err(io(&path))?;
        Ok(rel)
    }

    pub fn write_train(&self, run_id: &str, train: &Corpus) -> Result<(), StoreError> {
        let path = self.run_dir(run_id).join("train-augmented.tsv");
        write_atomic(&path, train.to_tsv().as_bytes()).map_err(io(&path))
    }

    /// Writes the record, then adds it to the index.
    pub fn save(&self, record: &RunRecord) -> Result<(), StoreError> {
        let path = self.run_dir(&record.run_id).join("record.json");
        let json = serde_json::to_string_pretty(record).expect("record serializes") + "\n";
        write_atomic(&path, json.as_bytes()).map_err(io(&path))?;

        let mut index = self.index()?;
        index.retain(|e| e.run_id != record.run_id);
        index.push(IndexEntry {
            run_id: record.run_id.clone(),
            name: record.name.clone(),
            config_fingerprint: record.config_fingerprint.clone(),
            status: record.status,
            started: record.started,
        });
        let path = self.index_path();
        let json = serde_json::to_string_pretty(&index).expect("index serializes") + "\n";
        write_atomic(&path, json.as_bytes()).map_err(io(&path))
    }

    pub fn load(&self, run_id: &str) -> Result<RunRecord, StoreError> {
        let path = self.run_dir(run_id).join("record.json");
        let raw = match std::fs::read_to_string(&path) {
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::UnknownRun(run_id.into())),
            r => r.map_err(io(&path))?,
        };
        serde_json::from_str(&raw).map_err(|source| StoreError::Json { path, source })
    }

    /// All indexed runs, in index order.
    pub fn load_all(&self) -> Result<Vec<RunRecord>, StoreError> {
        self.index()?.iter().map(|e| self.load(&e.run_id)).collect()
    }

    pub fn predictions(&self, record: &RunRecord, split: Split) -> Result<PredictionSet, StoreError> {
        let rel = record
            .prediction_paths
            .get(&split)
            .ok_or_else(|| StoreError::NoPredictions { run_id: record.run_id.clone(), split })?;
        Ok(read_predictions(&self.root.join(rel), record.backend_fingerprint.as_deref().unwrap_or(""), "")?)
    }
}
