//! Line-delimited JSON label files.
//!
//! Every line is an object with at least `id` and `label`. Prediction files
//! add `raw_response` and `flagged_fallback`; cache provenance and latency
//! are deliberately absent so that replays are byte-identical.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use claimcheck_core::{Label, Labeling, Prediction, PredictionSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
pub enum LabelFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: duplicate id {id:?}")]
    DuplicateId { path: PathBuf, id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub id: String,
    pub label: Label,
    #[serde(default)]
    pub raw_response: String,
    #[serde(default)]
    pub flagged_fallback: bool,
}

impl From<&Prediction> for PredictionLine {
    fn from(p: &Prediction) -> Self {
        Self {
            id: p.instance_id.clone(),
            label: p.label,
            raw_response: p.raw_response.clone(),
            flagged_fallback: p.flagged_fallback,
        }
    }
}

pub fn predictions_to_jsonl(set: &PredictionSet) -> String {
    let mut out = String::new();
    for p in &set.predictions {
        out.push_str(&serde_json::to_string(&PredictionLine::from(p)).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

pub fn write_predictions(path: &Path, set: &PredictionSet) -> Result<(), LabelFileError> {
    write_atomic(path, predictions_to_jsonl(set).as_bytes())
        .map_err(|source| LabelFileError::Io { path: path.into(), source })
}

fn read_lines(path: &Path) -> Result<Vec<PredictionLine>, LabelFileError> {
    let raw = std::fs::read_to_string(path).map_err(|source| LabelFileError::Io { path: path.into(), source })?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionLine = serde_json::from_str(line).map_err(|source| LabelFileError::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?;
        if !seen.insert(rec.id.clone()) {
            return Err(LabelFileError::DuplicateId { path: path.into(), id: rec.id });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Reads a prediction file. Fingerprints are not stored in the file and are
/// filled from the arguments.
pub fn read_predictions(
    path: &Path,
    backend_fingerprint: &str,
    corpus_fingerprint: &str,
) -> Result<PredictionSet, LabelFileError> {
    let predictions = read_lines(path)?
        .into_iter()
        .map(|l| Prediction {
            instance_id: l.id,
            label: l.label,
            raw_response: l.raw_response,
            from_cache: false,
            flagged_fallback: l.flagged_fallback,
            latency_ms: 0,
        })
        .collect();
    Ok(PredictionSet {
        backend_fingerprint: backend_fingerprint.into(),
        corpus_fingerprint: corpus_fingerprint.into(),
        predictions,
    })
}

pub fn labeling_to_jsonl(labels: &Labeling) -> String {
    let mut out = String::new();
    for (id, label) in labels {
        out.push_str(&serde_json::json!({ "id": id, "label": label }).to_string());
        out.push('\n');
    }
    out
}

/// One annotator's labels over a sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub annotator_id: String,
    pub labels: Labeling,
    pub created_at: DateTime<Utc>,
}

impl AnnotationFile {
    pub fn read(path: &Path) -> Result<Self, LabelFileError> {
        let raw = std::fs::read_to_string(path).map_err(|source| LabelFileError::Io { path: path.into(), source })?;
        serde_json::from_str(&raw).map_err(|source| LabelFileError::Json { path: path.into(), line: 0, source })
    }

    pub fn write(&self, path: &Path) -> Result<(), LabelFileError> {
        let json = serde_json::to_string_pretty(self).expect("annotation file serializes") + "\n";
        write_atomic(path, json.as_bytes()).map_err(|source| LabelFileError::Io { path: path.into(), source })
    }
}

/// Loads a labeling from an annotation file (`.json`) or any line-delimited
/// label/prediction file.
pub fn read_labeling(path: &Path) -> Result<Labeling, LabelFileError> {
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(AnnotationFile::read(path)?.labels);
    }
    Ok(read_lines(path)?.into_iter().map(|l| (l.id, l.label)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> PredictionSet {
        PredictionSet {
            backend_fingerprint: "b".into(),
            corpus_fingerprint: "c".into(),
            predictions: vec![
                Prediction {
                    instance_id: "1".into(),
                    label: Label::Yes,
                    raw_response: "Yes".into(),
                    from_cache: true,
                    flagged_fallback: false,
                    latency_ms: 12,
                },
                Prediction {
                    instance_id: "2".into(),
                    label: Label::No,
                    raw_response: "hmm".into(),
                    from_cache: false,
                    flagged_fallback: true,
                    latency_ms: 3,
                },
            ],
        }
    }

    #[test]
    fn prediction_file_format() {
        assert_eq!(
            predictions_to_jsonl(&set()),
            "{\"id\":\"1\",\"label\":\"Yes\",\"raw_response\":\"Yes\",\"flagged_fallback\":false}\n\
             {\"id\":\"2\",\"label\":\"No\",\"raw_response\":\"hmm\",\"flagged_fallback\":true}\n"
        );
    }

    #[test]
    fn read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        write_predictions(&p, &set()).unwrap();
        let back = read_predictions(&p, "b", "c").unwrap();
        assert_eq!(back.labeling(), set().labeling());
        assert!(back.predictions[1].flagged_fallback);
        assert_eq!(read_labeling(&p).unwrap(), set().labeling());
    }

    #[test]
    fn minimal_lines_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"label\":\"No\"}\n\n{\"id\":\"b\",\"label\":\"Yes\"}\n").unwrap();
        assert_eq!(read_labeling(&p).unwrap().len(), 2);
        std::fs::write(&p, "{\"id\":\"a\",\"label\":\"No\"}\n{\"id\":\"a\",\"label\":\"Yes\"}\n").unwrap();
        assert!(matches!(read_labeling(&p), Err(LabelFileError::DuplicateId { .. })));
        std::fs::write(&p, "{\"id\":\"a\",\"label\":\"maybe\"}\n").unwrap();
        assert!(matches!(read_labeling(&p), Err(LabelFileError::Json { line: 1, .. })));
    }
}
