//! Corpus files on disk: TSV body plus a JSON provenance sidecar.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use claimcheck_core::{Corpus, CorpusError, Language, Split};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
pub enum CorpusFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: CorpusError },
}

/// Sidecar written next to derived corpora (`<file>.provenance.json`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceSidecar {
    pub source_file: Option<String>,
    pub source_language: Option<Language>,
    pub language: Language,
    pub split: Split,
    pub translator: Option<String>,
    pub transformations: String,
    pub created_at: DateTime<Utc>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".provenance.json");
    path.with_file_name(name)
}

pub fn read_corpus(path: &Path, language: Language, split: Split, labeled: bool) -> Result<Corpus, CorpusFileError> {
    let raw = std::fs::read(path).map_err(|source| CorpusFileError::Io { path: path.into(), source })?;
    let corpus = Corpus::parse_tsv(&raw, language, split, labeled)
        .map_err(|source| CorpusFileError::Parse { path: path.into(), source })?;
    Ok(corpus.with_provenance(path.display().to_string()))
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), CorpusFileError> {
    write_atomic(path, corpus.to_tsv().as_bytes()).map_err(|source| CorpusFileError::Io { path: path.into(), source })
}

pub fn write_sidecar(path: &Path, sidecar: &ProvenanceSidecar) -> Result<(), CorpusFileError> {
    let target = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    write_atomic(&target, json.as_bytes()).map_err(|source| CorpusFileError::Io { path: target, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("in.tsv");
        let raw = "sentence_id\ttext\tclass_label\n1\tA claim.\tYes\n2\tAn opinion.\tNo\n";
        std::fs::write(&src, raw).unwrap();
        let c = read_corpus(&src, Language::En, Split::Dev, true).unwrap();
        assert_eq!(c.provenance(), src.display().to_string());
        let out = dir.path().join("out.tsv");
        write_corpus(&out, &c).unwrap();
        assert_eq!(std::fs::read_to_string(&out).unwrap(), raw);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("a/b.tsv")), PathBuf::from("a/b.tsv.provenance.json"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_corpus(Path::new("/nonexistent/x.tsv"), Language::En, Split::Dev, true).unwrap_err();
        assert!(matches!(err, CorpusFileError::Io { .. }));
    }
}
