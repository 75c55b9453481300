//! Chat-format fine-tuning files.
//!
//! One JSON object per line, `\n`-separated:
//! `{"messages":[{"role":"system","content":…},{"role":"user","content":…},{"role":"assistant","content":"Yes"|"No"}]}`.

use claimcheck_core::{Corpus, Label};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("instance {0:?} has no label")]
    UnlabeledCorpus(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub messages: Vec<ChatMessage>,
}

fn msg(role: &str, content: &str) -> ChatMessage {
    ChatMessage { role: role.into(), content: content.into() }
}

pub fn export_finetune(corpus: &Corpus, system_prompt: &str) -> Result<Vec<FinetuneRecord>, FinetuneError> {
    corpus
        .instances()
        .iter()
        .map(|inst| {
            let label = inst.label.ok_or_else(|| FinetuneError::UnlabeledCorpus(inst.id.clone()))?;
            Ok(FinetuneRecord {
                messages: vec![msg("system", system_prompt), msg("user", &inst.text), msg("assistant", label.as_str())],
            })
        })
        .collect()
}

pub fn to_jsonl(records: &[FinetuneRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Recovers `(user text, assistant label)` pairs from an exported stream.
pub fn parse_finetune(raw: &str) -> Result<Vec<(String, Label)>, FinetuneError> {
    let mut out = Vec::new();
    for (i, line) in raw.split('\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| FinetuneError::Malformed { line: i + 1, reason };
        let rec: FinetuneRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let find = |role: &str| rec.messages.iter().find(|m| m.role == role).map(|m| m.content.clone());
        let text = find("user").ok_or_else(|| bad("no user message".into()))?;
        let answer = find("assistant").ok_or_else(|| bad("no assistant message".into()))?;
        let label = answer.parse::<Label>().map_err(|e| bad(e.to_string()))?;
        out.push((text, label));
    }
    Ok(out)
}
