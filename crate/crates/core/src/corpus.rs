//! Labeled corpora in the organizers' tab-separated format.
//!
//! A file is UTF-8, `\n`-terminated, with a header row naming at least the
//! `sentence_id` and `text` columns and, for labeled files, `class_label`.
//! Columns are located by name; any other columns are ignored. There is no
//! quoting, so a tab or newline inside a text is a parse error.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{Label, Language, Split};
use crate::sampling;

pub const ID_COLUMN: &str = "sentence_id";
pub const TEXT_COLUMN: &str = "text";
pub const LABEL_COLUMN: &str = "class_label";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("missing header row")]
    MissingHeader,
    #[error("header has no `{0}` column")]
    MissingColumn(&'static str),
    #[error("line {line}: expected {expected} columns, found {found}")]
    MalformedRow { line: usize, expected: usize, found: usize },
    #[error("line {line}: empty `{column}` field")]
    EmptyField { line: usize, column: &'static str },
    #[error("line {line}: invalid label {value:?}")]
    InvalidLabel { line: usize, value: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("corpus has no instances")]
    EmptyCorpus,
    #[error("instance {0:?} has no label")]
    UnlabeledCorpus(String),
    #[error("instance {0:?} has an empty id or text")]
    EmptyInstance(String),
    #[error("instance {0:?} contains a tab or newline")]
    ForbiddenCharacter(String),
    #[error("instance {id:?} is tagged {found}, corpus is {expected}")]
    LanguageMismatch { id: String, expected: Language, found: Language },
    #[error("resampling needs both classes present")]
    SingleClassCorpus,
    #[error("cannot merge corpora from different splits")]
    MixedSplits,
    #[error("nothing to merge")]
    EmptyInput,
    #[error("fraction {0} is outside (0, 1]")]
    FractionOutOfRange(f64),
}

/// One sentence or tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
    pub language: Language,
}

impl LabeledInstance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Label>, language: Language) -> Self {
        Self { id: id.into(), text: text.into(), label, language }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub yes: usize,
    pub no: usize,
    pub total: usize,
}

impl ClassCounts {
    pub fn new(yes: usize, no: usize) -> Self {
        Self { yes, no, total: yes + no }
    }

    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Yes => self.yes,
            Label::No => self.no,
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.yes == self.no
    }
}

impl Add for ClassCounts {
    type Output = ClassCounts;

    fn add(self, rhs: ClassCounts) -> ClassCounts {
        ClassCounts::new(self.yes + rhs.yes, self.no + rhs.no)
    }
}

/// A language- and split-tagged ordered collection of instances.
///
/// Construction validates every invariant, so a `Corpus` value is always
/// well formed: unique non-empty ids, single-line texts, one language tag,
/// and labels on every instance unless the split is `test`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    language: Language,
    split: Split,
    instances: Vec<LabeledInstance>,
    provenance: String,
}

impl Corpus {
    pub fn new(
        language: Language,
        split: Split,
        instances: Vec<LabeledInstance>,
        provenance: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for inst in &instances {
            if inst.id.is_empty() || inst.text.is_empty() {
                return Err(CorpusError::EmptyInstance(inst.id.clone()));
            }
            if inst.text.contains(['\t', '\n']) || inst.id.contains(['\t', '\n']) {
                return Err(CorpusError::ForbiddenCharacter(inst.id.clone()));
            }
            if inst.language != language {
                return Err(CorpusError::LanguageMismatch {
                    id: inst.id.clone(),
                    expected: language,
                    found: inst.language,
                });
            }
            if split.requires_labels() && inst.label.is_none() {
                return Err(CorpusError::UnlabeledCorpus(inst.id.clone()));
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(CorpusError::DuplicateId(inst.id.clone()));
            }
        }
        Ok(Self { language, split, instances, provenance: provenance.into() })
    }

    /// Parses an organizer TSV file.
    ///
    /// With `labeled` set the `class_label` column is mandatory and every row
    /// needs a label. Without it the column is optional and empty cells mean
    /// "no label".
    pub fn parse_tsv(raw: &[u8], language: Language, split: Split, labeled: bool) -> Result<Self, CorpusError> {
        let text = core::str::from_utf8(raw).map_err(|_| CorpusError::InvalidUtf8)?;
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(CorpusError::MissingHeader);
        }
        let mut lines = body.split('\n');
        let header: Vec<&str> = lines.next().unwrap_or_default().split('\t').collect();
        let column = |name: &'static str| header.iter().position(|h| *h == name);
        let id_col = column(ID_COLUMN).ok_or(CorpusError::MissingColumn(ID_COLUMN))?;
        let text_col = column(TEXT_COLUMN).ok_or(CorpusError::MissingColumn(TEXT_COLUMN))?;
        let label_col = column(LABEL_COLUMN);
        if labeled && label_col.is_none() {
            return Err(CorpusError::MissingColumn(LABEL_COLUMN));
        }

        let mut instances = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != header.len() {
                return Err(CorpusError::MalformedRow { line: line_no, expected: header.len(), found: fields.len() });
            }
            let id = fields[id_col];
            let body = fields[text_col];
            if id.is_empty() {
                return Err(CorpusError::EmptyField { line: line_no, column: ID_COLUMN });
            }
            if body.is_empty() {
                return Err(CorpusError::EmptyField { line: line_no, column: TEXT_COLUMN });
            }
            let label = match label_col.map(|c| fields[c]) {
                None => None,
                Some("") if !labeled => None,
                Some(raw) => Some(
                    raw.parse::<Label>()
                        .map_err(|_| CorpusError::InvalidLabel { line: line_no, value: raw.to_string() })?,
                ),
            };
            if !seen.insert(id) {
                return Err(CorpusError::DuplicateId(id.to_string()));
            }
            instances.push(LabeledInstance::new(id, body, label, language));
        }
        if instances.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        Corpus::new(language, split, instances, "")
    }

    /// Serializes back to the TSV dialect. The label column is written only
    /// when at least one instance carries a label.
    pub fn to_tsv(&self) -> String {
        let labeled = self.instances.iter().any(|i| i.label.is_some());
        let mut out = String::new();
        out.push_str(ID_COLUMN);
        out.push('\t');
        out.push_str(TEXT_COLUMN);
        if labeled {
            out.push('\t');
            out.push_str(LABEL_COLUMN);
        }
        out.push('\n');
        for inst in &self.instances {
            out.push_str(&inst.id);
            out.push('\t');
            out.push_str(&inst.text);
            if labeled {
                out.push('\t');
                out.push_str(inst.label.map(Label::as_str).unwrap_or(""));
            }
            out.push('\n');
        }
        out
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn into_instances(self) -> Vec<LabeledInstance> {
        self.instances
    }

    pub fn get(&self, id: &str) -> Option<&LabeledInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// True when every instance has a label.
    pub fn is_labeled(&self) -> bool {
        self.instances.iter().all(|i| i.label.is_some())
    }

    /// Same corpus with every text passed through `f`. Ids, labels and order
    /// are untouched; the result is re-validated.
    pub fn map_texts(&self, mut f: impl FnMut(&str) -> String) -> Result<Corpus, CorpusError> {
        let instances = self.instances.iter().map(|i| LabeledInstance { text: f(&i.text), ..i.clone() }).collect();
        Corpus::new(self.language, self.split, instances, self.provenance.clone())
    }

    pub fn class_counts(&self) -> Result<ClassCounts, CorpusError> {
        let mut yes = 0;
        let mut no = 0;
        for inst in &self.instances {
            match inst.label {
                Some(Label::Yes) => yes += 1,
                Some(Label::No) => no += 1,
                None => return Err(CorpusError::UnlabeledCorpus(inst.id.clone())),
            }
        }
        Ok(ClassCounts::new(yes, no))
    }

    fn majority_minority(&self) -> Result<Option<(Label, ClassCounts)>, CorpusError> {
        let counts = self.class_counts()?;
        if counts.yes == 0 || counts.no == 0 {
            return Err(CorpusError::SingleClassCorpus);
        }
        if counts.is_balanced() {
            return Ok(None);
        }
        let majority = if counts.no > counts.yes { Label::No } else { Label::Yes };
        Ok(Some((majority, counts)))
    }

    fn appended_provenance(&self, step: &str) -> String {
        if self.provenance.is_empty() {
            step.to_string()
        } else {
            format!("{}; {}", self.provenance, step)
        }
    }

    /// Shrinks the majority class to the minority count by seeded selection
    /// without replacement. Kept instances stay in their original order.
    /// A balanced corpus comes back unchanged.
    pub fn undersample(&self, seed: u64) -> Result<Corpus, CorpusError> {
        let Some((majority, counts)) = self.majority_minority()? else {
            return Ok(self.clone());
        };
        let target = counts.get(majority.flipped());
        let majority_pos: Vec<usize> =
            self.instances.iter().enumerate().filter(|(_, i)| i.label == Some(majority)).map(|(p, _)| p).collect();
        let mut rng = sampling::rng(seed);
        let keep: BTreeSet<usize> = sampling::choose_without_replacement(&mut rng, majority_pos.len(), target)
            .into_iter()
            .map(|k| majority_pos[k])
            .collect();
        let instances = self
            .instances
            .iter()
            .enumerate()
            .filter(|(p, i)| i.label != Some(majority) || keep.contains(p))
            .map(|(_, i)| i.clone())
            .collect();
        Corpus::new(
            self.language,
            self.split,
            instances,
            self.appended_provenance(&format!("undersample(seed={seed})")),
        )
    }

    /// Grows the minority class to the majority count by seeded duplication
    /// with replacement. A copy of instance `x` gets id `x#k` (k = 1, 2, ...,
    /// skipping ids already taken) and is placed right after its source.
    pub fn oversample(&self, seed: u64) -> Result<Corpus, CorpusError> {
        let Some((majority, counts)) = self.majority_minority()? else {
            return Ok(self.clone());
        };
        let minority = majority.flipped();
        let needed = counts.get(majority) - counts.get(minority);
        let minority_pos: Vec<usize> =
            self.instances.iter().enumerate().filter(|(_, i)| i.label == Some(minority)).map(|(p, _)| p).collect();
        let mut rng = sampling::rng(seed);
        let mut copies = alloc::vec![0usize; self.instances.len()];
        for k in sampling::draw_with_replacement(&mut rng, minority_pos.len(), needed) {
            copies[minority_pos[k]] += 1;
        }

        let mut taken: BTreeSet<String> = self.instances.iter().map(|i| i.id.clone()).collect();
        let mut instances = Vec::with_capacity(self.instances.len() + needed);
        for (inst, &n) in self.instances.iter().zip(&copies) {
            instances.push(inst.clone());
            let mut suffix = 1usize;
            for _ in 0..n {
                let id = loop {
                    let candidate = format!("{}#{}", inst.id, suffix);
                    suffix += 1;
                    if !taken.contains(&candidate) {
                        break candidate;
                    }
                };
                taken.insert(id.clone());
                instances.push(LabeledInstance { id, ..inst.clone() });
            }
        }
        Corpus::new(self.language, self.split, instances, self.appended_provenance(&format!("oversample(seed={seed})")))
    }

    /// Uniform sample of `round(fraction * len)` instances (half rounds up),
    /// without replacement, original order preserved.
    pub fn sample_fraction(&self, fraction: f64, seed: u64) -> Result<Corpus, CorpusError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CorpusError::FractionOutOfRange(fraction));
        }
        let n = self.instances.len();
        // Non-negative, so truncation is floor.
        let k = ((fraction * n as f64 + 0.5) as usize).min(n);
        let mut rng = sampling::rng(seed);
        let instances = sampling::choose_without_replacement(&mut rng, n, k)
            .into_iter()
            .map(|p| self.instances[p].clone())
            .collect();
        Corpus::new(
            self.language,
            self.split,
            instances,
            self.appended_provenance(&format!("sample(fraction={fraction}, seed={seed})")),
        )
    }
}

/// Concatenates corpora of one split in argument order.
///
/// Every id is prefixed with its source language (`"nl:17"`) so collisions
/// across languages are impossible, and every instance is retagged with
/// `target`.
pub fn merge(corpora: &[Corpus], target: Language) -> Result<Corpus, CorpusError> {
    let tagged: Vec<(&str, &Corpus)> = corpora.iter().map(|c| (c.language.code(), c)).collect();
    merge_tagged(&tagged, target)
}

/// Like [`merge`], with explicit id prefixes. Used when a part was translated
/// and should keep the tag of the language it came from.
pub fn merge_tagged(corpora: &[(&str, &Corpus)], target: Language) -> Result<Corpus, CorpusError> {
    let (_, first) = corpora.first().ok_or(CorpusError::EmptyInput)?;
    if corpora.iter().any(|(_, c)| c.split != first.split) {
        return Err(CorpusError::MixedSplits);
    }
    let mut instances = Vec::with_capacity(corpora.iter().map(|(_, c)| c.len()).sum());
    let mut sources = Vec::with_capacity(corpora.len());
    for (tag, c) in corpora {
        sources.push(format!("{tag}:({})", c.provenance));
        instances.extend(c.instances.iter().map(|i| LabeledInstance {
            id: format!("{tag}:{}", i.id),
            text: i.text.clone(),
            label: i.label,
            language: target,
        }));
    }
    Corpus::new(target, first.split, instances, format!("merge[{}]", sources.join(", ")))
}
