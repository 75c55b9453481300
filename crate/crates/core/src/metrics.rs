//! Binary classification metrics, annotator agreement, adjudication and
//! prediction overlap.
//!
//! `Yes` is the positive class throughout. Every ratio whose denominator is
//! zero is defined as 0 so degenerate predictors can still be ranked.
//! Reports carry full-precision values plus 3-decimal half-up roundings that
//! are computed exactly from the integer counts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::label::Label;
use crate::prediction::PredictionSet;

/// Id → label assignment from one annotator or one model.
pub type Labeling = BTreeMap<String, Label>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("id sets differ (first offending id {0:?})")]
    IdMismatch(String),
    #[error("gold instance {0:?} has no label")]
    UnlabeledGold(String),
    #[error("no items to compare")]
    EmptyInput,
    #[error("majority vote needs an odd number of annotators, got {0}")]
    EvenAnnotatorCount(usize),
    #[error("majority vote needs at least 3 annotators, got {0}")]
    TooFewAnnotators(usize),
}

// ---------------------------------------------------------------------------
// Exact ratios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

impl Ratio {
    fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Self { num: 0, den: 1 }
        } else {
            Self { num: num as u128, den: den as u128 }
        }
    }

    fn mean(self, other: Ratio) -> Ratio {
        Ratio { num: self.num * other.den + other.num * self.den, den: 2 * self.den * other.den }
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// floor(1000 * num / den + 1/2), in integers.
    fn thousandths(self) -> Milli {
        Milli(((2000 * self.num + self.den) / (2 * self.den)) as u32)
    }
}

/// A value rounded to three decimals, stored as an integer count of
/// thousandths. Serializes as the decimal number it represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Milli(pub u32);

impl Milli {
    pub fn from_f64(x: f64) -> Self {
        // Non-negative, so truncation is floor.
        Milli((x * 1000.0 + 0.5) as u32)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl fmt::Display for Milli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

impl Serialize for Milli {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Milli {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Milli::from_f64)
    }
}

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn gold_positive(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn gold_negative(&self) -> u64 {
        self.fp + self.tn
    }

    /// The same matrix with `No` treated as the positive class.
    pub fn swapped(&self) -> Self {
        Self { tp: self.tn, fp: self.fn_, fn_: self.fp, tn: self.tp }
    }

    pub fn record(&mut self, gold: Label, predicted: Label) {
        match (gold, predicted) {
            (Label::Yes, Label::Yes) => self.tp += 1,
            (Label::No, Label::Yes) => self.fp += 1,
            (Label::Yes, Label::No) => self.fn_ += 1,
            (Label::No, Label::No) => self.tn += 1,
        }
    }

    /// Counts over two labelings with identical id sets.
    pub fn from_labelings(predicted: &Labeling, gold: &Labeling) -> Result<Self, MetricsError> {
        same_ids(predicted, gold)?;
        let mut cm = Self::default();
        for (id, g) in gold {
            cm.record(*g, predicted[id]);
        }
        Ok(cm)
    }

    fn accuracy(&self) -> Ratio {
        Ratio::new(self.tp + self.tn, self.total())
    }

    fn precision(&self) -> Ratio {
        Ratio::new(self.tp, self.tp + self.fp)
    }

    fn recall(&self) -> Ratio {
        Ratio::new(self.tp, self.tp + self.fn_)
    }

    fn f1(&self) -> Ratio {
        // 2PR/(P+R) with P = tp/(tp+fp) and R = tp/(tp+fn) reduces to this.
        Ratio::new(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

/// Counts `preds` against the labels of `gold`.
pub fn confusion(preds: &PredictionSet, gold: &Corpus) -> Result<ConfusionMatrix, MetricsError> {
    let mut gold_labels = Labeling::new();
    for inst in gold.instances() {
        let label = inst.label.ok_or_else(|| MetricsError::UnlabeledGold(inst.id.clone()))?;
        gold_labels.insert(inst.id.clone(), label);
    }
    let predicted = preds.labeling();
    if predicted.len() != preds.len() {
        // duplicate prediction ids collapse in the map
        return Err(MetricsError::IdMismatch(String::from("<duplicate prediction id>")));
    }
    ConfusionMatrix::from_labelings(&predicted, &gold_labels)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedMetrics {
    pub accuracy: Milli,
    pub precision: Milli,
    pub recall: Milli,
    pub f1_positive: Milli,
    pub f1_macro: Milli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1_positive: f64,
    pub f1_macro: f64,
    pub rounded: RoundedMetrics,
}

/// Accuracy, precision, recall, positive-class F1 and macro F1.
///
/// Macro F1 is the unweighted mean of the `Yes` and `No` F1 scores.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let (acc, p, r, f1) = (cm.accuracy(), cm.precision(), cm.recall(), cm.f1());
    let macro_f1 = f1.mean(cm.swapped().f1());
    Ok(MetricsReport {
        accuracy: acc.value(),
        precision: p.value(),
        recall: r.value(),
        f1_positive: f1.value(),
        f1_macro: macro_f1.value(),
        rounded: RoundedMetrics {
            accuracy: acc.thousandths(),
            precision: p.thousandths(),
            recall: r.thousandths(),
            f1_positive: f1.thousandths(),
            f1_macro: macro_f1.thousandths(),
        },
    })
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub kappa: f64,
    /// Both annotators used one identical constant label, so chance
    /// agreement is 1 and kappa is defined as 1.
    pub degenerate_marginals: bool,
}

fn same_ids(a: &Labeling, b: &Labeling) -> Result<(), MetricsError> {
    if let Some(id) = a.keys().find(|k| !b.contains_key(*k)) {
        return Err(MetricsError::IdMismatch(id.clone()));
    }
    if let Some(id) = b.keys().find(|k| !a.contains_key(*k)) {
        return Err(MetricsError::IdMismatch(id.clone()));
    }
    Ok(())
}

/// Cohen's kappa between two annotators over the same ids.
pub fn cohens_kappa(a: &Labeling, b: &Labeling) -> Result<AgreementReport, MetricsError> {
    same_ids(a, b)?;
    if a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = a.len() as i128;
    let (mut agree, mut a_yes, mut b_yes) = (0i128, 0i128, 0i128);
    for (id, la) in a {
        let lb = b[id];
        agree += i128::from(*la == lb);
        a_yes += i128::from(la.is_positive());
        b_yes += i128::from(lb.is_positive());
    }
    // Everything scaled by n^2 to stay in integers until the final division.
    let chance = a_yes * b_yes + (n - a_yes) * (n - b_yes);
    let observed = agree as f64 / n as f64;
    let expected = chance as f64 / (n * n) as f64;
    if chance == n * n {
        return Ok(AgreementReport {
            observed_agreement: observed,
            expected_agreement: 1.0,
            kappa: 1.0,
            degenerate_marginals: true,
        });
    }
    let kappa = (n * agree - chance) as f64 / (n * n - chance) as f64;
    Ok(AgreementReport {
        observed_agreement: observed,
        expected_agreement: expected,
        kappa,
        degenerate_marginals: false,
    })
}

/// Per-id majority label over an odd number (at least 3) of annotators.
pub fn majority_adjudicate(annotations: &[Labeling]) -> Result<Labeling, MetricsError> {
    let count = annotations.len();
    if count.is_multiple_of(2) {
        return Err(MetricsError::EvenAnnotatorCount(count));
    }
    if count < 3 {
        return Err(MetricsError::TooFewAnnotators(count));
    }
    let first = &annotations[0];
    for other in &annotations[1..] {
        same_ids(first, other)?;
    }
    Ok(first
        .keys()
        .map(|id| {
            let yes = annotations.iter().filter(|a| a[id] == Label::Yes).count();
            let label = if 2 * yes > count { Label::Yes } else { Label::No };
            (id.clone(), label)
        })
        .collect())
}

/// Fraction of ids on which two labelings agree.
pub fn label_overlap(a: &Labeling, b: &Labeling) -> Result<f64, MetricsError> {
    same_ids(a, b)?;
    if a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let agree = a.iter().filter(|(id, l)| b[*id] == **l).count();
    Ok(agree as f64 / a.len() as f64)
}

/// Fraction of instances on which two prediction sets emit the same label.
pub fn prediction_overlap(a: &PredictionSet, b: &PredictionSet) -> Result<f64, MetricsError> {
    label_overlap(&a.labeling(), &b.labeling())
}
