use claimcheck_core::metrics::Milli;
use claimcheck_core::Split;
use thiserror::Error;

use super::run::RunRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("run {run_id} ({name}) has no metrics for {split}")]
    MissingSplit { run_id: String, name: String, split: Split },
    #[error("no runs to report")]
    Empty,
}

/// Markdown table of accuracy, precision, recall and positive-class F1 on
/// `split`, one row per run in input order. The best shown value in each
/// column is bold, ties included.
pub fn render_report(runs: &[RunRecord], split: Split) -> Result<String, ReportError> {
    if runs.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let m = run.metrics_by_split.get(&split).ok_or_else(|| ReportError::MissingSplit {
            run_id: run.run_id.clone(),
            name: run.name.clone(),
            split,
        })?;
        let r = m.rounded;
        rows.push((run.name.as_str(), [r.accuracy, r.precision, r.recall, r.f1_positive]));
    }
    let best: Vec<Milli> = (0..4).map(|c| rows.iter().map(|(_, v)| v[c]).max().expect("non-empty")).collect();

    let mut out = String::from("| Model | Accuracy | Precision | Recall | F1 |\n|---|---|---|---|---|\n");
    for (name, values) in rows {
        out.push_str("| ");
        out.push_str(&name.replace('|', "\\|"));
        for (v, b) in values.iter().zip(&best) {
            if v == b {
                out.push_str(&format!(" | **{v}**"));
            } else {
                out.push_str(&format!(" | {v}"));
            }
        }
        out.push_str(" |\n");
    }
    Ok(out)
}
