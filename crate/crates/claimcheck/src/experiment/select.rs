use std::cmp::Ordering;

use claimcheck_core::metrics::prediction_overlap;
use claimcheck_core::{MetricsError, MetricsReport, PredictionSet, Split};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::run::RunRecord;
use super::store::StoreError;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("no successful runs to choose from")]
    NoSuccessfulRuns,
    #[error("tiebreak overlap_with_reference needs a reference prediction set")]
    MissingReference,
    #[error("run {run_id} has no metrics for {split}")]
    MissingSplit { run_id: String, split: Split },
    #[error("tie_epsilon must be a finite non-negative number")]
    InvalidEpsilon,
    #[error("overlap with reference for run {run_id}: {source}")]
    Overlap { run_id: String, source: MetricsError },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMetric {
    F1Positive,
    F1Macro,
}

impl SelectMetric {
    fn of(self, m: &MetricsReport) -> f64 {
        match self {
            SelectMetric::F1Positive => m.f1_positive,
            SelectMetric::F1Macro => m.f1_macro,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    OverlapWithReference,
    EarliestRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionPolicy {
    pub metric: SelectMetric,
    pub split: Split,
    #[serde(default = "default_epsilon")]
    pub tie_epsilon: f64,
    pub tiebreak: TieBreak,
}

fn default_epsilon() -> f64 {
    0.002
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self {
            metric: SelectMetric::F1Positive,
            split: Split::DevTest,
            tie_epsilon: default_epsilon(),
            tiebreak: TieBreak::EarliestRun,
        }
    }
}

/// Guards the tie-window boundary against representation error, so a gap of
/// exactly `tie_epsilon` in decimal still counts as a tie.
const SLACK: f64 = 1e-12;

/// Picks the best ok run by the policy's metric.
///
/// Runs within `tie_epsilon` of the best score form the tie set. Inside it,
/// `overlap_with_reference` prefers the highest prediction overlap with
/// `reference`, `earliest_run` the smallest start time. Remaining ties fall
/// to the smaller run id. `predictions` loads a run's predictions on the
/// policy split and is only called for tie-set members.
pub fn select_run(
    runs: &[RunRecord],
    policy: &SelectionPolicy,
    reference: Option<&PredictionSet>,
    mut predictions: impl FnMut(&RunRecord) -> Result<PredictionSet, SelectError>,
) -> Result<String, SelectError> {
    if !policy.tie_epsilon.is_finite() || policy.tie_epsilon < 0.0 {
        return Err(SelectError::InvalidEpsilon);
    }
    if policy.tiebreak == TieBreak::OverlapWithReference && reference.is_none() {
        return Err(SelectError::MissingReference);
    }
    let mut scored = Vec::new();
    for run in runs.iter().filter(|r| r.is_ok()) {
        let m = run
            .metrics_by_split
            .get(&policy.split)
            .ok_or_else(|| SelectError::MissingSplit { run_id: run.run_id.clone(), split: policy.split })?;
        scored.push((run, policy.metric.of(m)));
    }
    let best = scored.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    if scored.is_empty() {
        return Err(SelectError::NoSuccessfulRuns);
    }
    let ties: Vec<&RunRecord> =
        scored.iter().filter(|(_, s)| *s >= best - policy.tie_epsilon - SLACK).map(|(r, _)| *r).collect();
    if ties.len() > 1 {
        log::info!(
            "{} runs within {} of the best score; breaking tie by {:?}",
            ties.len(),
            policy.tie_epsilon,
            policy.tiebreak
        );
    }

    let by_id = |a: &RunRecord, b: &RunRecord| a.run_id.cmp(&b.run_id);
    let winner = match policy.tiebreak {
        TieBreak::EarliestRun => ties.into_iter().min_by(|a, b| a.started.cmp(&b.started).then_with(|| by_id(a, b))),
        TieBreak::OverlapWithReference if ties.len() == 1 => ties.into_iter().next(),
        TieBreak::OverlapWithReference => {
            let reference = reference.expect("checked above");
            let mut best: Option<(&RunRecord, f64)> = None;
            for run in ties {
                let preds = predictions(run)?;
                let overlap = prediction_overlap(&preds, reference)
                    .map_err(|source| SelectError::Overlap { run_id: run.run_id.clone(), source })?;
                let better = match best {
                    None => true,
                    Some((cur, o)) => match overlap.partial_cmp(&o).unwrap_or(Ordering::Equal) {
                        Ordering::Greater => true,
                        Ordering::Equal => by_id(run, cur).is_lt(),
                        Ordering::Less => false,
                    },
                };
                if better {
                    best = Some((run, overlap));
                }
            }
            best.map(|(r, _)| r)
        }
    };
    Ok(winner.expect("tie set is non-empty").run_id.clone())
}
