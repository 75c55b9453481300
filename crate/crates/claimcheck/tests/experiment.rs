use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use claimcheck::backend::{BackendConfig, MatchKind, MockBackend, MockRule};
use claimcheck::cache::ResponseCache;
use claimcheck::clock::SimClock;
use claimcheck::experiment::{
    render_report, run_experiment, run_grid, select_run, ExperimentConfig, RunContext, RunRecord, RunStatus, RunStore,
    SelectError, SelectMetric, SelectionPolicy, TieBreak,
};
use claimcheck_core::metrics::compute_metrics;
use claimcheck_core::{ConfusionMatrix, Label, Prediction, PredictionSet, Split};
use serde_json::json;

/// 20 rows; the mock marks texts containing a digit as Yes.
/// Gold vs mock: tp 6, fp 2, fn 3, tn 9.
fn write_fixture(dir: &Path) -> std::path::PathBuf {
    let mut tsv = String::from("sentence_id\ttext\tclass_label\n");
    let rows = [
        ("Unemployment fell to 4 percent.", "Yes"),
        ("We created 200000 jobs.", "Yes"),
        ("Taxes rose 3 times.", "Yes"),
        ("The deficit is 1 trillion.", "Yes"),
        ("Crime dropped 12 percent.", "Yes"),
        ("Exports grew in 2019.", "Yes"),
        ("I have 2 kids and love them.", "No"),
        ("Thank you 1 and all.", "No"),
        ("The senator voted against the bill.", "Yes"),
        ("Wages are higher than ever.", "Yes"),
        ("Our schools rank first nationally.", "Yes"),
        ("I think we can do better.", "No"),
        ("Good evening everyone.", "No"),
        ("What a great night.", "No"),
        ("Let me be clear.", "No"),
        ("America deserves better.", "No"),
        ("I believe in hope.", "No"),
        ("Thank you so much.", "No"),
        ("That is just wrong.", "No"),
        ("We will win.", "No"),
    ];
    for (i, (text, label)) in rows.iter().enumerate() {
        tsv.push_str(&format!("e{i:02}\t{text}\t{label}\n"));
    }
    let path = dir.join("dev-test.tsv");
    std::fs::write(&path, tsv).unwrap();
    path
}

fn digit_backend() -> BackendConfig {
    BackendConfig {
        mock_rules: vec![MockRule {
            kind: MatchKind::Regex,
            pattern: "[0-9]".into(),
            label: Label::Yes,
            response: None,
        }],
        ..BackendConfig::default()
    }
}

fn config(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml("name = 'mock-digits'\nlanguage = 'en'\n[corpus_paths]\n").unwrap();
    c.corpus_paths.insert(Split::DevTest, write_fixture(dir));
    c.backend = digit_backend();
    c
}

#[test]
fn mock_run_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::new(dir.path().join("store"));
    let cfg = config(dir.path());
    let cache = ResponseCache::open(dir.path().join("cache.jsonl")).unwrap();
    let clock = SimClock::default();
    let mock = Arc::new(MockBackend::new(&cfg.backend).unwrap());
    let ctx = RunContext { cache: &cache, clock: &clock, backend: Some(mock.clone()), api_key: None };

    let first = run_experiment(&cfg, &store, &ctx).unwrap();
    assert_eq!(first.status, RunStatus::Ok, "{:?}", first.error);
    assert_eq!(mock.calls(), 20);
    let m = &first.metrics_by_split[&Split::DevTest];
    assert_eq!(m.accuracy, 15.0 / 20.0);
    assert_eq!(m.precision, 6.0 / 8.0);
    assert_eq!(m.recall, 6.0 / 9.0);
    assert_eq!(m.f1_positive, 12.0 / 17.0);
    assert_eq!(m.f1_macro, 582.0 / 782.0);
    assert_eq!(store.load(&first.run_id).unwrap(), first);

    let warm = Arc::new(MockBackend::new(&cfg.backend).unwrap());
    let ctx = RunContext { cache: &cache, clock: &clock, backend: Some(warm.clone()), api_key: None };
    let second = run_experiment(&cfg, &store, &ctx).unwrap();
    assert_eq!(warm.calls(), 0);
    assert_ne!(first.run_id, second.run_id);
    assert_eq!(first.config_fingerprint, second.config_fingerprint);
    assert_eq!(first.metrics_by_split, second.metrics_by_split);
    let read = |r: &RunRecord| std::fs::read(store.root().join(&r.prediction_paths[&Split::DevTest])).unwrap();
    assert_eq!(read(&first), read(&second));
    assert_eq!(store.index().unwrap().len(), 2);
}

#[test]
fn missing_file_gives_failed_record_without_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::new(dir.path());
    let mut cfg = config(dir.path());
    cfg.corpus_paths.insert(Split::DevTest, dir.path().join("nope.tsv"));
    let cache = ResponseCache::in_memory();
    let clock = SimClock::default();
    let ctx = RunContext { cache: &cache, clock: &clock, backend: None, api_key: None };
    let rec = run_experiment(&cfg, &store, &ctx).unwrap();
    assert_eq!(rec.status, RunStatus::Failed);
    assert!(rec.error[0].contains("nope.tsv"), "{:?}", rec.error);
    assert!(rec.prediction_paths.is_empty() && rec.metrics_by_split.is_empty());
    let files: Vec<_> =
        std::fs::read_dir(store.run_dir(&rec.run_id)).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, ["record.json"]);
}

#[test]
fn name_reuse_needs_identical_config() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::new(dir.path());
    let cfg = config(dir.path());
    let cache = ResponseCache::in_memory();
    let clock = SimClock::default();
    let ctx = RunContext { cache: &cache, clock: &clock, backend: None, api_key: None };
    assert!(run_experiment(&cfg, &store, &ctx).unwrap().is_ok());
    let mut changed = cfg.clone();
    changed.prompt.parse_mode = claimcheck_core::ParseMode::Strict;
    let rec = run_experiment(&changed, &store, &ctx).unwrap();
    assert_eq!(rec.status, RunStatus::Failed);
    assert!(rec.error[0].contains("already used"));
}

#[test]
fn augmentation_output_is_persisted() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.tsv");
    std::fs::write(&train, "sentence_id\ttext\tclass_label\n1\ta\tYes\n2\tb\tNo\n3\tc\tNo\n").unwrap();
    let ar = dir.path().join("ar.tsv");
    std::fs::write(&ar, "sentence_id\ttext\tclass_label\n1\tأ\tYes\n").unwrap();
    let toml = r#"
name = "aug"
language = "en"
[corpus_paths]
train = "train.tsv"
dev-test = "dev-test.tsv"
[[augmentation]]
op = "merge"
corpora = [{ path = "ar.tsv", language = "ar", translate = true }]
[[augmentation]]
op = "undersample"
seed = 1
"#;
    write_fixture(dir.path());
    std::fs::write(dir.path().join("exp.toml"), toml).unwrap();
    let cfg = ExperimentConfig::load(&dir.path().join("exp.toml")).unwrap();
    let store = RunStore::new(dir.path().join("s"));
    let cache = ResponseCache::in_memory();
    let clock = SimClock::default();
    let ctx = RunContext { cache: &cache, clock: &clock, backend: None, api_key: None };
    let rec = run_experiment(&cfg, &store, &ctx).unwrap();
    assert!(rec.is_ok(), "{:?}", rec.error);
    let tsv = std::fs::read_to_string(store.run_dir(&rec.run_id).join("train-augmented.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);
    assert!(tsv.contains("ar:1\t[ar→en] أ\tYes"));
}

#[test]
fn grid_survives_failing_cell() {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::new(dir.path());
    let cfg = config(dir.path());
    let cache = ResponseCache::in_memory();
    let clock = SimClock::default();
    let ctx = RunContext { cache: &cache, clock: &clock, backend: None, api_key: None };
    let good = cfg.corpus_paths[&Split::DevTest].display().to_string();
    let axes = BTreeMap::from([
        ("corpus_paths.dev-test".to_string(), vec![json!(good), json!("/missing/file.tsv")]),
        ("parse_mode".to_string(), vec![json!("lenient")]),
    ]);
    let records = run_grid(&cfg, &axes, &store, &ctx).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records[0].is_ok());
    assert!(!records[1].is_ok());
    assert!(records[1].name.starts_with("mock-digits[corpus_paths.dev-test=/missing/file.tsv,"));

    let axes = BTreeMap::from([
        ("free_params.a".to_string(), vec![json!(1), json!(2)]),
        ("free_params.b".to_string(), vec![json!("x"), json!("y")]),
    ]);
    let records = run_grid(&cfg, &axes, &store, &ctx).unwrap();
    let order: Vec<_> =
        records.iter().map(|r| (r.config.free_params["a"].clone(), r.config.free_params["b"].clone())).collect();
    assert_eq!(order, [(json!(1), json!("x")), (json!(1), json!("y")), (json!(2), json!("x")), (json!(2), json!("y"))]);
}

fn record(id: &str, name: &str, cm: ConfusionMatrix, started_min: u32) -> RunRecord {
    let cfg = ExperimentConfig::from_toml("name = 'x'\nlanguage = 'en'\n[corpus_paths]\n").unwrap();
    RunRecord {
        run_id: id.into(),
        name: name.into(),
        config_fingerprint: cfg.fingerprint(),
        config: cfg,
        started: Utc.with_ymd_and_hms(2024, 5, 1, 0, started_min, 0).unwrap(),
        finished: Utc.with_ymd_and_hms(2024, 5, 1, 1, 0, 0).unwrap(),
        status: RunStatus::Ok,
        backend_fingerprint: None,
        metrics_by_split: BTreeMap::from([(Split::DevTest, compute_metrics(&cm).unwrap())]),
        prediction_paths: BTreeMap::new(),
        error: vec![],
    }
}

fn with_f1(id: &str, f1: f64, started_min: u32) -> RunRecord {
    let mut r = record(id, id, ConfusionMatrix::new(1, 0, 0, 1), started_min);
    r.metrics_by_split.get_mut(&Split::DevTest).unwrap().f1_positive = f1;
    r
}

fn preds(labels: &[Label]) -> PredictionSet {
    PredictionSet {
        backend_fingerprint: String::new(),
        corpus_fingerprint: String::new(),
        predictions: labels
            .iter()
            .enumerate()
            .map(|(i, &label)| Prediction {
                instance_id: format!("{i}"),
                label,
                raw_response: label.to_string(),
                from_cache: false,
                flagged_fallback: false,
                latency_ms: 0,
            })
            .collect(),
    }
}

fn policy(tiebreak: TieBreak) -> SelectionPolicy {
    SelectionPolicy { metric: SelectMetric::F1Positive, split: Split::DevTest, tie_epsilon: 0.002, tiebreak }
}

#[test]
fn selection_rules() {
    let never = |_: &RunRecord| -> Result<PredictionSet, SelectError> { panic!("no tiebreak expected") };
    let runs = [with_f1("a", 0.870, 0), with_f1("b", 0.902, 5)];
    assert_eq!(select_run(&runs, &policy(TieBreak::EarliestRun), None, never).unwrap(), "b");

    let single = [with_f1("only", 0.5, 0)];
    assert_eq!(select_run(&single, &policy(TieBreak::EarliestRun), None, never).unwrap(), "only");

    // Overlap with the reference: x 0.95, y 0.88.
    let reference = preds(&[Label::Yes; 100]);
    let mut hi = vec![Label::Yes; 100];
    hi[..5].fill(Label::No);
    let mut lo = vec![Label::Yes; 100];
    lo[..12].fill(Label::No);
    let runs = [with_f1("x", 0.900, 9), with_f1("y", 0.901, 0)];
    let lookup = |r: &RunRecord| Ok(if r.run_id == "x" { preds(&hi) } else { preds(&lo) });
    let chosen = select_run(&runs, &policy(TieBreak::OverlapWithReference), Some(&reference), lookup).unwrap();
    assert_eq!(chosen, "x");
    assert_eq!(select_run(&runs, &policy(TieBreak::EarliestRun), None, never).unwrap(), "y");

    assert!(matches!(
        select_run(&runs, &policy(TieBreak::OverlapWithReference), None, never),
        Err(SelectError::MissingReference)
    ));
    let mut failed = with_f1("f", 0.99, 0);
    failed.status = RunStatus::Failed;
    assert!(matches!(
        select_run(&[failed], &policy(TieBreak::EarliestRun), None, never),
        Err(SelectError::NoSuccessfulRuns)
    ));
}

#[test]
fn select_is_permutation_invariant_for_overlap() {
    let reference = preds(&[Label::Yes, Label::No, Label::Yes, Label::No]);
    let runs = vec![with_f1("r1", 0.80, 3), with_f1("r2", 0.801, 2), with_f1("r3", 0.7, 1)];
    let lookup = |_: &RunRecord| Ok(preds(&[Label::Yes, Label::No, Label::Yes, Label::Yes]));
    let a = select_run(&runs, &policy(TieBreak::OverlapWithReference), Some(&reference), lookup).unwrap();
    let rev: Vec<_> = runs.iter().rev().cloned().collect();
    let b = select_run(&rev, &policy(TieBreak::OverlapWithReference), Some(&reference), lookup).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, "r1");
}

#[test]
fn report_reproduces_table_rows() {
    let runs = [
        record("1", "RoBERTa", ConfusionMatrix::new(92, 4, 16, 206), 0),
        record("2", "XLMR (fine-tuned)", ConfusionMatrix::new(228, 154, 88, 196), 0),
        record("3", "GPT-3.5 (fine-tuned)", ConfusionMatrix::new(332, 43, 45, 80), 0),
    ];
    let table = render_report(&runs, Split::DevTest).unwrap();
    assert_eq!(
        table,
        "| Model | Accuracy | Precision | Recall | F1 |\n\
         |---|---|---|---|---|\n\
         | RoBERTa | **0.937** | **0.958** | 0.852 | **0.902** |\n\
         | XLMR (fine-tuned) | 0.637 | 0.597 | 0.722 | 0.653 |\n\
         | GPT-3.5 (fine-tuned) | 0.824 | 0.885 | **0.881** | 0.883 |\n"
    );

    let one = render_report(&runs[..1], Split::DevTest).unwrap();
    assert_eq!(one.lines().nth(2).unwrap(), "| RoBERTa | **0.937** | **0.958** | **0.852** | **0.902** |");

    let tie = [runs[0].clone(), record("4", "copy", ConfusionMatrix::new(92, 4, 16, 206), 0)];
    let t = render_report(&tie, Split::DevTest).unwrap();
    assert_eq!(t.matches("**0.902**").count(), 2);
    assert!(render_report(&runs, Split::Dev).is_err());
}
