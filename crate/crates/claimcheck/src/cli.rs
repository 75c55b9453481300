//! Command-line interface.
//!
//! Machine-readable results go to stdout (JSON, JSONL or markdown); logs go
//! to stderr. Exit codes: 0 success, 1 domain error, 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use claimcheck_core::augment::{build_style_transfer_prompt_in, StyleTransferExemplars};
use claimcheck_core::corpus::merge;
use claimcheck_core::label::UnknownTag;
use claimcheck_core::metrics::{cohens_kappa, compute_metrics, label_overlap, majority_adjudicate};
use claimcheck_core::normalize::normalize_text;
use claimcheck_core::prompt::build_checkworthy_prompt;
use claimcheck_core::{Corpus, Language, NormalizeConfig, PromptConfig, Split};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::annotate::{annotate_session, TerminalConsole};
use crate::augment::{translate_corpus, translator_by_name, TranslateOptions};
use crate::backend::BackendConfig;
use crate::cache::ResponseCache;
use crate::clock::{Clock, SystemClock};
use crate::experiment::{
    render_report, run_experiment, run_grid, select_run, ExperimentConfig, GridSpec, RunContext, RunStore,
    SelectMetric, SelectionPolicy, TieBreak,
};
use crate::finetune::{export_finetune, to_jsonl};
use crate::fsutil::write_atomic;
use crate::jsonl::{labeling_to_jsonl, read_labeling, read_predictions, write_predictions};
use crate::predict::{predict_batch, BatchOptions};
use crate::tsv::{read_corpus, write_corpus, write_sidecar, ProvenanceSidecar};
use crate::{API_KEY_ENV, CACHE_ENV, DEFAULT_CACHE_PATH};

fn tag<T: FromStr<Err = UnknownTag>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: UnknownTag| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "claimcheck", version, about = "Check-worthiness claim detection benchmark harness")]
pub struct Cli {
    /// Experiment config (TOML). Its backend/prompt/normalize sections also
    /// configure `predict` and `normalize`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized operation; required where randomness exists.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only log errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus TSV file.
    pub input: PathBuf,
    #[arg(long, value_parser = tag::<Language>)]
    pub language: Language,
    #[arg(long, value_parser = tag::<Split>, default_value = "train")]
    pub split: Split,
    /// Accept rows without labels.
    #[arg(long)]
    pub unlabeled: bool,
}

impl CorpusArgs {
    fn load(&self) -> anyhow::Result<Corpus> {
        let labeled = !self.unlabeled && self.split.requires_labels();
        Ok(read_corpus(&self.input, self.language, self.split, labeled)?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ResampleMethod {
    Under,
    Over,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and write it in canonical form.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Class counts of a corpus.
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Balance classes by under- or oversampling.
    Resample {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_enum)]
        method: ResampleMethod,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Draw a seeded random fraction of a corpus.
    Sample {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        fraction: f64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Merge corpora given as `lang=path` into one training corpus.
    Merge {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<String>,
        #[arg(long, value_parser = tag::<Language>)]
        target: Language,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Mask usernames and URLs and collapse whitespace. Without --config
    /// all passes run; with it, the config's [normalize] section decides.
    Normalize {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Machine-translate a corpus.
    Translate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_parser = tag::<Language>)]
        target: Language,
        #[arg(long, default_value = "mock")]
        translator: String,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Print the prompt sent for a text.
    PromptPreview {
        #[arg(long)]
        text: String,
        /// Language name substituted into the prompt.
        #[arg(long, default_value = "English")]
        language_name: String,
        #[arg(long)]
        template: Option<String>,
        /// Three example tweets; renders the style-transfer prompt instead.
        #[arg(long = "exemplar", num_args = 1)]
        exemplars: Vec<String>,
    },
    /// Predict labels for a corpus with the configured backend.
    Predict {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Score predictions against a labeled corpus.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[command(flatten)]
        gold: CorpusArgs,
    },
    /// Prediction overlap and Cohen's kappa between two label files.
    Compare { a: PathBuf, b: PathBuf },
    /// Majority vote over an odd number of label files.
    Adjudicate {
        #[arg(required = true, num_args = 3..)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Label a sample interactively.
    Annotate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        annotator: String,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Execute the experiment given by --config.
    Run {
        #[arg(long, default_value = ".")]
        store: PathBuf,
    },
    /// Run one experiment per point of a parameter grid.
    Grid {
        /// TOML file with an `[axes]` table.
        #[arg(long)]
        axes: PathBuf,
        #[arg(long, default_value = ".")]
        store: PathBuf,
    },
    /// Choose the best run in a store.
    Select {
        #[arg(long, default_value = ".")]
        store: PathBuf,
        #[arg(long, value_enum, default_value = "f1-positive")]
        metric: MetricArg,
        #[arg(long, value_parser = tag::<Split>, default_value = "dev-test")]
        split: Split,
        #[arg(long, default_value_t = 0.002)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "earliest-run")]
        tiebreak: TieBreakArg,
        /// Reference predictions for the overlap tiebreak.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Only consider these runs.
        #[arg(long = "run")]
        runs: Vec<String>,
    },
    /// Markdown results table for runs in a store.
    Report {
        #[arg(long, default_value = ".")]
        store: PathBuf,
        #[arg(long, value_parser = tag::<Split>, default_value = "dev-test")]
        split: Split,
        /// Rows to include, in order; defaults to all successful runs.
        #[arg(long = "run")]
        runs: Vec<String>,
    },
    /// Write a chat-format fine-tuning file from a labeled corpus.
    ExportFinetune {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        system_prompt: Option<String>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    F1Positive,
    F1Macro,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieBreakArg {
    OverlapWithReference,
    EarliestRun,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Domain(e.into())
    }
}

/// Sections of a config file used by single-step commands; other keys are
/// ignored so a full experiment config works here too.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct StepConfig {
    backend: BackendConfig,
    prompt: PromptConfig,
    normalize: NormalizeConfig,
}

fn step_config(path: Option<&Path>) -> anyhow::Result<StepConfig> {
    let Some(path) = path else { return Ok(StepConfig::default()) };
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&raw).with_context(|| format!("parsing {}", path.display()))
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Usage(format!("`{command}` is randomized and needs --seed")))
}

fn open_cache() -> anyhow::Result<ResponseCache> {
    let path = std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_PATH));
    Ok(ResponseCache::open(path)?)
}

fn api_key() -> Option<String> {
    std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty())
}

fn sidecar(corpus: &Corpus, source: &CorpusArgs, translator: Option<String>, clock: &dyn Clock) -> ProvenanceSidecar {
    ProvenanceSidecar {
        source_file: Some(source.input.display().to_string()),
        source_language: Some(source.language),
        language: corpus.language(),
        split: corpus.split(),
        translator,
        transformations: corpus.provenance().to_owned(),
        created_at: clock.now_utc(),
    }
}

fn write_derived(path: &Path, corpus: &Corpus, source: &CorpusArgs, translator: Option<String>) -> anyhow::Result<()> {
    write_corpus(path, corpus)?;
    write_sidecar(path, &sidecar(corpus, source, translator, &SystemClock::default()))?;
    Ok(())
}

fn counts_json(corpus: &Corpus) -> anyhow::Result<serde_json::Value> {
    let c = corpus.class_counts()?;
    Ok(json!({
        "language": corpus.language(),
        "split": corpus.split(),
        "total": c.total,
        "yes": c.yes,
        "no": c.no,
    }))
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> anyhow::Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn load_experiment(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let path = path.ok_or_else(|| CliError::Usage("this command needs --config <experiment.toml>".into()))?;
    Ok(ExperimentConfig::load(path)?)
}

fn pick_runs(store: &RunStore, ids: &[String]) -> anyhow::Result<Vec<crate::experiment::RunRecord>> {
    if ids.is_empty() {
        Ok(store.load_all()?.into_iter().filter(|r| r.is_ok()).collect())
    } else {
        ids.iter().map(|id| Ok(store.load(id)?)).collect()
    }
}

/// Executes a parsed command line.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let clock = SystemClock::default();
    match cli.command {
        Command::Ingest { corpus, output } => {
            let c = corpus.load()?;
            write_derived(&output, &c, &corpus, None)?;
            emit(out, &counts_json(&c)?)?;
        }
        Command::Stats { corpus } => {
            let c = corpus.load()?;
            emit(out, &counts_json(&c)?)?;
        }
        Command::Resample { corpus, method, output } => {
            let seed = require_seed(cli.seed, "resample")?;
            let c = corpus.load()?;
            let r = match method {
                ResampleMethod::Under => c.undersample(seed)?,
                ResampleMethod::Over => c.oversample(seed)?,
            };
            write_derived(&output, &r, &corpus, None)?;
            emit(out, &counts_json(&r)?)?;
        }
        Command::Sample { corpus, fraction, output } => {
            let seed = require_seed(cli.seed, "sample")?;
            let s = corpus.load()?.sample_fraction(fraction, seed)?;
            write_derived(&output, &s, &corpus, None)?;
            emit(out, &json!({ "total": s.len() }))?;
        }
        Command::Merge { inputs, target, output } => {
            let mut parts = Vec::new();
            for spec in &inputs {
                let (lang, path) =
                    spec.split_once('=').ok_or_else(|| CliError::Usage(format!("expected lang=path, got {spec:?}")))?;
                let lang = tag::<Language>(lang).map_err(CliError::Usage)?;
                parts.push(read_corpus(Path::new(path), lang, Split::Train, true)?);
            }
            let merged = merge(&parts, target)?;
            write_corpus(&output, &merged)?;
            write_sidecar(
                &output,
                &ProvenanceSidecar {
                    source_file: None,
                    source_language: None,
                    language: target,
                    split: Split::Train,
                    translator: None,
                    transformations: merged.provenance().to_owned(),
                    created_at: clock.now_utc(),
                },
            )?;
            emit(out, &counts_json(&merged)?)?;
        }
        Command::Normalize { corpus, output } => {
            let cfg = match cli.config.as_deref() {
                Some(path) => step_config(Some(path))?.normalize,
                None => NormalizeConfig::all_on(),
            };
            cfg.validate()?;
            let c = corpus.load()?;
            let n = c.map_texts(|t| normalize_text(t, &cfg))?.with_provenance(format!("{}; normalize", c.provenance()));
            write_derived(&output, &n, &corpus, None)?;
            emit(out, &json!({ "total": n.len() }))?;
        }
        Command::Translate { corpus, target, translator, endpoint, concurrency, output } => {
            let c = corpus.load()?;
            let t = translator_by_name(&translator, endpoint.as_deref())?;
            let cache = open_cache()?;
            let opts = TranslateOptions { concurrency, ..TranslateOptions::default() };
            let translated = translate_corpus(&c, target, t.as_ref(), &opts, Some(&cache), &clock)?;
            write_derived(&output, &translated, &corpus, Some(t.id()))?;
            emit(out, &counts_json(&translated)?)?;
        }
        Command::PromptPreview { text, language_name, template, exemplars } => {
            let rendered = if exemplars.is_empty() {
                let mut cfg = step_config(cli.config.as_deref())?.prompt;
                cfg.language_name = language_name;
                if let Some(t) = template {
                    cfg.template_id = t;
                }
                build_checkworthy_prompt(&text, &cfg)?
            } else {
                let ex = StyleTransferExemplars::from_slice(&exemplars)?;
                build_style_transfer_prompt_in(&text, &ex, &language_name)
            };
            writeln!(out, "{rendered}").map_err(anyhow::Error::from)?;
        }
        Command::Predict { corpus, output } => {
            let cfg = step_config(cli.config.as_deref())?;
            let c = corpus.load()?;
            let c = if cfg.normalize.is_identity() { c } else { c.map_texts(|t| normalize_text(t, &cfg.normalize))? };
            let backend = cfg.backend.build(api_key())?;
            let cache = open_cache()?;
            let preds =
                predict_batch(&c, backend.as_ref(), &BatchOptions::from(&cfg.backend), &cfg.prompt, &cache, &clock)?;
            write_predictions(&output, &preds)?;
            let flagged = preds.predictions.iter().filter(|p| p.flagged_fallback).count();
            let cached = preds.predictions.iter().filter(|p| p.from_cache).count();
            emit(out, &json!({ "predictions": preds.len(), "from_cache": cached, "fallback": flagged }))?;
        }
        Command::Evaluate { predictions, gold } => {
            let g = gold.load()?;
            let preds = read_predictions(&predictions, "", "")?;
            let cm = claimcheck_core::metrics::confusion(&preds, &g)?;
            let report = compute_metrics(&cm)?;
            emit(out, &json!({ "confusion": cm, "metrics": report }))?;
        }
        Command::Compare { a, b } => {
            let (la, lb) = (read_labeling(&a)?, read_labeling(&b)?);
            let overlap = label_overlap(&la, &lb)?;
            let agreement = cohens_kappa(&la, &lb)?;
            emit(out, &json!({ "items": la.len(), "overlap": overlap, "agreement": agreement }))?;
        }
        Command::Adjudicate { inputs, output } => {
            let labelings = inputs.iter().map(|p| read_labeling(p)).collect::<Result<Vec<_>, _>>()?;
            let gold = majority_adjudicate(&labelings)?;
            write_atomic(&output, labeling_to_jsonl(&gold).as_bytes()).map_err(anyhow::Error::from)?;
            let yes = gold.values().filter(|l| l.is_positive()).count();
            emit(out, &json!({ "items": gold.len(), "yes": yes, "no": gold.len() - yes }))?;
        }
        Command::Annotate { corpus, annotator, output } => {
            let labeled = false;
            let sample = read_corpus(&corpus.input, corpus.language, corpus.split, labeled)?;
            let file = annotate_session(&sample, &annotator, &output, &mut TerminalConsole, &clock)?;
            emit(out, &json!({ "annotator": file.annotator_id, "labeled": file.labels.len(), "total": sample.len() }))?;
        }
        Command::Run { store } => {
            let config = load_experiment(cli.config.as_deref())?;
            let cache = open_cache()?;
            let ctx = RunContext { cache: &cache, clock: &clock, backend: None, api_key: api_key() };
            let record = run_experiment(&config, &RunStore::new(store), &ctx)?;
            emit(out, &serde_json::to_value(&record).map_err(anyhow::Error::from)?)?;
            if !record.is_ok() {
                return Err(CliError::Domain(anyhow!("run {} failed: {}", record.run_id, record.error.join(": "))));
            }
        }
        Command::Grid { axes, store } => {
            let config = load_experiment(cli.config.as_deref())?;
            let raw = std::fs::read_to_string(&axes).with_context(|| format!("reading {}", axes.display()))?;
            let spec: GridSpec = toml::from_str(&raw).with_context(|| format!("parsing {}", axes.display()))?;
            let cache = open_cache()?;
            let ctx = RunContext { cache: &cache, clock: &clock, backend: None, api_key: api_key() };
            let records = run_grid(&config, &spec.axes, &RunStore::new(store), &ctx)?;
            for r in &records {
                let line = json!({ "run_id": r.run_id, "name": r.name, "status": r.status });
                writeln!(out, "{line}").map_err(anyhow::Error::from)?;
            }
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                log::warn!("{failed} of {} grid runs failed", records.len());
            }
        }
        Command::Select { store, metric, split, epsilon, tiebreak, reference, runs } => {
            let store = RunStore::new(store);
            let policy = SelectionPolicy {
                metric: match metric {
                    MetricArg::F1Positive => SelectMetric::F1Positive,
                    MetricArg::F1Macro => SelectMetric::F1Macro,
                },
                split,
                tie_epsilon: epsilon,
                tiebreak: match tiebreak {
                    TieBreakArg::OverlapWithReference => TieBreak::OverlapWithReference,
                    TieBreakArg::EarliestRun => TieBreak::EarliestRun,
                },
            };
            let reference = reference.map(|p| read_predictions(&p, "reference", "")).transpose()?;
            let records = pick_runs(&store, &runs)?;
            let winner = select_run(&records, &policy, reference.as_ref(), |r| Ok(store.predictions(r, split)?))?;
            writeln!(out, "{winner}").map_err(anyhow::Error::from)?;
        }
        Command::Report { store, split, runs } => {
            let records = pick_runs(&RunStore::new(store), &runs)?;
            write!(out, "{}", render_report(&records, split)?).map_err(anyhow::Error::from)?;
        }
        Command::ExportFinetune { corpus, system_prompt, output } => {
            let c = corpus.load()?;
            let system = match system_prompt {
                Some(s) => s,
                None => {
                    let mut cfg = step_config(cli.config.as_deref())?.prompt;
                    cfg.language_name = c.language().name().to_owned();
                    default_system_prompt(&cfg)?
                }
            };
            let records = export_finetune(&c, &system)?;
            write_atomic(&output, to_jsonl(&records).as_bytes()).map_err(anyhow::Error::from)?;
            emit(out, &json!({ "records": records.len() }))?;
        }
    }
    Ok(())
}

/// The instruction part of the check-worthiness prompt: everything before
/// the trailing `checkworthy(...)` call.
fn default_system_prompt(cfg: &PromptConfig) -> anyhow::Result<String> {
    const MARK: &str = "\u{0}";
    let full = build_checkworthy_prompt(MARK, cfg)?;
    let cut = full.rfind("checkworthy(").filter(|&i| full[i..].contains(MARK));
    match cut {
        Some(i) => Ok(full[..i].trim_end().to_owned()),
        None => bail!("template {} has no trailing checkworthy call", cfg.template_id),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .try_init();

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Domain(err) => eprintln!("error: {err:#}"),
            }
            e.exit_code()
        }
    }
}
