//! Command-line stages.
//!
//! Every invocation runs one stage and writes a config echo next to its
//! output: `<out-dir>/config.json` for stages that write a directory,
//! `<out>.config.json` otherwise. The echo holds the effective values of all
//! options and can be replayed with `parcomp rerun`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use parcomp_core::consistency::{run_consistency, ConsistencyOptions};
use parcomp_core::corpus::{align_by_pivot, make_dev_split, select_pivot, LanguageCode, ParallelCorpus};
use parcomp_core::metrics::{Aggregation, Metric, MetricReport};
use parcomp_core::ngram::{score_sequence, train_checkpoints, DEFAULT_ORDER};
use parcomp_core::records::ScoreSet;
use parcomp_core::tokenizer::{train_bpe, DEFAULT_MONO_VOCAB_SIZE, DEFAULT_MULTI_VOCAB_SIZE};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{load_bitexts, load_corpus, read_json, read_lines, write_corpus, write_file, write_json};
use crate::error::{Error, Result};
use crate::model_files::{load_ngram, load_tokenizer, save_ngram, save_tokenizer};
use crate::pipeline::{run_pipeline, PipelineArgs};
use crate::reports::{figure_data_csv, markdown_report, ConsistencyDoc, MetricTable};
use crate::scores_io::{export_scores, ingest_file, IngestMode};

pub const DEFAULT_CHECKPOINT_EVERY: usize = 1000;
pub const DEFAULT_DEV_FRACTION: f64 = 0.10;
pub const SEED_ENV: &str = "PARCOMP_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "parcomp",
    version,
    about = "Intrinsic LM metrics and paraphrase consistency over multi-parallel corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Join bitexts that share a pivot language into a multi-parallel corpus.
    Align(AlignArgs),
    /// Hold out a seeded random dev split, identical rows in every language.
    Split(SplitArgs),
    /// Train a byte-fallback BPE tokenizer.
    TrainTokenizer(TrainTokenizerArgs),
    /// Train an n-gram model, saving a checkpoint every N lines.
    TrainLm(TrainLmArgs),
    /// Score sentences with an n-gram model into score records.
    Score(ScoreArgs),
    /// Compute the metric table for one or more score-record files.
    Metrics(MetricsArgs),
    /// Compare a source set against row-aligned paraphrase sets.
    Consistency(ConsistencyArgs),
    /// Render metric tables and consistency reports as Markdown.
    Report(ReportArgs),
    /// Run every stage from a pipeline manifest.
    Pipeline(PipelineArgs),
    /// Replay a command from its config echo.
    #[serde(skip)]
    Rerun(RerunArgs),
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignArgs {
    /// Bitext manifest.
    #[arg(long)]
    pub bitexts: PathBuf,
    /// Pivot language. Defaults to the language with the most pairs.
    #[arg(long)]
    pub pivot: Option<LanguageCode>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitArgs {
    /// Corpus manifest.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEV_FRACTION)]
    pub dev_fraction: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Receives `train/` and `dev/` corpora.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainTokenizerArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Languages to train on (repeatable). Defaults to all.
    #[arg(long)]
    pub lang: Vec<LanguageCode>,
    /// Defaults to 32000 for one language and 150000 for several.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainLmArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Languages to train on (repeatable), consumed in this order. Defaults to all.
    #[arg(long)]
    pub lang: Vec<LanguageCode>,
    #[arg(long)]
    pub tokenizer: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_CHECKPOINT_EVERY)]
    pub checkpoint_every: usize,
    /// Receives `lm-<lines>.json` per checkpoint and `checkpoints.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub tokenizer: PathBuf,
    /// Text file, one sentence per line; line j becomes sample j.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub lang: LanguageCode,
    /// Leave ranks out of the records.
    #[arg(long)]
    pub no_ranks: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, default_value_t = 1)]
    #[serde(skip, default = "one")]
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsArgs {
    /// Score records as `PATH` or `CHECKPOINT=PATH` (repeatable).
    #[arg(long, required = true)]
    pub scores: Vec<String>,
    /// Reference language for BPEC and IP.
    #[arg(long, default_value = "eng")]
    pub english: LanguageCode,
    /// Token-weighted pooling instead of per-sentence means.
    #[arg(long)]
    pub micro: bool,
    /// Ignore unknown record fields.
    #[arg(long)]
    pub lenient: bool,
    /// CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON mirror. Defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// Paraphrase records as `PATH` or `NAME=PATH` (repeatable, at least 2).
    /// The name defaults to the file stem.
    #[arg(long, required = true)]
    pub paraphrase: Vec<String>,
    #[arg(long, default_value = "nll", value_parser = parse_metric)]
    pub metric: Metric,
    /// Accept PPL as its own metric.
    #[arg(long)]
    pub allow_ppl: bool,
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-sample values sorted by source value, as CSV.
    #[arg(long)]
    pub figure_data: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    /// Metric JSON files (repeatable).
    #[arg(long)]
    pub metrics: Vec<PathBuf>,
    /// Consistency reports (repeatable).
    #[arg(long)]
    pub consistency: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RerunArgs {
    /// A config echo written by an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    Metric::parse(s).ok_or_else(|| {
        let names: Vec<String> = Metric::ALL.iter().map(|m| m.name().to_ascii_lowercase()).collect();
        format!("unknown metric {s:?}; expected one of {}", names.join(", "))
    })
}

/// `<path>.config.json`
pub fn echo_path_for(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    s.into()
}

/// Run one command and write its config echo.
pub fn run(command: Command) -> Result<()> {
    let mut command = command;
    let echo = match &mut command {
        Command::Align(a) => align(a)?,
        Command::Split(a) => split(a)?,
        Command::TrainTokenizer(a) => train_tokenizer(a)?,
        Command::TrainLm(a) => train_lm(a)?,
        Command::Score(a) => score(a)?,
        Command::Metrics(a) => metrics(a)?,
        Command::Consistency(a) => consistency(a)?,
        Command::Report(a) => report(a)?,
        Command::Pipeline(a) => run_pipeline(a)?,
        Command::Rerun(a) => {
            let mut replay: Command = read_json(&a.config)?;
            match &mut replay {
                Command::Score(s) => s.jobs = a.jobs,
                Command::Pipeline(p) => p.jobs = a.jobs,
                _ => {}
            }
            return run(replay);
        }
    };
    write_json(&echo, &command)
}

fn align(a: &mut AlignArgs) -> Result<PathBuf> {
    let bitexts = load_bitexts(&a.bitexts)?;
    let pivot = match a.pivot {
        Some(p) => p,
        None => select_pivot(&bitexts)?,
    };
    a.pivot = Some(pivot);
    let corpus = align_by_pivot(&bitexts, pivot)?;
    write_corpus(&a.out_dir, &corpus)?;
    Ok(a.out_dir.join("config.json"))
}

fn split(a: &mut SplitArgs) -> Result<PathBuf> {
    let corpus = load_corpus(&a.corpus)?;
    let (train, dev) = make_dev_split(&corpus, a.dev_fraction, a.seed)?;
    write_corpus(&a.out_dir.join("train"), &train)?;
    write_corpus(&a.out_dir.join("dev"), &dev)?;
    Ok(a.out_dir.join("config.json"))
}

/// Lines of the selected languages, language by language. An empty
/// selection is replaced by every language of the corpus.
fn select_lines(manifest: &Path, corpus: &ParallelCorpus, langs: &mut Vec<LanguageCode>) -> Result<Vec<String>> {
    if langs.is_empty() {
        *langs = corpus.languages().to_vec();
    }
    let mut lines = Vec::new();
    for &lang in langs.iter() {
        let column = corpus
            .column(lang)
            .ok_or_else(|| Error::format(manifest, format!("language {lang} not in corpus")))?;
        lines.extend(column.map(str::to_string));
    }
    Ok(lines)
}

fn train_tokenizer(a: &mut TrainTokenizerArgs) -> Result<PathBuf> {
    let corpus = load_corpus(&a.corpus)?;
    let lines = select_lines(&a.corpus, &corpus, &mut a.lang)?;
    let vocab_size = *a.vocab_size.get_or_insert(if a.lang.len() == 1 {
        DEFAULT_MONO_VOCAB_SIZE
    } else {
        DEFAULT_MULTI_VOCAB_SIZE
    });
    let model = train_bpe(&lines, vocab_size)?;
    save_tokenizer(&a.out, &model)?;
    Ok(echo_path_for(&a.out))
}

/// `checkpoints.json` written by `train-lm`. Model paths are relative to
/// the index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointIndex {
    pub order: usize,
    pub vocab_size: usize,
    pub lines: usize,
    pub checkpoints: Vec<CheckpointEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointEntry {
    pub lines: usize,
    pub model: PathBuf,
}

fn train_lm(a: &mut TrainLmArgs) -> Result<PathBuf> {
    let corpus = load_corpus(&a.corpus)?;
    let lines = select_lines(&a.corpus, &corpus, &mut a.lang)?;
    let tok = load_tokenizer(&a.tokenizer)?;
    let ids: Vec<_> = lines.iter().map(|l| tok.encode(l)).collect();
    let series = train_checkpoints(&ids, a.order, tok.vocab_size(), a.checkpoint_every)?;
    let mut checkpoints = Vec::new();
    for (n, model) in series.checkpoints() {
        let file = PathBuf::from(format!("lm-{n}.json"));
        save_ngram(&a.out_dir.join(&file), model)?;
        checkpoints.push(CheckpointEntry { lines: *n, model: file });
    }
    let index = CheckpointIndex {
        order: a.order,
        vocab_size: tok.vocab_size(),
        lines: lines.len(),
        checkpoints,
    };
    write_json(&a.out_dir.join("checkpoints.json"), &index)?;
    Ok(a.out_dir.join("config.json"))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} worker threads: {e}")))
}

fn score(a: &mut ScoreArgs) -> Result<PathBuf> {
    let model = load_ngram(&a.model)?;
    let tok = load_tokenizer(&a.tokenizer)?;
    let lines = read_lines(&a.input)?;
    let (lang, with_ranks) = (a.lang, !a.no_ranks);
    let records = thread_pool(a.jobs)?.install(|| {
        lines
            .par_iter()
            .enumerate()
            .map(|(i, line)| score_sequence(&model, &tok, line).map(|s| s.into_record(lang, i as u64, with_ranks)))
            .collect::<std::result::Result<Vec<_>, _>>()
    })?;
    let set = ScoreSet::new(records, a.input.display().to_string())?;
    let mut buf = Vec::new();
    export_scores(&set, &mut buf).map_err(Error::io(&a.out))?;
    write_file(&a.out, &buf)?;
    Ok(echo_path_for(&a.out))
}

fn ingest_mode(lenient: bool) -> IngestMode {
    if lenient {
        IngestMode::Lenient
    } else {
        IngestMode::Strict
    }
}

/// Split `KEY=VALUE`; a bare value has no key. Keys never contain path
/// separators, so paths with `=` in a directory name still work.
fn split_key(arg: &str) -> (Option<&str>, &str) {
    match arg.split_once('=') {
        Some((k, v)) if !k.is_empty() && !k.contains(['/', '\\']) => (Some(k), v),
        _ => (None, arg),
    }
}

fn metrics(a: &mut MetricsArgs) -> Result<PathBuf> {
    let json = a.json.get_or_insert_with(|| a.out.with_extension("json")).clone();
    if json == a.out {
        return Err(Error::Usage("--json must differ from --out".into()));
    }
    let mut sets = Vec::new();
    let mut notes = Vec::new();
    for arg in &a.scores {
        let (ckpt, path) = split_key(arg);
        let checkpoint = match ckpt {
            Some(c) => c
                .parse::<u64>()
                .map_err(|_| Error::Usage(format!("--scores {arg}: checkpoint must be a non-negative integer")))?,
            None => 0,
        };
        let set = ingest_file(Path::new(path), ingest_mode(a.lenient))?;
        if !set.mrr_available() {
            notes.push(format!("MRR unavailable for {path}: records carry no ranks"));
        }
        sets.push((checkpoint, set));
    }
    let aggregation = if a.micro {
        Aggregation::Micro
    } else {
        Aggregation::Macro
    };
    let refs: Vec<(u64, &ScoreSet)> = sets.iter().map(|(c, s)| (*c, s)).collect();
    let report = MetricReport::evaluate(&refs, Some(a.english), aggregation)?;
    for n in &notes {
        eprintln!("note: {n}");
    }
    MetricTable::from_report(&report, notes).write(&a.out, &json)?;
    Ok(echo_path_for(&a.out))
}

fn consistency(a: &mut ConsistencyArgs) -> Result<PathBuf> {
    let mode = ingest_mode(a.lenient);
    let source = ingest_file(&a.source, mode)?;
    let mut paraphrases = Vec::new();
    for arg in &a.paraphrase {
        let (name, path) = split_key(arg);
        let path = Path::new(path);
        let name = match name {
            Some(n) => n.to_string(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Usage(format!("--paraphrase {arg}: no file name")))?,
        };
        paraphrases.push((name, ingest_file(path, mode)?));
    }
    let refs: Vec<(String, &ScoreSet)> = paraphrases.iter().map(|(n, s)| (n.clone(), s)).collect();
    let options = ConsistencyOptions { allow_ppl: a.allow_ppl };
    let report = run_consistency(&source, &refs, a.metric, options)?;
    ConsistencyDoc::new(&report).write(&a.out)?;
    if let Some(fig) = &a.figure_data {
        write_file(fig, figure_data_csv(&report).as_bytes())?;
    }
    Ok(echo_path_for(&a.out))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn report(a: &mut ReportArgs) -> Result<PathBuf> {
    if a.metrics.is_empty() && a.consistency.is_empty() {
        return Err(Error::Usage("report needs --metrics or --consistency".into()));
    }
    let metrics = a
        .metrics
        .iter()
        .map(|p| Ok((stem(p), MetricTable::read_json(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let consistency = a
        .consistency
        .iter()
        .map(|p| Ok((stem(p), ConsistencyDoc::read(p)?)))
        .collect::<Result<Vec<_>>>()?;
    write_file(&a.out, markdown_report(&metrics, &consistency).as_bytes())?;
    Ok(echo_path_for(&a.out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Command, clap::Error> {
        let argv = std::iter::once("parcomp").chain(args.iter().copied());
        Cli::try_parse_from(argv).map(|c| c.command)
    }

    #[test]
    fn defaults_are_as_documented() {
        let Command::TrainLm(a) = parse(&[
            "train-lm",
            "--corpus",
            "c.json",
            "--tokenizer",
            "t.json",
            "--out-dir",
            "o",
        ])
        .unwrap() else {
            panic!()
        };
        assert_eq!((a.order, a.checkpoint_every), (3, 1000));
        let Command::Split(a) = parse(&["split", "--corpus", "c.json", "--out-dir", "o", "--seed", "7"]).unwrap()
        else {
            panic!()
        };
        assert_eq!(a.dev_fraction, 0.10);
        assert_eq!(a.seed, 7);
        let Command::Consistency(a) = parse(&[
            "consistency",
            "--source",
            "s",
            "--paraphrase",
            "a",
            "--paraphrase",
            "b",
            "--out",
            "r.json",
        ])
        .unwrap() else {
            panic!()
        };
        assert_eq!(a.metric, Metric::Nll);
    }

    #[test]
    fn usage_errors_are_exit_2() {
        for bad in [
            &["metrics", "--out", "m.csv"][..],
            &[
                "consistency",
                "--source",
                "s",
                "--paraphrase",
                "a",
                "--metric",
                "bleu",
                "--out",
                "r",
            ],
            &["score", "--bogus"],
            &["frobnicate"],
        ] {
            assert_eq!(parse(bad).unwrap_err().exit_code(), 2, "{bad:?}");
        }
    }

    #[test]
    fn echo_roundtrips_and_omits_jobs() {
        let cmd = parse(&[
            "score",
            "--model",
            "m.json",
            "--tokenizer",
            "t.json",
            "--input",
            "x.txt",
            "--lang",
            "deu",
            "--out",
            "s.jsonl",
            "--jobs",
            "8",
        ])
        .unwrap();
        let json = serde_json::to_string(&cmd).unwrap();
        assert!(json.starts_with("{\"subcommand\":\"score\""), "{json}");
        assert!(!json.contains("jobs"));
        let back: Command = serde_json::from_str(&json).unwrap();
        let Command::Score(s) = back else { panic!() };
        assert_eq!(s.jobs, 1);
        assert_eq!(s.lang.as_str(), "deu");
        assert!(serde_json::from_str::<Command>(&json.replace("\"no_ranks\"", "\"extra\":1,\"no_ranks\"")).is_err());
    }

    #[test]
    fn key_splitting() {
        assert_eq!(split_key("1000=a/b.jsonl"), (Some("1000"), "a/b.jsonl"));
        assert_eq!(split_key("a/b=c.jsonl"), (None, "a/b=c.jsonl"));
        assert_eq!(split_key("x.jsonl"), (None, "x.jsonl"));
        assert_eq!(
            echo_path_for(Path::new("out/m.csv")),
            PathBuf::from("out/m.csv.config.json")
        );
    }
}
