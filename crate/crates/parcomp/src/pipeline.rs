//! The `pipeline` command: every stage in order, driven by a manifest.
//!
//! ```json
//! {
//!   "corpus": "corpus.json",
//!   "paraphrases": "paraphrases.json",
//!   "english": "eng",
//!   "order": 3,
//!   "checkpoint_every": 1000,
//!   "metrics": ["nll", "bpc", "mrr"]
//! }
//! ```
//!
//! Paths are relative to the manifest. `bitexts` (plus an optional `pivot`)
//! may replace `corpus`. Each stage writes its artifacts and config echo
//! under the output directory exactly as the stand-alone command would.

use std::path::{Path, PathBuf};

use clap::Args;
use parcomp_core::corpus::LanguageCode;
use parcomp_core::metrics::Metric;
use parcomp_core::ngram::DEFAULT_ORDER;
use serde::{Deserialize, Serialize};

use crate::cli::{
    run, AlignArgs, CheckpointIndex, Command, ConsistencyArgs, MetricsArgs, ReportArgs, ScoreArgs, SplitArgs,
    TrainLmArgs, TrainTokenizerArgs, DEFAULT_CHECKPOINT_EVERY, DEFAULT_DEV_FRACTION, SEED_ENV,
};
use crate::corpus_io::{read_json, resolve, CorpusManifest, ParaphraseManifest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Overrides the manifest's seed.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads for scoring. Outputs do not depend on it.
    #[arg(long, default_value_t = 1)]
    #[serde(skip, default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

fn default_english() -> LanguageCode {
    "eng".parse().expect("valid code")
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

fn default_every() -> usize {
    DEFAULT_CHECKPOINT_EVERY
}

fn default_fraction() -> f64 {
    DEFAULT_DEV_FRACTION
}

fn default_metrics() -> Vec<String> {
    ["nll", "bpc", "mrr"].map(String::from).to_vec()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineManifest {
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub bitexts: Option<PathBuf>,
    #[serde(default)]
    pub pivot: Option<LanguageCode>,
    /// Languages to model. Defaults to all corpus languages.
    #[serde(default)]
    pub languages: Vec<LanguageCode>,
    #[serde(default = "default_english")]
    pub english: LanguageCode,
    #[serde(default)]
    pub paraphrases: Option<PathBuf>,
    /// Per-language tokenizer size; 32000 when omitted.
    #[serde(default)]
    pub vocab_size: Option<usize>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_fraction")]
    pub dev_fraction: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Consistency metrics.
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default = "yes")]
    pub ranks: bool,
    #[serde(default)]
    pub micro: bool,
}

fn last_model(index_path: &Path) -> Result<PathBuf> {
    let index: CheckpointIndex = read_json(index_path)?;
    let last = index
        .checkpoints
        .last()
        .ok_or_else(|| Error::format(index_path, "no checkpoints"))?;
    Ok(resolve(index_path, &last.model))
}

pub(crate) fn run_pipeline(a: &mut PipelineArgs) -> Result<PathBuf> {
    let m: PipelineManifest = read_json(&a.manifest)?;
    let seed = *a.seed.get_or_insert(m.seed.unwrap_or(0));
    let out = a.out_dir.clone();
    let metrics = m
        .metrics
        .iter()
        .map(|s| Metric::parse(s).ok_or_else(|| Error::format(&a.manifest, format!("unknown metric {s:?}"))))
        .collect::<Result<Vec<_>>>()?;

    let corpus = match (&m.corpus, &m.bitexts) {
        (Some(c), None) => resolve(&a.manifest, c),
        (None, Some(b)) => {
            let dir = out.join("aligned");
            run(Command::Align(AlignArgs {
                bitexts: resolve(&a.manifest, b),
                pivot: m.pivot,
                out_dir: dir.clone(),
            }))?;
            dir.join("corpus.json")
        }
        _ => {
            return Err(Error::format(
                &a.manifest,
                "exactly one of \"corpus\" and \"bitexts\" is required",
            ))
        }
    };

    let split_dir = out.join("split");
    run(Command::Split(SplitArgs {
        corpus,
        dev_fraction: m.dev_fraction,
        seed,
        out_dir: split_dir.clone(),
    }))?;
    let train = split_dir.join("train").join("corpus.json");
    let dev = split_dir.join("dev");
    let languages = if m.languages.is_empty() {
        let manifest: CorpusManifest = read_json(&train)?;
        manifest.languages.iter().map(|l| l.code).collect()
    } else {
        m.languages.clone()
    };

    let mut scores = Vec::new();
    for &lang in &languages {
        let tokenizer = out.join("tokenizer").join(format!("{lang}.json"));
        run(Command::TrainTokenizer(TrainTokenizerArgs {
            corpus: train.clone(),
            lang: vec![lang],
            vocab_size: m.vocab_size,
            out: tokenizer.clone(),
        }))?;
        let lm_dir = out.join("lm").join(lang.as_str());
        run(Command::TrainLm(TrainLmArgs {
            corpus: train.clone(),
            lang: vec![lang],
            tokenizer: tokenizer.clone(),
            order: m.order,
            checkpoint_every: m.checkpoint_every,
            out_dir: lm_dir.clone(),
        }))?;
        let index_path = lm_dir.join("checkpoints.json");
        let index: CheckpointIndex = read_json(&index_path)?;
        for ckpt in &index.checkpoints {
            let path = out
                .join("scores")
                .join(lang.as_str())
                .join(format!("dev.{}.jsonl", ckpt.lines));
            run(Command::Score(ScoreArgs {
                model: lm_dir.join(&ckpt.model),
                tokenizer: tokenizer.clone(),
                input: dev.join(format!("{lang}.txt")),
                lang,
                no_ranks: !m.ranks,
                out: path.clone(),
                jobs: a.jobs,
            }))?;
            scores.push(format!("{}={}", ckpt.lines, path.display()));
        }
    }

    let metrics_csv = out.join("metrics.csv");
    run(Command::Metrics(MetricsArgs {
        scores,
        english: m.english,
        micro: m.micro,
        lenient: false,
        out: metrics_csv.clone(),
        json: None,
    }))?;

    let mut reports = Vec::new();
    if let Some(p) = &m.paraphrases {
        let para_manifest = resolve(&a.manifest, p);
        let para: ParaphraseManifest = read_json(&para_manifest)?;
        let target = para.target.unwrap_or(LanguageCode::UNDETERMINED);
        let model_for = |lang: LanguageCode| -> Result<(PathBuf, PathBuf)> {
            if !languages.contains(&lang) {
                return Err(Error::format(
                    &para_manifest,
                    format!("no model trained for language {lang}"),
                ));
            }
            Ok((
                last_model(&out.join("lm").join(lang.as_str()).join("checkpoints.json"))?,
                out.join("tokenizer").join(format!("{lang}.json")),
            ))
        };
        let para_dir = out.join("paraphrase");
        let (model, tokenizer) = model_for(para.source.code)?;
        let source = para_dir.join("source.jsonl");
        run(Command::Score(ScoreArgs {
            model,
            tokenizer,
            input: resolve(&para_manifest, &para.source.path),
            lang: para.source.code,
            no_ranks: !m.ranks,
            out: source.clone(),
            jobs: a.jobs,
        }))?;
        let (model, tokenizer) = model_for(target)?;
        let mut splits = Vec::new();
        for s in &para.splits {
            let path = para_dir.join(format!("{}.jsonl", s.name));
            run(Command::Score(ScoreArgs {
                model: model.clone(),
                tokenizer: tokenizer.clone(),
                input: resolve(&para_manifest, &s.path),
                lang: target,
                no_ranks: !m.ranks,
                out: path.clone(),
                jobs: a.jobs,
            }))?;
            splits.push(format!("{}={}", s.name, path.display()));
        }
        for &metric in &metrics {
            let name = metric.name().to_ascii_lowercase();
            let path = out.join("consistency").join(format!("{name}.json"));
            run(Command::Consistency(ConsistencyArgs {
                source: source.clone(),
                paraphrase: splits.clone(),
                metric,
                allow_ppl: metric == Metric::Ppl,
                lenient: false,
                out: path.clone(),
                figure_data: Some(out.join("consistency").join(format!("{name}.figure.csv"))),
            }))?;
            reports.push(path);
        }
    }

    run(Command::Report(ReportArgs {
        metrics: vec![metrics_csv.with_extension("json")],
        consistency: reports,
        out: out.join("report.md"),
    }))?;
    Ok(out.join("config.json"))
}
