//! Intrinsic metrics over score records.
//!
//! Per sentence with `S` scored positions and natural-log probabilities
//! `l_t`:
//!
//! - NLL = −(1/S) Σ l_t
//! - PPL = exp(NLL)
//! - BPC = (−Σ l_t / ln 2) / char_count
//! - MRR = (1/S) Σ 1/R_t
//!
//! Corpus values are macro averages over sentences in ascending sample-id
//! order (PPL as exp of the mean NLL). Token-weighted micro averages are
//! available through [`Aggregation::Micro`]. Total bits is the unaveraged sum
//! of code lengths; BPEC and IP relate a language's corpus BPC to English.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;

use crate::corpus::LanguageCode;
use crate::records::{ScoreSet, ScoredSequence};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("MRR unavailable: scores from {provenance} carry no ranks")]
    MrrUnavailable { provenance: String },
    #[error("score set is empty")]
    EmptySet,
    #[error("{0} is not aggregated per sentence; use {1}")]
    NotAggregatable(Metric, &'static str),
    #[error("BPC values must be positive, got target {target} and english {english}")]
    NonPositiveBpc { target: f64, english: f64 },
    #[error("duplicate report row ({checkpoint}, {lang}, {metric})")]
    DuplicateRow {
        checkpoint: u64,
        lang: LanguageCode,
        metric: Metric,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Metric {
    Nll,
    Ppl,
    Bpc,
    TotalBits,
    Bpec,
    Ip,
    Mrr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
    /// Neither end is better; the value is read relative to 1.
    Ratio,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Nll,
        Metric::Ppl,
        Metric::Bpc,
        Metric::TotalBits,
        Metric::Bpec,
        Metric::Ip,
        Metric::Mrr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Nll => "NLL",
            Metric::Ppl => "PPL",
            Metric::Bpc => "BPC",
            Metric::TotalBits => "TOTAL_BITS",
            Metric::Bpec => "BPEC",
            Metric::Ip => "IP",
            Metric::Mrr => "MRR",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Metric::Nll | Metric::Ppl | Metric::Bpc | Metric::TotalBits => Direction::LowerIsBetter,
            Metric::Mrr => Direction::HigherIsBetter,
            Metric::Bpec | Metric::Ip => Direction::Ratio,
        }
    }

    /// Parse a name case-insensitively (`nll`, `TOTAL_BITS`, ...).
    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub metric: Metric,
    pub value: f64,
}

impl MetricValue {
    fn new(metric: Metric, value: f64) -> Self {
        // normalizes -0.0
        Self {
            metric,
            value: value + 0.0,
        }
    }

    pub fn direction(&self) -> Direction {
        self.metric.direction()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Aggregation {
    /// Unweighted mean of per-sentence values.
    #[default]
    Macro,
    /// Token-weighted (character-weighted for BPC) pooling.
    Micro,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Macro => "macro",
            Aggregation::Micro => "micro",
        }
    }
}

fn neg_sum(s: &ScoredSequence) -> f64 {
    -s.logprobs.iter().sum::<f64>()
}

pub fn sequence_nll(s: &ScoredSequence) -> MetricValue {
    MetricValue::new(Metric::Nll, neg_sum(s) / s.len() as f64)
}

pub fn sequence_ppl(s: &ScoredSequence) -> MetricValue {
    MetricValue::new(Metric::Ppl, libm::exp(sequence_nll(s).value))
}

/// Code length of the whole sentence in bits.
pub fn sequence_bits(s: &ScoredSequence) -> f64 {
    neg_sum(s) / LN_2 + 0.0
}

pub fn sequence_bpc(s: &ScoredSequence) -> MetricValue {
    MetricValue::new(Metric::Bpc, sequence_bits(s) / s.char_count as f64)
}

pub fn sequence_mrr(s: &ScoredSequence) -> Result<MetricValue, MetricError> {
    let ranks = s.ranks.as_ref().ok_or_else(|| MetricError::MrrUnavailable {
        provenance: alloc::format!("sample {}", s.sample_id),
    })?;
    let sum: f64 = ranks.iter().map(|&r| 1.0 / r as f64).sum();
    Ok(MetricValue::new(Metric::Mrr, sum / ranks.len() as f64))
}

/// Per-sentence value of NLL, PPL, BPC or MRR.
pub fn sequence_value(s: &ScoredSequence, metric: Metric) -> Result<f64, MetricError> {
    Ok(match metric {
        Metric::Nll => sequence_nll(s).value,
        Metric::Ppl => sequence_ppl(s).value,
        Metric::Bpc => sequence_bpc(s).value,
        Metric::Mrr => sequence_mrr(s)?.value,
        Metric::TotalBits => return Err(MetricError::NotAggregatable(metric, "total_bits")),
        Metric::Bpec | Metric::Ip => return Err(MetricError::NotAggregatable(metric, "relative_bpc")),
    })
}

/// Bits needed to encode every sentence of the set, without averaging.
pub fn total_bits(set: &ScoreSet) -> Result<MetricValue, MetricError> {
    if set.is_empty() {
        return Err(MetricError::EmptySet);
    }
    Ok(MetricValue::new(
        Metric::TotalBits,
        set.records().iter().map(sequence_bits).sum(),
    ))
}

/// `(BPEC, IP)` = (target / english, english / target).
pub fn relative_bpc(target_bpc: f64, english_bpc: f64) -> Result<(MetricValue, MetricValue), MetricError> {
    if !(target_bpc > 0.0 && english_bpc > 0.0) {
        return Err(MetricError::NonPositiveBpc {
            target: target_bpc,
            english: english_bpc,
        });
    }
    Ok((
        MetricValue::new(Metric::Bpec, target_bpc / english_bpc),
        MetricValue::new(Metric::Ip, english_bpc / target_bpc),
    ))
}

/// Corpus-level NLL, PPL, BPC or MRR.
pub fn aggregate(set: &ScoreSet, metric: Metric, aggregation: Aggregation) -> Result<MetricValue, MetricError> {
    if set.is_empty() {
        return Err(MetricError::EmptySet);
    }
    match metric {
        Metric::TotalBits => return Err(MetricError::NotAggregatable(metric, "total_bits")),
        Metric::Bpec | Metric::Ip => return Err(MetricError::NotAggregatable(metric, "relative_bpc")),
        Metric::Mrr if !set.mrr_available() => {
            return Err(MetricError::MrrUnavailable {
                provenance: set.provenance().into(),
            })
        }
        _ => {}
    }
    let records = set.records();
    let value = match aggregation {
        Aggregation::Macro => {
            let per_sentence = if metric == Metric::Ppl { Metric::Nll } else { metric };
            let mut sum = 0.0;
            for r in records {
                sum += sequence_value(r, per_sentence)?;
            }
            let mean = sum / records.len() as f64;
            if metric == Metric::Ppl {
                libm::exp(mean)
            } else {
                mean
            }
        }
        Aggregation::Micro => {
            let tokens: usize = records.iter().map(ScoredSequence::len).sum();
            match metric {
                Metric::Nll | Metric::Ppl => {
                    let nll = records.iter().map(neg_sum).sum::<f64>() / tokens as f64;
                    if metric == Metric::Ppl {
                        libm::exp(nll)
                    } else {
                        nll
                    }
                }
                Metric::Bpc => {
                    let chars: u64 = records.iter().map(|r| r.char_count).sum();
                    records.iter().map(sequence_bits).sum::<f64>() / chars as f64
                }
                Metric::Mrr => {
                    let rr: f64 = records
                        .iter()
                        .flat_map(|r| r.ranks.iter().flatten())
                        .map(|&r| 1.0 / r as f64)
                        .sum();
                    rr / tokens as f64
                }
                _ => unreachable!(),
            }
        }
    };
    Ok(MetricValue::new(metric, value))
}

/// One report line.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportRow {
    pub checkpoint: u64,
    pub lang: LanguageCode,
    pub metric: Metric,
    pub value: f64,
    pub n_sentences: usize,
}

/// Metric values keyed by (checkpoint, language, metric).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    aggregation: Aggregation,
    rows: BTreeMap<(u64, LanguageCode, Metric), ReportRow>,
}

impl MetricReport {
    pub fn new(aggregation: Aggregation) -> Self {
        Self {
            aggregation,
            rows: BTreeMap::new(),
        }
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn insert(&mut self, row: ReportRow) -> Result<(), MetricError> {
        let key = (row.checkpoint, row.lang, row.metric);
        if self.rows.contains_key(&key) {
            return Err(MetricError::DuplicateRow {
                checkpoint: row.checkpoint,
                lang: row.lang,
                metric: row.metric,
            });
        }
        self.rows.insert(key, row);
        Ok(())
    }

    /// Rows ordered by (checkpoint, lang, metric).
    pub fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.values()
    }

    pub fn get(&self, checkpoint: u64, lang: LanguageCode, metric: Metric) -> Option<f64> {
        self.rows.get(&(checkpoint, lang, metric)).map(|r| r.value)
    }

    /// Evaluate score sets, each tagged with its checkpoint.
    ///
    /// Every set gets NLL, PPL, BPC and total bits, plus MRR when ranks are
    /// present. With `english` given, sets at a checkpoint that also has an
    /// English set additionally get BPEC and IP from the two corpus BPCs.
    pub fn evaluate(
        sets: &[(u64, &ScoreSet)],
        english: Option<LanguageCode>,
        aggregation: Aggregation,
    ) -> Result<Self, MetricError> {
        let mut report = Self::new(aggregation);
        for &(checkpoint, set) in sets {
            let lang = set.lang().ok_or(MetricError::EmptySet)?;
            let n = set.len();
            let mut push = |v: MetricValue| {
                report.insert(ReportRow {
                    checkpoint,
                    lang,
                    metric: v.metric,
                    value: v.value,
                    n_sentences: n,
                })
            };
            for metric in [Metric::Nll, Metric::Ppl, Metric::Bpc] {
                push(aggregate(set, metric, aggregation)?)?;
            }
            push(total_bits(set)?)?;
            if set.mrr_available() {
                push(aggregate(set, Metric::Mrr, aggregation)?)?;
            }
        }
        if let Some(en) = english {
            let mut extra = Vec::new();
            for row in report.rows().filter(|r| r.metric == Metric::Bpc) {
                if let Some(en_bpc) = report.get(row.checkpoint, en, Metric::Bpc) {
                    let (bpec, ip) = relative_bpc(row.value, en_bpc)?;
                    for v in [bpec, ip] {
                        extra.push(ReportRow {
                            metric: v.metric,
                            value: v.value,
                            ..row.clone()
                        });
                    }
                }
            }
            for row in extra {
                report.insert(row)?;
            }
        }
        Ok(report)
    }
}
