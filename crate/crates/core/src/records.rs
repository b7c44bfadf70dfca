//! Score records: the interchange between any scorer and the metric and
//! consistency engines.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::LanguageCode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("sample {sample_id}: {field} has {found} entries, tokens has {expected}")]
    LengthMismatch {
        sample_id: u64,
        field: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("sample {sample_id}: record has no tokens")]
    NoTokens { sample_id: u64 },
    #[error("sample {sample_id}: logprobs[{index}] = {value} is not a finite value <= 0")]
    BadLogprob { sample_id: u64, index: usize, value: f64 },
    #[error("sample {sample_id}: ranks[{index}] is 0, ranks start at 1")]
    ZeroRank { sample_id: u64, index: usize },
    #[error("sample {sample_id}: char_count must be at least 1")]
    ZeroCharCount { sample_id: u64 },
    #[error("duplicate sample_id {0}")]
    DuplicateSample(u64),
    #[error("missing sample_id {0}")]
    MissingSample(u64),
    #[error("mixed languages: {expected} and {found}")]
    MixedLanguages {
        expected: LanguageCode,
        found: LanguageCode,
    },
}

/// Per-token scores of one sentence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredSequence {
    pub lang: LanguageCode,
    pub sample_id: u64,
    /// Token surface strings, for inspection only.
    pub tokens: Vec<String>,
    /// Natural-log probability of each token given its prefix.
    pub logprobs: Vec<f64>,
    /// 1-based rank of each true token in the predicted ordering.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub ranks: Option<Vec<u64>>,
    /// NFC character count of the raw sentence.
    pub char_count: u64,
}

impl ScoredSequence {
    pub fn validate(&self) -> Result<(), RecordError> {
        let sample_id = self.sample_id;
        let s = self.tokens.len();
        if s == 0 {
            return Err(RecordError::NoTokens { sample_id });
        }
        if self.logprobs.len() != s {
            return Err(RecordError::LengthMismatch {
                sample_id,
                field: "logprobs",
                found: self.logprobs.len(),
                expected: s,
            });
        }
        if let Some((index, &value)) = self
            .logprobs
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v <= 0.0))
        {
            return Err(RecordError::BadLogprob {
                sample_id,
                index,
                value,
            });
        }
        if let Some(ranks) = &self.ranks {
            if ranks.len() != s {
                return Err(RecordError::LengthMismatch {
                    sample_id,
                    field: "ranks",
                    found: ranks.len(),
                    expected: s,
                });
            }
            if let Some(index) = ranks.iter().position(|&r| r == 0) {
                return Err(RecordError::ZeroRank { sample_id, index });
            }
        }
        if self.char_count == 0 {
            return Err(RecordError::ZeroCharCount { sample_id });
        }
        Ok(())
    }

    /// Number of scored positions, `S`.
    pub fn len(&self) -> usize {
        self.logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logprobs.is_empty()
    }
}

/// Validated records of one language with sample ids `0..N`, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    lang: Option<LanguageCode>,
    records: Vec<ScoredSequence>,
    provenance: String,
}

impl ScoreSet {
    /// Validate, then sort by sample id. Ids must be exactly `0..N`.
    pub fn new(mut records: Vec<ScoredSequence>, provenance: impl Into<String>) -> Result<Self, RecordError> {
        for r in &records {
            r.validate()?;
        }
        let lang = records.first().map(|r| r.lang);
        if let Some(expected) = lang {
            if let Some(r) = records.iter().find(|r| r.lang != expected) {
                return Err(RecordError::MixedLanguages {
                    expected,
                    found: r.lang,
                });
            }
        }
        records.sort_by_key(|r| r.sample_id);
        for w in records.windows(2) {
            if w[0].sample_id == w[1].sample_id {
                return Err(RecordError::DuplicateSample(w[0].sample_id));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.sample_id != i as u64 {
                return Err(RecordError::MissingSample(i as u64));
            }
        }
        Ok(Self {
            lang,
            records,
            provenance: provenance.into(),
        })
    }

    /// `None` only for the empty set.
    pub fn lang(&self) -> Option<LanguageCode> {
        self.lang
    }

    pub fn records(&self) -> &[ScoredSequence] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ScoredSequence> {
        self.records
    }

    /// Scorer id, checkpoint or source file of the records.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when every record carries ranks, i.e. MRR can be computed.
    pub fn mrr_available(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.ranks.is_some())
    }
}
