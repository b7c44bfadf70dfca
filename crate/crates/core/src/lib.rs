//! Intrinsic language-model evaluation over multi-parallel corpora.
//!
//! The crate is `no_std` (with `alloc`) and holds the algorithmic parts of the
//! toolkit:
//!
//! - [`corpus`]: language codes, parallel corpora, pivot alignment of bitexts
//!   and seeded dev splits.
//! - [`tokenizer`]: a deterministic byte-fallback BPE tokenizer.
//! - [`ngram`]: an interpolated Witten-Bell n-gram scorer producing full
//!   next-token distributions, per-token log-probabilities and ranks.
//! - [`records`]: the model-agnostic score record types every scorer feeds.
//! - [`metrics`]: NLL, PPL, BPC, total bits, BPEC, IP and MRR.
//! - [`consistency`]: sample-level and split-level paraphrase consistency.
//!
//! File formats, IO and the command-line pipeline live in the `parcomp` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod consistency;
pub mod corpus;
pub mod metrics;
pub mod ngram;
pub mod records;
pub mod rng;
pub mod text;
pub mod tokenizer;

pub use consistency::{ConsistencyReport, SampleVerdict, SplitSummary, Verdict};
pub use corpus::{Bitext, LanguageCode, ParallelCorpus, ParaphraseSet};
pub use metrics::{Aggregation, Metric, MetricReport, MetricValue};
pub use ngram::{CheckpointSeries, NGramModel, TokenScores};
pub use records::{ScoreSet, ScoredSequence};
pub use tokenizer::TokenizerModel;
