//! Interpolated Witten-Bell n-gram scorer over token ids.
//!
//! Lines are wrapped as `bos w_1 .. w_S eos`; every position after bos is a
//! prediction. For a context `c` of length `k` with `N(c)` successor tokens
//! and `T(c)` distinct successors,
//!
//! ```text
//! P_k(w | c) = (count(c, w) + T(c) * P_{k-1}(w | c')) / (N(c) + T(c))
//! ```
//!
//! where `c'` drops the oldest token of `c` and `P_{-1}` is uniform over the
//! vocabulary. Contexts never seen in training pass the lower-order
//! distribution through unchanged.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::LanguageCode;
use crate::records::ScoredSequence;
use crate::text::{char_count, nfc};
use crate::tokenizer::{self, TokenId, TokenizerModel};

/// Default n-gram order.
pub const DEFAULT_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NGramError {
    #[error("n-gram order must be at least 1")]
    OrderTooSmall,
    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: TokenId, vocab_size: usize },
    #[error("cannot score empty text")]
    EmptyText,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("checkpoint interval must be at least 1 line")]
    ZeroInterval,
    #[error("tokenizer has {tokenizer} tokens but the model was trained for {model}")]
    VocabMismatch { tokenizer: usize, model: usize },
    #[error("invalid count table: {0}")]
    InvalidCounts(String),
}

/// Successor counts of one context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextCounts {
    total: u64,
    successors: BTreeMap<TokenId, u64>,
}

impl ContextCounts {
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct successors, `T(c)`.
    pub fn distinct(&self) -> usize {
        self.successors.len()
    }

    pub fn successors(&self) -> &BTreeMap<TokenId, u64> {
        &self.successors
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramModel {
    order: usize,
    vocab_size: usize,
    bos: TokenId,
    eos: TokenId,
    tokens_seen: u64,
    contexts: BTreeMap<Vec<TokenId>, ContextCounts>,
}

impl NGramModel {
    /// Untrained model over the tokenizer's id layout (bos 256, eos 257).
    pub fn new(order: usize, vocab_size: usize) -> Result<Self, NGramError> {
        Self::with_specials(order, vocab_size, tokenizer::BOS, tokenizer::EOS)
    }

    /// Untrained model over an arbitrary vocabulary with the given specials.
    pub fn with_specials(order: usize, vocab_size: usize, bos: TokenId, eos: TokenId) -> Result<Self, NGramError> {
        if order < 1 {
            return Err(NGramError::OrderTooSmall);
        }
        for id in [bos, eos] {
            if id as usize >= vocab_size {
                return Err(NGramError::TokenOutOfRange { id, vocab_size });
            }
        }
        Ok(Self {
            order,
            vocab_size,
            bos,
            eos,
            tokens_seen: 0,
            contexts: BTreeMap::new(),
        })
    }

    /// Rebuild from stored count tables. Totals are recomputed from the
    /// successor counts.
    pub fn from_counts(
        order: usize,
        vocab_size: usize,
        bos: TokenId,
        eos: TokenId,
        tokens_seen: u64,
        contexts: impl IntoIterator<Item = (Vec<TokenId>, BTreeMap<TokenId, u64>)>,
    ) -> Result<Self, NGramError> {
        let mut model = Self::with_specials(order, vocab_size, bos, eos)?;
        model.tokens_seen = tokens_seen;
        for (ctx, successors) in contexts {
            if ctx.len() >= order {
                return Err(NGramError::InvalidCounts(alloc::format!(
                    "context of length {} in an order-{order} model",
                    ctx.len()
                )));
            }
            for &id in ctx.iter().chain(successors.keys()) {
                model.check_id(id)?;
            }
            if successors.is_empty() || successors.values().any(|&n| n == 0) {
                return Err(NGramError::InvalidCounts("context with zero counts".into()));
            }
            let total = successors.values().sum();
            model.contexts.insert(ctx, ContextCounts { total, successors });
        }
        Ok(model)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn bos(&self) -> TokenId {
        self.bos
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    /// Number of predicted positions seen in training (eos included).
    pub fn tokens_seen(&self) -> u64 {
        self.tokens_seen
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&[TokenId], &ContextCounts)> {
        self.contexts.iter().map(|(c, n)| (c.as_slice(), n))
    }

    fn check_id(&self, id: TokenId) -> Result<(), NGramError> {
        if (id as usize) < self.vocab_size {
            Ok(())
        } else {
            Err(NGramError::TokenOutOfRange {
                id,
                vocab_size: self.vocab_size,
            })
        }
    }

    /// Add one line of token ids (without bos/eos) to the counts.
    pub fn observe(&mut self, line: &[TokenId]) -> Result<(), NGramError> {
        for &id in line {
            self.check_id(id)?;
        }
        let seq = self.wrap(line);
        for t in 1..seq.len() {
            let w = seq[t];
            for k in 0..self.order.min(t + 1) {
                let entry = self.contexts.entry(seq[t - k..t].to_vec()).or_default();
                entry.total += 1;
                *entry.successors.entry(w).or_default() += 1;
            }
            self.tokens_seen += 1;
        }
        Ok(())
    }

    fn wrap(&self, line: &[TokenId]) -> Vec<TokenId> {
        let mut seq = Vec::with_capacity(line.len() + 2);
        seq.push(self.bos);
        seq.extend_from_slice(line);
        seq.push(self.eos);
        seq
    }

    /// Dense `P(· | context)` over the whole vocabulary. Only the last
    /// `order - 1` context tokens are used.
    pub fn next_token_distribution(&self, context: &[TokenId]) -> Result<Vec<f64>, NGramError> {
        for &id in context {
            self.check_id(id)?;
        }
        let keep = context.len().min(self.order - 1);
        let ctx = &context[context.len() - keep..];
        let mut p = vec![1.0 / self.vocab_size as f64; self.vocab_size];
        let mut updated: Vec<(usize, f64)> = Vec::new();
        for k in 0..=keep {
            let Some(counts) = self.contexts.get(&ctx[keep - k..]) else {
                continue;
            };
            let t = counts.successors.len() as f64;
            let denom = counts.total as f64 + t;
            updated.clear();
            updated.extend(
                counts
                    .successors
                    .iter()
                    .map(|(&w, &n)| (w as usize, (n as f64 + t * p[w as usize]) / denom)),
            );
            for x in p.iter_mut() {
                *x = t * *x / denom;
            }
            for &(w, v) in &updated {
                p[w] = v;
            }
        }
        Ok(p)
    }

    /// Natural-log probabilities and ranks of every predicted position of a
    /// wrapped line (each token and the final eos).
    ///
    /// Rank order is probability descending, then token id ascending.
    pub fn score_ids(&self, line: &[TokenId]) -> Result<(Vec<f64>, Vec<u64>), NGramError> {
        for &id in line {
            self.check_id(id)?;
        }
        let seq = self.wrap(line);
        let mut logprobs = Vec::with_capacity(seq.len() - 1);
        let mut ranks = Vec::with_capacity(seq.len() - 1);
        for t in 1..seq.len() {
            let dist = self.next_token_distribution(&seq[..t])?;
            let w = seq[t] as usize;
            let pw = dist[w];
            logprobs.push(libm::log(pw));
            ranks.push(rank_of(&dist, w));
        }
        Ok((logprobs, ranks))
    }
}

/// 1 + number of tokens ahead of `w` under (probability desc, id asc).
pub fn rank_of(dist: &[f64], w: usize) -> u64 {
    let pw = dist[w];
    let ahead = dist
        .iter()
        .enumerate()
        .filter(|&(v, &pv)| pv > pw || (pv == pw && v < w))
        .count();
    1 + ahead as u64
}

/// Train on token lines (each without bos/eos).
pub fn train_ngram<L: AsRef<[TokenId]>>(
    lines: &[L],
    order: usize,
    vocab_size: usize,
) -> Result<NGramModel, NGramError> {
    let mut model = NGramModel::new(order, vocab_size)?;
    for line in lines {
        model.observe(line.as_ref())?;
    }
    Ok(model)
}

/// Per-token scores of one sentence, before it is tied to a language and
/// sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenScores {
    pub token_ids: Vec<TokenId>,
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
    pub ranks: Vec<u64>,
    pub char_count: u64,
}

impl TokenScores {
    pub fn into_record(self, lang: LanguageCode, sample_id: u64, with_ranks: bool) -> ScoredSequence {
        ScoredSequence {
            lang,
            sample_id,
            tokens: self.tokens,
            logprobs: self.logprobs,
            ranks: with_ranks.then_some(self.ranks),
            char_count: self.char_count,
        }
    }
}

/// Tokenize and score one sentence. Positions are every token plus eos.
pub fn score_sequence(model: &NGramModel, tok: &TokenizerModel, text: &str) -> Result<TokenScores, NGramError> {
    if tok.vocab_size() != model.vocab_size() {
        return Err(NGramError::VocabMismatch {
            tokenizer: tok.vocab_size(),
            model: model.vocab_size(),
        });
    }
    let text = nfc(text);
    if text.is_empty() {
        return Err(NGramError::EmptyText);
    }
    let ids = tok.encode(&text);
    let (logprobs, ranks) = model.score_ids(&ids)?;
    let tokens = ids
        .iter()
        .chain(core::iter::once(&model.eos))
        .map(|&id| tok.token_surface(id).expect("id from tokenizer"))
        .collect();
    Ok(TokenScores {
        token_ids: ids,
        tokens,
        logprobs,
        ranks,
        char_count: char_count(&text) as u64,
    })
}

/// Models after every `every` lines plus one on the full corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointSeries {
    checkpoints: Vec<(usize, NGramModel)>,
}

impl CheckpointSeries {
    /// `(lines consumed, model)` in increasing line order.
    pub fn checkpoints(&self) -> &[(usize, NGramModel)] {
        &self.checkpoints
    }

    pub fn last(&self) -> &NGramModel {
        &self.checkpoints.last().expect("non-empty series").1
    }

    pub fn into_inner(self) -> Vec<(usize, NGramModel)> {
        self.checkpoints
    }
}

pub fn train_checkpoints<L: AsRef<[TokenId]>>(
    lines: &[L],
    order: usize,
    vocab_size: usize,
    every: usize,
) -> Result<CheckpointSeries, NGramError> {
    if every == 0 {
        return Err(NGramError::ZeroInterval);
    }
    if lines.is_empty() {
        return Err(NGramError::EmptyCorpus);
    }
    let mut model = NGramModel::new(order, vocab_size)?;
    let mut checkpoints = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        model.observe(line.as_ref())?;
        let consumed = i + 1;
        if consumed % every == 0 || consumed == lines.len() {
            checkpoints.push((consumed, model.clone()));
        }
    }
    Ok(CheckpointSeries { checkpoints })
}
