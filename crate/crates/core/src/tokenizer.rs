//! Byte-fallback BPE.
//!
//! Ids `0..=255` are the raw bytes, `256` is bos, `257` is eos, and every
//! merge appends one id starting at `258`. Text is cut into units before
//! merging (see [`pre_tokenize`]); merges never cross unit boundaries.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write as _;

pub type TokenId = u32;

pub const BOS: TokenId = 256;
pub const EOS: TokenId = 257;
/// Size of the untrained vocabulary: 256 bytes plus bos and eos.
pub const BASE_VOCAB_SIZE: usize = 258;
/// Vocabulary size for one-language tokenizers.
pub const DEFAULT_MONO_VOCAB_SIZE: usize = 32_000;
/// Vocabulary size for tokenizers shared by all languages of a corpus.
pub const DEFAULT_MULTI_VOCAB_SIZE: usize = 150_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizerError {
    #[error("vocab size {0} is below the {BASE_VOCAB_SIZE} base tokens")]
    VocabTooSmall(usize),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("unknown token id {id} (vocabulary has {vocab_size} tokens)")]
    UnknownId { id: TokenId, vocab_size: usize },
    #[error("decoded bytes are not valid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("merge {index} refers to id {id}, which does not exist yet")]
    BadMerge { index: usize, id: TokenId },
}

/// A trained tokenizer: the ordered merge list and the id → bytes table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerModel {
    vocab: Vec<Vec<u8>>,
    merges: Vec<(TokenId, TokenId)>,
    ranks: BTreeMap<(TokenId, TokenId), u32>,
}

impl Default for TokenizerModel {
    fn default() -> Self {
        Self::untrained()
    }
}

impl TokenizerModel {
    /// The 258-token byte tokenizer.
    pub fn untrained() -> Self {
        let mut vocab: Vec<Vec<u8>> = (0..=255u8).map(|b| alloc::vec![b]).collect();
        vocab.push(Vec::new());
        vocab.push(Vec::new());
        Self {
            vocab,
            merges: Vec::new(),
            ranks: BTreeMap::new(),
        }
    }

    /// Rebuild a model from its merge list.
    pub fn from_merges(merges: Vec<(TokenId, TokenId)>) -> Result<Self, TokenizerError> {
        let mut model = Self::untrained();
        for (index, (a, b)) in merges.into_iter().enumerate() {
            let next = model.vocab.len() as TokenId;
            for id in [a, b] {
                if id >= next || id == BOS || id == EOS {
                    return Err(TokenizerError::BadMerge { index, id });
                }
            }
            model.push_merge(a, b);
        }
        Ok(model)
    }

    fn push_merge(&mut self, a: TokenId, b: TokenId) -> TokenId {
        let id = self.vocab.len() as TokenId;
        let mut bytes = self.vocab[a as usize].clone();
        bytes.extend_from_slice(&self.vocab[b as usize]);
        self.vocab.push(bytes);
        self.ranks.insert((a, b), self.merges.len() as u32);
        self.merges.push((a, b));
        id
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    /// Byte string of a token; bos and eos are empty.
    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.vocab.get(id as usize).map(Vec::as_slice)
    }

    /// Encode text to token ids. No bos/eos is added.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(text.len());
        for unit in pre_tokenize(text) {
            self.encode_unit(unit.as_bytes(), &mut out);
        }
        out
    }

    fn encode_unit(&self, bytes: &[u8], out: &mut Vec<TokenId>) {
        let mut ids: Vec<TokenId> = bytes.iter().map(|&b| TokenId::from(b)).collect();
        while ids.len() > 1 {
            let best = ids
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0], w[1])).map(|&r| (r, (w[0], w[1]))))
                .min();
            let Some((rank, pair)) = best else { break };
            merge_pair(&mut ids, pair, BASE_VOCAB_SIZE as TokenId + rank);
        }
        out.extend_from_slice(&ids);
    }

    /// Concatenate token bytes and read them as UTF-8.
    pub fn decode(&self, ids: &[TokenId]) -> Result<String, TokenizerError> {
        let mut bytes = Vec::new();
        for &id in ids {
            let t = self.token_bytes(id).ok_or(TokenizerError::UnknownId {
                id,
                vocab_size: self.vocab.len(),
            })?;
            bytes.extend_from_slice(t);
        }
        String::from_utf8(bytes).map_err(|e| TokenizerError::InvalidUtf8 {
            offset: e.utf8_error().valid_up_to(),
        })
    }

    /// Printable surface form of a token for score records: spaces shown as
    /// `▁`, bytes that are not valid UTF-8 on their own as `<0xNN>`, and the
    /// specials as `<s>` / `</s>`.
    pub fn token_surface(&self, id: TokenId) -> Option<String> {
        match id {
            BOS => return Some("<s>".into()),
            EOS => return Some("</s>".into()),
            _ => {}
        }
        let bytes = self.token_bytes(id)?;
        let mut s = String::with_capacity(bytes.len());
        for chunk in bytes.utf8_chunks() {
            for c in chunk.valid().chars() {
                s.push(if c == ' ' { '\u{2581}' } else { c });
            }
            for b in chunk.invalid() {
                let _ = write!(s, "<0x{b:02X}>");
            }
        }
        Some(s)
    }
}

/// Replace every left-to-right, non-overlapping occurrence of `pair`.
fn merge_pair(ids: &mut Vec<TokenId>, pair: (TokenId, TokenId), new_id: TokenId) {
    let mut w = 0;
    let mut r = 0;
    while r < ids.len() {
        if r + 1 < ids.len() && ids[r] == pair.0 && ids[r + 1] == pair.1 {
            ids[w] = new_id;
            r += 2;
        } else {
            ids[w] = ids[r];
            r += 1;
        }
        w += 1;
    }
    ids.truncate(w);
}

/// Split text into merge units.
///
/// A unit is a maximal run of non-whitespace characters, optionally preceded
/// by one ASCII space; every other whitespace character is a unit of its own.
/// The units concatenate back to the input.
pub fn pre_tokenize(text: &str) -> PreTokens<'_> {
    PreTokens { rest: text }
}

#[derive(Debug, Clone)]
pub struct PreTokens<'a> {
    rest: &'a str,
}

impl<'a> Iterator for PreTokens<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let mut chars = self.rest.char_indices();
        let (_, first) = chars.next()?;
        let end = if first.is_whitespace() {
            let attaches = first == ' ' && self.rest[1..].chars().next().is_some_and(|c| !c.is_whitespace());
            if attaches {
                1 + run_end(&self.rest[1..])
            } else {
                first.len_utf8()
            }
        } else {
            run_end(self.rest)
        };
        let (unit, rest) = self.rest.split_at(end);
        self.rest = rest;
        Some(unit)
    }
}

fn run_end(s: &str) -> usize {
    s.char_indices()
        .find(|(_, c)| c.is_whitespace())
        .map_or(s.len(), |(i, _)| i)
}

#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Vec<u8>,
    right: Vec<u8>,
    pair: (TokenId, TokenId),
}

impl Ord for Candidate {
    // Highest count first; among equal counts the lexicographically
    // smallest (left, right) byte strings come out first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| (&other.left, &other.right).cmp(&(&self.left, &self.right)))
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy BPE training.
///
/// Repeatedly merges the most frequent adjacent pair (counted within units,
/// weighted by unit frequency; ties to the smallest pair of byte strings)
/// until the vocabulary reaches `vocab_size` or no pair occurs twice.
pub fn train_bpe<S: AsRef<str>>(lines: &[S], vocab_size: usize) -> Result<TokenizerModel, TokenizerError> {
    if vocab_size < BASE_VOCAB_SIZE {
        return Err(TokenizerError::VocabTooSmall(vocab_size));
    }
    if lines.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let mut unit_freq: BTreeMap<&str, u64> = BTreeMap::new();
    for line in lines {
        for unit in pre_tokenize(line.as_ref()) {
            *unit_freq.entry(unit).or_default() += 1;
        }
    }
    let mut words: Vec<(Vec<TokenId>, u64)> = unit_freq
        .into_iter()
        .map(|(u, f)| (u.bytes().map(TokenId::from).collect(), f))
        .collect();

    let mut model = TokenizerModel::untrained();
    let mut counts: BTreeMap<(TokenId, TokenId), u64> = BTreeMap::new();
    let mut occurs_in: BTreeMap<(TokenId, TokenId), BTreeSet<usize>> = BTreeMap::new();
    for (i, (ids, f)) in words.iter().enumerate() {
        for w in ids.windows(2) {
            *counts.entry((w[0], w[1])).or_default() += f;
            occurs_in.entry((w[0], w[1])).or_default().insert(i);
        }
    }
    let candidate = |model: &TokenizerModel, pair: (TokenId, TokenId), count: u64| Candidate {
        count,
        left: model.vocab[pair.0 as usize].clone(),
        right: model.vocab[pair.1 as usize].clone(),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts.iter().map(|(&p, &c)| candidate(&model, p, c)).collect();

    while model.vocab_size() < vocab_size {
        // Entries go stale when a count changes; the fresh one was pushed then.
        let best = loop {
            match heap.pop() {
                None => break None,
                Some(c) if counts.get(&c.pair) == Some(&c.count) => break Some(c),
                Some(_) => continue,
            }
        };
        let Some(best) = best.filter(|c| c.count >= 2) else {
            break;
        };
        let pair = best.pair;
        let new_id = model.push_merge(pair.0, pair.1);

        let mut touched: BTreeSet<(TokenId, TokenId)> = BTreeSet::new();
        for i in occurs_in.remove(&pair).unwrap_or_default() {
            let (ids, f) = &mut words[i];
            let f = *f;
            if !ids.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            for w in ids.windows(2) {
                let p = (w[0], w[1]);
                let c = counts.get_mut(&p).expect("counted pair");
                *c -= f;
                touched.insert(p);
            }
            merge_pair(ids, pair, new_id);
            for w in ids.windows(2) {
                let p = (w[0], w[1]);
                *counts.entry(p).or_default() += f;
                occurs_in.entry(p).or_default().insert(i);
                touched.insert(p);
            }
        }
        for p in touched {
            match counts.get(&p) {
                Some(0) => {
                    counts.remove(&p);
                }
                Some(&c) => heap.push(candidate(&model, p, c)),
                None => {}
            }
        }
    }
    Ok(model)
}
