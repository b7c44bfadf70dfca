//! JSON files for tokenizers and n-gram models.
//!
//! Tokenizer:
//!
//! ```json
//! {"version": 1, "vocab_size": 260,
//!  "base_tokens": {"bytes": 256, "bos": 256, "eos": 257},
//!  "merges": [{"pair": [97, 98], "hex": "6162"}, ...]}
//! ```
//!
//! `hex` is the merged token's byte string; it is checked on load.
//!
//! N-gram model: order, vocabulary size, special ids and every context's
//! successor counts, with contexts and successors in ascending order.

use std::path::Path;

use parcomp_core::ngram::NGramModel;
use parcomp_core::tokenizer::{TokenId, TokenizerModel, BASE_VOCAB_SIZE, BOS, EOS};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{read_json, write_json};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseTokens {
    bytes: u32,
    bos: TokenId,
    eos: TokenId,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MergeEntry {
    pair: [TokenId; 2],
    hex: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenizerFile {
    version: u32,
    vocab_size: usize,
    base_tokens: BaseTokens,
    merges: Vec<MergeEntry>,
}

pub fn save_tokenizer(path: &Path, model: &TokenizerModel) -> Result<()> {
    let merges = model
        .merges()
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| MergeEntry {
            pair: [a, b],
            hex: hex::encode(model.token_bytes((BASE_VOCAB_SIZE + k) as TokenId).expect("merged id")),
        })
        .collect();
    let file = TokenizerFile {
        version: FORMAT_VERSION,
        vocab_size: model.vocab_size(),
        base_tokens: BaseTokens {
            bytes: 256,
            bos: BOS,
            eos: EOS,
        },
        merges,
    };
    write_json(path, &file)
}

pub fn load_tokenizer(path: &Path) -> Result<TokenizerModel> {
    let file: TokenizerFile = read_json(path)?;
    if file.version != FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported version {}", file.version)));
    }
    let base = &file.base_tokens;
    if (base.bytes, base.bos, base.eos) != (256, BOS, EOS) {
        return Err(Error::format(path, "unsupported base token layout"));
    }
    let model = TokenizerModel::from_merges(file.merges.iter().map(|m| (m.pair[0], m.pair[1])).collect())?;
    for (k, m) in file.merges.iter().enumerate() {
        let bytes = model.token_bytes((BASE_VOCAB_SIZE + k) as TokenId).expect("merged id");
        if hex::decode(&m.hex).ok().as_deref() != Some(bytes) {
            return Err(Error::format(
                path,
                format!("merge {k}: hex {:?} does not match its pair", m.hex),
            ));
        }
    }
    if model.vocab_size() != file.vocab_size {
        return Err(Error::format(
            path,
            format!(
                "vocab_size {} but {} tokens defined",
                file.vocab_size,
                model.vocab_size()
            ),
        ));
    }
    Ok(model)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextEntry {
    context: Vec<TokenId>,
    successors: Vec<(TokenId, u64)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NGramFile {
    version: u32,
    order: usize,
    vocab_size: usize,
    bos: TokenId,
    eos: TokenId,
    tokens_seen: u64,
    contexts: Vec<ContextEntry>,
}

pub fn save_ngram(path: &Path, model: &NGramModel) -> Result<()> {
    let file = NGramFile {
        version: FORMAT_VERSION,
        order: model.order(),
        vocab_size: model.vocab_size(),
        bos: model.bos(),
        eos: model.eos(),
        tokens_seen: model.tokens_seen(),
        contexts: model
            .contexts()
            .map(|(c, counts)| ContextEntry {
                context: c.to_vec(),
                successors: counts.successors().iter().map(|(&w, &n)| (w, n)).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&file).map_err(|e| Error::format(path, e))?;
    s.push('\n');
    crate::corpus_io::write_file(path, s.as_bytes())
}

pub fn load_ngram(path: &Path) -> Result<NGramModel> {
    let file: NGramFile = read_json(path)?;
    if file.version != FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported version {}", file.version)));
    }
    let contexts = file
        .contexts
        .into_iter()
        .map(|c| (c.context, c.successors.into_iter().collect()));
    Ok(NGramModel::from_counts(
        file.order,
        file.vocab_size,
        file.bos,
        file.eos,
        file.tokens_seen,
        contexts,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use parcomp_core::ngram::{score_sequence, train_ngram};
    use parcomp_core::tokenizer::train_bpe;

    #[test]
    fn tokenizer_file_roundtrip() {
        let lines = ["the theme of the thesis", "Grüße 你好 👋"];
        let model = train_bpe(&lines, 300).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tok.json");
        save_tokenizer(&path, &model).unwrap();
        let loaded = load_tokenizer(&path).unwrap();
        assert_eq!(loaded, model);
        // bit-exact re-save
        let again = dir.path().join("tok2.json");
        save_tokenizer(&again, &loaded).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn tokenizer_file_rejects_tampering() {
        let model = train_bpe(&["abab abab"], 300).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tok.json");
        save_tokenizer(&path, &model).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("\"6162\"", "\"6163\"", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_tokenizer(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn ngram_file_reproduces_scores() {
        let tok = train_bpe(&["das haus ist alt", "das haus ist neu"], 300).unwrap();
        let lines: Vec<Vec<TokenId>> = ["das haus ist alt", "das haus ist neu", "ist das neu"]
            .iter()
            .map(|l| tok.encode(l))
            .collect();
        let model = train_ngram(&lines, 3, tok.vocab_size()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lm.json");
        save_ngram(&path, &model).unwrap();
        let loaded = load_ngram(&path).unwrap();
        assert_eq!(loaded, model);
        let a = score_sequence(&model, &tok, "das alte haus").unwrap();
        let b = score_sequence(&loaded, &tok, "das alte haus").unwrap();
        assert_eq!(a, b);
    }
}
