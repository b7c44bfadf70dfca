//! Multi-parallel corpora: validation, pivot alignment of bitexts and
//! row-wise dev splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::rng::SeededRng;
use crate::text::nfc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid language code {0:?}: expected 3 lowercase ASCII letters")]
    InvalidLanguageCode(String),
    #[error("duplicate language code {0}")]
    DuplicateLanguage(LanguageCode),
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("column {lang} has {found} rows, expected {expected} (as {first})")]
    LineCountMismatch {
        lang: String,
        found: usize,
        first: String,
        expected: usize,
    },
    #[error("empty sentence at row {row} ({lang})")]
    EmptySentence { row: usize, lang: String },
    #[error("corpus has no languages")]
    NoLanguages,
    #[error("no bitexts given")]
    NoBitexts,
    #[error("bitext pairs a language with itself ({0})")]
    SelfBitext(LanguageCode),
    #[error("bitext {a}-{b} does not contain pivot {pivot}")]
    PivotMissing {
        a: LanguageCode,
        b: LanguageCode,
        pivot: LanguageCode,
    },
    #[error("language {0} is paired with the pivot in more than one bitext")]
    DuplicateBitextLanguage(LanguageCode),
    #[error("no pivot sentence is shared by all bitexts")]
    EmptyAlignment,
    #[error("dev fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("dev split of {fraction} over {rows} rows gives {dev} dev rows; need at least one row on each side")]
    DegenerateSplit { fraction: f64, rows: usize, dev: usize },
    #[error("paraphrase set needs at least 2 splits, got {0}")]
    TooFewSplits(usize),
    #[error("split {name} has {found} lines, source has {expected}")]
    SplitLengthMismatch {
        name: String,
        found: usize,
        expected: usize,
    },
}

/// ISO 639-3 language code: exactly three lowercase ASCII letters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageCode([u8; 3]);

impl LanguageCode {
    /// `und`, the ISO 639-3 code for an undetermined language.
    pub const UNDETERMINED: LanguageCode = LanguageCode(*b"und");

    pub fn new(code: &str) -> Result<Self, CorpusError> {
        match code.as_bytes() {
            [a, b, c] if [a, b, c].iter().all(|x| x.is_ascii_lowercase()) => Ok(LanguageCode([*a, *b, *c])),
            _ => Err(CorpusError::InvalidLanguageCode(code.into())),
        }
    }

    pub fn as_str(&self) -> &str {
        // only ASCII lowercase bytes are ever stored
        core::str::from_utf8(&self.0).unwrap()
    }
}

impl FromStr for LanguageCode {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageCode::new(s)
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LanguageCode({})", self.as_str())
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for LanguageCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for LanguageCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        LanguageCode::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Line-aligned sentences, one row per sample and one column per language.
///
/// Every row has a sentence in every language and no sentence is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    languages: Vec<LanguageCode>,
    rows: Vec<Vec<String>>,
}

impl ParallelCorpus {
    /// Build from row-major data. Sentences are taken as given; callers
    /// loading raw text normalize first.
    pub fn new(languages: Vec<LanguageCode>, rows: Vec<Vec<String>>) -> Result<Self, CorpusError> {
        if languages.is_empty() {
            return Err(CorpusError::NoLanguages);
        }
        let mut seen = BTreeSet::new();
        for l in &languages {
            if !seen.insert(*l) {
                return Err(CorpusError::DuplicateLanguage(*l));
            }
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != languages.len() {
                return Err(CorpusError::RaggedRow {
                    row: j,
                    found: row.len(),
                    expected: languages.len(),
                });
            }
            if let Some(i) = row.iter().position(String::is_empty) {
                return Err(CorpusError::EmptySentence {
                    row: j,
                    lang: languages[i].as_str().into(),
                });
            }
        }
        Ok(Self { languages, rows })
    }

    /// Build from one column per language.
    pub fn from_columns(columns: Vec<(LanguageCode, Vec<String>)>) -> Result<Self, CorpusError> {
        let Some((first_lang, first)) = columns.first() else {
            return Err(CorpusError::NoLanguages);
        };
        let n = first.len();
        for (lang, col) in &columns {
            if col.len() != n {
                return Err(CorpusError::LineCountMismatch {
                    lang: lang.as_str().into(),
                    found: col.len(),
                    first: first_lang.as_str().into(),
                    expected: n,
                });
            }
        }
        let languages: Vec<LanguageCode> = columns.iter().map(|(l, _)| *l).collect();
        let mut rows: Vec<Vec<String>> = (0..n).map(|_| Vec::with_capacity(languages.len())).collect();
        for (_, col) in columns {
            for (row, s) in rows.iter_mut().zip(col) {
                row.push(s);
            }
        }
        Self::new(languages, rows)
    }

    pub fn languages(&self) -> &[LanguageCode] {
        &self.languages
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn language_index(&self, lang: LanguageCode) -> Option<usize> {
        self.languages.iter().position(|l| *l == lang)
    }

    /// Sentences of one language, in row order.
    pub fn column(&self, lang: LanguageCode) -> Option<impl Iterator<Item = &str> + '_> {
        let i = self.language_index(lang)?;
        Some(self.rows.iter().map(move |r| r[i].as_str()))
    }

    fn select(&self, indices: &[usize]) -> ParallelCorpus {
        ParallelCorpus {
            languages: self.languages.clone(),
            rows: indices.iter().map(|&j| self.rows[j].clone()).collect(),
        }
    }
}

/// Sentence pairs between two languages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitext {
    pub lang_a: LanguageCode,
    pub lang_b: LanguageCode,
    pairs: Vec<(String, String)>,
}

impl Bitext {
    /// Both sides are NFC-normalized; pairs with an empty side are rejected.
    pub fn new(lang_a: LanguageCode, lang_b: LanguageCode, pairs: Vec<(String, String)>) -> Result<Self, CorpusError> {
        if lang_a == lang_b {
            return Err(CorpusError::SelfBitext(lang_a));
        }
        let mut out = Vec::with_capacity(pairs.len());
        for (j, (a, b)) in pairs.into_iter().enumerate() {
            if a.is_empty() || b.is_empty() {
                let lang = if a.is_empty() { lang_a } else { lang_b };
                return Err(CorpusError::EmptySentence {
                    row: j,
                    lang: lang.as_str().into(),
                });
            }
            out.push((nfc(&a), nfc(&b)));
        }
        Ok(Self {
            lang_a,
            lang_b,
            pairs: out,
        })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn contains(&self, lang: LanguageCode) -> bool {
        self.lang_a == lang || self.lang_b == lang
    }

    /// `(other language, [(pivot sentence, other sentence)])` seen from `pivot`.
    fn oriented(&self, pivot: LanguageCode) -> Option<(LanguageCode, impl Iterator<Item = (&str, &str)>)> {
        let flip = if self.lang_a == pivot {
            false
        } else if self.lang_b == pivot {
            true
        } else {
            return None;
        };
        let other = if flip { self.lang_a } else { self.lang_b };
        Some((
            other,
            self.pairs.iter().map(move |(a, b)| {
                if flip {
                    (b.as_str(), a.as_str())
                } else {
                    (a.as_str(), b.as_str())
                }
            }),
        ))
    }
}

/// The language with the largest total number of aligned pairs over all
/// bitexts it takes part in. Ties go to the alphabetically first code.
pub fn select_pivot(bitexts: &[Bitext]) -> Result<LanguageCode, CorpusError> {
    if bitexts.is_empty() {
        return Err(CorpusError::NoBitexts);
    }
    let mut overlap: BTreeMap<LanguageCode, usize> = BTreeMap::new();
    for b in bitexts {
        *overlap.entry(b.lang_a).or_default() += b.pairs.len();
        *overlap.entry(b.lang_b).or_default() += b.pairs.len();
    }
    // BTreeMap iterates in ascending code order; keep the first maximum.
    let mut best: Option<(LanguageCode, usize)> = None;
    for (lang, n) in overlap {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((lang, n));
        }
    }
    Ok(best.expect("non-empty").0)
}

/// Intersect bitexts on their pivot side into a multi-parallel corpus.
///
/// Rows are the pivot sentences present in every bitext, in first-occurrence
/// order of the first bitext. Within each bitext only the first occurrence of
/// a pivot sentence is used. Columns are the pivot followed by the partner
/// language of each bitext, in bitext order.
pub fn align_by_pivot(bitexts: &[Bitext], pivot: LanguageCode) -> Result<ParallelCorpus, CorpusError> {
    if bitexts.is_empty() {
        return Err(CorpusError::NoBitexts);
    }
    let mut languages = alloc::vec![pivot];
    let mut tables: Vec<BTreeMap<&str, &str>> = Vec::with_capacity(bitexts.len());
    let mut first_order: Vec<&str> = Vec::new();
    for (i, b) in bitexts.iter().enumerate() {
        let (other, pairs) = b.oriented(pivot).ok_or(CorpusError::PivotMissing {
            a: b.lang_a,
            b: b.lang_b,
            pivot,
        })?;
        if languages.contains(&other) {
            return Err(CorpusError::DuplicateBitextLanguage(other));
        }
        languages.push(other);
        let mut table = BTreeMap::new();
        for (p, o) in pairs {
            if !table.contains_key(p) {
                table.insert(p, o);
                if i == 0 {
                    first_order.push(p);
                }
            }
        }
        tables.push(table);
    }
    let rows: Vec<Vec<String>> = first_order
        .into_iter()
        .filter_map(|p| {
            let mut row = Vec::with_capacity(languages.len());
            row.push(String::from(p));
            for t in &tables {
                row.push(String::from(*t.get(p)?));
            }
            Some(row)
        })
        .collect();
    if rows.is_empty() {
        return Err(CorpusError::EmptyAlignment);
    }
    ParallelCorpus::new(languages, rows)
}

/// Number of dev rows for a fraction: `round(fraction * rows)`, halves away
/// from zero.
pub fn dev_size(rows: usize, dev_fraction: f64) -> usize {
    libm::round(dev_fraction * rows as f64) as usize
}

/// Row-wise train/dev split. The same rows are selected in every language;
/// both parts keep the original row order.
pub fn make_dev_split(
    corpus: &ParallelCorpus,
    dev_fraction: f64,
    seed: u64,
) -> Result<(ParallelCorpus, ParallelCorpus), CorpusError> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(dev_fraction));
    }
    let n = corpus.len();
    let k = dev_size(n, dev_fraction);
    if k == 0 || k >= n {
        return Err(CorpusError::DegenerateSplit {
            fraction: dev_fraction,
            rows: n,
            dev: k,
        });
    }
    let dev_idx = SeededRng::new(seed).sample_indices(n, k);
    let mut is_dev = alloc::vec![false; n];
    for &j in &dev_idx {
        is_dev[j] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&j| !is_dev[j]).collect();
    Ok((corpus.select(&train_idx), corpus.select(&dev_idx)))
}

/// A source column with k ≥ 2 row-aligned alternative target columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParaphraseSet {
    pub source_lang: LanguageCode,
    pub target_lang: LanguageCode,
    source: Vec<String>,
    splits: Vec<(String, Vec<String>)>,
}

impl ParaphraseSet {
    pub fn new(
        source_lang: LanguageCode,
        target_lang: LanguageCode,
        source: Vec<String>,
        splits: Vec<(String, Vec<String>)>,
    ) -> Result<Self, CorpusError> {
        if splits.len() < 2 {
            return Err(CorpusError::TooFewSplits(splits.len()));
        }
        for (name, col) in &splits {
            if col.len() != source.len() {
                return Err(CorpusError::SplitLengthMismatch {
                    name: name.clone(),
                    found: col.len(),
                    expected: source.len(),
                });
            }
            if let Some(row) = col.iter().position(String::is_empty) {
                return Err(CorpusError::EmptySentence {
                    row,
                    lang: name.clone(),
                });
            }
        }
        if let Some(row) = source.iter().position(String::is_empty) {
            return Err(CorpusError::EmptySentence {
                row,
                lang: source_lang.as_str().into(),
            });
        }
        Ok(Self {
            source_lang,
            target_lang,
            source,
            splits,
        })
    }

    pub fn source(&self) -> &[String] {
        &self.source
    }

    pub fn splits(&self) -> &[(String, Vec<String>)] {
        &self.splits
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}
