//! Text files and JSON manifests for corpora, paraphrase sets and bitexts.
//!
//! Text files are UTF-8 with one sentence per line (LF or CRLF). Lines are
//! NFC-normalized on load and may not be empty. Paths inside a manifest are
//! relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use parcomp_core::corpus::{Bitext, LanguageCode, ParallelCorpus, ParaphraseSet};
use parcomp_core::text::normalize_line;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `{"code": "eng", "path": "eng.txt"}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageFile {
    pub code: LanguageCode,
    pub path: PathBuf,
}

/// `{"languages": [{"code": "eng", "path": "eng.txt"}, ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub languages: Vec<LanguageFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFile {
    pub name: String,
    pub path: PathBuf,
}

/// `{"source": {"code": "eng", "path": ...}, "target": "deu",
///   "splits": [{"name": "DE1", "path": ...}, ...]}`
///
/// `target` is optional and defaults to `und`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaphraseManifest {
    pub source: LanguageFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<LanguageCode>,
    pub splits: Vec<SplitFile>,
}

/// `{"bitexts": [{"a": {"code", "path"}, "b": {"code", "path"}}, ...]}`
/// where the two files of a bitext are line-aligned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitextManifest {
    pub bitexts: Vec<BitextFiles>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitextFiles {
    pub a: LanguageFile,
    pub b: LanguageFile,
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    fs::write(path, bytes).map_err(Error::io(path))
}

pub(crate) fn resolve(manifest: &Path, p: &Path) -> PathBuf {
    match manifest.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

/// Read one sentence per line, NFC-normalized. Empty lines are rejected.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
        path: path.to_path_buf(),
        offset: e.valid_up_to(),
    })?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() && !text.is_empty() {
        return Err(Error::EmptyLine {
            path: path.to_path_buf(),
            row: 0,
        });
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(row, raw)| {
            let line = normalize_line(raw);
            if line.is_empty() {
                Err(Error::EmptyLine {
                    path: path.to_path_buf(),
                    row,
                })
            } else {
                Ok(line)
            }
        })
        .collect()
}

/// Write sentences one per line with LF terminators.
pub fn write_lines<S: AsRef<str>>(path: &Path, lines: impl IntoIterator<Item = S>) -> Result<()> {
    let mut out = String::new();
    for l in lines {
        out.push_str(l.as_ref());
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

fn read_columns(manifest: &Path, files: &[(String, PathBuf)]) -> Result<Vec<Vec<String>>> {
    let mut columns = Vec::with_capacity(files.len());
    let mut first: Option<(PathBuf, usize)> = None;
    for (_, rel) in files {
        let path = resolve(manifest, rel);
        let lines = read_lines(&path)?;
        match &first {
            None => first = Some((path, lines.len())),
            Some((first_path, n)) if *n != lines.len() => {
                return Err(Error::LineCountMismatch {
                    path,
                    found: lines.len(),
                    first: first_path.clone(),
                    expected: *n,
                })
            }
            Some(_) => {}
        }
        columns.push(lines);
    }
    Ok(columns)
}

pub fn load_corpus(manifest_path: &Path) -> Result<ParallelCorpus> {
    let manifest: CorpusManifest = read_json(manifest_path)?;
    let files: Vec<(String, PathBuf)> = manifest
        .languages
        .iter()
        .map(|l| (l.code.to_string(), l.path.clone()))
        .collect();
    let columns = read_columns(manifest_path, &files)?;
    let corpus = ParallelCorpus::from_columns(manifest.languages.iter().map(|l| l.code).zip(columns).collect())?;
    Ok(corpus)
}

/// Write one `<code>.txt` per language plus `corpus.json` into `dir`.
/// Returns the manifest path.
pub fn write_corpus(dir: &Path, corpus: &ParallelCorpus) -> Result<PathBuf> {
    let mut languages = Vec::new();
    for &lang in corpus.languages() {
        let file = PathBuf::from(format!("{lang}.txt"));
        write_lines(&dir.join(&file), corpus.column(lang).expect("own language"))?;
        languages.push(LanguageFile { code: lang, path: file });
    }
    let manifest_path = dir.join("corpus.json");
    write_json(&manifest_path, &CorpusManifest { languages })?;
    Ok(manifest_path)
}

pub fn load_paraphrase_set(manifest_path: &Path) -> Result<ParaphraseSet> {
    let manifest: ParaphraseManifest = read_json(manifest_path)?;
    let mut files = vec![(manifest.source.code.to_string(), manifest.source.path.clone())];
    files.extend(manifest.splits.iter().map(|s| (s.name.clone(), s.path.clone())));
    let mut columns = read_columns(manifest_path, &files)?.into_iter();
    let source = columns.next().expect("source column");
    let splits = manifest.splits.iter().map(|s| s.name.clone()).zip(columns).collect();
    Ok(ParaphraseSet::new(
        manifest.source.code,
        manifest.target.unwrap_or(LanguageCode::UNDETERMINED),
        source,
        splits,
    )?)
}

pub fn load_bitexts(manifest_path: &Path) -> Result<Vec<Bitext>> {
    let manifest: BitextManifest = read_json(manifest_path)?;
    manifest
        .bitexts
        .iter()
        .map(|b| {
            let files = [
                (b.a.code.to_string(), b.a.path.clone()),
                (b.b.code.to_string(), b.b.path.clone()),
            ];
            let mut cols = read_columns(manifest_path, &files)?.into_iter();
            let (xs, ys) = (cols.next().unwrap(), cols.next().unwrap());
            Ok(Bitext::new(b.a.code, b.b.code, xs.into_iter().zip(ys).collect())?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lc(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    fn corpus_dir(files: &[(&str, &[u8])]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let mut langs = Vec::new();
        for (code, body) in files {
            fs::write(dir.path().join(format!("{code}.txt")), body).unwrap();
            langs.push(serde_json::json!({"code": code, "path": format!("{code}.txt")}));
        }
        fs::write(
            dir.path().join("corpus.json"),
            serde_json::to_vec(&serde_json::json!({ "languages": langs })).unwrap(),
        )
        .unwrap();
        dir
    }

    #[test]
    fn loads_two_languages() {
        let dir = corpus_dir(&[("eng", b"a\nb\nc\n"), ("deu", b"x\r\ny\r\nz")]);
        let c = load_corpus(&dir.path().join("corpus.json")).unwrap();
        assert_eq!(c.languages(), [lc("eng"), lc("deu")]);
        assert_eq!(c.len(), 3);
        assert_eq!(c.column(lc("deu")).unwrap().collect::<Vec<_>>(), ["x", "y", "z"]);
    }

    #[test]
    fn line_count_mismatch_names_files() {
        let dir = corpus_dir(&[("eng", b"a\nb\nc\n"), ("deu", b"w\nx\ny\nz\n")]);
        let err = load_corpus(&dir.path().join("corpus.json")).unwrap_err();
        match err {
            Error::LineCountMismatch {
                path,
                found,
                first,
                expected,
            } => {
                assert!(path.ends_with("deu.txt"));
                assert!(first.ends_with("eng.txt"));
                assert_eq!((found, expected), (4, 3));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn normalizes_to_nfc() {
        let dir = corpus_dir(&[("fra", "caf\u{65}\u{301}\n".as_bytes())]);
        let c = load_corpus(&dir.path().join("corpus.json")).unwrap();
        assert_eq!(c.rows()[0][0], "caf\u{e9}");
    }

    #[test]
    fn nfc_input_is_byte_identical() {
        let text = "Grüße aus Köln\n你好  世界\n\u{645}\u{631}\u{62d}\u{628}\u{627}\n";
        let dir = corpus_dir(&[("deu", text.as_bytes())]);
        let c = load_corpus(&dir.path().join("corpus.json")).unwrap();
        let joined: String = c.rows().iter().map(|r| format!("{}\n", r[0])).collect();
        assert_eq!(joined.as_bytes(), text.as_bytes());
    }

    #[test]
    fn reports_bad_utf8_offset_and_empty_rows() {
        let dir = corpus_dir(&[("eng", b"ok\nbad \xff\n")]);
        match load_corpus(&dir.path().join("corpus.json")).unwrap_err() {
            Error::InvalidUtf8 { offset, .. } => assert_eq!(offset, 7),
            e => panic!("unexpected {e}"),
        }
        let dir = corpus_dir(&[("eng", b"a\n\nc\n")]);
        match load_corpus(&dir.path().join("corpus.json")).unwrap_err() {
            Error::EmptyLine { row, .. } => assert_eq!(row, 1),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("corpus.json"),
            br#"{"languages":[{"code":"eng","path":"nope.txt"}]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_corpus(&dir.path().join("corpus.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn corpus_write_then_load() {
        let dir = corpus_dir(&[("eng", b"a b\nc\n"), ("deu", b"x\ny z\n")]);
        let c = load_corpus(&dir.path().join("corpus.json")).unwrap();
        let out = tempfile::tempdir().unwrap();
        let m = write_corpus(out.path(), &c).unwrap();
        assert_eq!(load_corpus(&m).unwrap(), c);
    }

    fn paraphrase_dir(splits: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("en.txt"), "one\ntwo\n").unwrap();
        let mut list = Vec::new();
        for i in 1..=splits {
            fs::write(dir.path().join(format!("de{i}.txt")), "eins\nzwei\n").unwrap();
            list.push(serde_json::json!({"name": format!("DE{i}"), "path": format!("de{i}.txt")}));
        }
        let m = serde_json::json!({"source": {"code": "eng", "path": "en.txt"}, "target": "deu", "splits": list});
        fs::write(dir.path().join("p.json"), serde_json::to_vec(&m).unwrap()).unwrap();
        dir
    }

    #[test]
    fn paraphrase_sets() {
        let dir = paraphrase_dir(4);
        let p = load_paraphrase_set(&dir.path().join("p.json")).unwrap();
        assert_eq!(p.splits().len(), 4);
        assert_eq!(p.target_lang, lc("deu"));
        // identical split contents are allowed
        let dir = paraphrase_dir(2);
        assert!(load_paraphrase_set(&dir.path().join("p.json")).is_ok());
        let dir = paraphrase_dir(1);
        assert!(matches!(
            load_paraphrase_set(&dir.path().join("p.json")),
            Err(Error::Corpus(parcomp_core::corpus::CorpusError::TooFewSplits(1)))
        ));
    }

    #[test]
    fn bitexts_load() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("it1.txt"), "a\nb\n").unwrap();
        fs::write(dir.path().join("en.txt"), "A\nB\n").unwrap();
        let m = serde_json::json!({"bitexts": [{"a": {"code": "ita", "path": "it1.txt"}, "b": {"code": "eng", "path": "en.txt"}}]});
        fs::write(dir.path().join("b.json"), serde_json::to_vec(&m).unwrap()).unwrap();
        let b = load_bitexts(&dir.path().join("b.json")).unwrap();
        assert_eq!(
            b[0].pairs(),
            [("a".to_string(), "A".to_string()), ("b".to_string(), "B".to_string())]
        );
    }
}
