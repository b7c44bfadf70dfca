//! Line-delimited JSON score records.
//!
//! One object per line:
//!
//! ```json
//! {"lang":"deu","sample_id":17,"tokens":["▁Das","▁Haus"],"logprobs":[-2.31,-0.94],"ranks":[5,1],"char_count":8}
//! ```
//!
//! `ranks` may be omitted. Floats are written in shortest round-trip form, so
//! export followed by ingest reproduces every value bit for bit.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use parcomp_core::corpus::LanguageCode;
use parcomp_core::records::{ScoreSet, ScoredSequence};
use serde_json::Value;

use crate::error::{Error, Result};

const FIELDS: [&str; 6] = ["lang", "sample_id", "tokens", "logprobs", "ranks", "char_count"];

/// How to treat fields outside the schema.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IngestMode {
    /// Reject unknown fields.
    #[default]
    Strict,
    /// Ignore unknown fields.
    Lenient,
}

/// Parse and validate a record stream. `source` names the stream in errors
/// and becomes the set's provenance.
pub fn ingest_scores<R: BufRead>(reader: R, source: &Path, mode: IngestMode) -> Result<ScoreSet> {
    let err = |line: usize, message: String| Error::Record {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut records = Vec::new();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut lang: Option<(LanguageCode, usize)> = None;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(Error::io(source))?;
        let value: Value = serde_json::from_str(&line).map_err(|e| err(n, format!("malformed JSON: {e}")))?;
        let Value::Object(map) = &value else {
            return Err(err(n, "expected a JSON object".into()));
        };
        if mode == IngestMode::Strict {
            if let Some(k) = map.keys().find(|k| !FIELDS.contains(&k.as_str())) {
                return Err(err(n, format!("unknown field {k:?}")));
            }
        }
        let record: ScoredSequence =
            serde_json::from_value(value).map_err(|e| err(n, format!("invalid record: {e}")))?;
        record.validate().map_err(|e| err(n, e.to_string()))?;
        if let Some(prev) = seen.insert(record.sample_id, n) {
            return Err(err(
                n,
                format!("duplicate sample_id {} (first on line {prev})", record.sample_id),
            ));
        }
        match lang {
            None => lang = Some((record.lang, n)),
            Some((l, first)) if l != record.lang => {
                return Err(err(
                    n,
                    format!("language {} differs from {l} on line {first}", record.lang),
                ));
            }
            Some(_) => {}
        }
        records.push(record);
    }
    Ok(ScoreSet::new(records, source.display().to_string())?)
}

pub fn ingest_file(path: &Path, mode: IngestMode) -> Result<ScoreSet> {
    let file = File::open(path).map_err(Error::io(path))?;
    ingest_scores(BufReader::new(file), path, mode)
}

/// Write records in sample-id order, one compact JSON object per line.
pub fn export_scores<W: Write>(set: &ScoreSet, mut out: W) -> std::io::Result<()> {
    for r in set.records() {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn export_to_string(set: &ScoreSet) -> String {
    let mut buf = Vec::new();
    export_scores(set, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}
