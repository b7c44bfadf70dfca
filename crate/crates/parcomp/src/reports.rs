//! Metric tables, consistency reports and the Markdown summary.
//!
//! All writers are deterministic: rows come out in a fixed order and floats
//! use shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use parcomp_core::consistency::{ConsistencyReport, SampleVerdict, SplitSummary, Verdict};
use parcomp_core::corpus::LanguageCode;
use parcomp_core::metrics::{Aggregation, Metric, MetricReport};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{read_json, write_file, write_json};
use crate::error::{Error, Result};

pub const METRIC_HEADER: [&str; 5] = ["checkpoint", "lang", "metric", "value", "n_sentences"];

/// Metric column label. Micro-aggregated rows carry a `_MICRO` suffix so the
/// two aggregations are never confused; TOTAL_BITS is the same under both.
pub fn metric_label(metric: Metric, aggregation: Aggregation) -> String {
    match aggregation {
        Aggregation::Micro if metric != Metric::TotalBits => format!("{}_MICRO", metric.name()),
        _ => metric.name().to_string(),
    }
}

/// One row of the metric CSV and its JSON mirror.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRow {
    pub checkpoint: u64,
    pub lang: LanguageCode,
    pub metric: String,
    pub value: f64,
    pub n_sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricTable {
    pub aggregation: Aggregation,
    pub rows: Vec<MetricRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricTable {
    pub fn from_report(report: &MetricReport, notes: Vec<String>) -> Self {
        let aggregation = report.aggregation();
        let rows = report
            .rows()
            .map(|r| MetricRow {
                checkpoint: r.checkpoint,
                lang: r.lang,
                metric: metric_label(r.metric, aggregation),
                value: r.value,
                n_sentences: r.n_sentences,
            })
            .collect();
        Self {
            aggregation,
            rows,
            notes,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(METRIC_HEADER).expect("in-memory csv");
        for r in &self.rows {
            w.write_record([
                r.checkpoint.to_string(),
                r.lang.to_string(),
                r.metric.clone(),
                r.value.to_string(),
                r.n_sentences.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is UTF-8")
    }

    /// Read back a CSV written by [`MetricTable::to_csv`]. Notes and the
    /// aggregation are not stored in the CSV; the caller supplies the latter.
    pub fn from_csv(path: &Path, text: &str, aggregation: Aggregation) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::format(path, e))?;
        if header.iter().ne(METRIC_HEADER) {
            return Err(Error::format(
                path,
                format!("expected header {}", METRIC_HEADER.join(",")),
            ));
        }
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<MetricRow>, _>>()
            .map_err(|e| Error::format(path, e))?;
        Ok(Self {
            aggregation,
            rows,
            notes: Vec::new(),
        })
    }

    pub fn write(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        write_file(csv_path, self.to_csv().as_bytes())?;
        write_json(json_path, self)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// JSON form of a consistency run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyDoc {
    pub metric: String,
    pub n: usize,
    pub inconsistency_rate: f64,
    pub samples: Vec<SampleVerdict>,
    pub splits_original: SplitSummary,
    pub splits_sorted: SplitSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConsistencyDoc {
    pub fn new(report: &ConsistencyReport) -> Self {
        let mut notes = Vec::new();
        match report.metric {
            Metric::Nll => notes.push(
                "PPL is a strictly increasing function of NLL, so its sample verdicts are identical to these".into(),
            ),
            Metric::Ppl => {
                notes.push("PPL run on request; sample verdicts equal those of NLL, split verdicts may differ".into())
            }
            _ => {}
        }
        Self {
            metric: report.metric.name().to_ascii_lowercase(),
            n: report.n(),
            inconsistency_rate: report.inconsistency_rate,
            samples: report.samples.clone(),
            splits_original: report.splits_original.clone(),
            splits_sorted: report.splits_sorted.clone(),
            notes,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Per-sample values ordered by source value (ties by id):
/// `rank,id,source,<split names...>,verdict`.
pub fn figure_data_csv(report: &ConsistencyReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["rank".to_string(), "id".into(), "source".into()];
    header.extend(report.splits_original.names.iter().cloned());
    header.push("verdict".into());
    w.write_record(&header).expect("in-memory csv");
    for (i, s) in report.figure_data().into_iter().enumerate() {
        let mut rec = vec![(i + 1).to_string(), s.sample_id.to_string(), s.source_value.to_string()];
        rec.extend(s.paraphrase_values.iter().map(f64::to_string));
        rec.push(verdict_name(s.verdict).into());
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is UTF-8")
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Consistent => "consistent",
        Verdict::Inconsistent => "inconsistent",
    }
}

fn split_table(out: &mut String, title: &str, s: &SplitSummary) {
    let _ = writeln!(
        out,
        "{title}: {} (source mean {:.4}, split range [{:.4}, {:.4}])",
        verdict_name(s.verdict),
        s.source_mean,
        s.range.0,
        s.range.1
    );
    out.push('\n');
    out.push_str("| split | mean |\n|---|---:|\n");
    for (name, m) in s.names.iter().zip(&s.means) {
        let _ = writeln!(out, "| {name} | {m:.4} |");
    }
    out.push('\n');
}

/// Markdown summary of metric tables and consistency reports.
pub fn markdown_report(metrics: &[(String, MetricTable)], consistency: &[(String, ConsistencyDoc)]) -> String {
    let mut out = String::from("# parcomp report\n\n");
    if !metrics.is_empty() {
        out.push_str("## Metrics\n\n");
    }
    for (name, table) in metrics {
        let _ = writeln!(out, "### {name} ({} aggregation)\n", table.aggregation.name());
        out.push_str("| checkpoint | lang | metric | value | sentences |\n|---:|---|---|---:|---:|\n");
        for r in &table.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {} |",
                r.checkpoint, r.lang, r.metric, r.value, r.n_sentences
            );
        }
        out.push('\n');
        for note in &table.notes {
            let _ = writeln!(out, "- {note}");
        }
        if !table.notes.is_empty() {
            out.push('\n');
        }
    }
    if !consistency.is_empty() {
        out.push_str("## Paraphrase consistency\n\n");
        out.push_str("| report | metric | samples | inconsistency rate | original splits | sorted splits |\n|---|---|---:|---:|---|---|\n");
        for (name, d) in consistency {
            let _ = writeln!(
                out,
                "| {name} | {} | {} | {:.1}% | {} | {} |",
                d.metric.to_ascii_uppercase(),
                d.n,
                100.0 * d.inconsistency_rate,
                verdict_name(d.splits_original.verdict),
                verdict_name(d.splits_sorted.verdict),
            );
        }
        out.push('\n');
    }
    for (name, d) in consistency {
        let _ = writeln!(out, "### {name}: {}\n", d.metric.to_ascii_uppercase());
        split_table(&mut out, "Original splits", &d.splits_original);
        split_table(&mut out, "Sorted splits", &d.splits_sorted);
        for note in &d.notes {
            let _ = writeln!(out, "- {note}");
        }
        if !d.notes.is_empty() {
            out.push('\n');
        }
    }
    out
}
