//! Paraphrase consistency of metric values.
//!
//! A source sentence is *consistent* with its k paraphrases when its value
//! lies strictly outside `[min, max]` of the paraphrase values; touching an
//! edge counts as inconsistent. The same rule applied to split means gives
//! the split-level verdict, once for the splits as given and once for the
//! row-wise sorted splits.

use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::{sequence_value, Direction, Metric, MetricError};
use crate::records::ScoreSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConsistencyError {
    #[error("need at least 2 paraphrase values, got {0}")]
    TooFewParaphrases(usize),
    #[error("non-finite value {value} at row {row}")]
    NonFinite { row: usize, value: f64 },
    #[error("no samples")]
    Empty,
    #[error("row {row} has {found} values, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("split {split} is not aligned with the source: first mismatch at sample_id {sample_id}")]
    Misaligned { split: String, sample_id: u64 },
    #[error("{0} is not a per-sentence metric")]
    UnsupportedMetric(Metric),
    #[error("PPL verdicts equal NLL verdicts at sample level; pass allow_ppl to compute it anyway")]
    PplNotRequested,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

fn check_finite(row: usize, values: &[f64]) -> Result<(), ConsistencyError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&value) => Err(ConsistencyError::NonFinite { row, value }),
        None => Ok(()),
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Range-containment verdict of `source` against `others` (k ≥ 2).
pub fn range_verdict(source: f64, others: &[f64]) -> Result<Verdict, ConsistencyError> {
    if others.len() < 2 {
        return Err(ConsistencyError::TooFewParaphrases(others.len()));
    }
    check_finite(0, others)?;
    check_finite(0, &[source])?;
    let (lo, hi) = min_max(others);
    Ok(if source < lo || source > hi {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleVerdict {
    #[cfg_attr(feature = "serde", serde(rename = "id"))]
    pub sample_id: u64,
    #[cfg_attr(feature = "serde", serde(rename = "source"))]
    pub source_value: f64,
    #[cfg_attr(feature = "serde", serde(rename = "paraphrases"))]
    pub paraphrase_values: Vec<f64>,
    pub verdict: Verdict,
}

/// Verdict for one sample.
pub fn sample_verdict(
    sample_id: u64,
    source_value: f64,
    paraphrase_values: Vec<f64>,
) -> Result<SampleVerdict, ConsistencyError> {
    let verdict = range_verdict(source_value, &paraphrase_values)?;
    Ok(SampleVerdict {
        sample_id,
        source_value,
        paraphrase_values,
        verdict,
    })
}

/// Fraction of inconsistent verdicts.
pub fn inconsistency_rate(verdicts: &[SampleVerdict]) -> Result<f64, ConsistencyError> {
    if verdicts.is_empty() {
        return Err(ConsistencyError::Empty);
    }
    let bad = verdicts.iter().filter(|v| v.verdict == Verdict::Inconsistent).count();
    Ok(bad as f64 / verdicts.len() as f64)
}

fn check_matrix(values: &[Vec<f64>]) -> Result<usize, ConsistencyError> {
    let k = values.first().map_or(0, Vec::len);
    for (row, r) in values.iter().enumerate() {
        if r.len() != k {
            return Err(ConsistencyError::Ragged {
                row,
                found: r.len(),
                expected: k,
            });
        }
        check_finite(row, r)?;
    }
    Ok(k)
}

/// Sort every row ascending, so column j holds the j-th order statistic.
pub fn sorted_splits(values: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ConsistencyError> {
    check_matrix(values)?;
    Ok(values
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.sort_by(f64::total_cmp);
            r
        })
        .collect())
}

/// Split means against the source mean.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSummary {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// `(min, max)` of the split means.
    pub range: (f64, f64),
    pub source_mean: f64,
    pub verdict: Verdict,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Compare the mean of `source_values` with the per-column means of
/// `split_matrix` (N rows × k columns).
pub fn split_level_verdict(
    source_values: &[f64],
    split_matrix: &[Vec<f64>],
    names: Vec<String>,
) -> Result<SplitSummary, ConsistencyError> {
    if source_values.is_empty() || split_matrix.is_empty() {
        return Err(ConsistencyError::Empty);
    }
    if source_values.len() != split_matrix.len() {
        return Err(ConsistencyError::Misaligned {
            split: "matrix".into(),
            sample_id: source_values.len().min(split_matrix.len()) as u64,
        });
    }
    let k = check_matrix(split_matrix)?;
    if k < 2 {
        return Err(ConsistencyError::TooFewParaphrases(k));
    }
    check_finite(0, source_values)?;
    let means: Vec<f64> = (0..k).map(|j| mean(split_matrix.iter().map(|r| r[j]))).collect();
    let source_mean = mean(source_values.iter().copied());
    let verdict = range_verdict(source_mean, &means)?;
    Ok(SplitSummary {
        names,
        range: min_max(&means),
        means,
        source_mean,
        verdict,
    })
}

/// Column labels for sorted splits. Column 1 holds the lowest values, which
/// is the easiest split for lower-is-better metrics and the hardest for MRR.
pub fn sorted_split_names(k: usize, metric: Metric) -> Vec<String> {
    let (low, high) = match metric.direction() {
        Direction::HigherIsBetter => ("hardest", "easiest"),
        _ => ("easiest", "hardest"),
    };
    (1..=k)
        .map(|j| {
            if j == 1 {
                alloc::format!("sorted_{j} ({low})")
            } else if j == k {
                alloc::format!("sorted_{j} ({high})")
            } else {
                alloc::format!("sorted_{j}")
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConsistencyOptions {
    /// Accept PPL as its own metric (split-level verdicts can differ from
    /// NLL because exp does not commute with means).
    pub allow_ppl: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub metric: Metric,
    pub samples: Vec<SampleVerdict>,
    pub inconsistency_rate: f64,
    pub splits_original: SplitSummary,
    pub splits_sorted: SplitSummary,
}

impl ConsistencyReport {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// Samples ordered by source value (ties by id), the series behind a
    /// per-sample consistency plot.
    pub fn figure_data(&self) -> Vec<&SampleVerdict> {
        let mut v: Vec<&SampleVerdict> = self.samples.iter().collect();
        v.sort_by(|a, b| {
            a.source_value
                .total_cmp(&b.source_value)
                .then(a.sample_id.cmp(&b.sample_id))
        });
        v
    }
}

/// Full analysis of a source set against k row-aligned paraphrase sets.
pub fn run_consistency(
    source: &ScoreSet,
    paraphrases: &[(String, &ScoreSet)],
    metric: Metric,
    options: ConsistencyOptions,
) -> Result<ConsistencyReport, ConsistencyError> {
    match metric {
        Metric::Nll | Metric::Bpc | Metric::Mrr => {}
        Metric::Ppl if options.allow_ppl => {}
        Metric::Ppl => return Err(ConsistencyError::PplNotRequested),
        _ => return Err(ConsistencyError::UnsupportedMetric(metric)),
    }
    if paraphrases.len() < 2 {
        return Err(ConsistencyError::TooFewParaphrases(paraphrases.len()));
    }
    if source.is_empty() {
        return Err(ConsistencyError::Empty);
    }
    let n = source.len();
    for (name, set) in paraphrases {
        if set.len() != n {
            return Err(ConsistencyError::Misaligned {
                split: name.clone(),
                sample_id: n.min(set.len()) as u64,
            });
        }
    }
    if metric == Metric::Mrr {
        for set in core::iter::once(source).chain(paraphrases.iter().map(|(_, s)| *s)) {
            if !set.mrr_available() {
                return Err(MetricError::MrrUnavailable {
                    provenance: set.provenance().into(),
                }
                .into());
            }
        }
    }

    let source_values = source
        .records()
        .iter()
        .map(|r| sequence_value(r, metric))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut matrix: Vec<Vec<f64>> = (0..n).map(|_| Vec::with_capacity(paraphrases.len())).collect();
    for (_, set) in paraphrases {
        for (row, r) in matrix.iter_mut().zip(set.records()) {
            row.push(sequence_value(r, metric)?);
        }
    }

    let samples = source_values
        .iter()
        .zip(&matrix)
        .enumerate()
        .map(|(j, (&s, row))| sample_verdict(j as u64, s, row.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let inconsistency_rate = inconsistency_rate(&samples)?;
    let names: Vec<String> = paraphrases.iter().map(|(n, _)| n.clone()).collect();
    let splits_original = split_level_verdict(&source_values, &matrix, names)?;
    let sorted = sorted_splits(&matrix)?;
    let splits_sorted = split_level_verdict(&source_values, &sorted, sorted_split_names(paraphrases.len(), metric))?;
    Ok(ConsistencyReport {
        metric,
        samples,
        inconsistency_rate,
        splits_original,
        splits_sorted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LanguageCode;
    use crate::records::ScoredSequence;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn figure_one_rows() {
        assert_eq!(
            range_verdict(2.19, &[4.45, 4.63, 6.30, 6.36]).unwrap(),
            Verdict::Consistent
        );
        assert_eq!(
            range_verdict(3.10, &[2.84, 3.55, 5.11, 5.66]).unwrap(),
            Verdict::Inconsistent
        );
    }

    #[test]
    fn boundary_is_inconsistent() {
        assert_eq!(range_verdict(1.0, &[1.0, 2.0]).unwrap(), Verdict::Inconsistent);
        assert_eq!(range_verdict(2.0, &[1.0, 2.0]).unwrap(), Verdict::Inconsistent);
        assert_eq!(range_verdict(2.0 + 1e-12, &[1.0, 2.0]).unwrap(), Verdict::Consistent);
    }

    #[test]
    fn verdict_errors() {
        assert_eq!(
            range_verdict(1.0, &[2.0]).unwrap_err(),
            ConsistencyError::TooFewParaphrases(1)
        );
        assert!(matches!(
            range_verdict(f64::NAN, &[1.0, 2.0]),
            Err(ConsistencyError::NonFinite { .. })
        ));
        assert!(matches!(
            range_verdict(1.0, &[1.0, f64::INFINITY]),
            Err(ConsistencyError::NonFinite { .. })
        ));
    }

    #[test]
    fn rates() {
        let v = |verdict| SampleVerdict {
            sample_id: 0,
            source_value: 0.0,
            paraphrase_values: vec![],
            verdict,
        };
        let list = [
            v(Verdict::Inconsistent),
            v(Verdict::Consistent),
            v(Verdict::Consistent),
            v(Verdict::Inconsistent),
        ];
        assert_eq!(inconsistency_rate(&list).unwrap(), 0.5);
        assert_eq!(inconsistency_rate(&list[1..3]).unwrap(), 0.0);
        assert_eq!(inconsistency_rate(&[]).unwrap_err(), ConsistencyError::Empty);
    }

    #[test]
    fn sorting_rows() {
        let out = sorted_splits(&[vec![3.0, 1.0, 2.0], vec![6.0, 4.0, 5.0]]).unwrap();
        assert_eq!(out, [vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(sorted_splits(&out).unwrap(), out);
        assert!(matches!(
            sorted_splits(&[vec![1.0, 2.0], vec![1.0]]),
            Err(ConsistencyError::Ragged { row: 1, .. })
        ));
    }

    fn names(k: usize) -> Vec<String> {
        (1..=k).map(|i| alloc::format!("DE{i}")).collect()
    }

    #[test]
    fn table_three_ranges() {
        // split means inside 6.43..6.64 against 6.91: outside the range
        let m = vec![vec![6.43, 6.50, 6.58, 6.64]];
        assert_eq!(
            split_level_verdict(&[6.91], &m, names(4)).unwrap().verdict,
            Verdict::Consistent
        );
        // sorted splits spanning 5.89..7.23: 6.91 falls inside
        let m = vec![vec![5.89, 6.40, 6.90, 7.23]];
        let s = split_level_verdict(&[6.91], &m, names(4)).unwrap();
        assert_eq!(s.verdict, Verdict::Inconsistent);
        assert_eq!(s.range, (5.89, 7.23));
        // degenerate: all equal
        let m = vec![vec![1.0, 1.0], vec![3.0, 3.0]];
        assert_eq!(
            split_level_verdict(&[2.0, 2.0], &m, names(2)).unwrap().verdict,
            Verdict::Inconsistent
        );
    }

    #[test]
    fn split_level_errors() {
        assert_eq!(
            split_level_verdict(&[], &[], names(2)).unwrap_err(),
            ConsistencyError::Empty
        );
        assert!(matches!(
            split_level_verdict(&[1.0], &[vec![1.0]], names(1)),
            Err(ConsistencyError::TooFewParaphrases(1))
        ));
    }

    #[test]
    fn sorted_labels_follow_direction() {
        assert_eq!(
            sorted_split_names(4, Metric::Nll),
            ["sorted_1 (easiest)", "sorted_2", "sorted_3", "sorted_4 (hardest)"]
        );
        assert_eq!(
            sorted_split_names(2, Metric::Mrr),
            ["sorted_1 (hardest)", "sorted_2 (easiest)"]
        );
    }

    fn set(lang: &str, rows: &[&[f64]]) -> ScoreSet {
        let recs = rows
            .iter()
            .enumerate()
            .map(|(i, lp)| ScoredSequence {
                lang: LanguageCode::new(lang).unwrap(),
                sample_id: i as u64,
                tokens: lp.iter().map(|_| "x".to_string()).collect(),
                logprobs: lp.to_vec(),
                ranks: Some(vec![1; lp.len()]),
                char_count: 3,
            })
            .collect();
        ScoreSet::new(recs, lang).unwrap()
    }

    #[test]
    fn identical_scores_are_always_inconsistent() {
        let s = set("eng", &[&[-1.0], &[-2.0], &[-0.5]]);
        let d = set("deu", &[&[-1.0], &[-2.0], &[-0.5]]);
        let paras: Vec<(String, &ScoreSet)> = (0..4).map(|i| (alloc::format!("DE{i}"), &d)).collect();
        let r = run_consistency(&s, &paras, Metric::Nll, Default::default()).unwrap();
        assert_eq!(r.inconsistency_rate, 1.0);
        assert_eq!(r.n(), 3);
    }

    #[test]
    fn separated_source_is_consistent() {
        let s = set("eng", &[&[-11.0], &[-12.0]]);
        let d1 = set("deu", &[&[-1.0], &[-2.0]]);
        let d2 = set("deu", &[&[-1.5], &[-0.2]]);
        let paras = vec![("DE1".to_string(), &d1), ("DE2".to_string(), &d2)];
        let r = run_consistency(&s, &paras, Metric::Nll, Default::default()).unwrap();
        assert_eq!(r.inconsistency_rate, 0.0);
        assert_eq!(r.splits_original.verdict, Verdict::Consistent);
        assert_eq!(r.splits_sorted.verdict, Verdict::Consistent);
        assert_eq!(r.splits_original.names, ["DE1", "DE2"]);
    }

    #[test]
    fn run_errors() {
        let s = set("eng", &[&[-1.0], &[-2.0]]);
        let short = set("deu", &[&[-1.0]]);
        let ok = set("deu", &[&[-1.0], &[-2.0]]);
        let paras = vec![("DE1".to_string(), &ok), ("DE2".to_string(), &short)];
        assert_eq!(
            run_consistency(&s, &paras, Metric::Nll, Default::default()).unwrap_err(),
            ConsistencyError::Misaligned {
                split: "DE2".into(),
                sample_id: 1
            }
        );
        let paras = vec![("DE1".to_string(), &ok), ("DE2".to_string(), &ok)];
        assert_eq!(
            run_consistency(&s, &paras, Metric::Ppl, Default::default()).unwrap_err(),
            ConsistencyError::PplNotRequested
        );
        assert!(run_consistency(&s, &paras, Metric::Ppl, ConsistencyOptions { allow_ppl: true }).is_ok());
        assert!(matches!(
            run_consistency(&s, &paras, Metric::TotalBits, Default::default()),
            Err(ConsistencyError::UnsupportedMetric(_))
        ));
        let mut unranked = ok.clone().into_records();
        unranked[0].ranks = None;
        let unranked = ScoreSet::new(unranked, "de2.jsonl").unwrap();
        let paras = vec![("DE1".to_string(), &ok), ("DE2".to_string(), &unranked)];
        assert_eq!(
            run_consistency(&s, &paras, Metric::Mrr, Default::default()).unwrap_err(),
            ConsistencyError::Metric(MetricError::MrrUnavailable {
                provenance: "de2.jsonl".into()
            })
        );
    }

    #[test]
    fn figure_data_sorted_by_source() {
        let s = set("eng", &[&[-3.0], &[-1.0], &[-2.0]]);
        let d = set("deu", &[&[-1.0], &[-2.0], &[-0.5]]);
        let paras = vec![("A".to_string(), &d), ("B".to_string(), &d)];
        let r = run_consistency(&s, &paras, Metric::Nll, Default::default()).unwrap();
        let ids: Vec<u64> = r.figure_data().iter().map(|v| v.sample_id).collect();
        assert_eq!(ids, [1, 2, 0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
            (1usize..20, 2usize..6).prop_flat_map(|(n, k)| {
                (
                    proptest::collection::vec(-50.0f64..50.0, n),
                    proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, k), n),
                )
            })
        }

        proptest! {
            #[test]
            fn sorted_split_properties((_, m) in matrix()) {
                let s = sorted_splits(&m).unwrap();
                let k = m[0].len();
                let means: Vec<f64> = (0..k).map(|j| mean(s.iter().map(|r| r[j]))).collect();
                prop_assert!(means.windows(2).all(|w| w[0] <= w[1]));
                for (a, b) in m.iter().zip(&s) {
                    let mut a = a.clone();
                    a.sort_by(f64::total_cmp);
                    prop_assert_eq!(&a, b);
                }
                prop_assert_eq!(sorted_splits(&s).unwrap(), s);
            }

            #[test]
            fn same_side_everywhere_implies_sorted_consistency((src, m) in matrix(), above: bool) {
                // push every source value strictly beyond its row on one side
                let src: Vec<f64> = src.iter().zip(&m).map(|(s, r)| {
                    let (lo, hi) = min_max(r);
                    if above { hi + 1.0 + s.abs() } else { lo - 1.0 - s.abs() }
                }).collect();
                let names = names(m[0].len());
                let sorted = sorted_splits(&m).unwrap();
                prop_assert_eq!(split_level_verdict(&src, &sorted, names).unwrap().verdict, Verdict::Consistent);
            }

            #[test]
            fn concatenated_rate_is_weighted_mean(a in proptest::collection::vec(any::<bool>(), 1..30), b in proptest::collection::vec(any::<bool>(), 1..30)) {
                let mk = |v: &[bool]| -> Vec<SampleVerdict> { v.iter().map(|&c| SampleVerdict {
                    sample_id: 0, source_value: 0.0, paraphrase_values: vec![],
                    verdict: if c { Verdict::Consistent } else { Verdict::Inconsistent },
                }).collect() };
                let (va, vb) = (mk(&a), mk(&b));
                let mut all = va.clone();
                all.extend(vb.clone());
                let expect = (inconsistency_rate(&va).unwrap() * a.len() as f64 + inconsistency_rate(&vb).unwrap() * b.len() as f64) / (a.len() + b.len()) as f64;
                let rate = inconsistency_rate(&all).unwrap();
                prop_assert!((rate - expect).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&rate));
            }
        }
    }
}
