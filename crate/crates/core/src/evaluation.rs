//! Accuracy and feature-relevance metrics.
//!
//! All metrics run in f64: predictions come from floating-point models, and
//! mutual information needs logarithms, so exact rationals stop paying for
//! themselves past the labeling stage. Exact-integer cases (identical
//! vectors, zero errors) still come out exact in f64.

use std::collections::BTreeMap;

use gqlcost_ml::Mat64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::quantile_sorted;

/// Quantiles reported for the error-percentage distribution. The top one
/// clips the display at the 99.5th percentile; computation never clips.
pub const ERROR_QUANTILES: [f64; 6] = [0.05, 0.25, 0.5, 0.75, 0.95, 0.995];

/// Default bin count for mutual information.
pub const MI_BINS: usize = 32;

/// Mean absolute error (1/n)·Σ|actual − predicted|.
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Eval(format!(
            "length mismatch: {} actuals vs {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Eval("mae of empty vectors".to_string()));
    }
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    Ok(total / actual.len() as f64)
}

/// Signed relative error (predicted − actual)/actual; negative means
/// underestimation. Undefined for a zero actual.
pub fn error_percent(actual: f64, predicted: f64) -> Result<f64> {
    if actual == 0.0 {
        return Err(Error::Eval(
            "error percentage is undefined for a zero actual cost".to_string(),
        ));
    }
    Ok((predicted - actual) / actual)
}

/// Accuracy summary of one estimator on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    /// Population standard deviation of the absolute errors.
    pub mae_std: f64,
    /// Error-percentage quantiles over records with a nonzero label,
    /// keyed by quantile ("0.05" … "0.995").
    pub error_percent_quantiles: BTreeMap<String, f64>,
    /// Number of records scored.
    pub n: usize,
    /// Records with label 0, excluded from the error-percentage
    /// distribution but counted here rather than dropped silently.
    pub zero_label_count: usize,
}

/// Scores one prediction vector against labels.
pub fn eval_report(labels: &[f64], predictions: &[f64]) -> Result<EvalReport> {
    let mean_abs = mae(labels, predictions)?;
    let n = labels.len();
    let abs_errors: Vec<f64> = labels
        .iter()
        .zip(predictions)
        .map(|(a, p)| (a - p).abs())
        .collect();
    let variance =
        abs_errors.iter().map(|e| (e - mean_abs).powi(2)).sum::<f64>() / n as f64;

    let mut percents: Vec<f64> = Vec::new();
    let mut zero_label_count = 0usize;
    for (a, p) in labels.iter().zip(predictions) {
        if *a == 0.0 {
            zero_label_count += 1;
        } else {
            percents.push(error_percent(*a, *p)?);
        }
    }
    percents.sort_by(|x, y| x.partial_cmp(y).expect("finite error percentages"));
    let mut quantiles = BTreeMap::new();
    if !percents.is_empty() {
        for q in ERROR_QUANTILES {
            quantiles.insert(q.to_string(), quantile_sorted(&percents, q));
        }
    }
    Ok(EvalReport {
        mae: mean_abs,
        mae_std: variance.sqrt(),
        error_percent_quantiles: quantiles,
        n,
        zero_label_count,
    })
}

/// One test record scored by both estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordTriple {
    pub label: f64,
    #[serde(rename = "static")]
    pub static_bound: f64,
    pub ml: f64,
}

/// Paired evaluation of the ML estimator against the static bound on
/// identical records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub ml: EvalReport,
    #[serde(rename = "static")]
    pub static_report: EvalReport,
    /// Per-record (label, static, ml) triples for external plotting.
    pub records: Vec<RecordTriple>,
}

pub fn compare(labels: &[f64], static_bounds: &[f64], ml: &[f64]) -> Result<CompareReport> {
    if labels.len() != static_bounds.len() || labels.len() != ml.len() {
        return Err(Error::Eval(format!(
            "length mismatch: {} labels, {} static bounds, {} ml predictions",
            labels.len(),
            static_bounds.len(),
            ml.len()
        )));
    }
    Ok(CompareReport {
        ml: eval_report(labels, ml)?,
        static_report: eval_report(labels, static_bounds)?,
        records: labels
            .iter()
            .zip(static_bounds)
            .zip(ml)
            .map(|((l, s), m)| RecordTriple {
                label: *l,
                static_bound: *s,
                ml: *m,
            })
            .collect(),
    })
}

/// CSV rendering of the per-record triples (`label,static,ml`).
pub fn triples_csv(report: &CompareReport) -> String {
    let mut out = String::from("label,static,ml\n");
    for t in &report.records {
        out.push_str(&format!("{},{},{}\n", t.label, t.static_bound, t.ml));
    }
    out
}

/// Assigns each value an equal-frequency bin in `0..bins`: values are
/// ranked and rank r of n lands in bin ⌊r·bins/n⌋, except that equal
/// values always share the bin of their first rank — a constant column
/// occupies a single bin instead of being smeared across all of them.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .partial_cmp(&values[j])
            .expect("finite values")
            .then(i.cmp(&j))
    });
    let mut assignment = vec![0usize; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let bin = start * bins / n;
        for &idx in &order[start..=end] {
            assignment[idx] = bin;
        }
        start = end + 1;
    }
    assignment
}

fn entropy_of_counts(counts: &[usize], n: usize) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Entropy (nats) of the equal-frequency binning of `values`.
pub fn binned_entropy(values: &[f64], bins: usize) -> f64 {
    let assignment = equal_frequency_bins(values, bins);
    let mut counts = vec![0usize; bins];
    for b in assignment {
        counts[b] += 1;
    }
    entropy_of_counts(&counts, values.len())
}

/// Mutual information (nats) between a feature column and the labels,
/// estimated on an equal-frequency binned joint histogram with a
/// Miller–Madow bias correction, floored at zero.
pub fn mutual_information(column: &[f64], labels: &[f64], bins: usize) -> Result<f64> {
    if column.len() != labels.len() {
        return Err(Error::Eval(format!(
            "length mismatch: {} column values vs {} labels",
            column.len(),
            labels.len()
        )));
    }
    if bins == 0 {
        return Err(Error::Eval("mutual information needs bins ≥ 1".to_string()));
    }
    let n = column.len();
    if n < bins {
        return Err(Error::Eval(format!(
            "mutual information needs at least as many samples as bins ({n} < {bins})"
        )));
    }
    let x_bins = equal_frequency_bins(column, bins);
    let y_bins = equal_frequency_bins(labels, bins);
    let mut joint = vec![0usize; bins * bins];
    let mut x_counts = vec![0usize; bins];
    let mut y_counts = vec![0usize; bins];
    for (&bx, &by) in x_bins.iter().zip(&y_bins) {
        joint[bx * bins + by] += 1;
        x_counts[bx] += 1;
        y_counts[by] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for bx in 0..bins {
        for by in 0..bins {
            let c = joint[bx * bins + by];
            if c == 0 {
                continue;
            }
            let p_xy = c as f64 / nf;
            let p_x = x_counts[bx] as f64 / nf;
            let p_y = y_counts[by] as f64 / nf;
            mi += p_xy * (p_xy / (p_x * p_y)).ln();
        }
    }
    // Miller–Madow: plug-in MI is biased upward by roughly
    // (nonempty joint cells − nonempty x bins − nonempty y bins + 1)/(2n).
    let k_xy = joint.iter().filter(|&&c| c > 0).count() as f64;
    let k_x = x_counts.iter().filter(|&&c| c > 0).count() as f64;
    let k_y = y_counts.iter().filter(|&&c| c > 0).count() as f64;
    let correction = ((k_xy - k_x - k_y + 1.0) / (2.0 * nf)).max(0.0);
    Ok((mi - correction).max(0.0))
}

/// Scores every named column against the labels and returns the ranking,
/// best first (ties broken by name).
pub fn mi_ranking(
    names: &[String],
    columns: &Mat64,
    labels: &[f64],
    bins: usize,
) -> Result<Vec<(String, f64)>> {
    if names.len() != columns.n_cols() {
        return Err(Error::Eval(format!(
            "{} names for {} columns",
            names.len(),
            columns.n_cols()
        )));
    }
    let mut scores = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let column = columns.column(j);
        scores.push((name.clone(), mutual_information(&column, labels, bins)?));
    }
    scores.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite MI")
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(scores)
}
