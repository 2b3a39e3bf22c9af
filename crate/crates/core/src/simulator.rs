//! Rate-limit gateway simulation and adversarial robustness sweeps.
//!
//! A simulated gateway receives a stream of queries sampled with
//! replacement from a scored corpus, accepts a query when its estimated
//! cost fits the per-query threshold, and then observes the query's true
//! cost. Acceptance, budget adherence, and violations are averaged over
//! many trials; trials are paired across estimators and thresholds by
//! reusing the same per-trial seeds.

use std::fmt;
use std::str::FromStr;

use gqlcost_ml::substream;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::Schema;
use crate::cost::CostConfig;
use crate::dataset::{featurize_records, DatasetRecord};
use crate::error::{Error, Result};
use crate::model::StackedModel;
use crate::util::quantile_sorted;

pub const DEFAULT_N_SIMS: usize = 1000;
pub const DEFAULT_SAMPLE_SIZE: usize = 1000;
pub const DEFAULT_MULTIPLIERS: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0];

/// One corpus entry as the gateway sees it: the true cost and both
/// estimates for the same query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub label: f64,
    pub static_estimate: f64,
    pub ml_estimate: f64,
}

/// Which estimate the gateway consults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Static,
    Ml,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Static => write!(f, "static"),
            EstimatorKind::Ml => write!(f, "ml"),
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(EstimatorKind::Static),
            "ml" => Ok(EstimatorKind::Ml),
            other => Err(Error::Sim(format!(
                "unknown estimator {other:?} (expected \"static\" or \"ml\")"
            ))),
        }
    }
}

/// Gateway simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub threshold: f64,
    pub n_sims: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub estimator: EstimatorKind,
}

impl SimConfig {
    pub fn new(threshold: f64, estimator: EstimatorKind, seed: u64) -> Self {
        SimConfig {
            threshold,
            n_sims: DEFAULT_N_SIMS,
            sample_size: DEFAULT_SAMPLE_SIZE,
            seed,
            estimator,
        }
    }
}

/// Averaged gateway outcomes over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Fraction of sampled queries the gateway accepted.
    pub acceptance_rate: f64,
    /// Mean cumulative true cost of accepted queries after each step.
    pub cumulative_actual: Vec<f64>,
    /// Mean cumulative budget (threshold × accepted so far) after each step.
    pub cumulative_budget: Vec<f64>,
    /// Fraction of accepted queries whose true cost exceeded the threshold.
    pub violation_rate: f64,
    /// Mean relative excess (label − threshold) / threshold over violators.
    pub mean_violation_excess: f64,
}

/// Scores a labeled corpus with both estimators for gateway simulation.
pub fn score_records(
    model: &StackedModel,
    schema: &Schema,
    config: &CostConfig,
    records: &[DatasetRecord],
) -> Result<Vec<RecordScore>> {
    let tables = featurize_records(
        schema,
        config,
        &model.field_space,
        &model.graph_params,
        records,
    )?;
    let labels = tables.require_labels()?;
    let ml = model.predict_tables(&tables)?;
    Ok(labels
        .iter()
        .zip(&tables.static_bounds)
        .zip(&ml)
        .map(|((&label, &static_estimate), &ml_estimate)| RecordScore {
            label,
            static_estimate,
            ml_estimate,
        })
        .collect())
}

/// Runs the gateway simulation over a scored corpus.
pub fn simulate(corpus: &[RecordScore], cfg: &SimConfig) -> Result<SimReport> {
    if corpus.is_empty() {
        return Err(Error::Sim("corpus is empty".to_string()));
    }
    if cfg.n_sims == 0 || cfg.sample_size == 0 {
        return Err(Error::Sim(
            "n_sims and sample_size must be at least 1".to_string(),
        ));
    }
    if !cfg.threshold.is_finite() || cfg.threshold < 0.0 {
        return Err(Error::Sim(format!(
            "threshold must be finite and nonnegative, got {}",
            cfg.threshold
        )));
    }
    let mut sum_actual = vec![0.0f64; cfg.sample_size];
    let mut sum_budget = vec![0.0f64; cfg.sample_size];
    let mut accepted_total: u64 = 0;
    let mut violators: u64 = 0;
    let mut excess_sum = 0.0f64;
    for trial in 0..cfg.n_sims {
        let mut rng = ChaCha8Rng::seed_from_u64(substream(cfg.seed, trial as u64));
        let mut running_actual = 0.0f64;
        let mut accepted_so_far: u64 = 0;
        for step in 0..cfg.sample_size {
            let record = &corpus[rng.random_range(0..corpus.len())];
            let estimate = match cfg.estimator {
                EstimatorKind::Static => record.static_estimate,
                EstimatorKind::Ml => record.ml_estimate,
            };
            if estimate <= cfg.threshold {
                accepted_total += 1;
                accepted_so_far += 1;
                running_actual += record.label;
                if record.label > cfg.threshold {
                    violators += 1;
                    if cfg.threshold > 0.0 {
                        excess_sum += (record.label - cfg.threshold) / cfg.threshold;
                    }
                }
            }
            sum_actual[step] += running_actual;
            sum_budget[step] += cfg.threshold * accepted_so_far as f64;
        }
    }
    let n = cfg.n_sims as f64;
    let total_draws = (cfg.n_sims * cfg.sample_size) as f64;
    Ok(SimReport {
        acceptance_rate: accepted_total as f64 / total_draws,
        cumulative_actual: sum_actual.iter().map(|s| s / n).collect(),
        cumulative_budget: sum_budget.iter().map(|s| s / n).collect(),
        violation_rate: if accepted_total == 0 {
            0.0
        } else {
            violators as f64 / accepted_total as f64
        },
        mean_violation_excess: if violators == 0 || cfg.threshold == 0.0 {
            0.0
        } else {
            excess_sum / violators as f64
        },
    })
}

/// One threshold's paired simulation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    #[serde(rename = "static")]
    pub static_report: SimReport,
    pub ml_report: SimReport,
}

fn check_ascending(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Sim(format!("{what} list is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Sim(format!("{what} values must be finite")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Sim(format!(
            "{what} values must be strictly ascending"
        )));
    }
    Ok(())
}

/// Simulates both estimators at each threshold with paired samples.
pub fn threshold_sweep(
    corpus: &[RecordScore],
    thresholds: &[f64],
    n_sims: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    check_ascending(thresholds, "threshold")?;
    if thresholds.iter().any(|&t| t < 0.0) {
        return Err(Error::Sim("thresholds must be nonnegative".to_string()));
    }
    let mut points = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let mut cfg = SimConfig::new(threshold, EstimatorKind::Static, seed);
        cfg.n_sims = n_sims;
        cfg.sample_size = sample_size;
        let static_report = simulate(corpus, &cfg)?;
        cfg.estimator = EstimatorKind::Ml;
        let ml_report = simulate(corpus, &cfg)?;
        points.push(SweepPoint {
            threshold,
            static_report,
            ml_report,
        });
    }
    Ok(points)
}

/// Ten linearly spaced thresholds spanning the interesting range: from the
/// corpus label lower quartile up to where even the static estimator
/// accepts everything.
pub fn default_thresholds(corpus: &[RecordScore]) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::Sim("corpus is empty".to_string()));
    }
    let mut labels: Vec<f64> = corpus.iter().map(|r| r.label).collect();
    labels.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&labels, 0.25);
    let max_static = corpus
        .iter()
        .map(|r| r.static_estimate)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = (5.0 * quantile_sorted(&labels, 0.75)).max(1.1 * max_static);
    if hi <= lo {
        hi = lo + 1.0;
    }
    Ok((0..10)
        .map(|i| lo + (hi - lo) * i as f64 / 9.0)
        .collect())
}

/// Spearman rank correlation with average ranks on ties. Returns 0 when
/// either side has no rank variance or fewer than two points.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Sim(format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Ok(0.0);
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0f64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean 1-based rank.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// One step of an adversarial cost-inflation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub multiplier: f64,
    pub injected_bound: f64,
    pub estimate: f64,
}

/// Feature-level attack sweep: the query's static-bound summary feature is
/// inflated by each multiplier while everything else stays fixed, and the
/// model is asked for an estimate at each step. A robust estimator should
/// respond monotonically (plateaus allowed) and exactly match the clean
/// estimate at multiplier 1.
pub fn robustness_sweep(
    model: &StackedModel,
    schema: &Schema,
    config: &CostConfig,
    query_text: &str,
    multipliers: &[f64],
) -> Result<Vec<RobustnessPoint>> {
    check_ascending(multipliers, "multiplier")?;
    if multipliers.iter().any(|&m| m < 1.0) {
        return Err(Error::Sim("multipliers must be at least 1".to_string()));
    }
    let (field, graph, summary) = model.features_for_query(schema, config, query_text)?;
    let mut points = Vec::with_capacity(multipliers.len());
    for &multiplier in multipliers {
        let mut injected = summary.clone();
        injected[0] *= multiplier;
        let estimate = model.estimate_features(&field, &graph, &injected)?;
        points.push(RobustnessPoint {
            multiplier,
            injected_bound: injected[0],
            estimate,
        });
    }
    Ok(points)
}

/// CSV rendering of a threshold sweep (one row per threshold/estimator).
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(
        "threshold,estimator,acceptance_rate,violation_rate,mean_violation_excess\n",
    );
    for p in points {
        for (kind, report) in [
            (EstimatorKind::Static, &p.static_report),
            (EstimatorKind::Ml, &p.ml_report),
        ] {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.threshold,
                kind,
                report.acceptance_rate,
                report.violation_rate,
                report.mean_violation_excess,
            ));
        }
    }
    out
}

/// CSV rendering of a robustness sweep.
pub fn robustness_csv(points: &[RobustnessPoint]) -> String {
    let mut out = String::from("bound,estimate\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.injected_bound, p.estimate));
    }
    out
}
