//! Cut-off selection over skyline levels: levels `1..=k` are predicted
//! matches, the rest non-matches.

pub mod distance;
pub mod metrics;

pub use distance::{
    first_descent, gaussian_smooth, mu_profile, skyex_d, DeltaMetric, DistanceConfig,
    DistanceProfile,
};
pub use metrics::{
    compute_metrics, confusion, metric_series, Confusion, GroundTruth, LevelMetrics,
    MetricAccumulator, Metrics,
};

use crate::error::{Error, Result};
use crate::model::{ClassificationResult, Method, SkylinePartition};

fn check_truth(partition: &SkylinePartition, truth: &GroundTruth) -> Result<()> {
    if partition.depth() == 0 {
        return Err(Error::EmptyInput("empty skyline partition"));
    }
    if truth.len() != partition.pair_count() {
        return Err(Error::param(
            "truth",
            format!(
                "{} labels for {} pairs",
                truth.len(),
                partition.pair_count()
            ),
        ));
    }
    truth.check_not_degenerate()
}

/// First index of the maximum F1; earlier cut-offs win ties.
fn argmax_f1(series: &[LevelMetrics]) -> usize {
    let mut best = 0;
    for (i, m) in series.iter().enumerate() {
        if m.f1 > series[best].f1 {
            best = i;
        }
    }
    best
}

/// SkyEx-F: the cut-off with the best F1 over all levels.
pub fn skyex_f(partition: &SkylinePartition, truth: &GroundTruth) -> Result<ClassificationResult> {
    check_truth(partition, truth)?;
    let series = metric_series(partition, truth);
    let k = series[argmax_f1(&series)].k;
    let mut result = ClassificationResult::split(Method::F, partition, k);
    result.metric_series = Some(series);
    Ok(result)
}

/// Outcome of scanning a level stream for the first F1 drop.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStop {
    pub cutoff_k: usize,
    pub explored: usize,
    /// True when the stream ran out without a drop.
    pub exhausted: bool,
    pub series: Vec<LevelMetrics>,
    pub levels: Vec<Vec<usize>>,
}

/// Consumes levels until F1 strictly drops. The cut-off is the first level
/// of the final run of equal F1 values before the drop, so plateaus resolve
/// to the earliest cut-off as in [`skyex_f`].
pub fn early_stop<I>(levels: I, truth: &GroundTruth) -> EarlyStop
where
    I: IntoIterator<Item = Vec<usize>>,
{
    let mut acc = MetricAccumulator::new(truth);
    let mut series: Vec<LevelMetrics> = Vec::new();
    let mut taken = Vec::new();
    let mut plateau_start = 0;
    for level in levels {
        let m = acc.push(&level);
        taken.push(level);
        if let Some(prev) = series.last() {
            if m.f1 < prev.f1 {
                series.push(m);
                return EarlyStop {
                    cutoff_k: plateau_start + 1,
                    explored: series.len(),
                    exhausted: false,
                    series,
                    levels: taken,
                };
            }
            if m.f1 > prev.f1 {
                plateau_start = series.len();
            }
        }
        series.push(m);
    }
    EarlyStop {
        cutoff_k: plateau_start + 1,
        explored: series.len(),
        exhausted: true,
        series,
        levels: taken,
    }
}

/// SkyEx-FES over a materialized partition.
pub fn skyex_fes(
    partition: &SkylinePartition,
    truth: &GroundTruth,
) -> Result<ClassificationResult> {
    check_truth(partition, truth)?;
    let stop = early_stop(partition.levels().iter().cloned(), truth);
    let mut result = ClassificationResult::split(Method::Fes, partition, stop.cutoff_k);
    result.explored_levels = stop.explored;
    result.metric_series = Some(stop.series);
    Ok(result)
}

/// SkyEx-FES over lazily computed levels; levels after the stop point are
/// never computed. `truth` covers all pairs of the stream.
pub fn skyex_fes_stream<I>(levels: I, truth: &GroundTruth) -> Result<ClassificationResult>
where
    I: IntoIterator<Item = Vec<usize>>,
{
    truth.check_not_degenerate()?;
    let stop = early_stop(levels, truth);
    if stop.explored == 0 {
        return Err(Error::EmptyInput("empty skyline stream"));
    }
    let mut predicted = vec![false; truth.len()];
    let positives: Vec<usize> = stop.levels[..stop.cutoff_k]
        .iter()
        .flatten()
        .copied()
        .collect();
    for &i in &positives {
        predicted[i] = true;
    }
    let negatives = (0..truth.len()).filter(|&i| !predicted[i]).collect();
    Ok(ClassificationResult {
        method: Method::Fes,
        cutoff_k: stop.cutoff_k,
        positives,
        negatives,
        explored_levels: stop.explored,
        total_levels: stop.exhausted.then_some(stop.explored),
        metric_series: Some(stop.series),
        profile: None,
    })
}
