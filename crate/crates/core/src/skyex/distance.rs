//! Label-free cut-off from the mean inter-class distance profile.

use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassificationResult, Method, SkylinePartition};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMetric {
    #[default]
    Euclidean,
    Manhattan,
}

impl DeltaMetric {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DeltaMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            DeltaMetric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeltaMetric::Euclidean => "euclidean",
            DeltaMetric::Manhattan => "manhattan",
        }
    }
}

impl FromStr for DeltaMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DeltaMetric::Euclidean),
            "manhattan" => Ok(DeltaMetric::Manhattan),
            other => Err(Error::param(
                "delta-metric",
                format!("expected euclidean|manhattan, got {other:?}"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    pub window: usize,
    pub sigma: f64,
    pub metric: DeltaMetric,
    /// Divide the cross-distance sum by |P+| only instead of |P+|·|P-|.
    pub eq3_literal: bool,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            window: 5,
            sigma: 1.0,
            metric: DeltaMetric::Euclidean,
            eq3_literal: false,
        }
    }
}

impl DistanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::param("window", "must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "must be positive"));
        }
        Ok(())
    }
}

/// `mu[k-1]` is the mean distance between levels `1..=k` and `k+1..=K`,
/// for `k = 1..K-1`; `derivative[k-1] = mu[k] - mu[k-1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub mu: Vec<f64>,
    pub derivative: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub window: usize,
    pub sigma: f64,
}

/// Rows per work unit; fixed so the summation order does not depend on the
/// thread count.
const CHUNK: usize = 64;

/// Inter-class mean distance for every cut-off.
pub fn mu_profile<S: AsRef<[f64]> + Sync>(
    partition: &SkylinePartition,
    deltas: &[S],
    config: &DistanceConfig,
) -> Result<DistanceProfile> {
    config.validate()?;
    let k_total = partition.depth();
    if k_total < 3 {
        return Err(Error::TooFewLevels(k_total));
    }
    if partition.pair_count() != deltas.len() {
        return Err(Error::param(
            "partition",
            format!(
                "{} pairs ranked but {} vectors given",
                partition.pair_count(),
                deltas.len()
            ),
        ));
    }

    // Identical vectors share a level; collapse them to weighted points.
    let assignment = partition.assignment();
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| {
        deltas[a]
            .as_ref()
            .iter()
            .zip(deltas[b].as_ref())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut points: Vec<(&[f64], usize, f64)> = Vec::new(); // (vector, level index, weight)
    for &i in &order {
        let v = deltas[i].as_ref();
        match points.last_mut() {
            Some(last) if last.0 == v => last.2 += 1.0,
            _ => points.push((v, assignment[i] as usize - 1, 1.0)),
        }
    }

    // step[l]: change of the cross sum when level l moves to the positive side.
    let metric = config.metric;
    let partials: Vec<Vec<f64>> = (0..points.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut step = vec![0.0; k_total];
            for i in c * CHUNK..((c + 1) * CHUNK).min(points.len()) {
                let (vi, li, wi) = points[i];
                for &(vj, lj, wj) in &points[i + 1..] {
                    if li == lj {
                        continue;
                    }
                    let d = wi * wj * metric.distance(vi, vj);
                    let (lo, hi) = if li < lj { (li, lj) } else { (lj, li) };
                    step[lo] += d;
                    step[hi] -= d;
                }
            }
            step
        })
        .collect();
    let mut step = vec![0.0; k_total];
    for p in &partials {
        for (s, x) in step.iter_mut().zip(p) {
            *s += x;
        }
    }

    let n = deltas.len() as f64;
    let sizes = partition.level_sizes();
    let mut cross = 0.0;
    let mut positives = 0.0;
    let mut mu = Vec::with_capacity(k_total - 1);
    for k in 0..k_total - 1 {
        cross += step[k];
        positives += sizes[k] as f64;
        let denom = if config.eq3_literal {
            positives
        } else {
            positives * (n - positives)
        };
        mu.push(cross.max(0.0) / denom);
    }
    let derivative: Vec<f64> = mu.windows(2).map(|w| w[1] - w[0]).collect();
    let smoothed = gaussian_smooth(&derivative, config.window, config.sigma);
    Ok(DistanceProfile {
        mu,
        derivative,
        smoothed,
        window: config.window,
        sigma: config.sigma,
    })
}

/// Discrete Gaussian smoothing; near the ends the kernel is truncated and
/// renormalized.
pub fn gaussian_smooth(series: &[f64], window: usize, sigma: f64) -> Vec<f64> {
    let radius = (window / 2) as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|o| (-(o * o) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let n = series.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (o, w) in (-radius..=radius).zip(&weights) {
                let j = i + o;
                if (0..n).contains(&j) {
                    acc += w * series[j as usize];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect()
}

/// First `k` (1-based) whose smoothed derivative is negative, falling back
/// to `K - 1`. Returns the cut-off and whether the fallback fired.
pub fn first_descent(profile: &DistanceProfile) -> (usize, bool) {
    match profile.smoothed.iter().position(|&s| s < 0.0) {
        Some(i) => (i + 1, false),
        None => (profile.mu.len(), true),
    }
}

/// SkyEx-D: cuts where the smoothed inter-class distance first decreases.
/// Consults no labels.
pub fn skyex_d<S: AsRef<[f64]> + Sync>(
    partition: &SkylinePartition,
    deltas: &[S],
    config: &DistanceConfig,
) -> Result<ClassificationResult> {
    let profile = mu_profile(partition, deltas, config)?;
    let (k, fallback) = first_descent(&profile);
    if fallback {
        warn!(
            "smoothed distance derivative never negative over {} levels; cutting at K-1 = {k}",
            partition.depth()
        );
    }
    let mut result = ClassificationResult::split(Method::D, partition, k);
    result.profile = Some(profile);
    Ok(result)
}
