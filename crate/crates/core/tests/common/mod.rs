//! Instance builders shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use quadsky::skyex::{metric_series, GroundTruth};
use quadsky::SkylinePartition;

/// `n` vectors of `d` values drawn from a grid of `steps + 1` points in
/// [0, 1], so equal coordinates and equal vectors are common.
pub fn grid_vectors(rng: &mut ChaCha8Rng, n: usize, d: usize, steps: u32) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen_range(0..=steps) as f64 / steps as f64)
                .collect()
        })
        .collect()
}

/// Partition with `levels` levels of random size and labels, shuffled so
/// indices do not follow level order. Never degenerate.
pub fn random_labeled(
    rng: &mut ChaCha8Rng,
    levels: usize,
    max_size: usize,
) -> (SkylinePartition, GroundTruth) {
    loop {
        let sizes: Vec<usize> = (0..levels).map(|_| rng.gen_range(1..=max_size)).collect();
        let rates: Vec<f64> = (0..levels).map(|_| rng.gen::<f64>()).collect();
        let (p, t) = build(rng, &sizes, |k, _| rates[k]);
        if t.check_not_degenerate().is_ok() {
            let missed = rng.gen_range(0..3);
            return (p, t.with_missed(missed));
        }
    }
}

/// Partition whose per-level share of positives is non-increasing in k,
/// so positives never get denser further down. Never degenerate.
pub fn assumption_one(
    rng: &mut ChaCha8Rng,
    levels: usize,
    max_size: usize,
) -> (SkylinePartition, GroundTruth) {
    loop {
        let sizes: Vec<usize> = (0..levels).map(|_| rng.gen_range(1..=max_size)).collect();
        let mut shares: Vec<f64> = (0..levels).map(|_| rng.gen::<f64>()).collect();
        shares.sort_by(|a, b| b.total_cmp(a));
        // exact counts: floor keeps tp_k / size_k <= share_k, then enforce
        // the ratio order directly
        let mut tps: Vec<usize> = sizes
            .iter()
            .zip(&shares)
            .map(|(&s, &q)| (q * s as f64).floor() as usize)
            .collect();
        for k in 1..levels {
            // tp_k / s_k <= tp_{k-1} / s_{k-1}
            let cap = tps[k - 1] * sizes[k] / sizes[k - 1];
            tps[k] = tps[k].min(cap);
        }
        let (p, t) = build(rng, &sizes, |k, i| if i < tps[k] { 1.0 } else { 0.0 });
        if t.check_not_degenerate().is_ok() {
            return (p, t);
        }
    }
}

/// Lays out levels of the given sizes over shuffled indices; `rate(k, i)` is
/// the probability that the i-th member of level k is a positive.
fn build(
    rng: &mut ChaCha8Rng,
    sizes: &[usize],
    rate: impl Fn(usize, usize) -> f64,
) -> (SkylinePartition, GroundTruth) {
    let total: usize = sizes.iter().sum();
    let mut ids: Vec<usize> = (0..total).collect();
    ids.shuffle(rng);
    let mut labels = vec![false; total];
    let mut levels = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for (k, &s) in sizes.iter().enumerate() {
        let level: Vec<usize> = ids[at..at + s].to_vec();
        for (i, &id) in level.iter().enumerate() {
            let r = rate(k, i);
            labels[id] = r >= 1.0 || (r > 0.0 && rng.gen::<f64>() < r);
        }
        levels.push(level);
        at += s;
    }
    (
        SkylinePartition::from_levels(levels),
        GroundTruth::new(labels),
    )
}

/// Exhaustive F1 scan straight from the confusion counts, comparing the
/// fractions 2tp / (|predicted| + |positives|) exactly. Returns the first k
/// reaching the maximum and that maximum as a fraction.
pub fn brute_best_f1(partition: &SkylinePartition, truth: &GroundTruth) -> (usize, (u128, u128)) {
    let total = truth.total_positives() as u128;
    let (mut best_k, mut best) = (0, (0u128, 1u128));
    let mut predicted = 0u128;
    for k in 1..=partition.depth() {
        predicted += partition.levels()[k - 1].len() as u128;
        let tp = partition.levels()[..k]
            .iter()
            .flatten()
            .filter(|&&i| truth.labels[i])
            .count() as u128;
        let f = (2 * tp, predicted + total);
        if best_k == 0 || f.0 * best.1 > best.0 * f.1 {
            best = f;
            best_k = k;
        }
    }
    (best_k, best)
}

/// Cumulative precision is non-increasing over the levels.
pub fn precision_non_increasing(partition: &SkylinePartition, truth: &GroundTruth) -> bool {
    let s = metric_series(partition, truth);
    s.windows(2).all(|w| w[1].precision <= w[0].precision)
}

/// F1 rises (weakly) to one peak or plateau and never rises after falling.
pub fn single_peak(f1: &[f64]) -> bool {
    let mut fallen = false;
    for w in f1.windows(2) {
        if w[1] < w[0] {
            fallen = true;
        } else if w[1] > w[0] && fallen {
            return false;
        }
    }
    true
}
