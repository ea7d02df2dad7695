//! Confusion-matrix metrics over skyline cut-offs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SkylinePartition;

/// Labels for the ranked pairs, plus true matches the candidate set never
/// contained (they count as false negatives at every cut-off).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub labels: Vec<bool>,
    pub missed_positives: usize,
}

impl GroundTruth {
    pub fn new(labels: Vec<bool>) -> Self {
        Self {
            labels,
            missed_positives: 0,
        }
    }

    pub fn with_missed(mut self, missed: usize) -> Self {
        self.missed_positives = missed;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// All true matches, inside and outside the candidate set.
    pub fn total_positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count() + self.missed_positives
    }

    /// Rejects truths where every candidate pair has the same label.
    pub fn check_not_degenerate(&self) -> Result<()> {
        if self.labels.iter().all(|&l| l) {
            return Err(Error::DegenerateLabels("positive"));
        }
        if self.labels.iter().all(|&l| !l) {
            return Err(Error::DegenerateLabels("negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Confusion {
    pub fn metrics(&self) -> Metrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        // 2pr / (p + r) as one division, so equal F1 values are bit-equal
        let f1 = ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_);
        Metrics {
            precision,
            recall,
            f1,
        }
    }
}

/// Metrics of the cut-off after level `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub k: usize,
    pub level_size: usize,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Metrics of a positive/negative split; pairs not listed count as neither.
pub fn compute_metrics(positives: &[usize], negatives: &[usize], truth: &GroundTruth) -> Metrics {
    confusion(positives, negatives, truth).metrics()
}

pub fn confusion(positives: &[usize], negatives: &[usize], truth: &GroundTruth) -> Confusion {
    let tp = positives.iter().filter(|&&i| truth.labels[i]).count();
    let fn_in = negatives.iter().filter(|&&i| truth.labels[i]).count();
    Confusion {
        tp,
        fp: positives.len() - tp,
        fn_: fn_in + truth.missed_positives,
        tn: negatives.len() - fn_in,
    }
}

/// Incremental confusion matrices as levels are added to the positive side.
#[derive(Clone, Debug)]
pub struct MetricAccumulator<'a> {
    truth: &'a GroundTruth,
    total_positives: usize,
    total: usize,
    tp: usize,
    taken: usize,
    k: usize,
}

impl<'a> MetricAccumulator<'a> {
    pub fn new(truth: &'a GroundTruth) -> Self {
        Self {
            truth,
            total_positives: truth.total_positives(),
            total: truth.labels.len(),
            tp: 0,
            taken: 0,
            k: 0,
        }
    }

    /// Moves one more level to the positive side.
    pub fn push(&mut self, level: &[usize]) -> LevelMetrics {
        self.k += 1;
        self.tp += level.iter().filter(|&&i| self.truth.labels[i]).count();
        self.taken += level.len();
        let confusion = Confusion {
            tp: self.tp,
            fp: self.taken - self.tp,
            fn_: self.total_positives - self.tp,
            tn: (self.total - self.taken)
                - (self.total_positives - self.truth.missed_positives - self.tp),
        };
        let m = confusion.metrics();
        LevelMetrics {
            k: self.k,
            level_size: level.len(),
            confusion,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }
}

/// Metrics for every cut-off `k = 1..=K`.
pub fn metric_series(partition: &SkylinePartition, truth: &GroundTruth) -> Vec<LevelMetrics> {
    let mut acc = MetricAccumulator::new(truth);
    partition.levels().iter().map(|l| acc.push(l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn formula_examples() {
        let c = Confusion {
            tp: 6,
            fp: 2,
            fn_: 4,
            tn: 0,
        };
        let m = c.metrics();
        assert_eq!((m.precision, m.recall), (0.75, 0.6));
        assert_abs_diff_eq!(m.f1, 2.0 / 3.0, epsilon = 1e-12);

        let truth = GroundTruth::new(vec![true, false, true]);
        let m = compute_metrics(&[], &[0, 1, 2], &truth);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        let m = compute_metrics(&[0, 2], &[1], &truth);
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn series_matches_direct_computation() {
        let truth = GroundTruth::new(vec![true, false, true, true, false]).with_missed(2);
        let p = SkylinePartition::from_levels(vec![vec![0, 2], vec![1], vec![3, 4]]);
        let series = metric_series(&p, &truth);
        for s in &series {
            let pos: Vec<usize> = p.top(s.k).collect();
            let neg: Vec<usize> = p.levels()[s.k..].iter().flatten().copied().collect();
            let c = confusion(&pos, &neg, &truth);
            assert_eq!(s.confusion, c);
            assert_eq!(s.f1, c.metrics().f1);
        }
    }

    #[test]
    fn degenerate_truth() {
        assert!(GroundTruth::new(vec![true, true])
            .check_not_degenerate()
            .is_err());
        assert!(GroundTruth::new(vec![false])
            .check_not_degenerate()
            .is_err());
        assert!(GroundTruth::new(vec![false, true])
            .check_not_degenerate()
            .is_ok());
    }
}
