//! Skyline ranking: assigns every pair the Pareto level of its similarity
//! vector by iterative peeling.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{PairSet, SkylinePartition};

/// `u` dominates `v`: at least as similar everywhere and strictly more
/// similar somewhere.
pub fn dominates(u: &[f64], v: &[f64]) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(dom(u, v))
}

#[inline]
pub(crate) fn dom(u: &[f64], v: &[f64]) -> bool {
    let mut strict = false;
    for (a, b) in u.iter().zip(v) {
        if a < b {
            return false;
        }
        strict |= a > b;
    }
    strict
}

fn check_dims<S: AsRef<[f64]>>(vectors: &[S]) -> Result<usize> {
    let first = vectors
        .first()
        .ok_or(Error::EmptyInput("no pairs to rank"))?;
    let d = first.as_ref().len();
    for v in vectors {
        if v.as_ref().len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: v.as_ref().len(),
            });
        }
    }
    Ok(d)
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Orders indices so that no vector is dominated by a later one: by
/// coordinate sum descending, then lexicographically descending.
fn presort<S: AsRef<[f64]>>(vectors: &[S]) -> Vec<usize> {
    let sums: Vec<f64> = vectors.iter().map(|v| v.as_ref().iter().sum()).collect();
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| {
        sums[b]
            .total_cmp(&sums[a])
            .then_with(|| lex_desc(vectors[a].as_ref(), vectors[b].as_ref()))
            .then(a.cmp(&b))
    });
    order
}

/// Full skyline partition. Equal vectors always share a level.
///
/// Vectors are visited in dominance-compatible order and each is placed,
/// by binary search over the existing levels, right after the deepest level
/// holding one of its dominators. Duplicates are collapsed first so each
/// distinct vector is tested once.
pub fn peel<S: AsRef<[f64]>>(vectors: &[S]) -> Result<SkylinePartition> {
    check_dims(vectors)?;
    let order = presort(vectors);

    // distinct vectors in presort order, with level per distinct vector
    let mut distinct: Vec<usize> = Vec::new();
    let mut group_of = vec![0usize; vectors.len()];
    for &i in &order {
        match distinct.last() {
            Some(&r) if vectors[r].as_ref() == vectors[i].as_ref() => {}
            _ => distinct.push(i),
        }
        group_of[i] = distinct.len() - 1;
    }

    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut level_of_group = vec![0u32; distinct.len()];
    for (g, &i) in distinct.iter().enumerate() {
        let v = vectors[i].as_ref();
        let dominated_by =
            |front: &Vec<usize>| front.iter().rev().any(|&j| dom(vectors[j].as_ref(), v));
        // fronts[..lo] all dominate v, fronts[hi..] none do
        let (mut lo, mut hi) = (0, fronts.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if dominated_by(&fronts[mid]) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == fronts.len() {
            fronts.push(Vec::new());
        }
        fronts[lo].push(i);
        level_of_group[g] = lo as u32 + 1;
    }

    let assignment: Vec<u32> = group_of.iter().map(|&g| level_of_group[g]).collect();
    Ok(SkylinePartition::from_assignment(&assignment))
}

/// Lazily computed skyline levels, one block-nested-loop pass per level.
/// Lets a consumer stop early without paying for the remaining levels.
pub struct SkylineLevels<'a, S> {
    vectors: &'a [S],
    remaining: Vec<usize>,
    produced: usize,
}

impl<'a, S: AsRef<[f64]>> SkylineLevels<'a, S> {
    pub fn new(vectors: &'a [S]) -> Result<Self> {
        check_dims(vectors)?;
        Ok(Self {
            vectors,
            remaining: presort(vectors),
            produced: 0,
        })
    }

    /// Levels produced so far.
    pub fn produced(&self) -> usize {
        self.produced
    }
}

impl<S: AsRef<[f64]>> Iterator for SkylineLevels<'_, S> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining.is_empty() {
            return None;
        }
        let mut window: Vec<usize> = Vec::new();
        let mut rest = Vec::new();
        for &i in &self.remaining {
            let v = self.vectors[i].as_ref();
            // presorted: only earlier vectors can dominate v
            if window.iter().any(|&w| dom(self.vectors[w].as_ref(), v)) {
                rest.push(i);
            } else {
                window.push(i);
            }
        }
        self.remaining = rest;
        self.produced += 1;
        window.sort_unstable();
        Some(window)
    }
}

/// Writes 1-based levels into each pair's `skyline_level`.
pub fn fill_levels(pairs: &mut PairSet, partition: &SkylinePartition) {
    for (k, level) in partition.levels().iter().enumerate() {
        for &i in level {
            pairs.pairs[i].skyline_level = Some(k as u32 + 1);
        }
    }
}

/// Ranks a pair set in place and returns its partition.
pub fn rank(pairs: &mut PairSet) -> Result<SkylinePartition> {
    let partition = peel(&pairs.deltas())?;
    fill_levels(pairs, &partition);
    Ok(partition)
}

/// Checks the partition laws against the vectors: disjoint cover, no
/// domination inside a level, and every member of level k+1 dominated by
/// some member of level k. Quadratic; meant for tests and audits.
pub fn check_partition<S: AsRef<[f64]>>(
    vectors: &[S],
    partition: &SkylinePartition,
) -> std::result::Result<(), String> {
    let mut seen = vec![false; vectors.len()];
    for level in partition.levels() {
        if level.is_empty() {
            return Err("empty level".into());
        }
        for &i in level {
            if i >= vectors.len() || std::mem::replace(&mut seen[i], true) {
                return Err(format!("item {i} out of range or repeated"));
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(format!("item {i} missing from partition"));
    }
    let levels = partition.levels();
    for (k, level) in levels.iter().enumerate() {
        for &a in level {
            for &b in level {
                if dom(vectors[a].as_ref(), vectors[b].as_ref()) {
                    return Err(format!("level {}: {a} dominates {b}", k + 1));
                }
            }
            if k > 0
                && !levels[k - 1]
                    .iter()
                    .any(|&p| dom(vectors[p].as_ref(), vectors[a].as_ref()))
            {
                return Err(format!("level {}: {a} not dominated by level {k}", k + 1));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.9, 0.8], &[0.5, 0.8]).unwrap());
        assert!(!dominates(&[0.9, 0.2], &[0.2, 0.9]).unwrap());
        assert!(!dominates(&[0.5, 0.5], &[0.5, 0.5]).unwrap());
        assert!(dominates(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn peel_examples() {
        let p = peel(&[vec![1.0, 1.0], vec![0.5, 0.9], vec![0.2, 0.2]]).unwrap();
        assert_eq!(p.levels(), &[vec![0], vec![1], vec![2]]);
        let p = peel(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.levels(), &[vec![0, 1]]);
        let p = peel(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(p.levels(), &[vec![0, 1]]);
        assert!(matches!(peel::<Vec<f64>>(&[]), Err(Error::EmptyInput(_))));
        assert!(peel(&[vec![0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn streamed_levels_match_peel() {
        let v = vec![
            vec![0.3, 0.9, 0.1],
            vec![0.3, 0.9, 0.1],
            vec![0.8, 0.2, 0.5],
            vec![0.1, 0.1, 0.1],
            vec![0.9, 0.9, 0.9],
            vec![0.2, 0.8, 0.0],
        ];
        let p = peel(&v).unwrap();
        let streamed: Vec<Vec<usize>> = SkylineLevels::new(&v).unwrap().collect();
        assert_eq!(p.levels(), streamed.as_slice());
        check_partition(&v, &p).unwrap();
    }

    #[test]
    fn checker_rejects_bad_partitions() {
        let v = vec![vec![1.0, 1.0], vec![0.5, 0.5]];
        let bad = SkylinePartition::from_levels(vec![vec![0, 1]]);
        assert!(check_partition(&v, &bad).is_err());
        let missing = SkylinePartition::from_levels(vec![vec![0]]);
        assert!(check_partition(&v, &missing).is_err());
    }
}
