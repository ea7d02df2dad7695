//! Exhaustive reference implementations.

use rayon::prelude::*;

use crate::geo::{haversine, EARTH_RADIUS_M};
use crate::model::EntityCollection;
use crate::quadflex::IndexPair;
use crate::skyrank::dom;

/// Every pair within `r` meters great-circle distance, by exhaustive scan.
/// Pairs are ordered by entity key and sorted like
/// [`crate::quadflex::enumerate_pairs`] output.
pub fn oracle_fnn(collection: &EntityCollection, r: f64) -> Vec<IndexPair> {
    let ents = collection.entities();
    let ranks = collection.key_ranks();
    // great-circle distance is at least R times the latitude gap
    let max_dlat = (r / EARTH_RADIUS_M).to_degrees() * (1.0 + 1e-9);
    let mut codes: Vec<u64> = (0..ents.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = &ents[i];
            let ranks = &ranks;
            (i + 1..ents.len()).filter_map(move |j| {
                let b = &ents[j];
                if (a.lat - b.lat).abs() > max_dlat {
                    return None;
                }
                if haversine((a.lat, a.lon), (b.lat, b.lon)) > r {
                    return None;
                }
                let (x, y) = (ranks[i] as u64, ranks[j] as u64);
                Some(if x < y { (x << 32) | y } else { (y << 32) | x })
            })
        })
        .collect();
    codes.par_sort_unstable();
    let mut by_rank = vec![0u32; ranks.len()];
    for (idx, &r) in ranks.iter().enumerate() {
        by_rank[r as usize] = idx as u32;
    }
    codes
        .into_iter()
        .map(|c| IndexPair {
            left: by_rank[(c >> 32) as usize],
            right: by_rank[(c & 0xffff_ffff) as usize],
        })
        .collect()
}

/// Skyline level per vector by repeatedly extracting the non-dominated set
/// with full rescans.
pub fn oracle_skyline<S: AsRef<[f64]>>(vectors: &[S]) -> Vec<u32> {
    let mut level = vec![0u32; vectors.len()];
    let mut remaining: Vec<usize> = (0..vectors.len()).collect();
    let mut k = 0;
    while !remaining.is_empty() {
        k += 1;
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                !remaining
                    .iter()
                    .any(|&j| dom(vectors[j].as_ref(), vectors[i].as_ref()))
            })
            .collect();
        for &i in &front {
            level[i] = k;
        }
        remaining.retain(|i| level[*i] == 0);
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Projection;
    use crate::model::{EntityKey, SpatialEntity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn collection(points: &[(f64, f64)]) -> EntityCollection {
        EntityCollection::new(
            points
                .iter()
                .enumerate()
                .map(|(i, &(lat, lon))| {
                    SpatialEntity::new(EntityKey::new("t", format!("{i:05}")), lat, lon, "x")
                        .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn small_radius_cases() {
        let proj = Projection::new(57.0, 9.9);
        let (la, lo) = proj.unproject(crate::geo::ProjectedPoint::new(50.0, 0.0));
        let c = collection(&[(57.0, 9.9), (la, lo)]);
        assert_eq!(oracle_fnn(&c, 100.0).len(), 1);
        assert!(oracle_fnn(&c, 10.0).is_empty());
    }

    /// Independent recount: hash points into cells at least `r` wide and only
    /// compare neighbouring cells.
    fn grid_count(c: &EntityCollection, r: f64) -> usize {
        let cell_lat = (r / EARTH_RADIUS_M).to_degrees() * 1.01;
        let max_lat = c.entities().iter().map(|e| e.lat.abs()).fold(0.0, f64::max);
        let cell_lon = cell_lat / max_lat.to_radians().cos();
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, e) in c.entities().iter().enumerate() {
            let key = (
                (e.lat / cell_lat).floor() as i64,
                (e.lon / cell_lon).floor() as i64,
            );
            grid.entry(key).or_default().push(i);
        }
        let mut count = 0;
        for (&(gy, gx), members) in &grid {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let Some(other) = grid.get(&(gy + dy, gx + dx)) else {
                        continue;
                    };
                    for &i in members {
                        for &j in other {
                            let (a, b) = (c.get(i), c.get(j));
                            if i < j && haversine((a.lat, a.lon), (b.lat, b.lon)) <= r {
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn matches_grid_recount() {
        let proj = Projection::new(57.0, 9.9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..1000)
            .map(|_| {
                proj.unproject(crate::geo::ProjectedPoint::new(
                    rng.gen_range(0.0..1000.0),
                    rng.gen_range(0.0..1000.0),
                ))
            })
            .collect();
        let c = collection(&pts);
        let fnn = oracle_fnn(&c, 100.0);
        assert_eq!(fnn.len(), grid_count(&c, 100.0));
        assert!(fnn.len() > 1000);
        // monotone in r
        let smaller = oracle_fnn(&c, 50.0);
        assert!(smaller.iter().all(|p| fnn.binary_search(p).is_ok()));
    }

    #[test]
    fn skyline_oracle_cases() {
        assert_eq!(oracle_skyline(&[vec![0.3, 0.3]]), vec![1]);
        assert_eq!(
            oracle_skyline(&[vec![0.5, 0.5], vec![0.9, 0.9], vec![0.1, 0.1]]),
            vec![2, 1, 3]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let peeled = crate::skyrank::peel(&v).unwrap();
        assert_eq!(peeled.assignment(), oracle_skyline(&v));
    }
}
