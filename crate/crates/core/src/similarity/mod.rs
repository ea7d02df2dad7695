//! Per-attribute similarity of entity pairs.

pub mod taxonomy;
pub mod text;

use std::collections::BTreeSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use taxonomy::{max_pairwise, sem_sim, Taxonomy};
pub use text::{address_sim, levenshtein, normalize_address, text_sim};

use crate::error::Result;
use crate::model::{
    canonicalize_pair, CandidatePair, Dimension, EntityCollection, PairSet, SimilarityVector,
    SpatialEntity,
};
use crate::quadflex::IndexPair;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    /// Score for a dimension whose attribute is absent on either side.
    pub missing_score: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { missing_score: 0.0 }
    }
}

/// Similarity vector of two entities in `dims` order.
pub fn compare_pair(
    e1: &SpatialEntity,
    e2: &SpatialEntity,
    taxonomy: &Taxonomy,
    dims: &[Dimension],
    config: &CompareConfig,
) -> Result<SimilarityVector> {
    let values = dims
        .iter()
        .map(|d| match d {
            Dimension::Name => text_sim(&e1.name, &e2.name),
            Dimension::Address => Ok(address_sim(
                e1.address.as_deref(),
                e2.address.as_deref(),
                config.missing_score,
            )),
            Dimension::Semantic => sem_sim(
                taxonomy,
                &e1.categories,
                &e2.categories,
                config.missing_score,
            ),
        })
        .collect::<Result<Vec<f64>>>()?;
    SimilarityVector::new(values)
}

/// Compares every index pair in parallel; output order follows `pairs`.
pub fn compare_pairs(
    collection: &EntityCollection,
    pairs: &[IndexPair],
    taxonomy: &Taxonomy,
    dims: &[Dimension],
    config: &CompareConfig,
) -> Result<PairSet> {
    let out = pairs
        .par_iter()
        .map(|p| {
            let (a, b) = (
                collection.get(p.left as usize),
                collection.get(p.right as usize),
            );
            let key = canonicalize_pair(&a.key, &b.key)?;
            Ok(CandidatePair::new(
                key,
                compare_pair(a, b, taxonomy, dims, config)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    PairSet::new(dims.to_vec(), out)
}

/// Drops category terms the taxonomy does not know, warning once per term.
pub fn filter_known(
    collection: &EntityCollection,
    taxonomy: &Taxonomy,
) -> Result<EntityCollection> {
    let mut unknown: BTreeSet<String> = BTreeSet::new();
    let entities = collection
        .entities()
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.categories.retain(|c| {
                let known = taxonomy.contains(c);
                if !known {
                    unknown.insert(c.clone());
                }
                known
            });
            e
        })
        .collect();
    for term in &unknown {
        warn!("dropping category {term:?}: not in taxonomy");
    }
    EntityCollection::new(entities)
}
