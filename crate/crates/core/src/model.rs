//! Domain types shared by every stage of the linkage pipeline.
//!
//! Everything here is immutable once constructed; the stages pass these
//! values around by reference and build new ones rather than mutating.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skyex::{DistanceProfile, LevelMetrics};

/// Identity of an entity: unique within its source, and `(source, id)` is
/// unique within a collection. Ordering is lexicographic on `(source, id)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityKey {
    pub source: String,
    pub id: String,
}

impl EntityKey {
    pub fn new(source: impl Into<String>, id: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            id: id.into(),
        }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.id)
    }
}

/// One record from one location-based source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialEntity {
    pub key: EntityKey,
    pub lat: f64,
    pub lon: f64,
    pub name: String,
    pub address: Option<String>,
    /// Taxonomy term identifiers.
    pub categories: BTreeSet<String>,
    pub phone: Option<String>,
    pub website: Option<String>,
}

impl SpatialEntity {
    pub fn new(key: EntityKey, lat: f64, lon: f64, name: impl Into<String>) -> Result<Self> {
        let entity = Self {
            key,
            lat,
            lon,
            name: name.into(),
            address: None,
            categories: BTreeSet::new(),
            phone: None,
            website: None,
        };
        entity.validate()?;
        Ok(entity)
    }

    pub fn with_address(mut self, address: impl Into<String>) -> Self {
        self.address = Some(address.into());
        self
    }

    pub fn with_categories<I, S>(mut self, categories: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.categories = categories.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_phone(mut self, phone: impl Into<String>) -> Self {
        self.phone = Some(phone.into());
        self
    }

    pub fn with_website(mut self, website: impl Into<String>) -> Self {
        self.website = Some(website.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidEntity {
            key: self.key.to_string(),
            reason: reason.to_string(),
        };
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(invalid("latitude outside [-90, 90]"));
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(invalid("longitude outside [-180, 180]"));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("name is empty"));
        }
        if self.key.source.is_empty() || self.key.id.is_empty() {
            return Err(invalid("source and id must be non-empty"));
        }
        Ok(())
    }
}

/// Axis-aligned box in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.min_lat..=self.max_lat).contains(&lat) && (self.min_lon..=self.max_lon).contains(&lon)
    }
}

/// A validated set of entities with unique keys.
#[derive(Clone, Debug)]
pub struct EntityCollection {
    entities: Vec<SpatialEntity>,
    index: HashMap<EntityKey, usize>,
    bbox: Option<BoundingBox>,
}

impl EntityCollection {
    pub fn new(entities: Vec<SpatialEntity>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            e.validate()?;
            if index.insert(e.key.clone(), i).is_some() {
                return Err(Error::DuplicateKey(e.key.to_string()));
            }
        }
        let bbox = entities.first().map(|first| {
            entities.iter().fold(
                BoundingBox {
                    min_lat: first.lat,
                    min_lon: first.lon,
                    max_lat: first.lat,
                    max_lon: first.lon,
                },
                |b, e| BoundingBox {
                    min_lat: b.min_lat.min(e.lat),
                    min_lon: b.min_lon.min(e.lon),
                    max_lat: b.max_lat.max(e.lat),
                    max_lon: b.max_lon.max(e.lon),
                },
            )
        });
        Ok(Self {
            entities,
            index,
            bbox,
        })
    }

    pub fn entities(&self) -> &[SpatialEntity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, idx: usize) -> &SpatialEntity {
        &self.entities[idx]
    }

    pub fn position(&self, key: &EntityKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn by_key(&self, key: &EntityKey) -> Option<&SpatialEntity> {
        self.position(key).map(|i| &self.entities[i])
    }

    /// `None` for an empty collection.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        self.bbox
    }

    /// Rank of every entity in `(source, id)` order; used to canonicalize
    /// index pairs without comparing strings in hot loops.
    pub fn key_ranks(&self) -> Vec<u32> {
        let mut order: Vec<usize> = (0..self.entities.len()).collect();
        order.sort_unstable_by(|&a, &b| self.entities[a].key.cmp(&self.entities[b].key));
        let mut ranks = vec![0u32; order.len()];
        for (rank, idx) in order.into_iter().enumerate() {
            ranks[idx] = rank as u32;
        }
        ranks
    }
}

/// Canonically ordered pair identity: `left < right` by `(source, id)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub left: EntityKey,
    pub right: EntityKey,
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.left, self.right)
    }
}

/// Orders two entity references canonically. `(a, b)` and `(b, a)` give the
/// same result.
pub fn canonicalize_pair(a: &EntityKey, b: &EntityKey) -> Result<PairKey> {
    match a.cmp(b) {
        std::cmp::Ordering::Less => Ok(PairKey {
            left: a.clone(),
            right: b.clone(),
        }),
        std::cmp::Ordering::Greater => Ok(PairKey {
            left: b.clone(),
            right: a.clone(),
        }),
        std::cmp::Ordering::Equal => Err(Error::SelfPair(a.to_string())),
    }
}

/// An attribute compared between the two entities of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Name,
    Address,
    Semantic,
}

impl Dimension {
    pub const DEFAULT_ORDER: [Dimension; 3] =
        [Dimension::Name, Dimension::Address, Dimension::Semantic];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Name => "name",
            Dimension::Address => "address",
            Dimension::Semantic => "semantic",
        }
    }

    /// Parses a comma-separated list such as `name,address,semantic`.
    pub fn parse_list(s: &str) -> Result<Vec<Dimension>> {
        let dims: Vec<Dimension> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if dims.is_empty() {
            return Err(Error::param("dims", "no dimensions given"));
        }
        let unique: BTreeSet<&str> = dims.iter().map(|d| d.as_str()).collect();
        if unique.len() != dims.len() {
            return Err(Error::param("dims", format!("repeated dimension in {s:?}")));
        }
        Ok(dims)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "name" => Ok(Dimension::Name),
            "address" => Ok(Dimension::Address),
            "semantic" => Ok(Dimension::Semantic),
            other => Err(Error::param("dims", format!("unknown dimension {other:?}"))),
        }
    }
}

/// Per-attribute similarities of one pair, every value in `[0, 1]`. The
/// dimension names live with the run (see [`PairSet`]), not in each vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityVector(Vec<f64>);

impl SimilarityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::SimilarityRange {
                    dim: format!("dimension {i}"),
                    value: v,
                });
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps only the given dimension positions, in that order.
    pub fn select(&self, positions: &[usize]) -> SimilarityVector {
        SimilarityVector(positions.iter().map(|&p| self.0[p]).collect())
    }
}

impl AsRef<[f64]> for SimilarityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePair {
    pub key: PairKey,
    pub delta: SimilarityVector,
    pub skyline_level: Option<u32>,
    pub truth: Option<bool>,
    pub predicted: Option<bool>,
}

impl CandidatePair {
    pub fn new(key: PairKey, delta: SimilarityVector) -> Self {
        Self {
            key,
            delta,
            skyline_level: None,
            truth: None,
            predicted: None,
        }
    }
}

/// Candidate pairs of one run together with the run's dimension order.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    pub dims: Vec<Dimension>,
    pub pairs: Vec<CandidatePair>,
}

impl PairSet {
    pub fn new(dims: Vec<Dimension>, pairs: Vec<CandidatePair>) -> Result<Self> {
        for p in &pairs {
            if p.delta.len() != dims.len() {
                return Err(Error::DimensionMismatch {
                    left: p.delta.len(),
                    right: dims.len(),
                });
            }
        }
        Ok(Self { dims, pairs })
    }

    pub fn deltas(&self) -> Vec<&[f64]> {
        self.pairs.iter().map(|p| p.delta.values()).collect()
    }

    /// Projects every vector onto `dims` (a subset/reordering of the current
    /// dimensions).
    pub fn select_dims(&self, dims: &[Dimension]) -> Result<PairSet> {
        let positions: Vec<usize> = dims
            .iter()
            .map(|d| {
                self.dims.iter().position(|x| x == d).ok_or_else(|| {
                    Error::param("dims", format!("dimension {d} not present in pair set"))
                })
            })
            .collect::<Result<_>>()?;
        let pairs = self
            .pairs
            .iter()
            .map(|p| CandidatePair {
                delta: p.delta.select(&positions),
                ..p.clone()
            })
            .collect();
        Ok(PairSet {
            dims: dims.to_vec(),
            pairs,
        })
    }
}

/// Skyline levels, level 1 first. Entries are indices into the ranked pair
/// list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkylinePartition {
    levels: Vec<Vec<usize>>,
}

impl SkylinePartition {
    /// Builds the partition from a 1-based level per item.
    pub fn from_assignment(assignment: &[u32]) -> Self {
        let k = assignment.iter().copied().max().unwrap_or(0) as usize;
        let mut levels = vec![Vec::new(); k];
        for (i, &lvl) in assignment.iter().enumerate() {
            debug_assert!(lvl >= 1);
            levels[lvl as usize - 1].push(i);
        }
        Self { levels }
    }

    pub fn from_levels(levels: Vec<Vec<usize>>) -> Self {
        Self { levels }
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    /// Number of levels `K`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn pair_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// 1-based level per item; `n` is the total item count.
    pub fn assignment(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.pair_count()];
        for (k, level) in self.levels.iter().enumerate() {
            for &i in level {
                out[i] = k as u32 + 1;
            }
        }
        out
    }

    /// Items in levels `1..=k`.
    pub fn top(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.levels[..k.min(self.levels.len())]
            .iter()
            .flat_map(|l| l.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "f")]
    F,
    #[serde(rename = "fes")]
    Fes,
    #[serde(rename = "d")]
    D,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::F => "f",
            Method::Fes => "fes",
            Method::D => "d",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(Method::F),
            "fes" => Ok(Method::Fes),
            "d" => Ok(Method::D),
            other => Err(Error::param(
                "method",
                format!("expected f|fes|d, got {other:?}"),
            )),
        }
    }
}

/// Output of a SkyEx cut-off selector.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationResult {
    pub method: Method,
    /// Positives are levels `1..=cutoff_k`.
    pub cutoff_k: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    /// Levels actually computed before the selector stopped.
    pub explored_levels: usize,
    pub total_levels: Option<usize>,
    pub metric_series: Option<Vec<LevelMetrics>>,
    pub profile: Option<DistanceProfile>,
}

impl ClassificationResult {
    /// Splits `partition` at `cutoff_k`.
    pub fn split(method: Method, partition: &SkylinePartition, cutoff_k: usize) -> Self {
        let positives: Vec<usize> = partition.top(cutoff_k).collect();
        let negatives: Vec<usize> = partition.levels()[cutoff_k.min(partition.depth())..]
            .iter()
            .flat_map(|l| l.iter().copied())
            .collect();
        Self {
            method,
            cutoff_k,
            positives,
            negatives,
            explored_levels: partition.depth(),
            total_levels: Some(partition.depth()),
            metric_series: None,
            profile: None,
        }
    }

    /// Predicted label per pair index, `n` pairs in total.
    pub fn predictions(&self, n: usize) -> Vec<bool> {
        let mut out = vec![false; n];
        for &i in &self.positives {
            out[i] = true;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str, id: &str) -> EntityKey {
        EntityKey::new(s, id)
    }

    #[test]
    fn canonical_pair_orders_by_source_then_id() {
        let p = canonicalize_pair(&key("krak", "7"), &key("gp", "3")).unwrap();
        assert_eq!(p.left, key("gp", "3"));
        assert_eq!(p.right, key("krak", "7"));
        let q = canonicalize_pair(&key("gp", "3"), &key("krak", "7")).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn self_pair_is_rejected() {
        let err = canonicalize_pair(&key("gp", "3"), &key("gp", "3")).unwrap_err();
        assert!(matches!(err, Error::SelfPair(_)));
        assert!(err.to_string().contains("self-pair"));
    }

    #[test]
    fn entity_validation() {
        assert!(SpatialEntity::new(key("gp", "1"), 91.0, 0.0, "x").is_err());
        assert!(SpatialEntity::new(key("gp", "1"), 0.0, 181.0, "x").is_err());
        assert!(SpatialEntity::new(key("gp", "1"), 0.0, 0.0, "   ").is_err());
        assert!(SpatialEntity::new(key("gp", "1"), 0.0, 0.0, "Cafe").is_ok());
    }

    #[test]
    fn collection_rejects_duplicate_keys_and_bounds_points() {
        let a = SpatialEntity::new(key("gp", "1"), 57.0, 9.9, "a").unwrap();
        let b = SpatialEntity::new(key("gp", "2"), 57.1, 9.8, "b").unwrap();
        let dup = SpatialEntity::new(key("gp", "1"), 57.2, 9.7, "c").unwrap();
        assert!(matches!(
            EntityCollection::new(vec![a.clone(), dup]),
            Err(Error::DuplicateKey(_))
        ));
        let c = EntityCollection::new(vec![a, b]).unwrap();
        let bb = c.bounding_box().unwrap();
        for e in c.entities() {
            assert!(bb.contains(e.lat, e.lon));
        }
        assert_eq!(c.key_ranks(), vec![0, 1]);
    }

    #[test]
    fn similarity_vector_range() {
        assert!(SimilarityVector::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(SimilarityVector::new(vec![1.2]).is_err());
        assert!(SimilarityVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn partition_assignment_round_trip() {
        let p = SkylinePartition::from_assignment(&[2, 1, 3, 1]);
        assert_eq!(p.levels(), &[vec![1, 3], vec![0], vec![2]]);
        assert_eq!(p.assignment(), vec![2, 1, 3, 1]);
        assert_eq!(p.top(2).collect::<Vec<_>>(), vec![1, 3, 0]);
    }

    #[test]
    fn dims_parse() {
        assert_eq!(
            Dimension::parse_list("name,address,semantic").unwrap(),
            Dimension::DEFAULT_ORDER.to_vec()
        );
        assert!(Dimension::parse_list("name,name").is_err());
        assert!(Dimension::parse_list("phone").is_err());
    }
}
