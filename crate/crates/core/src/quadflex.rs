//! QuadFlex spatial blocking.
//!
//! A point quadtree over projected meters whose split rule is a diagonal cap
//! `m` and a density cap `d` instead of a bucket capacity. Children split the
//! parent at half width and half height, but each child also accepts points
//! lying in a margin around its cell, so entities near a split line end up in
//! more than one leaf and close neighbours are not separated.
//!
//! The margin of a child is half its own width/height, which puts the inner
//! edges of the child regions on the parent's 0.25 and 0.75 lines. While a
//! split is driven by the diagonal cap, the margin is never narrower than
//! `m / 2`: every pair within distance `m` then shares the leaf that holds
//! its midpoint. Density-driven splits use the plain half-size margin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, ProjectedPoint, Projection};
use crate::model::EntityCollection;

/// Hard depth limit for a node.
pub const MAX_DEPTH: u32 = 40;
/// Nodes (or member sets) with a smaller diagonal never split.
pub const MIN_DIAGONAL_M: f64 = 0.01;
/// Zero-extent root axes are widened to this size so density stays finite.
pub const MIN_ROOT_SIDE_M: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadFlexParams {
    /// Maximum leaf diagonal `m` in meters.
    pub max_diagonal: f64,
    /// Maximum density `d` in entities per 1000 m²; `None` is unlimited.
    pub max_density: Option<f64>,
}

impl Default for QuadFlexParams {
    fn default() -> Self {
        Self {
            max_diagonal: 100.0,
            max_density: None,
        }
    }
}

impl QuadFlexParams {
    pub fn new(max_diagonal: f64, max_density: Option<f64>) -> Result<Self> {
        if !(max_diagonal.is_finite() && max_diagonal > 0.0) {
            return Err(Error::param(
                "meters",
                format!("must be > 0, got {max_diagonal}"),
            ));
        }
        if let Some(d) = max_density {
            if d.is_nan() || d <= 0.0 {
                return Err(Error::param("density", format!("must be > 0, got {d}")));
            }
        }
        Ok(Self {
            max_diagonal,
            max_density,
        })
    }
}

/// Closed axis-aligned rectangle in projected meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn contains(&self, p: ProjectedPoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.min_x >= self.min_x
            && other.max_x <= self.max_x
            && other.min_y >= self.min_y
            && other.max_y <= self.max_y
    }

    fn intersect(&self, other: &Rect) -> Rect {
        Rect {
            min_x: self.min_x.max(other.min_x),
            min_y: self.min_y.max(other.min_y),
            max_x: self.max_x.min(other.max_x),
            max_y: self.max_y.min(other.max_y),
        }
    }

    fn expand(&self, mx: f64, my: f64) -> Rect {
        Rect {
            min_x: self.min_x - mx,
            min_y: self.min_y - my,
            max_x: self.max_x + mx,
            max_y: self.max_y + my,
        }
    }

    pub fn diagonal(&self) -> f64 {
        (self.max_x - self.min_x).hypot(self.max_y - self.min_y)
    }
}

/// Child quadrant numbers as a bit set; child 1 is top-left, 2 top-right,
/// 3 bottom-left, 4 bottom-right (y grows northwards).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChildSet(u8);

impl ChildSet {
    pub fn from_indices(indices: &[usize]) -> Self {
        let mut bits = 0u8;
        for &i in indices {
            assert!((1..=4).contains(&i), "child index {i} out of range");
            bits |= 1 << (i - 1);
        }
        Self(bits)
    }

    pub fn contains(&self, child: usize) -> bool {
        (1..=4).contains(&child) && self.0 & (1 << (child - 1)) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// 1-based child numbers in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=4).filter(move |&c| self.contains(c))
    }
}

#[derive(Clone, Debug)]
pub struct QuadNode {
    /// South-west corner of the physical cell.
    pub origin: ProjectedPoint,
    pub width: f64,
    pub height: f64,
    pub depth: u32,
    /// Physical cell expanded by the overlap margin, clipped to the parent's
    /// logical region.
    pub logical: Rect,
    children: Option<[usize; 4]>,
    entities: Vec<u32>,
}

impl QuadNode {
    pub fn physical(&self) -> Rect {
        Rect {
            min_x: self.origin.x,
            min_y: self.origin.y,
            max_x: self.origin.x + self.width,
            max_y: self.origin.y + self.height,
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    /// Physical area in m².
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Entities per 1000 m² of physical area.
    pub fn density(&self) -> f64 {
        self.entities.len() as f64 / (self.area() / 1000.0)
    }

    pub fn children(&self) -> Option<[usize; 4]> {
        self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Entity ids held by a leaf; empty for internal nodes.
    pub fn entities(&self) -> &[u32] {
        &self.entities
    }
}

/// A non-empty leaf: the unit of pairwise comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub leaf: usize,
    pub entities: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct QuadFlex {
    params: QuadFlexParams,
    nodes: Vec<QuadNode>,
    points: Vec<ProjectedPoint>,
    projection: Option<Projection>,
}

impl QuadFlex {
    /// Creates an empty tree whose root spans `bounds`.
    pub fn with_bounds(bounds: Rect, params: QuadFlexParams) -> Result<Self> {
        let params = QuadFlexParams::new(params.max_diagonal, params.max_density)?;
        let mut phys = bounds;
        for (lo, hi) in [
            (&mut phys.min_x, &mut phys.max_x),
            (&mut phys.min_y, &mut phys.max_y),
        ] {
            if *hi - *lo < MIN_ROOT_SIDE_M {
                let pad = (MIN_ROOT_SIDE_M - (*hi - *lo)) / 2.0;
                *lo -= pad;
                *hi += pad;
            }
        }
        let root = QuadNode {
            origin: ProjectedPoint::new(phys.min_x, phys.min_y),
            width: phys.max_x - phys.min_x,
            height: phys.max_y - phys.min_y,
            depth: 0,
            logical: phys,
            children: None,
            entities: Vec::new(),
        };
        Ok(Self {
            params,
            nodes: vec![root],
            points: Vec::new(),
            projection: None,
        })
    }

    /// Builds the tree over already projected points, inserting them in
    /// order. Entity ids are the point positions.
    pub fn from_points(points: &[ProjectedPoint], params: QuadFlexParams) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCollection)?;
        let bounds = points.iter().fold(
            Rect {
                min_x: first.x,
                min_y: first.y,
                max_x: first.x,
                max_y: first.y,
            },
            |r, p| Rect {
                min_x: r.min_x.min(p.x),
                min_y: r.min_y.min(p.y),
                max_x: r.max_x.max(p.x),
                max_y: r.max_y.max(p.y),
            },
        );
        let mut tree = Self::with_bounds(bounds, params)?;
        if let Some(p) = points
            .iter()
            .find(|p| !(p.x.is_finite() && p.y.is_finite()))
        {
            return Err(Error::OutsideNode { x: p.x, y: p.y });
        }
        tree.points = points.to_vec();
        tree.nodes[0].entities = (0..points.len() as u32).collect();
        // Caps only tighten as members are added, so splitting each node on
        // its complete member set yields the same tree as inserting one by one.
        tree.split_cascade(0);
        Ok(tree)
    }

    /// Projects the collection about its centroid and builds the tree; entity
    /// ids are collection indices.
    pub fn build(collection: &EntityCollection, params: QuadFlexParams) -> Result<Self> {
        let (projection, points) = geo::project(collection)?;
        let mut tree = Self::from_points(&points, params)?;
        tree.projection = Some(projection);
        Ok(tree)
    }

    pub fn params(&self) -> QuadFlexParams {
        self.params
    }

    pub fn projection(&self) -> Option<Projection> {
        self.projection
    }

    pub fn nodes(&self) -> &[QuadNode] {
        &self.nodes
    }

    pub fn root(&self) -> &QuadNode {
        &self.nodes[0]
    }

    pub fn points(&self) -> &[ProjectedPoint] {
        &self.points
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Inserts a point and returns its entity id.
    pub fn insert(&mut self, p: ProjectedPoint) -> Result<u32> {
        if !(p.x.is_finite() && p.y.is_finite()) || !self.nodes[0].logical.contains(p) {
            return Err(Error::OutsideNode { x: p.x, y: p.y });
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match self.nodes[n].children {
                Some(children) => {
                    for c in children {
                        if self.nodes[c].logical.contains(p) {
                            stack.push(c);
                        }
                    }
                }
                None => {
                    self.nodes[n].entities.push(id);
                    self.split_cascade(n);
                }
            }
        }
        Ok(id)
    }

    /// Which children of `node` would hold `p`.
    pub fn get_index(&self, node: usize, p: ProjectedPoint) -> Result<ChildSet> {
        let n = &self.nodes[node];
        if !n.logical.contains(p) {
            return Err(Error::OutsideNode { x: p.x, y: p.y });
        }
        let regions = self.child_regions(n);
        let mut bits = 0u8;
        for (i, r) in regions.iter().enumerate() {
            if r.contains(p) {
                bits |= 1 << i;
            }
        }
        Ok(ChildSet(bits))
    }

    /// Logical regions of the four children of `n`, in child order 1..=4.
    fn child_regions(&self, n: &QuadNode) -> [Rect; 4] {
        let (w, h) = (n.width / 2.0, n.height / 2.0);
        let (mut mx, mut my) = (w / 2.0, h / 2.0);
        if n.diagonal() > self.params.max_diagonal {
            let floor = self.params.max_diagonal / 2.0;
            mx = mx.max(floor);
            my = my.max(floor);
        }
        let (x0, y0) = (n.origin.x, n.origin.y);
        let cell = |x: f64, y: f64| Rect {
            min_x: x,
            min_y: y,
            max_x: x + w,
            max_y: y + h,
        };
        [
            cell(x0, y0 + h),
            cell(x0 + w, y0 + h),
            cell(x0, y0),
            cell(x0 + w, y0),
        ]
        .map(|c| c.expand(mx, my).intersect(&n.logical))
    }

    fn should_split(&self, n: &QuadNode) -> bool {
        if n.entities.len() < 2 || n.depth >= MAX_DEPTH || n.diagonal() < MIN_DIAGONAL_M {
            return false;
        }
        let over_diagonal = n.diagonal() > self.params.max_diagonal;
        let over_density = self.params.max_density.is_some_and(|d| n.density() > d);
        if !(over_diagonal || over_density) {
            return false;
        }
        // coincident members can never be separated
        self.member_spread(&n.entities) >= MIN_DIAGONAL_M
    }

    fn member_spread(&self, ids: &[u32]) -> f64 {
        let mut r = Rect {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for &id in ids {
            let p = self.points[id as usize];
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        r.diagonal()
    }

    /// Splits `start` if it violates the caps and keeps splitting whichever
    /// new children do too.
    fn split_cascade(&mut self, start: usize) {
        let mut work = vec![start];
        while let Some(n) = work.pop() {
            if !self.nodes[n].is_leaf() || !self.should_split(&self.nodes[n]) {
                continue;
            }
            let regions = self.child_regions(&self.nodes[n]);
            let parent = &self.nodes[n];
            let (w, h) = (parent.width / 2.0, parent.height / 2.0);
            let (x0, y0) = (parent.origin.x, parent.origin.y);
            let origins = [
                ProjectedPoint::new(x0, y0 + h),
                ProjectedPoint::new(x0 + w, y0 + h),
                ProjectedPoint::new(x0, y0),
                ProjectedPoint::new(x0 + w, y0),
            ];
            let depth = parent.depth + 1;
            let members = std::mem::take(&mut self.nodes[n].entities);
            let mut split: [Vec<u32>; 4] =
                std::array::from_fn(|_| Vec::with_capacity(members.len() / 2));
            for &id in &members {
                let p = self.points[id as usize];
                for (c, r) in regions.iter().enumerate() {
                    if r.contains(p) {
                        split[c].push(id);
                    }
                }
            }
            let first = self.nodes.len();
            for ((origin, logical), entities) in origins.into_iter().zip(regions).zip(split) {
                self.nodes.push(QuadNode {
                    origin,
                    width: w,
                    height: h,
                    depth,
                    logical,
                    children: None,
                    entities,
                });
            }
            self.nodes[n].children = Some([first, first + 1, first + 2, first + 3]);
            work.extend(first..first + 4);
        }
    }

    /// Non-empty leaves, depth-first with children visited 1 to 4.
    pub fn leaves(&self) -> Vec<Block> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            match node.children {
                Some(c) => stack.extend(c.iter().rev()),
                None if !node.entities.is_empty() => out.push(Block {
                    leaf: n,
                    entities: node.entities.clone(),
                }),
                None => {}
            }
        }
        out
    }
}

/// A candidate pair of entity ids, canonically ordered by entity key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexPair {
    pub left: u32,
    pub right: u32,
}

/// All within-block pairs, deduplicated across blocks.
///
/// `key_ranks[i]` is the rank of entity `i` in `(source, id)` order (see
/// [`EntityCollection::key_ranks`]); output pairs have
/// `key_ranks[left] < key_ranks[right]` and are sorted by `(left, right)` key
/// order.
pub fn enumerate_pairs(blocks: &[Block], key_ranks: &[u32]) -> Vec<IndexPair> {
    let n = key_ranks.len();
    let mut by_rank = vec![0u32; n];
    for (idx, &r) in key_ranks.iter().enumerate() {
        by_rank[r as usize] = idx as u32;
    }
    let ranked: Vec<Vec<u32>> = blocks
        .iter()
        .map(|b| {
            let mut r: Vec<u32> = b.entities.iter().map(|&e| key_ranks[e as usize]).collect();
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();

    // bucket every raw pair by its left rank, then sort and dedup per bucket
    let mut start = vec![0usize; n + 1];
    for r in &ranked {
        for (i, &a) in r.iter().enumerate() {
            start[a as usize + 1] += r.len() - i - 1;
        }
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut rights = vec![0u32; start[n]];
    for r in &ranked {
        for (i, &a) in r.iter().enumerate() {
            let at = &mut fill[a as usize];
            rights[*at..*at + r.len() - i - 1].copy_from_slice(&r[i + 1..]);
            *at += r.len() - i - 1;
        }
    }
    let mut buckets: Vec<&mut [u32]> = Vec::with_capacity(n);
    let mut rest = rights.as_mut_slice();
    for i in 0..n {
        let (head, tail) = rest.split_at_mut(start[i + 1] - start[i]);
        buckets.push(head);
        rest = tail;
    }
    let kept: Vec<usize> = buckets
        .par_iter_mut()
        .map(|b| {
            b.sort_unstable();
            let mut k = 0;
            for j in 0..b.len() {
                if j == 0 || b[j] != b[k - 1] {
                    b[k] = b[j];
                    k += 1;
                }
            }
            k
        })
        .collect();

    let mut out = Vec::with_capacity(kept.iter().sum());
    for (a, &k) in kept.iter().enumerate() {
        for &c in &rights[start[a]..start[a] + k] {
            out.push(IndexPair {
                left: by_rank[a],
                right: by_rank[c as usize],
            });
        }
    }
    out
}

/// Identity ranks for collections whose index order already is key order.
pub fn identity_ranks(n: usize) -> Vec<u32> {
    (0..n as u32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unlimited(m: f64) -> QuadFlexParams {
        QuadFlexParams::new(m, None).unwrap()
    }

    fn square(side: f64, m: f64) -> QuadFlex {
        QuadFlex::with_bounds(
            Rect {
                min_x: 0.0,
                min_y: 0.0,
                max_x: side,
                max_y: side,
            },
            unlimited(m),
        )
        .unwrap()
    }

    fn lcg_points(n: usize, side: f64, seed: u64) -> Vec<ProjectedPoint> {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| ProjectedPoint::new(next() * side, next() * side))
            .collect()
    }

    #[test]
    fn params_are_validated() {
        assert!(QuadFlexParams::new(0.0, None).is_err());
        assert!(QuadFlexParams::new(-1.0, None).is_err());
        assert!(QuadFlexParams::new(10.0, Some(0.0)).is_err());
        assert!(QuadFlex::from_points(&[], QuadFlexParams::default()).is_err());
    }

    #[test]
    fn get_index_follows_quarter_lines() {
        let t = square(1000.0, 100.0);
        let at = |fx: f64, fy: f64| {
            t.get_index(0, ProjectedPoint::new(fx * 1000.0, fy * 1000.0))
                .unwrap()
        };
        assert_eq!(at(0.1, 0.9), ChildSet::from_indices(&[1]));
        assert_eq!(at(0.5, 0.5), ChildSet::from_indices(&[1, 2, 3, 4]));
        assert_eq!(at(0.5, 0.9), ChildSet::from_indices(&[1, 2]));
        assert_eq!(at(0.9, 0.1), ChildSet::from_indices(&[4]));
        // boundary lines are inclusive
        assert_eq!(at(0.75, 0.9), ChildSet::from_indices(&[1, 2]));
        assert_eq!(at(0.25, 0.1), ChildSet::from_indices(&[3, 4]));
        assert!(t.get_index(0, ProjectedPoint::new(-1.0, 500.0)).is_err());
    }

    #[test]
    fn close_pair_stays_in_one_leaf() {
        let pts = [
            ProjectedPoint::new(0.0, 0.0),
            ProjectedPoint::new(10.0, 0.0),
        ];
        let t =
            QuadFlex::from_points(&pts, QuadFlexParams::new(100.0, Some(1e12)).unwrap()).unwrap();
        let blocks = t.leaves();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].entities, vec![0, 1]);
        assert!(t.root().is_leaf());
    }

    #[test]
    fn opposite_corners_are_separated() {
        let pts = [
            ProjectedPoint::new(0.0, 0.0),
            ProjectedPoint::new(1000.0, 1000.0),
        ];
        let t = QuadFlex::from_points(&pts, unlimited(100.0)).unwrap();
        let blocks = t.leaves();
        assert!(blocks.iter().all(|b| b.entities.len() == 1));
        assert!(enumerate_pairs(&blocks, &identity_ranks(2)).is_empty());
    }

    #[test]
    fn density_cap_holds_on_every_split_leaf() {
        let pts = lcg_points(1000, 1000.0, 7);
        let t = QuadFlex::from_points(&pts, QuadFlexParams::new(1e6, Some(10.0)).unwrap()).unwrap();
        for n in t
            .nodes()
            .iter()
            .filter(|n| n.is_leaf() && n.entities().len() >= 2)
        {
            assert!(
                n.density() <= 10.0 || n.depth >= MAX_DEPTH,
                "density {}",
                n.density()
            );
        }
    }

    #[test]
    fn unsplit_root_is_one_block() {
        let pts = [
            ProjectedPoint::new(0.0, 0.0),
            ProjectedPoint::new(5.0, 5.0),
            ProjectedPoint::new(3.0, 1.0),
        ];
        let t = QuadFlex::from_points(&pts, unlimited(100.0)).unwrap();
        assert_eq!(
            t.leaves(),
            vec![Block {
                leaf: 0,
                entities: vec![0, 1, 2]
            }]
        );
    }

    #[test]
    fn points_in_one_child_core_give_one_block() {
        let mut t = square(1000.0, 800.0);
        // two points deep inside child 2 (top-right) force exactly one split
        t.insert(ProjectedPoint::new(950.0, 950.0)).unwrap();
        t.insert(ProjectedPoint::new(960.0, 955.0)).unwrap();
        assert!(!t.root().is_leaf());
        let blocks = t.leaves();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].entities, vec![0, 1]);
    }

    #[test]
    fn point_near_split_line_lands_in_several_blocks() {
        let mut t = square(1000.0, 600.0);
        t.insert(ProjectedPoint::new(100.0, 100.0)).unwrap();
        t.insert(ProjectedPoint::new(900.0, 100.0)).unwrap();
        t.insert(ProjectedPoint::new(500.0, 100.0)).unwrap();
        let holding: Vec<_> = t
            .leaves()
            .into_iter()
            .filter(|b| b.entities.contains(&2))
            .collect();
        assert!(holding.len() >= 2);
    }

    #[test]
    fn enumerate_pairs_examples() {
        let ranks = identity_ranks(3);
        let blk = |leaf, e: &[u32]| Block {
            leaf,
            entities: e.to_vec(),
        };
        let ip = |l, r| IndexPair { left: l, right: r };
        assert_eq!(
            enumerate_pairs(&[blk(0, &[0, 1, 2])], &ranks),
            vec![ip(0, 1), ip(0, 2), ip(1, 2)]
        );
        assert_eq!(
            enumerate_pairs(&[blk(0, &[0, 1]), blk(1, &[1, 0])], &ranks),
            vec![ip(0, 1)]
        );
        assert_eq!(
            enumerate_pairs(&[blk(0, &[0, 1]), blk(1, &[1, 2])], &ranks),
            vec![ip(0, 1), ip(1, 2)]
        );
        // canonical order follows key ranks, not indices
        assert_eq!(enumerate_pairs(&[blk(0, &[0, 1])], &[1, 0]), vec![ip(1, 0)]);
    }

    #[test]
    fn coincident_points_share_a_leaf_under_density_cap() {
        let pts = vec![ProjectedPoint::new(50.0, 50.0); 5];
        let mut all = pts.clone();
        all.push(ProjectedPoint::new(0.0, 0.0));
        all.push(ProjectedPoint::new(100.0, 100.0));
        let t =
            QuadFlex::from_points(&all, QuadFlexParams::new(100.0, Some(0.001)).unwrap()).unwrap();
        assert!(t.max_depth() < MAX_DEPTH);
        assert!(t
            .leaves()
            .iter()
            .any(|b| (0..5).all(|i| b.entities.contains(&i))));
    }

    #[test]
    fn bulk_build_matches_incremental_insertion() {
        let pts = lcg_points(2000, 3000.0, 11);
        for params in [
            unlimited(100.0),
            QuadFlexParams::new(300.0, Some(5.0)).unwrap(),
        ] {
            let bulk = QuadFlex::from_points(&pts, params).unwrap();
            let root = bulk.root().logical;
            let mut inc = QuadFlex::with_bounds(root, params).unwrap();
            for &p in &pts {
                inc.insert(p).unwrap();
            }
            let sets = |t: &QuadFlex| {
                let mut v: Vec<Vec<u32>> = t.leaves().into_iter().map(|b| b.entities).collect();
                v.sort();
                v
            };
            assert_eq!(sets(&bulk), sets(&inc));
            assert_eq!(bulk.max_depth(), inc.max_depth());
        }
    }

    #[test]
    fn enumerate_pairs_matches_sorted_dedup() {
        let pts = lcg_points(3000, 2000.0, 5);
        let t = QuadFlex::from_points(&pts, unlimited(100.0)).unwrap();
        let blocks = t.leaves();
        // a scrambled rank order exercises canonicalization
        let ranks: Vec<u32> = (0..3000u32).map(|i| (i * 7919) % 3000).collect();
        let mut expect: Vec<(u32, u32)> = Vec::new();
        for b in &blocks {
            for (i, &x) in b.entities.iter().enumerate() {
                for &y in &b.entities[i + 1..] {
                    let (rx, ry) = (ranks[x as usize], ranks[y as usize]);
                    expect.push(if rx < ry { (rx, ry) } else { (ry, rx) });
                }
            }
        }
        expect.sort_unstable();
        expect.dedup();
        let got: Vec<(u32, u32)> = enumerate_pairs(&blocks, &ranks)
            .iter()
            .map(|p| (ranks[p.left as usize], ranks[p.right as usize]))
            .collect();
        assert_eq!(got, expect);
    }
}
