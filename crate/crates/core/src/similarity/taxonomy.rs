//! Concept hierarchy and Wu & Palmer similarity.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// Parent marker for the single root line of a taxonomy file.
pub const ROOT_MARKER: &str = "ROOT";

/// Rooted is-a DAG. Depth is the longest path from the root, with the root
/// at depth 1, so every proper ancestor is strictly shallower than its
/// descendants and Wu & Palmer stays within `(0, 1]`.
#[derive(Clone, Debug)]
pub struct Taxonomy {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    depth: Vec<u32>,
    /// Sorted ancestor ids, including the term itself.
    ancestors: Vec<Vec<usize>>,
    root: usize,
}

impl Taxonomy {
    /// Builds a taxonomy from `(child, parent)` edges; exactly one edge must
    /// have parent [`ROOT_MARKER`].
    pub fn from_edges<'a, I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut terms: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |t: &str, terms: &mut Vec<String>| -> usize {
            *index.entry(t.to_string()).or_insert_with(|| {
                terms.push(t.to_string());
                terms.len() - 1
            })
        };
        let mut raw: Vec<(usize, Option<usize>)> = Vec::new();
        for (child, parent) in edges {
            if child.is_empty() || parent.is_empty() {
                return Err(Error::InvalidTaxonomy("empty term".into()));
            }
            if child == ROOT_MARKER {
                return Err(Error::InvalidTaxonomy(format!(
                    "{ROOT_MARKER} used as a child"
                )));
            }
            let c = intern(child, &mut terms);
            let p = (parent != ROOT_MARKER).then(|| intern(parent, &mut terms));
            raw.push((c, p));
        }
        let index: HashMap<String, usize> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();

        let roots: BTreeSet<usize> = raw
            .iter()
            .filter(|(_, p)| p.is_none())
            .map(|&(c, _)| c)
            .collect();
        let root = match roots.len() {
            1 => *roots.iter().next().unwrap(),
            0 => return Err(Error::InvalidTaxonomy("no term with parent ROOT".into())),
            _ => {
                return Err(Error::InvalidTaxonomy(format!(
                    "several roots: {:?}",
                    roots.iter().map(|&r| &terms[r]).collect::<Vec<_>>()
                )))
            }
        };
        let mut parents = vec![Vec::new(); terms.len()];
        for &(c, p) in &raw {
            if let Some(p) = p {
                if c == root {
                    return Err(Error::InvalidTaxonomy(format!(
                        "root {:?} has a parent",
                        terms[c]
                    )));
                }
                if p == c {
                    return Err(Error::InvalidTaxonomy(format!(
                        "self loop on {:?}",
                        terms[c]
                    )));
                }
                if !parents[c].contains(&p) {
                    parents[c].push(p);
                }
            }
        }
        for (t, ps) in parents.iter().enumerate() {
            if t != root && ps.is_empty() {
                return Err(Error::InvalidTaxonomy(format!(
                    "term {:?} only appears as a parent and is unreachable from the root",
                    terms[t]
                )));
            }
        }

        // Topological order from the root (Kahn over child lists).
        let mut children = vec![Vec::new(); terms.len()];
        let mut indegree = vec![0usize; terms.len()];
        for (c, ps) in parents.iter().enumerate() {
            indegree[c] = ps.len();
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut order = Vec::with_capacity(terms.len());
        let mut queue = vec![root];
        while let Some(t) = queue.pop() {
            order.push(t);
            for &c in &children[t] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() != terms.len() {
            return Err(Error::InvalidTaxonomy("cycle detected".into()));
        }

        let mut depth = vec![0u32; terms.len()];
        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); terms.len()];
        for &t in &order {
            depth[t] = parents[t].iter().map(|&p| depth[p]).max().unwrap_or(0) + 1;
            let mut anc: BTreeSet<usize> = BTreeSet::from([t]);
            for &p in &parents[t] {
                anc.extend(ancestors[p].iter().copied());
            }
            ancestors[t] = anc.into_iter().collect();
        }

        Ok(Self {
            terms,
            index,
            parents,
            depth,
            ancestors,
            root,
        })
    }

    /// Parses `child<TAB>parent` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(p), None) => edges.push((c.trim(), p.trim())),
                _ => {
                    return Err(Error::InvalidTaxonomy(format!(
                        "line {}: expected child<TAB>parent",
                        n + 1
                    )))
                }
            }
        }
        Self::from_edges(edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes back to the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::from("# child\tparent\n");
        let mut order: Vec<usize> = (0..self.terms.len()).collect();
        order.sort_by_key(|&t| (self.depth[t], self.terms[t].clone()));
        for t in order {
            if t == self.root {
                out.push_str(&format!("{}\t{ROOT_MARKER}\n", self.terms[t]));
            }
            for &p in &self.parents[t] {
                out.push_str(&format!("{}\t{}\n", self.terms[t], self.terms[p]));
            }
        }
        out
    }

    pub fn root(&self) -> &str {
        &self.terms[self.root]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    fn id(&self, term: &str) -> Result<usize> {
        self.index
            .get(term)
            .copied()
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    pub fn depth(&self, term: &str) -> Result<u32> {
        Ok(self.depth[self.id(term)?])
    }

    pub fn parents(&self, term: &str) -> Result<Vec<&str>> {
        Ok(self.parents[self.id(term)?]
            .iter()
            .map(|&p| self.terms[p].as_str())
            .collect())
    }

    /// Terms sharing at least one parent with `term`, excluding itself.
    pub fn siblings(&self, term: &str) -> Result<Vec<&str>> {
        let id = self.id(term)?;
        let ps = &self.parents[id];
        let mut out: Vec<&str> = (0..self.terms.len())
            .filter(|&t| t != id && self.parents[t].iter().any(|p| ps.contains(p)))
            .map(|t| self.terms[t].as_str())
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Terms without children.
    pub fn leaves(&self) -> Vec<&str> {
        let mut has_child = vec![false; self.terms.len()];
        for ps in &self.parents {
            for &p in ps {
                has_child[p] = true;
            }
        }
        let mut out: Vec<&str> = (0..self.terms.len())
            .filter(|&t| !has_child[t])
            .map(|t| self.terms[t].as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// Deepest common ancestor; ties go to the lexicographically smallest id.
    pub fn lcs(&self, c1: &str, c2: &str) -> Result<&str> {
        let (a, b) = (self.id(c1)?, self.id(c2)?);
        Ok(&self.terms[self.lcs_id(a, b)])
    }

    fn lcs_id(&self, a: usize, b: usize) -> usize {
        let (xa, xb) = (&self.ancestors[a], &self.ancestors[b]);
        let (mut i, mut j) = (0, 0);
        let mut best = self.root;
        while i < xa.len() && j < xb.len() {
            match xa[i].cmp(&xb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let t = xa[i];
                    let better = self.depth[t] > self.depth[best]
                        || (self.depth[t] == self.depth[best] && self.terms[t] < self.terms[best]);
                    if better {
                        best = t;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    /// Wu & Palmer: `2 depth(lcs) / (depth(c1) + depth(c2))`.
    pub fn wup(&self, c1: &str, c2: &str) -> Result<f64> {
        let (a, b) = (self.id(c1)?, self.id(c2)?);
        let l = self.lcs_id(a, b);
        Ok(2.0 * self.depth[l] as f64 / (self.depth[a] + self.depth[b]) as f64)
    }

    /// A small point-of-interest taxonomy used by the data generator and as
    /// the pipeline default.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_POI).expect("built-in taxonomy is valid")
    }
}

/// Maximum of `score(c_i, c_j)` over the cross product; `None` when either
/// set is empty.
pub fn max_pairwise<'a, F>(
    c1: impl IntoIterator<Item = &'a str>,
    c2: impl IntoIterator<Item = &'a str> + Clone,
    mut score: F,
) -> Result<Option<f64>>
where
    F: FnMut(&str, &str) -> Result<f64>,
{
    let mut best: Option<f64> = None;
    for a in c1 {
        for b in c2.clone() {
            let s = score(a, b)?;
            best = Some(best.map_or(s, |x: f64| x.max(s)));
        }
    }
    Ok(best)
}

/// Semantic similarity of two category sets: the best Wu & Palmer score
/// over all term pairs, or `missing` when either set is empty.
pub fn sem_sim(
    t: &Taxonomy,
    c1: &BTreeSet<String>,
    c2: &BTreeSet<String>,
    missing: f64,
) -> Result<f64> {
    if c1.iter().any(|c| c2.contains(c)) {
        // still reject unknown terms
        for c in c1.iter().chain(c2) {
            t.id(c)?;
        }
        return Ok(1.0);
    }
    Ok(max_pairwise(
        c1.iter().map(String::as_str),
        c2.iter().map(String::as_str),
        |a, b| t.wup(a, b),
    )?
    .unwrap_or(missing))
}

const BUILTIN_POI: &str = "\
# child\tparent
place\tROOT
business\tplace
public\tplace
leisure\tplace
food_drink\tbusiness
retail\tbusiness
services\tbusiness
health\tbusiness
lodging\tbusiness
restaurant\tfood_drink
cafe\tfood_drink
bakery\tfood_drink
bar\tfood_drink
italian_restaurant\trestaurant
pizzeria\titalian_restaurant
chinese_restaurant\trestaurant
thai_restaurant\trestaurant
fast_food\trestaurant
burger_bar\tfast_food
grill\tfast_food
pub\tbar
wine_bar\tbar
grocery\tretail
supermarket\tgrocery
convenience_store\tgrocery
clothing_store\tretail
electronics_store\tretail
bookstore\tretail
florist\tretail
hair_salon\tservices
car_repair\tservices
bank\tservices
real_estate\tservices
lawyer\tservices
pharmacy\thealth
dentist\thealth
doctor\thealth
hospital\thealth
hotel\tlodging
hostel\tlodging
camping\tlodging
museum\tleisure
cinema\tleisure
park\tleisure
gym\tleisure
school\tpublic
church\tpublic
library\tpublic
";
