//! Blocking benchmark: QuadFlex time and coverage against the exhaustive
//! radius scan.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{generate, oracle_fnn, GenConfig};
use crate::error::{Error, Result};
use crate::pipeline::block;
use crate::quadflex::{IndexPair, QuadFlexParams};
use crate::similarity::Taxonomy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub params: QuadFlexParams,
    /// Generator settings; `n` is replaced by each size.
    pub gen: GenConfig,
    /// Skip the exhaustive scan above this size.
    pub naive_limit: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1_000, 10_000],
            params: QuadFlexParams::default(),
            // uniform points, as in the scalability runs over one city
            gen: GenConfig {
                dup_rate: 0.0,
                hotspot_fraction: 0.0,
                ..Default::default()
            },
            naive_limit: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub blocks: usize,
    pub max_depth: u32,
    pub quadflex_secs: f64,
    pub pairs: usize,
    pub oracle_pairs: Option<usize>,
    pub coverage: Option<f64>,
    pub naive_secs: Option<f64>,
    pub speedup: Option<f64>,
}

/// Share of `oracle` pairs present in `found`; 1 when the oracle is empty.
pub fn coverage(found: &[IndexPair], oracle: &[IndexPair]) -> f64 {
    if oracle.is_empty() {
        return 1.0;
    }
    let set: HashSet<&IndexPair> = found.iter().collect();
    oracle.iter().filter(|p| set.contains(p)).count() as f64 / oracle.len() as f64
}

pub fn run_size(n: usize, config: &BenchConfig, taxonomy: &Taxonomy) -> Result<BenchRow> {
    let gen = generate(
        &GenConfig {
            n,
            ..config.gen.clone()
        },
        taxonomy,
    )?;
    let c = &gen.collection;
    let t0 = Instant::now();
    let blocking = block(c, config.params)?;
    let quadflex_secs = t0.elapsed().as_secs_f64();
    let mut row = BenchRow {
        n,
        blocks: blocking.blocks.len(),
        max_depth: blocking.tree.max_depth(),
        quadflex_secs,
        pairs: blocking.pairs.len(),
        oracle_pairs: None,
        coverage: None,
        naive_secs: None,
        speedup: None,
    };
    if n <= config.naive_limit {
        let t0 = Instant::now();
        let oracle = oracle_fnn(c, config.params.max_diagonal);
        let naive = t0.elapsed().as_secs_f64();
        row.oracle_pairs = Some(oracle.len());
        row.coverage = Some(coverage(&blocking.pairs, &oracle));
        row.naive_secs = Some(naive);
        row.speedup = Some(naive / quadflex_secs.max(1e-9));
    }
    Ok(row)
}

pub fn run(config: &BenchConfig, taxonomy: &Taxonomy) -> Result<Vec<BenchRow>> {
    config
        .sizes
        .iter()
        .map(|&n| run_size(n, config, taxonomy))
        .collect()
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n",
        "blocks",
        "max_depth",
        "quadflex_secs",
        "pairs",
        "oracle_pairs",
        "coverage",
        "naive_secs",
        "speedup",
    ])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.blocks.to_string(),
            r.max_depth.to_string(),
            format!("{:.6}", r.quadflex_secs),
            r.pairs.to_string(),
            opt(r.oracle_pairs.map(|v| v.to_string())),
            opt(r.coverage.map(|v| format!("{v:.6}"))),
            opt(r.naive_secs.map(|v| format!("{v:.6}"))),
            opt(r.speedup.map(|v| format!("{v:.2}"))),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
