//! Staged linkage run: ingest, block, compare, rank, label, eval. Each stage
//! writes its artifact so later stages can be re-run from disk.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{evaluate, label_pairs, EvalReport, LabelConfig, LabelOverrides};
use crate::geo::Projection;
use crate::io;
use crate::model::{
    ClassificationResult, Dimension, EntityCollection, Method, PairKey, PairSet, SkylinePartition,
};
use crate::quadflex::{enumerate_pairs, Block, QuadFlex, QuadFlexParams};
use crate::similarity::{compare_pairs, filter_known, CompareConfig, Taxonomy};
use crate::skyex::{
    skyex_d, skyex_f, skyex_fes, DeltaMetric, DistanceConfig, DistanceProfile, GroundTruth,
};
use crate::skyrank;

pub const BLOCKS_FILE: &str = "blocks.csv";
pub const PAIRS_FILE: &str = "pairs.csv";
pub const RANKED_FILE: &str = "ranked.csv";
pub const LABELED_FILE: &str = "labeled.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Run parameters; also the schema of the `key = value` config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Maximum leaf diagonal in meters.
    pub meters: f64,
    /// Maximum leaf density in entities per 1000 m²; unlimited when absent.
    pub density: Option<f64>,
    pub dims: Vec<Dimension>,
    pub method: Method,
    pub window: usize,
    pub sigma: f64,
    pub delta_metric: DeltaMetric,
    pub eq3_literal: bool,
    pub missing_score: f64,
    pub country_code: String,
    /// Taxonomy edge list; the built-in taxonomy when absent.
    pub taxonomy: Option<PathBuf>,
    /// Complete truth: listed pairs labeled `true` are the only matches.
    pub truth: Option<PathBuf>,
    /// Manual labels merged over the automatic phone/website labels.
    pub labels: Option<PathBuf>,
    /// Generator seed of the input, recorded for provenance.
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let d = DistanceConfig::default();
        Self {
            meters: 100.0,
            density: None,
            dims: Dimension::DEFAULT_ORDER.to_vec(),
            method: Method::F,
            window: d.window,
            sigma: d.sigma,
            delta_metric: d.metric,
            eq3_literal: d.eq3_literal,
            missing_score: 0.0,
            country_code: crate::eval::DEFAULT_COUNTRY_CODE.to_string(),
            taxonomy: None,
            truth: None,
            labels: None,
            seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn quadflex(&self) -> Result<QuadFlexParams> {
        QuadFlexParams::new(self.meters, self.density)
    }

    pub fn distance(&self) -> DistanceConfig {
        DistanceConfig {
            window: self.window,
            sigma: self.sigma,
            metric: self.delta_metric,
            eq3_literal: self.eq3_literal,
        }
    }

    pub fn compare(&self) -> CompareConfig {
        CompareConfig {
            missing_score: self.missing_score,
        }
    }

    pub fn label(&self) -> LabelConfig {
        LabelConfig {
            country_code: self.country_code.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.quadflex()?;
        self.distance().validate()?;
        if self.dims.is_empty() {
            return Err(Error::param("dims", "no dimensions given"));
        }
        let unique: BTreeSet<&str> = self.dims.iter().map(|d| d.as_str()).collect();
        if unique.len() != self.dims.len() {
            return Err(Error::param("dims", "repeated dimension"));
        }
        if !(0.0..=1.0).contains(&self.missing_score) {
            return Err(Error::param("missing_score", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn load_taxonomy(path: Option<&Path>) -> Result<Taxonomy> {
    match path {
        Some(p) => Taxonomy::load(p),
        None => Ok(Taxonomy::builtin()),
    }
}

/// Reads entities and drops categories the taxonomy does not know.
pub fn ingest(input: &Path, taxonomy: &Taxonomy) -> Result<EntityCollection> {
    let raw = io::read_entities(input)?;
    filter_known(&raw, taxonomy)
}

pub struct Blocking {
    pub tree: QuadFlex,
    pub blocks: Vec<Block>,
    pub pairs: Vec<crate::quadflex::IndexPair>,
}

pub fn block(collection: &EntityCollection, params: QuadFlexParams) -> Result<Blocking> {
    let tree = QuadFlex::build(collection, params)?;
    let blocks = tree.leaves();
    let pairs = enumerate_pairs(&blocks, &collection.key_ranks());
    Ok(Blocking {
        tree,
        blocks,
        pairs,
    })
}

/// Rebuilds the partition from the pairs' `skyline` column.
pub fn partition_from_levels(pairs: &PairSet) -> Result<SkylinePartition> {
    let assignment = pairs
        .pairs
        .iter()
        .map(|p| {
            p.skyline_level.ok_or_else(|| {
                Error::param("pairs", format!("pair {} has no skyline level", p.key))
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    let partition = SkylinePartition::from_assignment(&assignment);
    if partition.levels().iter().any(Vec::is_empty) {
        return Err(Error::param("pairs", "skyline levels are not contiguous"));
    }
    Ok(partition)
}

/// Truth for every pair plus the count of listed matches outside the
/// candidate set.
pub fn ground_truth(
    pairs: &PairSet,
    collection: &EntityCollection,
    config: &PipelineConfig,
) -> Result<GroundTruth> {
    if let Some(path) = &config.truth {
        let listed = io::read_labels(path)?;
        let positives: HashSet<&PairKey> =
            listed.iter().filter(|(_, &l)| l).map(|(k, _)| k).collect();
        let candidates: HashSet<&PairKey> = pairs.pairs.iter().map(|p| &p.key).collect();
        let labels = pairs
            .pairs
            .iter()
            .map(|p| positives.contains(&p.key))
            .collect();
        let missed = positives
            .iter()
            .filter(|k| !candidates.contains(*k))
            .count();
        return Ok(GroundTruth::new(labels).with_missed(missed));
    }
    let overrides = match &config.labels {
        Some(path) => io::read_labels(path)?,
        None => LabelOverrides::new(),
    };
    let (labels, applied) = label_pairs(pairs, collection, &config.label(), &overrides)?;
    if !overrides.is_empty() {
        info!(
            "{applied} of {} manual labels matched a candidate pair",
            overrides.len()
        );
    }
    Ok(GroundTruth::new(labels))
}

pub fn classify(
    method: Method,
    partition: &SkylinePartition,
    pairs: &PairSet,
    truth: &GroundTruth,
    distance: &DistanceConfig,
) -> Result<ClassificationResult> {
    match method {
        Method::F => skyex_f(partition, truth),
        Method::Fes => skyex_fes(partition, truth),
        Method::D => skyex_d(partition, &pairs.deltas(), distance),
    }
}

/// Fills `truth` and `predicted` on every pair.
pub fn apply_labels(pairs: &mut PairSet, truth: &GroundTruth, result: &ClassificationResult) {
    let predicted = result.predictions(pairs.pairs.len());
    for (i, p) in pairs.pairs.iter_mut().enumerate() {
        p.truth = Some(truth.labels[i]);
        p.predicted = Some(predicted[i]);
    }
}

pub fn write_profile(path: &Path, profile: &DistanceProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "mu", "derivative", "smoothed"])?;
    for (i, mu) in profile.mu.iter().enumerate() {
        let opt = |s: &[f64]| s.get(i).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            (i + 1).to_string(),
            mu.to_string(),
            opt(&profile.derivative),
            opt(&profile.smoothed),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counts {
    pub entities: usize,
    pub blocks: usize,
    pub candidate_pairs: usize,
    pub levels: usize,
    pub labeled_positives: usize,
    pub missed_positives: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub cutoff_k: usize,
    pub explored_levels: usize,
    pub total_levels: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub input: PathBuf,
    pub input_sha256: String,
    pub taxonomy_sha256: Option<String>,
    pub config: PipelineConfig,
    pub projection: Option<Projection>,
    pub names_case_folded: bool,
    pub counts: Counts,
    pub result: RunSummary,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub struct RunOutput {
    pub manifest: Manifest,
    pub report: EvalReport,
    pub result: ClassificationResult,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs every stage and writes all artifacts into `out_dir`.
pub fn run(input: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<RunOutput> {
    stage("config", config.validate())?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e).in_stage("ingest"))?;

    let taxonomy = stage("ingest", load_taxonomy(config.taxonomy.as_deref()))?;
    let collection = stage("ingest", ingest(input, &taxonomy))?;
    let input_sha256 = stage("ingest", sha256_file(input))?;
    let taxonomy_sha256 = match &config.taxonomy {
        Some(p) => Some(stage("ingest", sha256_file(p))?),
        None => None,
    };
    info!("ingested {} entities", collection.len());

    let blocking = stage("block", block(&collection, config.quadflex()?))?;
    stage(
        "block",
        io::write_blocks(&out_dir.join(BLOCKS_FILE), &blocking.blocks, &collection),
    )?;
    info!(
        "{} blocks, {} candidate pairs",
        blocking.blocks.len(),
        blocking.pairs.len()
    );

    let mut pairs = stage(
        "compare",
        compare_pairs(
            &collection,
            &blocking.pairs,
            &taxonomy,
            &config.dims,
            &config.compare(),
        ),
    )?;
    stage(
        "compare",
        io::write_pairs(&out_dir.join(PAIRS_FILE), &pairs),
    )?;

    let partition = stage("rank", skyrank::rank(&mut pairs))?;
    stage("rank", io::write_pairs(&out_dir.join(RANKED_FILE), &pairs))?;
    info!("{} skyline levels", partition.depth());

    let (result, truth) = stage(
        "label",
        label_stage(&mut pairs, &partition, &collection, config, out_dir),
    )?;

    let report = stage("eval", eval_stage(&result, &partition, &truth, out_dir))?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        input: input.to_path_buf(),
        input_sha256,
        taxonomy_sha256,
        config: config.clone(),
        projection: blocking.tree.projection(),
        names_case_folded: true,
        counts: Counts {
            entities: collection.len(),
            blocks: blocking.blocks.len(),
            candidate_pairs: pairs.pairs.len(),
            levels: partition.depth(),
            labeled_positives: truth.labels.iter().filter(|&&l| l).count(),
            missed_positives: truth.missed_positives,
        },
        result: RunSummary {
            method: result.method,
            cutoff_k: result.cutoff_k,
            explored_levels: result.explored_levels,
            total_levels: partition.depth(),
            precision: report.metrics.precision,
            recall: report.metrics.recall,
            f1: report.metrics.f1,
        },
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = stage(
        "eval",
        serde_json::to_string_pretty(&manifest).map_err(Error::from),
    )?;
    stage(
        "eval",
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e)),
    )?;
    Ok(RunOutput {
        manifest,
        report,
        result,
    })
}

/// Labels ranked pairs, picks the cut-off and writes the labeled pairs.
pub fn label_stage(
    pairs: &mut PairSet,
    partition: &SkylinePartition,
    collection: &EntityCollection,
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<(ClassificationResult, GroundTruth)> {
    let truth = ground_truth(pairs, collection, config)?;
    let result = classify(config.method, partition, pairs, &truth, &config.distance())?;
    apply_labels(pairs, &truth, &result);
    io::write_pairs(&out_dir.join(LABELED_FILE), pairs)?;
    if let Some(profile) = &result.profile {
        write_profile(&out_dir.join(PROFILE_FILE), profile)?;
    }
    Ok((result, truth))
}

/// Writes the metric curve and the one-line summary.
pub fn eval_stage(
    result: &ClassificationResult,
    partition: &SkylinePartition,
    truth: &GroundTruth,
    out_dir: &Path,
) -> Result<EvalReport> {
    let report = evaluate(result, partition, truth)?;
    report.write_series_csv(&out_dir.join(REPORT_FILE))?;
    let path = out_dir.join(SUMMARY_FILE);
    std::fs::write(&path, report.summary_line() + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
