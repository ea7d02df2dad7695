use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use quadsky::bench::{self, BenchConfig};
use quadsky::datagen::{generate, GenConfig, NoiseSpec};
use quadsky::eval::evaluate_labeled;
use quadsky::io;
use quadsky::pipeline::{self, PipelineConfig};
use quadsky::quadflex::QuadFlexParams;
use quadsky::similarity::compare_pairs;
use quadsky::skyex::DeltaMetric;
use quadsky::skyrank;
use quadsky::{Dimension, Method};

#[derive(Parser)]
#[command(name = "quadsky", version, about = "Spatial entity linkage pipeline")]
struct Cli {
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic entity file and its truth pairs.
    Gen(GenArgs),
    /// Spatially block entities into a block dump.
    Block(BlockArgs),
    /// Compare entity pairs that share a block.
    Compare(CompareArgs),
    /// Assign skyline levels to compared pairs.
    Rank(RankArgs),
    /// Pick the skyline cut-off and label ranked pairs.
    Label(LabelArgs),
    /// Score a labeled pair file.
    Eval(EvalArgs),
    /// Run every stage and write all artifacts plus a manifest.
    Pipeline(PipelineArgs),
    /// Time blocking against the exhaustive radius scan.
    Bench(BenchArgs),
}

/// Settings shared by the stages; flags override the config file.
#[derive(Args, Default)]
struct Settings {
    /// Config file (`key = value` lines); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maximum block diagonal in meters.
    #[arg(long)]
    meters: Option<f64>,
    /// Maximum block density in entities per 1000 m².
    #[arg(long)]
    density: Option<f64>,
    /// Similarity dimensions in order, e.g. name,address,semantic.
    #[arg(long)]
    dims: Option<String>,
    /// Cut-off selector: f, fes or d.
    #[arg(long)]
    method: Option<String>,
    /// Smoothing window for method d.
    #[arg(long)]
    window: Option<usize>,
    /// Smoothing sigma for method d.
    #[arg(long)]
    sigma: Option<f64>,
    /// Distance between similarity vectors: euclidean or manhattan.
    #[arg(long)]
    delta_metric: Option<String>,
    /// Divide the cross-class distance sum by the positive count only.
    #[arg(long)]
    eq3_literal: bool,
    /// Score for an attribute missing on either side.
    #[arg(long)]
    missing_score: Option<f64>,
    /// Country calling code stripped from phones before auto-labeling.
    #[arg(long)]
    country_code: Option<String>,
    /// Taxonomy edge list (`child<TAB>parent` lines); built-in when absent.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Complete truth label file; pairs not listed as true are non-matches.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Manual labels applied over the automatic phone/website labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Seed of the input data, recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
}

impl Settings {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.meters {
            c.meters = v;
        }
        if self.density.is_some() {
            c.density = self.density;
        }
        if let Some(v) = &self.dims {
            c.dims = Dimension::parse_list(v)?;
        }
        if let Some(v) = &self.method {
            c.method = v.parse::<Method>()?;
        }
        if let Some(v) = self.window {
            c.window = v;
        }
        if let Some(v) = self.sigma {
            c.sigma = v;
        }
        if let Some(v) = &self.delta_metric {
            c.delta_metric = v.parse::<DeltaMetric>()?;
        }
        if self.eq3_literal {
            c.eq3_literal = true;
        }
        if let Some(v) = self.missing_score {
            c.missing_score = v;
        }
        if let Some(v) = &self.country_code {
            c.country_code = v.clone();
        }
        if self.taxonomy.is_some() {
            c.taxonomy = self.taxonomy.clone();
        }
        if self.truth.is_some() {
            c.truth = self.truth.clone();
        }
        if self.labels.is_some() {
            c.labels = self.labels.clone();
        }
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct GenArgs {
    /// Total number of entities.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of sources the entities are spread over.
    #[arg(long, default_value_t = 2)]
    sources: usize,
    /// Duplicates per original entity.
    #[arg(long, default_value_t = 0.2)]
    dup_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise settings file (`key = value` lines).
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Disable all noise: duplicates are exact copies.
    #[arg(long, conflicts_with = "noise")]
    no_noise: bool,
    /// Taxonomy whose leaves are used as categories.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Entity file to write (.csv or .json).
    #[arg(long)]
    out: PathBuf,
    /// Truth label file to write.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct BlockArgs {
    /// Entity file (.csv or .json).
    #[arg(long)]
    input: PathBuf,
    /// Block dump to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    /// Block dump from `block`; blocks are rebuilt when absent.
    #[arg(long)]
    blocks: Option<PathBuf>,
    /// Pair file to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct RankArgs {
    /// Pair file from `compare`.
    #[arg(long)]
    pairs: PathBuf,
    /// Ranked pair file to write.
    #[arg(long)]
    out: PathBuf,
    /// Rank on these dimensions only, in this order.
    #[arg(long)]
    dims: Option<String>,
}

#[derive(Args)]
struct LabelArgs {
    /// Ranked pair file from `rank`.
    #[arg(long)]
    pairs: PathBuf,
    /// Entity file the pairs were built from.
    #[arg(long)]
    input: PathBuf,
    /// Directory for the labeled pairs, report and profile.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct EvalArgs {
    /// Labeled pair file from `label`.
    #[arg(long)]
    pairs: PathBuf,
    /// Per-level metric curve to write.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 10000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 100.0)]
    meters: f64,
    #[arg(long)]
    density: Option<f64>,
    /// Skip the exhaustive scan above this size.
    #[arg(long, default_value_t = 100_000)]
    naive_limit: usize,
    /// Share of points drawn around dense hotspots instead of uniformly.
    #[arg(long, default_value_t = 0.0)]
    hotspot_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Result CSV to write.
    #[arg(long)]
    out: PathBuf,
}

fn gen(a: &GenArgs) -> Result<()> {
    let noise = match (&a.noise, a.no_noise) {
        (Some(p), _) => NoiseSpec::load(p)?,
        (None, true) => NoiseSpec::none(),
        (None, false) => NoiseSpec::default(),
    };
    let cfg = GenConfig {
        n: a.n,
        sources: a.sources,
        dup_rate: a.dup_rate,
        noise,
        seed: a.seed,
        ..Default::default()
    };
    let taxonomy = pipeline::load_taxonomy(a.taxonomy.as_deref())?;
    let g = generate(&cfg, &taxonomy)?;
    io::write_entities(&a.out, &g.collection)?;
    io::write_labels(&a.truth, g.truth.iter().map(|k| (k, true)))?;
    println!(
        "{} entities, {} duplicate pairs",
        g.collection.len(),
        g.truth.len()
    );
    Ok(())
}

fn block(a: &BlockArgs) -> Result<()> {
    let c = a.settings.resolve()?;
    let taxonomy = pipeline::load_taxonomy(c.taxonomy.as_deref())?;
    let collection = pipeline::ingest(&a.input, &taxonomy)?;
    let b = pipeline::block(&collection, c.quadflex()?)?;
    io::write_blocks(&a.out, &b.blocks, &collection)?;
    println!(
        "{} blocks, max depth {}, {} candidate pairs",
        b.blocks.len(),
        b.tree.max_depth(),
        b.pairs.len()
    );
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<()> {
    let c = a.settings.resolve()?;
    let taxonomy = pipeline::load_taxonomy(c.taxonomy.as_deref())?;
    let collection = pipeline::ingest(&a.input, &taxonomy)?;
    let pairs = match &a.blocks {
        Some(path) => {
            let blocks = io::read_blocks(path, &collection)?;
            quadsky::quadflex::enumerate_pairs(&blocks, &collection.key_ranks())
        }
        None => pipeline::block(&collection, c.quadflex()?)?.pairs,
    };
    let set = compare_pairs(&collection, &pairs, &taxonomy, &c.dims, &c.compare())?;
    io::write_pairs(&a.out, &set)?;
    println!("{} pairs compared", set.pairs.len());
    Ok(())
}

fn rank(a: &RankArgs) -> Result<()> {
    let mut set = io::read_pairs(&a.pairs)?;
    if let Some(d) = &a.dims {
        set = set.select_dims(&Dimension::parse_list(d)?)?;
    }
    let partition = skyrank::rank(&mut set)?;
    io::write_pairs(&a.out, &set)?;
    println!(
        "{} pairs in {} skyline levels",
        set.pairs.len(),
        partition.depth()
    );
    Ok(())
}

fn label(a: &LabelArgs) -> Result<()> {
    let c = a.settings.resolve()?;
    let mut set = io::read_pairs(&a.pairs)?;
    let partition = pipeline::partition_from_levels(&set)?;
    let taxonomy = pipeline::load_taxonomy(c.taxonomy.as_deref())?;
    let collection = pipeline::ingest(&a.input, &taxonomy)?;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    let (result, truth) = pipeline::label_stage(&mut set, &partition, &collection, &c, &a.out_dir)?;
    let report = pipeline::eval_stage(&result, &partition, &truth, &a.out_dir)?;
    println!("{}", report.summary_line());
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let set = io::read_pairs(&a.pairs)?;
    let report = evaluate_labeled(&set)?;
    if let Some(path) = &a.report {
        report.write_series_csv(path)?;
    }
    println!("{}", report.summary_line());
    Ok(())
}

fn run_pipeline(a: &PipelineArgs) -> Result<()> {
    let c = a
        .settings
        .resolve()
        .map_err(|e| anyhow::anyhow!("stage config: {e}"))?;
    let out = pipeline::run(&a.input, &a.out_dir, &c)?;
    println!("{}", out.report.summary_line());
    info!("artifacts in {}", a.out_dir.display());
    Ok(())
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let config = BenchConfig {
        sizes: a.sizes.clone(),
        params: QuadFlexParams::new(a.meters, a.density)?,
        gen: GenConfig {
            dup_rate: 0.0,
            hotspot_fraction: a.hotspot_fraction,
            seed: a.seed,
            ..Default::default()
        },
        naive_limit: a.naive_limit,
    };
    let taxonomy = quadsky::similarity::Taxonomy::builtin();
    let rows = bench::run(&config, &taxonomy)?;
    bench::write_csv(&a.out, &rows)?;
    for r in &rows {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "n={} blocks={} pairs={} quadflex_secs={:.4} coverage={} naive_secs={} speedup={}",
            r.n,
            r.blocks,
            r.pairs,
            r.quadflex_secs,
            opt(r.coverage),
            opt(r.naive_secs),
            opt(r.speedup)
        );
    }
    Ok(())
}

fn init(cli: &Cli) -> Result<()> {
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    init(cli)?;
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Block(a) => block(a),
        Command::Compare(a) => compare(a),
        Command::Rank(a) => rank(a),
        Command::Label(a) => label(a),
        Command::Eval(a) => eval(a),
        Command::Pipeline(a) => run_pipeline(a),
        Command::Bench(a) => run_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
