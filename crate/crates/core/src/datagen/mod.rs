//! Synthetic multi-source entities with planted duplicates.

pub mod oracle;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use oracle::{oracle_fnn, oracle_skyline};

use crate::error::{Error, Result};
use crate::geo::EARTH_RADIUS_M;
use crate::model::{
    canonicalize_pair, BoundingBox, EntityCollection, EntityKey, PairKey, SpatialEntity,
};
use crate::similarity::Taxonomy;

/// Perturbations applied to each planted duplicate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Probability per name character of a random insert, delete or
    /// substitution.
    pub name_edit_rate: f64,
    /// Probability that a word is dropped from or added to the name.
    pub name_variant_prob: f64,
    /// Standard deviation of the position jitter per axis, meters.
    pub coord_jitter_m: f64,
    /// Probability that the address is rewritten to a variant.
    pub address_variant_prob: f64,
    /// Probability that the address is dropped.
    pub address_drop_prob: f64,
    /// Probability that each category moves to a taxonomy sibling.
    pub category_swap_prob: f64,
    /// Probability that each category is replaced by its parent.
    pub category_generalize_prob: f64,
    pub phone_keep_prob: f64,
    pub website_keep_prob: f64,
    /// Probability that a kept phone or website is written differently.
    pub reformat_prob: f64,
    /// Each source writes addresses and categories its own way: some omit
    /// the postcode or append the country, some only use broader categories.
    pub source_conventions: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            name_edit_rate: 0.05,
            name_variant_prob: 0.3,
            coord_jitter_m: 15.0,
            address_variant_prob: 0.4,
            address_drop_prob: 0.1,
            category_swap_prob: 0.3,
            category_generalize_prob: 0.2,
            phone_keep_prob: 0.7,
            website_keep_prob: 0.5,
            reformat_prob: 0.5,
            source_conventions: true,
        }
    }
}

impl NoiseSpec {
    /// Exact copies: duplicates differ from their originals only in key.
    pub fn none() -> Self {
        Self {
            name_edit_rate: 0.0,
            name_variant_prob: 0.0,
            coord_jitter_m: 0.0,
            address_variant_prob: 0.0,
            address_drop_prob: 0.0,
            category_swap_prob: 0.0,
            category_generalize_prob: 0.0,
            phone_keep_prob: 1.0,
            website_keep_prob: 1.0,
            reformat_prob: 0.0,
            source_conventions: false,
        }
    }

    /// Reads `key = value` lines; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("name_edit_rate", self.name_edit_rate),
            ("name_variant_prob", self.name_variant_prob),
            ("address_variant_prob", self.address_variant_prob),
            ("address_drop_prob", self.address_drop_prob),
            ("category_swap_prob", self.category_swap_prob),
            ("category_generalize_prob", self.category_generalize_prob),
            ("phone_keep_prob", self.phone_keep_prob),
            ("website_keep_prob", self.website_keep_prob),
            ("reformat_prob", self.reformat_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(
                    "noise",
                    format!("{name} = {p} is not a probability"),
                ));
            }
        }
        if !(self.coord_jitter_m >= 0.0 && self.coord_jitter_m.is_finite()) {
            return Err(Error::param("noise", "coord_jitter_m must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Total entities, originals plus duplicates.
    pub n: usize,
    pub sources: usize,
    /// Duplicates per original entity, in `[0, 1]`.
    pub dup_rate: f64,
    pub noise: NoiseSpec,
    pub area: BoundingBox,
    pub hotspots: usize,
    /// Share of originals drawn around hotspot centres.
    pub hotspot_fraction: f64,
    pub hotspot_std_m: f64,
    /// Share of originals placed in a building that already hosts another
    /// original (same address, a few meters apart).
    pub colocated_fraction: f64,
    pub seed: u64,
}

/// About 150 km² around a mid-sized city centre.
pub const DEFAULT_AREA: BoundingBox = BoundingBox {
    min_lat: 57.00,
    min_lon: 9.85,
    max_lat: 57.10,
    max_lon: 10.08,
};

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            sources: 2,
            dup_rate: 0.2,
            noise: NoiseSpec::default(),
            area: DEFAULT_AREA,
            hotspots: 5,
            hotspot_fraction: 0.1,
            hotspot_std_m: 50.0,
            colocated_fraction: 0.2,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if self.sources == 0 {
            return Err(Error::param("sources", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.dup_rate) {
            return Err(Error::param("dup_rate", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.hotspot_fraction) {
            return Err(Error::param("hotspot_fraction", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.colocated_fraction) {
            return Err(Error::param("colocated_fraction", "must lie in [0, 1)"));
        }
        if self.hotspot_std_m.is_nan() || self.hotspot_std_m < 0.0 {
            return Err(Error::param("hotspot_std_m", "must be non-negative"));
        }
        let a = &self.area;
        if !(a.min_lat < a.max_lat && a.min_lon < a.max_lon)
            || a.min_lat < -85.0
            || a.max_lat > 85.0
            || a.min_lon < -180.0
            || a.max_lon > 180.0
        {
            return Err(Error::param("area", "invalid bounding box"));
        }
        self.noise.validate()
    }

    /// Originals and duplicates making up `n`.
    pub fn split_counts(&self) -> (usize, usize) {
        let originals = ((self.n as f64) / (1.0 + self.dup_rate)).round().max(1.0) as usize;
        let originals = originals.min(self.n);
        (originals, self.n - originals)
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub collection: EntityCollection,
    /// Canonical keys of every planted duplicate pair.
    pub truth: BTreeSet<PairKey>,
}

const SOURCE_TAGS: [&str; 4] = ["gp", "krak", "fsq", "yelp"];

fn source_tag(i: usize) -> String {
    SOURCE_TAGS
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("src{i}"))
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "rin", "sk", "ip", "pers", "ma", "nd", "bil", "ost", "er", "gaard", "hav", "mo",
    "sen", "ny", "by", "lund", "vi", "ta", "holm", "dal", "bro", "rup",
];
const STREET_SUFFIX: [&str; 4] = ["gade", "vej", "stræde", "torv"];

fn word(rng: &mut ChaCha8Rng, parts: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.gen_range(parts);
    let mut w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
    if let Some(f) = w.get_mut(0..1) {
        f.make_ascii_uppercase();
    }
    w
}

fn type_word(category: &str) -> String {
    let base = category.split('_').next().unwrap_or(category);
    let mut s = base.to_string();
    if let Some(f) = s.get_mut(0..1) {
        f.make_ascii_uppercase();
    }
    s
}

fn meters_to_degrees(lat: f64, dx: f64, dy: f64) -> (f64, f64) {
    let dlat = (dy / EARTH_RADIUS_M).to_degrees();
    let dlon = (dx / (EARTH_RADIUS_M * lat.to_radians().cos())).to_degrees();
    (dlat, dlon)
}

fn clamp_to(area: &BoundingBox, lat: f64, lon: f64) -> (f64, f64) {
    (
        lat.clamp(area.min_lat, area.max_lat),
        lon.clamp(area.min_lon, area.max_lon),
    )
}

/// Random insert/delete/substitute edits at `rate` per character.
pub fn edit_name(rng: &mut ChaCha8Rng, name: &str, rate: f64) -> String {
    if rate <= 0.0 {
        return name.to_string();
    }
    let mut out: Vec<char> = Vec::new();
    for c in name.chars() {
        if rng.gen_bool(rate) {
            match rng.gen_range(0..3) {
                0 => {
                    out.push(c);
                    out.push(rng.gen_range(b'a'..=b'z') as char);
                }
                1 => {}
                _ => out.push(rng.gen_range(b'a'..=b'z') as char),
            }
        } else {
            out.push(c);
        }
    }
    let s: String = out.into_iter().collect();
    if s.trim().is_empty() {
        name.to_string()
    } else {
        s
    }
}

fn address_variant(rng: &mut ChaCha8Rng, street: &str, number: u32, postcode: &str) -> String {
    match rng.gen_range(0..4) {
        0 => format!("{street} {number}, {postcode}, Denmark"),
        1 => format!("{street} {number}"),
        2 => format!(
            "{} {number}, {}",
            street.to_uppercase(),
            postcode.to_uppercase()
        ),
        _ => format!("{street} {number}. {postcode}."),
    }
}

fn reformat_phone(rng: &mut ChaCha8Rng, phone: &str, p: f64) -> String {
    if !rng.gen_bool(p) {
        return phone.to_string();
    }
    let d: Vec<char> = phone.chars().collect();
    let pairs: Vec<String> = d.chunks(2).map(|c| c.iter().collect()).collect();
    if rng.gen_bool(0.5) {
        format!("+45 {}", pairs.join(" "))
    } else {
        format!("0045{phone}")
    }
}

fn reformat_site(rng: &mut ChaCha8Rng, site: &str, p: f64) -> String {
    if !rng.gen_bool(p) {
        return site.to_string();
    }
    match rng.gen_range(0..3) {
        0 => format!("https://www.{site}/"),
        1 => format!("http://{site}"),
        _ => format!("www.{}", site.to_uppercase()),
    }
}

/// A street address with a position; several businesses can share one.
struct Site {
    lat: f64,
    lon: f64,
    street: String,
    number: u32,
    postcode: String,
}

fn site(cfg: &GenConfig, rng: &mut ChaCha8Rng, centres: &[(f64, f64)]) -> Site {
    let a = &cfg.area;
    let (lat, lon) = if !centres.is_empty() && rng.gen_bool(cfg.hotspot_fraction) {
        let &(clat, clon) = centres.choose(rng).unwrap();
        let g = Normal::new(0.0, cfg.hotspot_std_m.max(f64::MIN_POSITIVE)).unwrap();
        let (dlat, dlon) = meters_to_degrees(clat, g.sample(rng), g.sample(rng));
        clamp_to(a, clat + dlat, clon + dlon)
    } else {
        (
            rng.gen_range(a.min_lat..=a.max_lat),
            rng.gen_range(a.min_lon..=a.max_lon),
        )
    };
    Site {
        lat,
        lon,
        street: format!("{}{}", word(rng, 1..=2), STREET_SUFFIX.choose(rng).unwrap()),
        number: rng.gen_range(1..=150),
        postcode: format!("{} Aalborg", rng.gen_range(9000..=9220)),
    }
}

struct Original {
    entity: SpatialEntity,
    source: usize,
    site: usize,
    leaf: String,
    type_word: String,
}

fn source_address(conventions: bool, source: usize, s: &Site) -> String {
    match if conventions { source % 3 } else { 0 } {
        0 => format!("{} {}, {}", s.street, s.number, s.postcode),
        1 => format!("{} {}", s.street, s.number),
        _ => format!("{} {}, {}, Denmark", s.street, s.number, s.postcode),
    }
}

fn source_category(
    conventions: bool,
    source: usize,
    term: &str,
    taxonomy: &Taxonomy,
) -> Result<String> {
    if conventions && source % 2 == 1 {
        if let Some(p) = taxonomy.parents(term)?.first() {
            return Ok(p.to_string());
        }
    }
    Ok(term.to_string())
}

/// Spread of businesses sharing one building, meters.
const SHARED_SITE_JITTER_M: f64 = 5.0;

fn original(
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
    idx: usize,
    sites: &[Site],
    leaves: &[&str],
    taxonomy: &Taxonomy,
) -> Result<Original> {
    let site_idx = if idx < sites.len() {
        idx
    } else {
        rng.gen_range(0..sites.len())
    };
    let s = &sites[site_idx];
    let (mut lat, mut lon) = (s.lat, s.lon);
    if idx >= sites.len() {
        let g = Normal::new(0.0, SHARED_SITE_JITTER_M).unwrap();
        let (dlat, dlon) = meters_to_degrees(lat, g.sample(rng), g.sample(rng));
        (lat, lon) = clamp_to(&cfg.area, lat + dlat, lon + dlon);
    }
    let category = *leaves.choose(rng).unwrap();
    let proper = word(rng, 2..=3);
    let tw = type_word(category);
    let name = if rng.gen_bool(0.5) {
        format!("{proper} {tw}")
    } else {
        format!("{tw} {proper}")
    };
    let phone = format!("{:08}", rng.gen_range(20_000_000u32..100_000_000));
    let src = rng.gen_range(0..cfg.sources);
    let conv = cfg.noise.source_conventions;
    let mut e = SpatialEntity::new(
        EntityKey::new(source_tag(src), format!("e{idx:07}")),
        lat,
        lon,
        name,
    )?
    .with_address(source_address(conv, src, s))
    .with_categories([source_category(conv, src, category, taxonomy)?])
    .with_phone(phone);
    if rng.gen_bool(0.7) {
        e = e.with_website(format!("{}.dk", proper.to_lowercase()));
    }
    Ok(Original {
        entity: e,
        source: src,
        site: site_idx,
        leaf: category.to_string(),
        type_word: tw,
    })
}

const NAME_SUFFIXES: [&str; 4] = ["ApS", "A/S", "& Co", "Aalborg"];

/// Token-level rewrite of a business name: drops or adds a word.
fn name_variant(rng: &mut ChaCha8Rng, name: &str, type_word: &str) -> String {
    let words: Vec<&str> = name.split_whitespace().collect();
    match rng.gen_range(0..3) {
        0 if words.len() > 1 => words
            .iter()
            .filter(|w| !w.eq_ignore_ascii_case(type_word))
            .copied()
            .collect::<Vec<_>>()
            .join(" "),
        1 => format!("{name} {}", NAME_SUFFIXES.choose(rng).unwrap()),
        _ => format!("{} {name}", type_word),
    }
}

fn duplicate(
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
    idx: usize,
    of: &Original,
    sites: &[Site],
    taxonomy: &Taxonomy,
) -> Result<SpatialEntity> {
    let noise = &cfg.noise;
    let base = &of.entity;
    let src = if cfg.sources > 1 {
        let s = rng.gen_range(0..cfg.sources - 1);
        if s == of.source {
            cfg.sources - 1
        } else {
            s
        }
    } else {
        of.source
    };
    let conv = noise.source_conventions;
    let (mut lat, mut lon) = (base.lat, base.lon);
    if noise.coord_jitter_m > 0.0 {
        let g = Normal::new(0.0, noise.coord_jitter_m).unwrap();
        let (dlat, dlon) = meters_to_degrees(lat, g.sample(rng), g.sample(rng));
        (lat, lon) = clamp_to(&cfg.area, lat + dlat, lon + dlon);
    }
    let mut name = base.name.clone();
    if rng.gen_bool(noise.name_variant_prob) {
        name = name_variant(rng, &name, &of.type_word);
    }
    let name = edit_name(rng, &name, noise.name_edit_rate);
    let mut e = SpatialEntity::new(
        EntityKey::new(source_tag(src), format!("e{idx:07}")),
        lat,
        lon,
        name,
    )?;
    if !rng.gen_bool(noise.address_drop_prob) {
        let s = &sites[of.site];
        e.address = Some(if rng.gen_bool(noise.address_variant_prob) {
            address_variant(rng, &s.street, s.number, &s.postcode)
        } else {
            source_address(conv, src, s)
        });
    }
    let mut term = of.leaf.clone();
    if rng.gen_bool(noise.category_swap_prob) {
        if let Some(s) = taxonomy.siblings(&term)?.choose(rng) {
            term = s.to_string();
        }
    }
    if rng.gen_bool(noise.category_generalize_prob) {
        if let Some(p) = taxonomy.parents(&term)?.first() {
            term = p.to_string();
        }
    }
    e.categories = [source_category(conv, src, &term, taxonomy)?].into();
    if let Some(p) = &base.phone {
        if rng.gen_bool(noise.phone_keep_prob) {
            e.phone = Some(reformat_phone(rng, p, noise.reformat_prob));
        }
    }
    if let Some(w) = &base.website {
        if rng.gen_bool(noise.website_keep_prob) {
            e.website = Some(reformat_site(rng, w, noise.reformat_prob));
        }
    }
    Ok(e)
}

/// Per-entity random stream, independent of generation order.
fn stream(seed: u64, idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64 + 1);
    rng
}

/// Generates `cfg.n` entities over `taxonomy` leaves. Output is a pure
/// function of the configuration.
pub fn generate(cfg: &GenConfig, taxonomy: &Taxonomy) -> Result<Generated> {
    cfg.validate()?;
    let (n_orig, n_dup) = cfg.split_counts();
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = &cfg.area;
    let centres: Vec<(f64, f64)> = (0..cfg.hotspots)
        .map(|_| {
            (
                master.gen_range(a.min_lat..=a.max_lat),
                master.gen_range(a.min_lon..=a.max_lon),
            )
        })
        .collect();
    let mut chosen: Vec<usize> =
        rand::seq::index::sample(&mut master, n_orig, n_dup.min(n_orig)).into_vec();
    chosen.sort_unstable();

    let n_sites = ((n_orig as f64) * (1.0 - cfg.colocated_fraction))
        .ceil()
        .max(1.0) as usize;
    let sites: Vec<Site> = (0..n_sites)
        .into_par_iter()
        .map(|i| site(cfg, &mut stream(cfg.seed, n_orig + n_dup + i), &centres))
        .collect();
    let leaves = taxonomy.leaves();
    let originals: Vec<Original> = (0..n_orig)
        .into_par_iter()
        .map(|i| original(cfg, &mut stream(cfg.seed, i), i, &sites, &leaves, taxonomy))
        .collect::<Result<_>>()?;
    let duplicates: Vec<SpatialEntity> = chosen
        .par_iter()
        .enumerate()
        .map(|(j, &of)| {
            let idx = n_orig + j;
            duplicate(
                cfg,
                &mut stream(cfg.seed, idx),
                idx,
                &originals[of],
                &sites,
                taxonomy,
            )
        })
        .collect::<Result<_>>()?;

    let mut truth = BTreeSet::new();
    for (j, &of) in chosen.iter().enumerate() {
        truth.insert(canonicalize_pair(
            &originals[of].entity.key,
            &duplicates[j].key,
        )?);
    }
    let entities: Vec<SpatialEntity> = originals
        .into_iter()
        .map(|o| o.entity)
        .chain(duplicates)
        .collect();
    Ok(Generated {
        collection: EntityCollection::new(entities)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dimension;
    use crate::similarity::{compare_pair, CompareConfig};

    fn cfg(n: usize, dup_rate: f64, noise: NoiseSpec, seed: u64) -> GenConfig {
        GenConfig {
            n,
            dup_rate,
            noise,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn no_duplicates_no_truth() {
        let g = generate(
            &cfg(200, 0.0, NoiseSpec::default(), 1),
            &Taxonomy::builtin(),
        )
        .unwrap();
        assert_eq!(g.collection.len(), 200);
        assert!(g.truth.is_empty());
    }

    #[test]
    fn noiseless_duplicates_are_identical() {
        let t = Taxonomy::builtin();
        let g = generate(&cfg(300, 0.5, NoiseSpec::none(), 2), &t).unwrap();
        assert_eq!(g.truth.len(), 100);
        for pair in &g.truth {
            let a = g.collection.by_key(&pair.left).unwrap();
            let b = g.collection.by_key(&pair.right).unwrap();
            assert_ne!(a.key.source, b.key.source);
            assert_eq!((a.lat, a.lon), (b.lat, b.lon));
            let v = compare_pair(
                a,
                b,
                &t,
                &Dimension::DEFAULT_ORDER,
                &CompareConfig::default(),
            )
            .unwrap();
            assert_eq!(v.values(), &[1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let t = Taxonomy::builtin();
        let a = generate(&cfg(500, 0.2, NoiseSpec::default(), 7), &t).unwrap();
        let b = generate(&cfg(500, 0.2, NoiseSpec::default(), 7), &t).unwrap();
        assert_eq!(a.collection.entities(), b.collection.entities());
        assert_eq!(a.truth, b.truth);
        let c = generate(&cfg(500, 0.2, NoiseSpec::default(), 8), &t).unwrap();
        assert_ne!(a.collection.entities(), c.collection.entities());
    }

    #[test]
    fn points_stay_in_area() {
        let g = generate(
            &cfg(1000, 0.2, NoiseSpec::default(), 3),
            &Taxonomy::builtin(),
        )
        .unwrap();
        for e in g.collection.entities() {
            assert!(DEFAULT_AREA.contains(e.lat, e.lon));
        }
    }

    #[test]
    fn noise_spec_parsing() {
        let s = NoiseSpec::parse("name_edit_rate = 0.1\ncoord_jitter_m = 5\n").unwrap();
        assert_eq!(s.name_edit_rate, 0.1);
        assert_eq!(s.coord_jitter_m, 5.0);
        assert_eq!(s.phone_keep_prob, NoiseSpec::default().phone_keep_prob);
        assert!(NoiseSpec::parse("bogus = 1").is_err());
        assert!(NoiseSpec::parse("phone_keep_prob = 2").is_err());
    }

    #[test]
    fn invalid_rates_rejected() {
        let t = Taxonomy::builtin();
        assert!(generate(&cfg(10, 1.5, NoiseSpec::default(), 0), &t).is_err());
        assert!(generate(&cfg(0, 0.1, NoiseSpec::default(), 0), &t).is_err());
    }
}
