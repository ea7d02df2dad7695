//! CSV and JSON formats for entities, pairs, labels and blocks.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::LabelOverrides;
use crate::model::{
    canonicalize_pair, CandidatePair, Dimension, EntityCollection, EntityKey, PairKey, PairSet,
    SimilarityVector, SpatialEntity,
};
use crate::quadflex::Block;

pub const ENTITY_HEADER: [&str; 9] = [
    "source",
    "id",
    "lat",
    "lon",
    "name",
    "address",
    "categories",
    "phone",
    "website",
];

#[derive(Debug, Serialize, Deserialize)]
struct EntityRow {
    source: String,
    id: String,
    lat: f64,
    lon: f64,
    name: String,
    #[serde(default)]
    address: Option<String>,
    #[serde(default)]
    categories: Option<String>,
    #[serde(default)]
    phone: Option<String>,
    #[serde(default)]
    website: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntityJson {
    source: String,
    id: String,
    lat: f64,
    lon: f64,
    name: String,
    #[serde(default)]
    address: Option<String>,
    #[serde(default)]
    categories: Vec<String>,
    #[serde(default)]
    phone: Option<String>,
    #[serde(default)]
    website: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

fn build_entity(r: EntityJson) -> Result<SpatialEntity> {
    let mut e = SpatialEntity::new(EntityKey::new(r.source, r.id), r.lat, r.lon, r.name)?;
    e.address = non_empty(r.address);
    e.categories = r
        .categories
        .into_iter()
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    e.phone = non_empty(r.phone);
    e.website = non_empty(r.website);
    Ok(e)
}

pub fn read_entities(path: &Path) -> Result<EntityCollection> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        return read_entities_json(path);
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ENTITY_HEADER {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {}", ENTITY_HEADER.join(",")),
        ));
    }
    let mut entities = Vec::new();
    for (i, row) in rdr.deserialize::<EntityRow>().enumerate() {
        let row_no = i + 2;
        let r = row.map_err(|e| Error::parse(path, row_no, e.to_string()))?;
        let categories = r
            .categories
            .unwrap_or_default()
            .split('|')
            .map(str::to_string)
            .collect();
        let e = build_entity(EntityJson {
            source: r.source,
            id: r.id,
            lat: r.lat,
            lon: r.lon,
            name: r.name,
            address: r.address,
            categories,
            phone: r.phone,
            website: r.website,
        })
        .map_err(|e| Error::parse(path, row_no, e.to_string()))?;
        entities.push(e);
    }
    EntityCollection::new(entities).map_err(|e| Error::parse(path, 0, e.to_string()))
}

fn read_entities_json(path: &Path) -> Result<EntityCollection> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<EntityJson> = serde_json::from_str(&text)?;
    let entities = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| build_entity(r).map_err(|e| Error::parse(path, i + 1, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    EntityCollection::new(entities)
}

pub fn write_entities(path: &Path, collection: &EntityCollection) -> Result<()> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let rows: Vec<EntityJson> = collection
            .entities()
            .iter()
            .map(|e| EntityJson {
                source: e.key.source.clone(),
                id: e.key.id.clone(),
                lat: e.lat,
                lon: e.lon,
                name: e.name.clone(),
                address: e.address.clone(),
                categories: e.categories.iter().cloned().collect(),
                phone: e.phone.clone(),
                website: e.website.clone(),
            })
            .collect();
        let text = serde_json::to_string_pretty(&rows)?;
        return std::fs::write(path, text).map_err(|e| Error::io(path, e));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ENTITY_HEADER)?;
    for e in collection.entities() {
        let cats: Vec<&str> = e.categories.iter().map(String::as_str).collect();
        w.write_record([
            e.key.source.as_str(),
            e.key.id.as_str(),
            &e.lat.to_string(),
            &e.lon.to_string(),
            &e.name,
            e.address.as_deref().unwrap_or(""),
            &cats.join("|"),
            e.phone.as_deref().unwrap_or(""),
            e.website.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt_bool(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

fn parse_bool(s: &str) -> std::result::Result<Option<bool>, String> {
    match s.trim() {
        "" => Ok(None),
        "true" | "1" => Ok(Some(true)),
        "false" | "0" => Ok(Some(false)),
        other => Err(format!("expected true/false, got {other:?}")),
    }
}

pub fn write_pairs(path: &Path, pairs: &PairSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["left_source", "left_id", "right_source", "right_id"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(pairs.dims.iter().map(|d| format!("delta_{d}")));
    header.extend(["skyline", "truth", "predicted"].map(String::from));
    w.write_record(&header)?;
    for p in &pairs.pairs {
        let mut rec: Vec<String> = vec![
            p.key.left.source.clone(),
            p.key.left.id.clone(),
            p.key.right.source.clone(),
            p.key.right.id.clone(),
        ];
        rec.extend(p.delta.values().iter().map(|v| v.to_string()));
        rec.push(p.skyline_level.map(|k| k.to_string()).unwrap_or_default());
        rec.push(fmt_bool(p.truth).to_string());
        rec.push(fmt_bool(p.predicted).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: &Path) -> Result<PairSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let fixed = ["left_source", "left_id", "right_source", "right_id"];
    if header.len() < 7
        || header[..4] != fixed
        || header[header.len() - 3..] != ["skyline", "truth", "predicted"]
    {
        return Err(Error::parse(path, 1, "unexpected pair header"));
    }
    let dims: Vec<Dimension> = header[4..header.len() - 3]
        .iter()
        .map(|h| {
            h.strip_prefix("delta_")
                .ok_or_else(|| Error::parse(path, 1, format!("unexpected column {h:?}")))
                .and_then(|d| {
                    d.parse()
                        .map_err(|e: Error| Error::parse(path, 1, e.to_string()))
                })
        })
        .collect::<Result<_>>()?;
    let nd = dims.len();
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let bad = |reason: String| Error::parse(path, row, reason);
        let key = canonicalize_pair(
            &EntityKey::new(&rec[0], &rec[1]),
            &EntityKey::new(&rec[2], &rec[3]),
        )
        .map_err(|e| bad(e.to_string()))?;
        if key.left.source != rec[0] || key.left.id != rec[1] {
            return Err(bad(format!("pair {key} is not in canonical order")));
        }
        if !seen.insert(key.clone()) {
            return Err(bad(format!("duplicate pair {key}")));
        }
        let values = (0..nd)
            .map(|d| {
                rec[4 + d]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("delta_{}: {e}", dims[d])))
            })
            .collect::<Result<Vec<_>>>()?;
        let delta = SimilarityVector::new(values).map_err(|e| bad(e.to_string()))?;
        let skyline = match rec[4 + nd].trim() {
            "" => None,
            s => match s.parse::<u32>() {
                Ok(k) if k >= 1 => Some(k),
                _ => return Err(bad(format!("invalid skyline level {s:?}"))),
            },
        };
        let truth = parse_bool(&rec[5 + nd]).map_err(bad)?;
        let predicted = parse_bool(&rec[6 + nd]).map_err(bad)?;
        pairs.push(CandidatePair {
            key,
            delta,
            skyline_level: skyline,
            truth,
            predicted,
        });
    }
    PairSet::new(dims, pairs)
}

pub const LABEL_HEADER: [&str; 5] = [
    "left_source",
    "left_id",
    "right_source",
    "right_id",
    "label",
];

/// Reads a label file into canonical pair keys.
pub fn read_labels(path: &Path) -> Result<LabelOverrides> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != LABEL_HEADER {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {}", LABEL_HEADER.join(",")),
        ));
    }
    let mut out = LabelOverrides::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let key = canonicalize_pair(
            &EntityKey::new(&rec[0], &rec[1]),
            &EntityKey::new(&rec[2], &rec[3]),
        )
        .map_err(|e| Error::parse(path, row, e.to_string()))?;
        let label = parse_bool(&rec[4])
            .map_err(|e| Error::parse(path, row, e))?
            .ok_or_else(|| Error::parse(path, row, "empty label"))?;
        out.insert(key, label);
    }
    Ok(out)
}

pub fn write_labels<'a>(
    path: &Path,
    labels: impl IntoIterator<Item = (&'a PairKey, bool)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LABEL_HEADER)?;
    for (k, l) in labels {
        w.write_record([
            k.left.source.as_str(),
            k.left.id.as_str(),
            k.right.source.as_str(),
            k.right.id.as_str(),
            fmt_bool(Some(l)),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_blocks(path: &Path, blocks: &[Block], collection: &EntityCollection) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["block_id", "source", "id"])?;
    for (b, block) in blocks.iter().enumerate() {
        for &e in &block.entities {
            let key = &collection.get(e as usize).key;
            w.write_record([b.to_string().as_str(), key.source.as_str(), key.id.as_str()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a block dump back into member indices of `collection`.
pub fn read_blocks(path: &Path, collection: &EntityCollection) -> Result<Vec<Block>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["block_id", "source", "id"] {
        return Err(Error::parse(path, 1, "expected header block_id,source,id"));
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let leaf: usize = rec[0]
            .parse()
            .map_err(|_| Error::parse(path, row, format!("bad block id {:?}", &rec[0])))?;
        let key = EntityKey::new(&rec[1], &rec[2]);
        let idx = collection
            .position(&key)
            .ok_or_else(|| Error::parse(path, row, format!("unknown entity {key}")))?;
        match blocks.last_mut() {
            Some(b) if b.leaf == leaf => b.entities.push(idx as u32),
            _ => {
                if blocks.iter().any(|b| b.leaf == leaf) {
                    return Err(Error::parse(path, row, "block rows are not contiguous"));
                }
                blocks.push(Block {
                    leaf,
                    entities: vec![idx as u32],
                })
            }
        }
    }
    Ok(blocks)
}
