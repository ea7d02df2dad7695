//! Automatic ground truth from phone/website agreement, and evaluation
//! reports.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ClassificationResult, EntityCollection, Method, PairKey, PairSet, SkylinePartition,
};
use crate::skyex::{confusion, metric_series, Confusion, GroundTruth, LevelMetrics, Metrics};

pub const DEFAULT_COUNTRY_CODE: &str = "45";

/// Digits only, with an international `+cc` / `00cc` prefix removed.
/// Returns `None` when nothing remains.
pub fn normalize_phone(raw: &str, country_code: &str) -> Option<String> {
    let trimmed = raw.trim_start();
    let digits: String = raw.chars().filter(char::is_ascii_digit).collect();
    let international = if trimmed.starts_with('+') {
        Some(digits.as_str())
    } else {
        digits.strip_prefix("00")
    };
    let national = match international {
        Some(rest) => rest.strip_prefix(country_code).unwrap_or(rest),
        None => digits.as_str(),
    };
    (!national.is_empty()).then(|| national.to_string())
}

/// Lowercased host and path without scheme, `www.` or trailing slashes.
pub fn normalize_website(raw: &str) -> Option<String> {
    let mut s = raw.trim().to_lowercase();
    for scheme in ["https://", "http://"] {
        if let Some(rest) = s.strip_prefix(scheme) {
            s = rest.to_string();
            break;
        }
    }
    if let Some(rest) = s.strip_prefix("www.") {
        s = rest.to_string();
    }
    let s = s.trim_end_matches('/');
    (!s.is_empty()).then(|| s.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub country_code: String,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            country_code: DEFAULT_COUNTRY_CODE.to_string(),
        }
    }
}

/// Match iff normalized phones or normalized websites are present on both
/// sides and equal.
pub fn auto_label(
    a: &crate::model::SpatialEntity,
    b: &crate::model::SpatialEntity,
    config: &LabelConfig,
) -> bool {
    let phone = |e: &crate::model::SpatialEntity| {
        e.phone
            .as_deref()
            .and_then(|p| normalize_phone(p, &config.country_code))
    };
    let site = |e: &crate::model::SpatialEntity| e.website.as_deref().and_then(normalize_website);
    let same =
        |x: Option<String>, y: Option<String>| matches!((x, y), (Some(x), Some(y)) if x == y);
    same(phone(a), phone(b)) || same(site(a), site(b))
}

/// Manual corrections keyed by canonical pair.
pub type LabelOverrides = HashMap<PairKey, bool>;

/// Labels every pair automatically, then applies overrides. Returns the
/// labels and how many overrides matched a pair.
pub fn label_pairs(
    pairs: &PairSet,
    collection: &EntityCollection,
    config: &LabelConfig,
    overrides: &LabelOverrides,
) -> Result<(Vec<bool>, usize)> {
    let mut applied = 0;
    let labels = pairs
        .pairs
        .iter()
        .map(|p| {
            if let Some(&l) = overrides.get(&p.key) {
                applied += 1;
                return Ok(l);
            }
            let a = collection
                .by_key(&p.key.left)
                .ok_or_else(|| Error::param("pairs", format!("unknown entity {}", p.key.left)))?;
            let b = collection
                .by_key(&p.key.right)
                .ok_or_else(|| Error::param("pairs", format!("unknown entity {}", p.key.right)))?;
            Ok(auto_label(a, b, config))
        })
        .collect::<Result<_>>()?;
    Ok((labels, applied))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub cutoff_k: usize,
    pub explored_levels: usize,
    pub total_levels: usize,
    pub pairs: usize,
    pub confusion: Confusion,
    pub metrics: Metrics,
    #[serde(skip)]
    pub series: Vec<LevelMetrics>,
}

/// Scores a classification and records the full per-level curve.
pub fn evaluate(
    result: &ClassificationResult,
    partition: &SkylinePartition,
    truth: &GroundTruth,
) -> Result<EvalReport> {
    if truth.len() != partition.pair_count() {
        return Err(Error::param(
            "truth",
            format!(
                "{} labels for {} pairs",
                truth.len(),
                partition.pair_count()
            ),
        ));
    }
    let c = confusion(&result.positives, &result.negatives, truth);
    Ok(EvalReport {
        method: result.method.to_string(),
        cutoff_k: result.cutoff_k,
        explored_levels: result.explored_levels,
        total_levels: partition.depth(),
        pairs: truth.len(),
        confusion: c,
        metrics: c.metrics(),
        series: metric_series(partition, truth),
    })
}

/// Scores a pair set whose `truth`, `predicted` and `skyline` columns are
/// already filled. Predicted positives must be exactly levels `1..=k`.
pub fn evaluate_labeled(pairs: &PairSet) -> Result<EvalReport> {
    let partition = crate::pipeline::partition_from_levels(pairs)?;
    let mut labels = Vec::with_capacity(pairs.pairs.len());
    let mut cutoff_k = 0;
    for p in &pairs.pairs {
        let (Some(t), Some(pred)) = (p.truth, p.predicted) else {
            return Err(Error::param(
                "pairs",
                format!("pair {} lacks truth or prediction", p.key),
            ));
        };
        labels.push(t);
        if pred {
            cutoff_k = cutoff_k.max(p.skyline_level.unwrap_or(0) as usize);
        }
    }
    let result = ClassificationResult::split(Method::F, &partition, cutoff_k);
    let predicted = result.predictions(pairs.pairs.len());
    if pairs
        .pairs
        .iter()
        .zip(&predicted)
        .any(|(p, &q)| p.predicted != Some(q))
    {
        return Err(Error::param(
            "pairs",
            "predictions are not a prefix of skyline levels",
        ));
    }
    let mut report = evaluate(&result, &partition, &GroundTruth::new(labels))?;
    report.method = "input".to_string();
    Ok(report)
}

impl EvalReport {
    /// One-line `key=value` summary.
    pub fn summary_line(&self) -> String {
        format!(
            "method={} cutoff_k={} explored={}/{} pairs={} tp={} fp={} fn={} precision={:.4} recall={:.4} f1={:.4}",
            self.method,
            self.cutoff_k,
            self.explored_levels,
            self.total_levels,
            self.pairs,
            self.confusion.tp,
            self.confusion.fp,
            self.confusion.fn_,
            self.metrics.precision,
            self.metrics.recall,
            self.metrics.f1
        )
    }

    pub fn write_series_csv(&self, path: &Path) -> Result<()> {
        write_series_csv(path, &self.series)
    }
}

pub fn write_series_csv(path: &Path, series: &[LevelMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "k",
        "level_size",
        "tp",
        "fp",
        "fn",
        "tn",
        "precision",
        "recall",
        "f1",
    ])?;
    for m in series {
        w.write_record([
            m.k.to_string(),
            m.level_size.to_string(),
            m.confusion.tp.to_string(),
            m.confusion.fp.to_string(),
            m.confusion.fn_.to_string(),
            m.confusion.tn.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityKey, SpatialEntity};
    use crate::skyex::skyex_f;

    fn e(id: &str) -> SpatialEntity {
        SpatialEntity::new(EntityKey::new("gp", id), 57.0, 9.9, "x").unwrap()
    }

    #[test]
    fn phone_normalization() {
        assert_eq!(
            normalize_phone("+45 12 34 56 78", "45").as_deref(),
            Some("12345678")
        );
        assert_eq!(
            normalize_phone("0045 12345678", "45").as_deref(),
            Some("12345678")
        );
        assert_eq!(
            normalize_phone("12345678", "45").as_deref(),
            Some("12345678")
        );
        assert_eq!(
            normalize_phone("(98) 12-34-56", "45").as_deref(),
            Some("98123456")
        );
        assert_eq!(normalize_phone("call us", "45"), None);
        assert_eq!(
            normalize_phone("+46 8 123 456", "45").as_deref(),
            Some("468123456")
        );
    }

    #[test]
    fn website_normalization() {
        let n = |s| normalize_website(s);
        assert_eq!(n("https://www.Cafe-Ib.dk/").as_deref(), Some("cafe-ib.dk"));
        assert_eq!(n("cafe-ib.dk").as_deref(), Some("cafe-ib.dk"));
        assert_eq!(n("http://cafe.dk/menu/").as_deref(), Some("cafe.dk/menu"));
        assert_eq!(n("  "), None);
    }

    #[test]
    fn labeling_rules() {
        let c = LabelConfig::default();
        let a = e("1").with_phone("4512345678");
        let b = e("2").with_phone("4512345678");
        assert!(auto_label(&a, &b, &c));
        assert!(!auto_label(&e("1"), &e("2").with_website("x.dk"), &c));
        let a = e("1")
            .with_phone("11111111")
            .with_website("https://www.cafe.dk/");
        let b = e("2").with_phone("22222222").with_website("cafe.dk");
        assert!(auto_label(&a, &b, &c));
        assert_eq!(auto_label(&a, &b, &c), auto_label(&b, &a, &c));
        assert!(auto_label(
            &e("1").with_phone("+45 12 34 56 78"),
            &e("2").with_phone("12345678"),
            &c
        ));
    }

    #[test]
    fn evaluate_matches_selector() {
        let part = SkylinePartition::from_levels(vec![vec![0, 1], vec![2, 3, 4], vec![5]]);
        let truth = GroundTruth::new(vec![true, true, true, false, false, false]);
        let r = skyex_f(&part, &truth).unwrap();
        let report = evaluate(&r, &part, &truth).unwrap();
        let inner = r.metric_series.as_ref().unwrap()[r.cutoff_k - 1];
        assert_eq!(report.metrics.f1, inner.f1);
        assert!(report.summary_line().starts_with("method=f cutoff_k="));
    }

    #[test]
    fn empty_positive_set_scores_zero() {
        let part = SkylinePartition::from_levels(vec![vec![0], vec![1]]);
        let truth = GroundTruth::new(vec![true, false]);
        let mut r = ClassificationResult::split(crate::model::Method::F, &part, 0);
        r.positives.clear();
        let report = evaluate(&r, &part, &truth).unwrap();
        assert_eq!(report.metrics.f1, 0.0);
    }
}
