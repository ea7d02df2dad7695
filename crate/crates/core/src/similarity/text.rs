//! Name and address similarity.

use crate::error::{Error, Result};

/// Edit distance (insertions, deletions, substitutions) over Unicode scalar
/// values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

/// `1 - lev(a, b) / max(|a|, |b|)` on trimmed, case-folded input.
pub fn text_sim(a: &str, b: &str) -> Result<f64> {
    let (a, b) = (fold(a), fold(b));
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok(1.0 - levenshtein(&a, &b) as f64 / longest as f64)
}

/// Lowercases, drops punctuation, and collapses whitespace runs.
pub fn normalize_address(a: &str) -> String {
    let cleaned: String = a
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub const ADDRESS_EQUAL: f64 = 1.0;
pub const ADDRESS_INCLUDED: f64 = 0.9;

/// Address rule: equal after normalization scores 1.0, one contained in the
/// other scores 0.9, anything else 0.0. `missing` is returned when either
/// side is absent or normalizes to nothing.
pub fn address_sim(a: Option<&str>, b: Option<&str>, missing: f64) -> f64 {
    let (Some(a), Some(b)) = (a, b) else {
        return missing;
    };
    let (a, b) = (normalize_address(a), normalize_address(b));
    if a.is_empty() || b.is_empty() {
        missing
    } else if a == b {
        ADDRESS_EQUAL
    } else if a.contains(&b) || b.contains(&a) {
        ADDRESS_INCLUDED
    } else {
        0.0
    }
}
