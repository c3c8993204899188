use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rewrite::{canonical_order, Rewrite};
use crate::tokenize::tokenize;

/// Bag-of-words query: term to strictly positive, finite weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedQuery {
    weights: BTreeMap<String, f64>,
}

impl WeightedQuery {
    /// Zero weights are dropped; negative or non-finite weights are errors.
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        let mut kept = BTreeMap::new();
        for (term, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "weight {w} for term {term:?}"
                )));
            }
            if w > 0.0 {
                kept.insert(term, w);
            }
        }
        Ok(Self { weights: kept })
    }

    /// Plain term-frequency query, the usual `w(t, q) = c(t, q)`.
    pub fn from_text(text: &str) -> Self {
        let mut weights = BTreeMap::new();
        for tok in tokenize(text) {
            *weights.entry(tok).or_insert(0.0) += 1.0;
        }
        Self { weights }
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }

    /// Terms in sorted order with their weights.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, &w)| (t.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {factor}")));
        }
        Ok(Self {
            weights: self
                .weights
                .iter()
                .map(|(t, &w)| (t.clone(), w * factor))
                .collect(),
        })
    }
}

fn check_scores(rewrites: &[Rewrite]) -> Result<()> {
    if rewrites.is_empty() {
        return Err(Error::InvalidArgument("no rewrites to aggregate".into()));
    }
    if let Some(r) = rewrites
        .iter()
        .find(|r| !(r.score.is_finite() && r.score > 0.0))
    {
        return Err(Error::InvalidArgument(format!(
            "rewrite {:?} has score {}",
            r.text, r.score
        )));
    }
    Ok(())
}

/// Unnormalized weights `raw(t) = Σ_j RS_j · c(t, rewrite_j)`.
pub fn raw_term_weights(rewrites: &[Rewrite]) -> Result<BTreeMap<String, f64>> {
    check_scores(rewrites)?;
    let mut raw = BTreeMap::new();
    for r in canonical_order(rewrites) {
        for tok in tokenize(&r.text) {
            *raw.entry(tok).or_insert(0.0) += r.score;
        }
    }
    Ok(raw)
}

/// Merges all rewrites into one query: each rewrite's term counts weighted by
/// its share `RS_j / Σ RS` of the total score.
///
/// The result is a convex combination of per-rewrite term-frequency vectors,
/// so a single rewrite yields exactly its own term frequencies.
pub fn aggregate_rewrites(rewrites: &[Rewrite]) -> Result<WeightedQuery> {
    check_scores(rewrites)?;
    let ordered = canonical_order(rewrites);
    let total: f64 = ordered.iter().map(|r| r.score).sum();
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for r in ordered {
        let share = r.score / total;
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for tok in tokenize(&r.text) {
            *counts.entry(tok).or_default() += 1;
        }
        for (term, c) in counts {
            *weights.entry(term).or_insert(0.0) += share * c as f64;
        }
    }
    let query = WeightedQuery::new(weights)?;
    if query.is_empty() {
        return Err(Error::EmptyRewrites);
    }
    Ok(query)
}
