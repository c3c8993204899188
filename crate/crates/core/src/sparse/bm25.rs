//! BM25 with the Lucene idf, `ln(1 + (N − df + 0.5) / (df + 0.5))`.

use super::index::InvertedIndex;
use super::query::WeightedQuery;
use crate::error::{Error, Result};
use crate::ScoredPassage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.82, b: 0.68 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "k1 must be > 0, got {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!(
                "b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

pub fn idf(doc_count: usize, doc_freq: usize) -> f64 {
    let n = doc_count as f64;
    let df = doc_freq as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[inline]
fn saturate(tf: f64, doc_len: f64, avg_doc_len: f64, params: &Bm25Params) -> f64 {
    let norm = 1.0 - params.b + params.b * doc_len / avg_doc_len;
    tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Document-side weight `w(t, d)`; `None` when `term` does not occur in `doc`.
pub fn bm25_term_weight(
    index: &InvertedIndex,
    term: &str,
    doc: u32,
    params: &Bm25Params,
) -> Option<f64> {
    let tf = index.term_freq(term, doc);
    if tf == 0 {
        return None;
    }
    let idf = idf(index.doc_count(), index.doc_freq(term));
    Some(
        idf * saturate(
            tf as f64,
            index.doc_length(doc) as f64,
            index.avg_doc_length(),
            params,
        ),
    )
}

/// `score(q, d) = Σ_t w(t, q) · w(t, d)` over documents sharing a term with
/// the query. Only positive scores are returned, best first, ties by passage
/// id, at most `top_k`.
pub fn search_sparse(
    index: &InvertedIndex,
    query: &WeightedQuery,
    top_k: usize,
    params: &Bm25Params,
) -> Result<Vec<ScoredPassage>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be >= 1".into()));
    }
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    params.validate()?;

    let mut scores = vec![0.0f64; index.doc_count()];
    let mut touched = Vec::new();
    let avgdl = index.avg_doc_length();
    // Terms are visited in sorted order so per-document sums are reproducible.
    for (term, weight) in query.iter() {
        let postings = index.postings(term);
        if postings.is_empty() {
            continue;
        }
        let idf = idf(index.doc_count(), postings.len());
        for p in postings {
            let slot = &mut scores[p.doc as usize];
            if *slot == 0.0 {
                touched.push(p.doc);
            }
            *slot +=
                weight * idf * saturate(p.tf as f64, index.doc_length(p.doc) as f64, avgdl, params);
        }
    }

    let mut hits: Vec<(u32, f64)> = touched
        .into_iter()
        .map(|d| (d, scores[d as usize]))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    let order = |a: &(u32, f64), b: &(u32, f64)| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.passage_id(a.0).cmp(index.passage_id(b.0)))
    };
    if hits.len() > top_k {
        hits.select_nth_unstable_by(top_k - 1, order);
        hits.truncate(top_k);
    }
    hits.sort_by(order);
    Ok(hits
        .into_iter()
        .map(|(d, score)| ScoredPassage {
            passage_id: index.passage_id(d).to_owned(),
            score,
        })
        .collect())
}
