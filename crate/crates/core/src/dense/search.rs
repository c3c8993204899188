use super::encoder::Encoder;
use super::store::VectorStore;
use crate::error::{Error, Result};
use crate::rewrite::{canonical_order, Rewrite};
use crate::ScoredPassage;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseQuery {
    vector: Vec<f64>,
}

impl DenseQuery {
    pub fn new(vector: Vec<f64>) -> Result<Self> {
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dense query".into()));
        }
        Ok(Self { vector })
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }
}

/// Weighted centroid `h = Σ_j encode(q̂_j) · RS_j`, accumulated in set order
/// whatever the order of `rewrites`. With `normalize` the weights are divided by `Σ_j RS_j` first; the
/// ranking is the same either way.
pub fn pool_rewrites<E: Encoder + ?Sized>(
    rewrites: &[Rewrite],
    encoder: &E,
    normalize: bool,
) -> Result<DenseQuery> {
    if rewrites.is_empty() {
        return Err(Error::InvalidArgument("no rewrites to pool".into()));
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
    let dim = encoder.dimension();
    let ordered = canonical_order(rewrites);
    let total: f64 = if normalize {
        ordered.iter().map(|r| r.score).sum()
    } else {
        1.0
    };
    let mut h = vec![0.0; dim];
    for r in ordered {
        let e = encoder.encode(&r.text)?;
        if e.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.len(),
            });
        }
        let weight = r.score / total;
        for (acc, x) in h.iter_mut().zip(&e) {
            *acc += x * weight;
        }
    }
    DenseQuery::new(h)
}

/// `Σ_i row[i] · query[i]`, accumulated left to right in f64.
fn dot(row: &[f32], query: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&x, &q) in row.iter().zip(query) {
        acc += x as f64 * q;
    }
    acc
}

/// Exact inner-product search over every row. Best first, ties by passage
/// id, at most `top_k`.
pub fn search_dense(
    store: &VectorStore,
    query: &DenseQuery,
    top_k: usize,
) -> Result<Vec<ScoredPassage>> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be >= 1".into()));
    }
    if query.dimension() != store.dimension() {
        return Err(Error::DimensionMismatch {
            expected: store.dimension(),
            actual: query.dimension(),
        });
    }
    let mut hits: Vec<(usize, f64)> = (0..store.len())
        .map(|row| (row, dot(store.row(row), query.vector())))
        .collect();
    let order = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.total_cmp(&a.1)
            .then_with(|| store.id(a.0).cmp(store.id(b.0)))
    };
    if hits.len() > top_k {
        hits.select_nth_unstable_by(top_k - 1, order);
        hits.truncate(top_k);
    }
    hits.sort_by(order);
    Ok(hits
        .into_iter()
        .map(|(row, score)| ScoredPassage {
            passage_id: store.id(row).to_owned(),
            score,
        })
        .collect())
}
