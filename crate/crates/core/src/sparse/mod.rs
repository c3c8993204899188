//! Sparse retrieval: an inverted index scored with BM25 against a weighted
//! bag-of-words query built from all rewrites of a turn.

mod bm25;
mod index;
mod query;

pub use bm25::{bm25_term_weight, idf, search_sparse, Bm25Params};
pub use index::{InvertedIndex, Posting, INDEX_FILE};
pub use query::{aggregate_rewrites, raw_term_weights, WeightedQuery};
