//! Conversational multi-query rewriting (CMQR) retrieval engine.
//!
//! A conversational turn is rewritten into the top-n beam hypotheses of a
//! token probability model, each carrying a length-normalized rewrite score.
//! The rewrites are then consumed jointly:
//!
//! - sparse retrieval turns them into one weighted bag-of-words query scored
//!   with BM25 over an inverted index ([`sparse`]),
//! - dense retrieval pools their embeddings into a score-weighted centroid and
//!   runs exact inner-product search ([`dense`]).
//!
//! Runs are evaluated with MRR, MAP and Recall@10 ([`eval`]). The [`pipeline`]
//! module wires the stages together over the on-disk artifact formats.

mod binio;
pub mod collection;
pub mod config;
pub mod dense;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod rewrite;
pub mod sparse;
pub mod tokenize;

pub use collection::Passage;
pub use config::{EncoderKind, PipelineConfig, RetrievalMode};
pub use dense::{
    pool_rewrites, search_dense, DenseQuery, Encoder, HashProjectionEncoder, VectorStore,
};
pub use error::{Error, Result};
pub use eval::{evaluate, MetricsReport, Qrels, RunFile, SubsetMetrics};
pub use rewrite::{
    assemble_context, beam_search, compute_rs, rewrite_turn, Conversation, Hypothesis, NGramLM,
    Rewrite, RewriteSet, TokenId, TokenProbModel, Turn, Vocabulary,
};
pub use sparse::{aggregate_rewrites, search_sparse, Bm25Params, InvertedIndex, WeightedQuery};
pub use tokenize::tokenize;

/// One ranked result: passage id and its retrieval score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPassage {
    pub passage_id: String,
    pub score: f64,
}
