//! End-to-end stages over the artifact formats, shared by the CLI and the
//! acceptance suite.

use crate::collection::Passage;
use crate::config::{PipelineConfig, RetrievalMode};
use crate::dense::{pool_rewrites, search_dense, Encoder, VectorStore};
use crate::error::{Error, Result};
use crate::eval::RunFile;
use crate::rewrite::{rewrite_conversation, Conversation, NGramLM, RewriteSet, Validated};
use crate::sparse::{aggregate_rewrites, search_sparse, InvertedIndex, WeightedQuery};

/// Trains the n-gram rewriter on `conversations` and rewrites every turn.
pub fn generate_rewrites(
    conversations: &mut [Conversation],
    config: &PipelineConfig,
) -> Result<Vec<RewriteSet>> {
    let model = NGramLM::from_conversations(conversations, config.ngram_order, config.ngram_alpha)?;
    let params = config.rewrite_params();
    let mut out = Vec::new();
    for conv in conversations.iter_mut() {
        out.extend(rewrite_conversation(conv, &model, &params)?);
    }
    Ok(out)
}

/// Encodes every passage; vectors are narrowed to f32 for storage.
pub fn encode_collection<E: Encoder + ?Sized>(
    passages: &[Passage],
    encoder: &E,
) -> Result<VectorStore> {
    let mut store = VectorStore::new(encoder.dimension());
    for p in passages {
        let v: Vec<f32> = encoder.encode(&p.text)?.iter().map(|&x| x as f32).collect();
        store.push(p.passage_id.clone(), &v)?;
    }
    Ok(store)
}

/// BM25 run over the aggregated query of each turn's top `num_rewrites`.
/// Turns whose rewrites have no terms get an empty block and a warning.
pub fn sparse_run(
    index: &InvertedIndex,
    sets: &[RewriteSet],
    config: &PipelineConfig,
) -> Result<Validated<RunFile>> {
    let mut run = RunFile::new(RetrievalMode::Sparse.run_tag());
    let mut warnings = Vec::new();
    for set in sets {
        let hits = match aggregate_rewrites(set.top(config.num_rewrites)) {
            Ok(query) => search_sparse(index, &query, config.top_k_results, &config.bm25())?,
            Err(Error::EmptyRewrites) => {
                warnings.push(format!("{}: rewrites have no terms", set.query_id()));
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        run.push(set.query_id(), hits)?;
    }
    Ok(Validated {
        value: run,
        warnings,
    })
}

/// Plain BM25 run with term-frequency queries, one `(query_id, text)` each.
pub fn bm25_run(
    index: &InvertedIndex,
    queries: &[(String, String)],
    config: &PipelineConfig,
    tag: &str,
) -> Result<Validated<RunFile>> {
    let mut run = RunFile::new(tag);
    let mut warnings = Vec::new();
    for (query_id, text) in queries {
        let query = WeightedQuery::from_text(text);
        let hits = if query.is_empty() {
            warnings.push(format!("{query_id}: query has no terms"));
            Vec::new()
        } else {
            search_sparse(index, &query, config.top_k_results, &config.bm25())?
        };
        run.push(query_id.clone(), hits)?;
    }
    Ok(Validated {
        value: run,
        warnings,
    })
}

/// Inner-product run over the pooled centroid of each turn's top
/// `num_rewrites`.
pub fn dense_run<E: Encoder + ?Sized>(
    store: &VectorStore,
    encoder: &E,
    sets: &[RewriteSet],
    config: &PipelineConfig,
) -> Result<RunFile> {
    if encoder.dimension() != store.dimension() {
        return Err(Error::DimensionMismatch {
            expected: store.dimension(),
            actual: encoder.dimension(),
        });
    }
    let mut run = RunFile::new(RetrievalMode::Dense.run_tag());
    for set in sets {
        let query = pool_rewrites(
            set.top(config.num_rewrites),
            encoder,
            config.dense_normalize_rs,
        )?;
        run.push(
            set.query_id(),
            search_dense(store, &query, config.top_k_results)?,
        )?;
    }
    Ok(run)
}
