//! Pipeline configuration: a flat JSON object; omitted fields take defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense::HashProjectionEncoder;
use crate::error::{Error, Result};
use crate::rewrite::{NGramLM, RewriteParams};
use crate::sparse::Bm25Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// [`HashProjectionEncoder`] with `hash_dimension` and `hash_seed`.
    #[default]
    Hash,
    /// Query vectors looked up by rewrite text in `query_embeddings`.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    #[default]
    Sparse,
    Dense,
}

impl RetrievalMode {
    pub fn run_tag(self) -> &'static str {
        match self {
            RetrievalMode::Sparse => "cmqr-sparse",
            RetrievalMode::Dense => "cmqr-dense",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub beam_width: usize,
    pub num_rewrites: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub max_context_tokens: usize,
    pub max_rewrite_tokens: usize,
    pub top_k_results: usize,
    pub dense_normalize_rs: bool,
    pub mode: RetrievalMode,
    pub encoder: EncoderKind,
    pub hash_dimension: usize,
    pub hash_seed: u64,
    pub ngram_order: usize,
    pub ngram_alpha: f64,

    pub collection: Option<PathBuf>,
    pub conversations: Option<PathBuf>,
    pub rewrites: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub query_embeddings: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub subsets: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let rewrite = RewriteParams::default();
        let bm25 = Bm25Params::default();
        Self {
            beam_width: rewrite.beam_width,
            num_rewrites: rewrite.num_rewrites,
            bm25_k1: bm25.k1,
            bm25_b: bm25.b,
            max_context_tokens: rewrite.max_context_tokens,
            max_rewrite_tokens: rewrite.max_length,
            top_k_results: 100,
            dense_normalize_rs: false,
            mode: RetrievalMode::Sparse,
            encoder: EncoderKind::Hash,
            hash_dimension: HashProjectionEncoder::DEFAULT_DIMENSION,
            hash_seed: HashProjectionEncoder::DEFAULT_SEED,
            ngram_order: NGramLM::DEFAULT_ORDER,
            ngram_alpha: NGramLM::DEFAULT_ALPHA,
            collection: None,
            conversations: None,
            rewrites: None,
            index: None,
            embeddings: None,
            query_embeddings: None,
            qrels: None,
            subsets: None,
            output: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_rewrites == 0 || self.num_rewrites > self.beam_width {
            return fail(format!(
                "need 1 <= num_rewrites ({}) <= beam_width ({})",
                self.num_rewrites, self.beam_width
            ));
        }
        if let Err(e) = self.bm25().validate() {
            return fail(e.to_string());
        }
        if self.top_k_results == 0 {
            return fail("top_k_results must be >= 1".into());
        }
        if self.max_context_tokens == 0 || self.max_rewrite_tokens == 0 {
            return fail("max_context_tokens and max_rewrite_tokens must be >= 1".into());
        }
        if self.hash_dimension == 0 {
            return fail("hash_dimension must be >= 1".into());
        }
        if self.ngram_order == 0 || !(self.ngram_alpha.is_finite() && self.ngram_alpha > 0.0) {
            return fail("ngram_order must be >= 1 and ngram_alpha > 0".into());
        }
        Ok(())
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }

    pub fn rewrite_params(&self) -> RewriteParams {
        RewriteParams {
            beam_width: self.beam_width,
            num_rewrites: self.num_rewrites,
            max_length: self.max_rewrite_tokens,
            max_context_tokens: self.max_context_tokens,
        }
    }

    pub fn hash_encoder(&self) -> Result<HashProjectionEncoder> {
        HashProjectionEncoder::new(self.hash_dimension, self.hash_seed)
    }
}
