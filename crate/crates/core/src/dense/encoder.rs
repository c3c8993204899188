use std::collections::HashMap;

use super::store::VectorStore;
use crate::error::{Error, Result};
use crate::tokenize::tokenize;

/// Text to fixed-dimension vector. Must be deterministic.
pub trait Encoder: Sync {
    fn dimension(&self) -> usize;

    fn encode(&self, text: &str) -> Result<Vec<f64>>;
}

/// Signed feature hashing of token counts, L2-normalized.
///
/// Each token occurrence adds ±1 to one of `dimension` buckets; bucket and
/// sign come from a seeded 64-bit hash of the token bytes. Text without
/// tokens encodes to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashProjectionEncoder {
    dimension: usize,
    seed: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl HashProjectionEncoder {
    pub const DEFAULT_SEED: u64 = 0x00C0_FFEE_5EED;
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument(
                "encoder dimension must be >= 1".into(),
            ));
        }
        Ok(Self { dimension, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn bucket(&self, token: &str) -> (usize, f64) {
        let h = mix(fnv1a(token.as_bytes()) ^ self.seed);
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        ((h % self.dimension as u64) as usize, sign)
    }
}

impl Default for HashProjectionEncoder {
    fn default() -> Self {
        Self {
            dimension: Self::DEFAULT_DIMENSION,
            seed: Self::DEFAULT_SEED,
        }
    }
}

impl Encoder for HashProjectionEncoder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dimension];
        for tok in tokenize(text) {
            let (i, sign) = self.bucket(&tok);
            v[i] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

/// Looks up precomputed query embeddings by exact text, e.g. rewrite vectors
/// produced by a neural encoder and stored keyed by rewrite text.
#[derive(Debug, Clone)]
pub struct ExternalEncoder {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl ExternalEncoder {
    pub fn from_store(store: &VectorStore) -> Self {
        let vectors = (0..store.len())
            .map(|row| {
                (
                    store.id(row).to_owned(),
                    store.row(row).iter().map(|&x| x as f64).collect(),
                )
            })
            .collect();
        Self {
            dimension: store.dimension(),
            vectors,
        }
    }
}

impl Encoder for ExternalEncoder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| Error::Encoder(format!("no embedding for {text:?}")))
    }
}
