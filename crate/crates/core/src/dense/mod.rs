//! Dense retrieval: rewrite embeddings pooled into a score-weighted centroid,
//! searched by exact inner product.

mod encoder;
mod search;
mod store;

pub use encoder::{Encoder, ExternalEncoder, HashProjectionEncoder};
pub use search::{pool_rewrites, search_dense, DenseQuery};
pub use store::{read_embeddings, write_embeddings, VectorStore};
