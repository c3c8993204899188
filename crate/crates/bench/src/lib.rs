//! Criterion benchmarks for the retrieval engine; see `benches/`.
