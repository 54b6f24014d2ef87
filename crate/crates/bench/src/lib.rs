//! Criterion benchmarks for lumaflow-core; see `benches/`.
