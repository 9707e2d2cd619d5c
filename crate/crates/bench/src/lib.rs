//! Criterion benchmarks for the quantization library; see `benches/`.
