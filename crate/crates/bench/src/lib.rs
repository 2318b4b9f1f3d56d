//! Criterion benchmarks for the chenflow kernels; see `benches/step.rs`.
