//! Criterion benchmarks for the dispac kernels, under `benches/`.
