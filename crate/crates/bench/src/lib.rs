//! Criterion benchmarks for the sbmclique kernels; see `benches/`.
