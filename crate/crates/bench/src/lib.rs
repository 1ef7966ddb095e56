//! Criterion benchmarks for the `hlsrnn` kernels; see `benches/`.
