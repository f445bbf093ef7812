//! Criterion benchmarks for the gibbs-factor pipeline live in `benches/`.
