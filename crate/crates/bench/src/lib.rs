//! Benchmarks for `gammakde`; see `benches/estimator.rs`.
