//! Criterion benchmarks; see `benches/solvers.rs`.
