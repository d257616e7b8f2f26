//! Criterion benchmarks for the simulator and estimators; see `benches/`.
