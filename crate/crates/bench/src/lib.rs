//! Benchmarks for the diagnostics and solver; see `benches/`.
