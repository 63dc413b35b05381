//! Criterion benchmarks for pac-core; see `benches/pac.rs`.
