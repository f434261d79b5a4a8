//! Criterion benchmarks for the sweeps and coalescence; see `benches/`.
