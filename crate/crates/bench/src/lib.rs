//! Criterion benchmarks for `infotrack`; see `benches/`.
