//! Benchmark-only crate; see `benches/mrl.rs`.
