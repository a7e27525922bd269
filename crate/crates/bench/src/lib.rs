//! Benchmarks live in `benches/`; run them with `cargo bench -p ratchet-bench`.
