//! Inputs shared by the benchmarks.

use std::path::Path;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// A fixture binary from the core crate's test data.
pub fn fixture(name: &str) -> Vec<u8> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Deterministic pseudo-random bytes.
pub fn random_blob(seed: u64, len: usize) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = vec![0u8; len];
    rng.fill(&mut out[..]);
    out
}

/// `base` with `edits` short runs overwritten.
pub fn mutated(seed: u64, base: &[u8], edits: usize) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = base.to_vec();
    for _ in 0..edits {
        let at = rng.random_range(0..out.len());
        let end = (at + rng.random_range(1..64)).min(out.len());
        rng.fill(&mut out[at..end]);
    }
    out
}
