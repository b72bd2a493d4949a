//! Shared inputs for the benchmarks.

use std::path::Path;

/// Held-out sentences shipped with the core test data.
pub fn sentences(lang: &str) -> Vec<String> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/langid")
        .join(format!("{lang}.heldout.txt"));
    std::fs::read_to_string(&p)
        .unwrap_or_else(|e| panic!("{}: {e}", p.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

pub fn training(lang: &str) -> Vec<String> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/langid")
        .join(format!("{lang}.train.txt"));
    std::fs::read_to_string(&p)
        .unwrap_or_else(|e| panic!("{}: {e}", p.display()))
        .lines()
        .map(str::to_string)
        .collect()
}
