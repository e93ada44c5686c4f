//! Shared fixtures for the benchmarks.

use textschema::pipeline::{enrich_corpus, RunConfig};
use textschema::rewrite::merge_forest;
use textschema::synthetic::synthetic_corpus;
use textschema::tree::Tree;

/// Enriched synthetic corpus of `n` sentences, merged under one root.
pub fn merged_corpus(n: usize) -> Tree {
    merge_forest(&enrich_corpus(&synthetic_corpus(n), false).expect("synthetic corpus enriches"))
}

pub fn default_config() -> RunConfig {
    RunConfig::default()
}
