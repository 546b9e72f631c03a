//! Shared inputs for the pipeline benchmarks.

use p4ifc::corpus::{self, CorpusCase, LoadedCase};

/// Every bundled case, parsed and with its control plane loaded.
pub fn loaded_cases() -> Vec<(CorpusCase, LoadedCase)> {
    corpus::list_cases()
        .into_iter()
        .map(|c| {
            let l = c.load().expect("bundled cases load");
            (c, l)
        })
        .collect()
}
