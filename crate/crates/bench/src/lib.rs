//! Fixtures shared by the benchmarks.

use pave_iri_core::domain::IriBinning;
use pave_iri_core::pipeline::{encode_and_split, prepare, PrepOptions};
use pave_iri_core::preprocess::{Dataset, SplitSpec};
use pave_iri_core::synth::{generate_corpus, GeneratorProfile};

/// Standardized train/test split of a prepared synthetic corpus.
pub fn split(n_segments: usize, seed: u64) -> (Dataset, Dataset) {
    let corpus = generate_corpus(&GeneratorProfile {
        n_segments,
        seed,
        ..Default::default()
    })
    .expect("profile is valid");
    let prepped = prepare(&corpus, PrepOptions::default()).expect("prepares");
    encode_and_split(&prepped, IriBinning::default(), SplitSpec { seed, ..Default::default() }).expect("splits")
}
