//! Shared fixtures for the benchmarks.

use fstag_core::synth::generate_split;
use fstag_core::{Corpus, Method, Model, Profile, Sentence, TrainingConfig};

/// A french-like training corpus and held-out sentences from the same language.
pub fn split(seed: u64, train_tokens: usize, test_tokens: usize) -> (Corpus, Vec<Sentence>) {
    let (mut parts, tagset) =
        generate_split(&Profile::french_like(), seed, &[train_tokens, test_tokens]).expect("builtin profile");
    let test = parts.pop().unwrap_or_default();
    let sentences = parts.pop().unwrap_or_default();
    (Corpus { sentences, tagset }, test)
}

pub fn trained(corpus: &Corpus) -> Model {
    Model::train(corpus, &Method::ALL, &TrainingConfig::default()).expect("training")
}
