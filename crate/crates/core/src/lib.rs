//! Feature-structure HMM part-of-speech tagging.

pub mod config;
pub mod corpus_io;
pub mod counts;
pub mod decoder;
pub mod dtree;
pub mod error;
pub mod eval;
pub mod feature_model;
pub mod instances;
pub mod model;
pub mod pfr;
pub mod synth;
pub mod transition;

pub use config::{Method, TrainingConfig};
pub use corpus_io::{Corpus, Lexicon, Sentence, Token};
pub use decoder::{Order, TaggedSentence};
pub use error::{Error, Result};
pub use eval::{EvalReport, Score, Tagger};
pub use feature_model::{Context, FeatureId, PairId, PosPair, TagId, TagSet};
pub use model::Model;
pub use synth::Profile;
