//! Corpus perturbation and targeted evaluation of word learning in language
//! models.
//!
//! The crate ablates word-order or co-occurrence information from a corpus of
//! child-directed speech, builds masked-prediction and minimal-pair evaluation
//! sets for verbs and nouns, scores model responses, and fits a logistic
//! interaction model over the results. An embedded Kneser-Ney n-gram model
//! makes the whole pipeline runnable without any external model.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evalgen;
pub mod lexicon;
pub mod ngram;
pub mod perturb;
pub mod rng;
pub mod score;
pub mod synth;
pub mod tagger;

pub use error::{Error, Result};
