//! Shared fixtures: a small five-tag model with hand-written probability
//! tables. Some rows do not sum to one, so the model only passes relaxed
//! validation.

#![allow(dead_code)]

use aco_tagger::corpus::{Sentence, Token};
use aco_tagger::model::{HmmModel, OovMode, Validation};

pub const TAGS: [&str; 5] = ["N", "V", "ADJ", "ADV", "DELM"];
pub const WORDS: [&str; 5] = ["امروز", "هوا", "برفی", "است", "."];

pub const N: usize = 0;
pub const V: usize = 1;
pub const ADJ: usize = 2;
pub const ADV: usize = 3;
pub const DELM: usize = 4;

/// Emission rows per tag over `WORDS`, transition rows per tag, and π.
pub const EMISSION_ROWS: [[f64; 5]; 5] = [
    [0.1, 1.0, 0.2, 0.0, 0.0], // N
    [0.0, 0.0, 0.0, 1.0, 0.0], // V
    [0.0, 0.0, 0.8, 0.0, 0.0], // ADJ
    [0.9, 0.0, 0.0, 0.0, 0.0], // ADV
    [0.0, 0.0, 0.0, 0.0, 1.0], // DELM
];

pub const TRANSITION_ROWS: [[f64; 5]; 5] = [
    [0.6, 0.05, 0.2, 0.05, 0.2], // N
    [0.7, 0.1, 0.2, 0.0, 0.0],   // V
    [0.5, 0.0, 0.1, 0.15, 0.25], // ADJ
    [0.35, 0.05, 0.3, 0.1, 0.2], // ADV
    [0.2, 0.7, 0.05, 0.05, 0.0], // DELM
];

pub const PI: [f64; 5] = [0.6, 0.01, 0.04, 0.3, 0.05];

pub fn tables_model() -> HmmModel {
    let tags: Vec<String> = TAGS.iter().map(|t| t.to_string()).collect();
    let pi: Vec<(String, f64)> = TAGS
        .iter()
        .zip(PI)
        .map(|(t, p)| (t.to_string(), p))
        .collect();
    let mut transition = Vec::new();
    for (from, row) in TAGS.iter().zip(TRANSITION_ROWS) {
        for (to, p) in TAGS.iter().zip(row) {
            transition.push((from.to_string(), to.to_string(), p));
        }
    }
    let mut emission = Vec::new();
    for (tag, row) in TAGS.iter().zip(EMISSION_ROWS) {
        for (word, p) in WORDS.iter().zip(row) {
            emission.push((word.to_string(), tag.to_string(), p));
        }
    }
    HmmModel::from_parts(
        tags,
        &pi,
        &transition,
        &emission,
        OovMode::Uniform,
        Validation::Relaxed,
    )
    .expect("fixture tables are structurally valid")
}

/// The five-token example sentence.
pub fn example_sentence() -> Sentence {
    Sentence {
        tokens: WORDS.iter().map(|w| Token::untagged(*w)).collect(),
    }
}

/// The two-token prefix of the example sentence.
pub fn example_prefix() -> Sentence {
    Sentence {
        tokens: WORDS[..2].iter().map(|w| Token::untagged(*w)).collect(),
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
