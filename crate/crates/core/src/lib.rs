//! Part-of-speech tagging with ant colony optimization over an HMM trellis.
//!
//! The pipeline: estimate HMM tables from a tagged corpus ([`model`]), build
//! a layered trellis per sentence whose edge lengths come from the emission
//! and transition probabilities ([`trellis`]), then search for the shortest
//! tag path either with a colony of ants ([`aco`]) or exactly with dynamic
//! programming ([`viterbi`]). [`oracle`] provides brute-force enumeration
//! for both objectives, [`corpus`] the file formats and train/test split,
//! [`synth`] synthetic corpus generation, and [`eval`] accuracy reports.
//!
//! ```
//! use aco_tagger::{aco_decode, build_trellis, read_corpus, DecoderConfig, HmmModel, OovMode};
//!
//! let gold = read_corpus("the\tD\ncat\tN\n\nthe\tD\ndog\tN\n".as_bytes())?;
//! let model = HmmModel::train(&gold)?;
//! let trellis = build_trellis(&model, &gold.sentences[0], OovMode::Uniform)?;
//! let result = aco_decode(&trellis, &DecoderConfig::default())?;
//! assert!(result.feasible);
//! assert_eq!(result.tags.len(), 2);
//! # Ok::<(), aco_tagger::TaggerError>(())
//! ```

pub mod aco;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod synth;
pub mod trellis;
pub mod viterbi;

pub use aco::{aco_decode, DecodeResult, DecoderConfig, PheromoneTable};
pub use corpus::{read_corpus, split_corpus, write_corpus, Corpus, Sentence, SplitSpec, Token};
pub use error::{Result, TaggerError};
pub use eval::{compare, score, EvalReport, SentencePrediction};
pub use model::{HmmModel, OovMode, Validation};
pub use oracle::{enumerate_oracle, Objective};
pub use synth::{
    generate_synthetic, sample_random_model, sample_random_model_with, sample_tagging_model,
    ModelShape, TaggingShape,
};
pub use trellis::{build_trellis, edge_distance, Trellis};
pub use viterbi::{viterbi_decode, ViterbiResult};
