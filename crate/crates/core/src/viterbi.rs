//! Exact maximum-probability decoding by dynamic programming.
//!
//! Scores are accumulated in log space so long sentences cannot underflow.
//! Ties are broken toward the lowest tag index at every backpointer and at
//! the final state.

use crate::corpus::Sentence;
use crate::error::{Result, TaggerError};
use crate::model::{HmmModel, OovMode};

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiResult {
    pub tags: Vec<usize>,
    /// Sum of log probabilities, or negative infinity when no sequence has
    /// positive probability.
    pub log_score: f64,
    pub feasible: bool,
}

/// Most probable tag sequence for `sentence` under `model`.
///
/// When every sequence has probability zero the result falls back to the
/// per-word maximum-emission tags with `feasible = false`, so downstream
/// accuracy counts never drop tokens.
pub fn viterbi_decode(
    model: &HmmModel,
    sentence: &Sentence,
    oov: OovMode,
) -> Result<ViterbiResult> {
    if sentence.is_empty() {
        return Err(TaggerError::Domain(
            "cannot decode an empty sentence".into(),
        ));
    }
    let b = model.num_tags();
    let n = sentence.len();
    let surfaces: Vec<&str> = sentence.surfaces().collect();

    let mut delta: Vec<f64> = (0..b)
        .map(|j| model.pi(j).ln() + model.emission_by_index(surfaces[0], j, oov).ln())
        .collect();
    let mut backpointers: Vec<Vec<usize>> = Vec::with_capacity(n.saturating_sub(1));

    let ln_transition: Vec<f64> = (0..b * b)
        .map(|idx| model.transition(idx / b, idx % b).ln())
        .collect();

    for surface in &surfaces[1..] {
        let mut next = vec![f64::NEG_INFINITY; b];
        let mut back = vec![0usize; b];
        for j in 0..b {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0usize;
            for i in 0..b {
                let cand = delta[i] + ln_transition[i * b + j];
                if cand > best {
                    best = cand;
                    best_i = i;
                }
            }
            next[j] = best + model.emission_by_index(surface, j, oov).ln();
            back[j] = best_i;
        }
        delta = next;
        backpointers.push(back);
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_j = 0usize;
    for (j, &score) in delta.iter().enumerate() {
        if score > best {
            best = score;
            best_j = j;
        }
    }

    if best == f64::NEG_INFINITY {
        return Ok(ViterbiResult {
            tags: greedy_emission_tags(model, &surfaces, oov),
            log_score: f64::NEG_INFINITY,
            feasible: false,
        });
    }

    let mut tags = vec![0usize; n];
    tags[n - 1] = best_j;
    for t in (0..n - 1).rev() {
        tags[t] = backpointers[t][tags[t + 1]];
    }
    Ok(ViterbiResult {
        tags,
        log_score: best,
        feasible: true,
    })
}

/// Per-word argmax emission tags, lowest index on ties.
fn greedy_emission_tags(model: &HmmModel, surfaces: &[&str], oov: OovMode) -> Vec<usize> {
    surfaces
        .iter()
        .map(|surface| {
            let mut best = f64::NEG_INFINITY;
            let mut best_j = 0usize;
            for j in 0..model.num_tags() {
                let p = model.emission_by_index(surface, j, oov);
                if p > best {
                    best = p;
                    best_j = j;
                }
            }
            best_j
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{read_corpus, Token};
    use crate::model::Validation;

    fn sentence(words: &[&str]) -> Sentence {
        Sentence {
            tokens: words.iter().map(|w| Token::untagged(*w)).collect(),
        }
    }

    #[test]
    fn single_tag_model_repeats_the_tag() {
        let corpus = read_corpus("a\tT\nb\tT\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        let result = viterbi_decode(&model, &sentence(&["a", "b", "a"]), OovMode::Uniform).unwrap();
        assert_eq!(result.tags, vec![0, 0, 0]);
        assert!(result.feasible);
    }

    #[test]
    fn picks_the_higher_probability_path() {
        // pi favors X but the emissions force Y on the second token.
        let model = HmmModel::from_parts(
            vec!["X".into(), "Y".into()],
            &[("X".into(), 0.8), ("Y".into(), 0.2)],
            &[
                ("X".into(), "X".into(), 0.6),
                ("X".into(), "Y".into(), 0.4),
                ("Y".into(), "X".into(), 0.5),
                ("Y".into(), "Y".into(), 0.5),
            ],
            &[("u".into(), "X".into(), 1.0), ("v".into(), "Y".into(), 1.0)],
            OovMode::Uniform,
            Validation::Strict,
        )
        .unwrap();
        let result = viterbi_decode(&model, &sentence(&["u", "v"]), OovMode::Uniform).unwrap();
        assert_eq!(result.tags, vec![0, 1]);
        let expected = 0.8f64.ln() + 1.0f64.ln() + 0.4f64.ln() + 1.0f64.ln();
        assert!((result.log_score - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_sentences_fall_back_to_greedy_emissions() {
        // No transition out of X, so two-token sentences are impossible.
        let model = HmmModel::from_parts(
            vec!["X".into(), "Y".into()],
            &[("X".into(), 1.0)],
            &[],
            &[("u".into(), "X".into(), 1.0), ("v".into(), "Y".into(), 1.0)],
            OovMode::Uniform,
            Validation::Relaxed,
        )
        .unwrap();
        let result = viterbi_decode(&model, &sentence(&["u", "v"]), OovMode::Uniform).unwrap();
        assert!(!result.feasible);
        assert_eq!(result.log_score, f64::NEG_INFINITY);
        assert_eq!(result.tags, vec![0, 1]);
    }

    #[test]
    fn uniform_ties_resolve_to_the_lowest_indices() {
        let model = HmmModel::from_parts(
            vec!["A".into(), "B".into()],
            &[("A".into(), 0.5), ("B".into(), 0.5)],
            &[
                ("A".into(), "A".into(), 0.5),
                ("A".into(), "B".into(), 0.5),
                ("B".into(), "A".into(), 0.5),
                ("B".into(), "B".into(), 0.5),
            ],
            &[("w".into(), "A".into(), 1.0), ("w".into(), "B".into(), 1.0)],
            OovMode::Uniform,
            Validation::Strict,
        )
        .unwrap();
        let result = viterbi_decode(&model, &sentence(&["w", "w", "w"]), OovMode::Uniform).unwrap();
        assert_eq!(result.tags, vec![0, 0, 0]);
        assert!(result.feasible);
    }

    #[test]
    fn prefix_scores_are_prefix_optimal() {
        // Decoding any prefix of a sentence yields the brute-force optimum
        // of that prefix.
        use crate::oracle::{enumerate_oracle, Objective};
        use crate::synth::{generate_synthetic, sample_random_model};
        for seed in 0..15u64 {
            let model = sample_random_model(3, 8, seed).unwrap();
            let corpus = generate_synthetic(&model, 1, 6, seed ^ 0xbeef).unwrap();
            let full = &corpus.sentences[0];
            for n in 1..=full.len() {
                let prefix = Sentence {
                    tokens: full.tokens[..n].to_vec(),
                };
                let dp = viterbi_decode(&model, &prefix, OovMode::Uniform).unwrap();
                let (_, best) =
                    enumerate_oracle(&model, &prefix, Objective::MaxProbability, OovMode::Uniform)
                        .unwrap();
                assert_eq!(dp.log_score, best, "seed {seed} prefix {n}");
            }
        }
    }

    #[test]
    fn long_sentences_stay_in_range_in_log_space() {
        let corpus = read_corpus("a\tX\nb\tY\n\na\tX\na\tX\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        let words: Vec<&str> = std::iter::repeat_n("a", 200).collect();
        let result = viterbi_decode(&model, &sentence(&words), OovMode::Uniform).unwrap();
        assert!(result.feasible);
        assert!(result.log_score.is_finite());
        assert_eq!(result.tags.len(), 200);
    }
}
