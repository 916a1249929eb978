//! Exhaustive enumeration over all tag sequences, for either objective.
//!
//! This is the reference answer generator used by decoder tests: it scores
//! every one of the `B^n` sequences directly from the model tables and
//! applies the same tie-break rules as the decoder it mirrors.

use crate::corpus::Sentence;
use crate::error::{Result, TaggerError};
use crate::model::{HmmModel, OovMode};
use crate::trellis::edge_distance;

/// Which decoder objective to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Maximize the probability product (scored in log space), as the
    /// Viterbi decoder does. Ties prefer the sequence whose tag indices are
    /// smallest reading from the last position backwards, which is the
    /// order induced by per-backpointer lowest-index tie-breaking.
    MaxProbability,
    /// Minimize the summed trellis distance, as the ant decoder does.
    /// Ties prefer the lexicographically smallest tag-index sequence.
    MinDistance,
}

const SEARCH_SPACE_GUARD: f64 = 1e7;

/// Brute-force optimum of `objective` over all tag sequences.
///
/// Scores are log probabilities for [`Objective::MaxProbability`] and
/// summed distances for [`Objective::MinDistance`]. When no sequence is
/// feasible (score negative infinity / cost infinity) the returned tags
/// mirror the corresponding decoder's greedy fallback.
pub fn enumerate_oracle(
    model: &HmmModel,
    sentence: &Sentence,
    objective: Objective,
    oov: OovMode,
) -> Result<(Vec<usize>, f64)> {
    if sentence.is_empty() {
        return Err(TaggerError::Domain(
            "cannot enumerate an empty sentence".into(),
        ));
    }
    let b = model.num_tags();
    let n = sentence.len();
    if (b as f64).powi(n as i32) > SEARCH_SPACE_GUARD {
        return Err(TaggerError::OracleCapacity { tags: b, length: n });
    }
    let surfaces: Vec<&str> = sentence.surfaces().collect();

    // Per-position emission values and the pairwise tables, precomputed so
    // the enumeration itself is pure arithmetic.
    let emissions: Vec<Vec<f64>> = surfaces
        .iter()
        .map(|s| (0..b).map(|j| model.emission_by_index(s, j, oov)).collect())
        .collect();

    match objective {
        Objective::MaxProbability => {
            let ln_pi: Vec<f64> = (0..b).map(|j| model.pi(j).ln()).collect();
            let ln_tr: Vec<f64> = (0..b * b)
                .map(|i| model.transition(i / b, i % b).ln())
                .collect();
            let ln_em: Vec<Vec<f64>> = emissions
                .iter()
                .map(|row| row.iter().map(|p| p.ln()).collect())
                .collect();
            let score = |tags: &[usize]| {
                let mut acc = ln_pi[tags[0]] + ln_em[0][tags[0]];
                for t in 1..n {
                    acc += ln_tr[tags[t - 1] * b + tags[t]];
                    acc += ln_em[t][tags[t]];
                }
                acc
            };
            let better = |score_a: f64, tags_a: &[usize], score_b: f64, tags_b: &[usize]| {
                if score_a != score_b {
                    return score_a > score_b;
                }
                for t in (0..n).rev() {
                    if tags_a[t] != tags_b[t] {
                        return tags_a[t] < tags_b[t];
                    }
                }
                false
            };
            let (tags, best) = search(b, n, score, better);
            if best == f64::NEG_INFINITY {
                let fallback = (0..n).map(|t| argmax_lowest(&emissions[t])).collect();
                return Ok((fallback, f64::NEG_INFINITY));
            }
            Ok((tags, best))
        }
        Objective::MinDistance => {
            let initial: Vec<f64> = (0..b)
                .map(|j| edge_distance(emissions[0][j], model.pi(j)))
                .collect::<Result<_>>()?;
            let mut dist = vec![vec![0.0f64; b * b]; n.saturating_sub(1)];
            for t in 1..n {
                for from in 0..b {
                    for to in 0..b {
                        dist[t - 1][from * b + to] =
                            edge_distance(emissions[t][to], model.transition(from, to))?;
                    }
                }
            }
            let score = |tags: &[usize]| {
                let mut acc = initial[tags[0]];
                for t in 1..n {
                    acc += dist[t - 1][tags[t - 1] * b + tags[t]];
                }
                acc
            };
            let better = |score_a: f64, tags_a: &[usize], score_b: f64, tags_b: &[usize]| {
                if score_a != score_b {
                    return score_a < score_b;
                }
                tags_a < tags_b
            };
            let (tags, best) = search(b, n, score, better);
            if best == f64::INFINITY {
                // Per-segment greedy minimum incoming edge, as the ant
                // decoder's infeasible fallback does.
                let mut fallback = Vec::with_capacity(n);
                fallback.push(argmin_lowest(&initial));
                for t in 1..n {
                    let from = *fallback.last().unwrap();
                    let row = &dist[t - 1][from * b..(from + 1) * b];
                    fallback.push(argmin_lowest(row));
                }
                return Ok((fallback, f64::INFINITY));
            }
            Ok((tags, best))
        }
    }
}

fn search(
    b: usize,
    n: usize,
    score: impl Fn(&[usize]) -> f64,
    better: impl Fn(f64, &[usize], f64, &[usize]) -> bool,
) -> (Vec<usize>, f64) {
    let mut tags = vec![0usize; n];
    let mut best_tags = tags.clone();
    let mut best_score = score(&tags);
    loop {
        // Odometer step: advance the last position first.
        let mut pos = n;
        loop {
            if pos == 0 {
                return (best_tags, best_score);
            }
            pos -= 1;
            tags[pos] += 1;
            if tags[pos] < b {
                break;
            }
            tags[pos] = 0;
        }
        let s = score(&tags);
        if better(s, &tags, best_score, &best_tags) {
            best_score = s;
            best_tags.clone_from(&tags);
        }
    }
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    best_i
}

fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = f64::INFINITY;
    let mut best_i = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v < best {
            best = v;
            best_i = i;
        }
    }
    best_i
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use crate::synth::{generate_synthetic, sample_random_model};
    use crate::viterbi::viterbi_decode;

    fn sentence(words: &[&str]) -> Sentence {
        Sentence {
            tokens: words.iter().map(|w| Token::untagged(*w)).collect(),
        }
    }

    #[test]
    fn one_token_enumeration_is_the_plain_argmax() {
        let model = sample_random_model(3, 8, 11).unwrap();
        let word = "w0002";
        let (tags, score) = enumerate_oracle(
            &model,
            &sentence(&[word]),
            Objective::MaxProbability,
            OovMode::Uniform,
        )
        .unwrap();
        assert_eq!(tags.len(), 1);
        let expected: usize = (0..3)
            .max_by(|&a, &b| {
                let sa = model.pi(a).ln() + model.emission_by_index(word, a, OovMode::Uniform).ln();
                let sb = model.pi(b).ln() + model.emission_by_index(word, b, OovMode::Uniform).ln();
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        assert_eq!(tags[0], expected);
        assert!(score.is_finite());
    }

    #[test]
    fn capacity_guard_trips_on_large_search_spaces() {
        let model = sample_random_model(10, 5, 3).unwrap();
        let words: Vec<&str> = std::iter::repeat_n("w0000", 8).collect();
        assert!(matches!(
            enumerate_oracle(
                &model,
                &sentence(&words),
                Objective::MinDistance,
                OovMode::Uniform
            ),
            Err(TaggerError::OracleCapacity {
                tags: 10,
                length: 8
            })
        ));
    }

    #[test]
    fn trellis_minimum_agrees_with_the_oracle() {
        // Two routes to the same optimum: minimizing path_cost over the
        // built trellis versus enumerating distances straight from the
        // model tables.
        use crate::trellis::build_trellis;
        for seed in 0..25u64 {
            let tags = 2 + (seed as usize % 3);
            let model = sample_random_model(tags, 9, seed).unwrap();
            let corpus = generate_synthetic(&model, 2, 5, seed ^ 0xf00d).unwrap();
            for s in &corpus.sentences {
                let trellis = build_trellis(&model, s, OovMode::Uniform).unwrap();
                let mut best = f64::INFINITY;
                let mut tags_buf = vec![0usize; s.len()];
                loop {
                    let cost = trellis.path_cost(&tags_buf).unwrap();
                    if cost < best {
                        best = cost;
                    }
                    let mut pos = s.len();
                    loop {
                        if pos == 0 {
                            break;
                        }
                        pos -= 1;
                        tags_buf[pos] += 1;
                        if tags_buf[pos] < tags {
                            break;
                        }
                        tags_buf[pos] = 0;
                    }
                    if tags_buf.iter().all(|&t| t == 0) {
                        break;
                    }
                }
                let (_, oracle_cost) =
                    enumerate_oracle(&model, s, Objective::MinDistance, OovMode::Uniform).unwrap();
                assert!((best - oracle_cost).abs() <= 1e-12, "seed {seed}");
            }
        }
    }

    #[test]
    fn matches_viterbi_on_random_instances() {
        for seed in 0..40u64 {
            let model = sample_random_model(1 + (seed as usize % 4), 10, seed).unwrap();
            let corpus = generate_synthetic(&model, 3, 6, seed ^ 0xabcd).unwrap();
            for s in &corpus.sentences {
                let vit = viterbi_decode(&model, s, OovMode::Uniform).unwrap();
                let (tags, score) =
                    enumerate_oracle(&model, s, Objective::MaxProbability, OovMode::Uniform)
                        .unwrap();
                assert_eq!(vit.tags, tags, "seed {seed}");
                assert_eq!(vit.log_score, score, "seed {seed}");
            }
        }
    }
}
