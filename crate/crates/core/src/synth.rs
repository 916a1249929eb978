//! Synthetic corpora sampled from an HMM, plus a random-model sampler.
//!
//! These power desk-scale experiments: sample a model, roll a corpus from
//! it, train on one split and measure decoders on the other.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{Corpus, Sentence, Token};
use crate::error::{Result, TaggerError};
use crate::model::{HmmModel, OovMode, Validation};

/// Draw an index in `0..len` proportionally to `weight`. Returns `None`
/// when every weight is zero.
fn categorical<R: Rng>(len: usize, weight: impl Fn(usize) -> f64, rng: &mut R) -> Option<usize> {
    let total: f64 = (0..len).map(&weight).sum();
    if total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for i in 0..len {
        let w = weight(i);
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if acc > target {
                return Some(i);
            }
        }
    }
    last_positive
}

/// Sample one sentence of at most `length` tokens from `model`.
///
/// The first tag comes from π, later tags from the previous tag's
/// transition row, and each surface from the tag's emission distribution.
/// If the chain reaches a tag whose transition row has no support the
/// sentence is truncated at that point.
pub fn sample_sentence<R: Rng>(model: &HmmModel, length: usize, rng: &mut R) -> Result<Sentence> {
    let b = model.num_tags();
    let vocabulary: Vec<(&str, &[f64])> = model.emission_entries().collect();
    let mut tokens = Vec::with_capacity(length);
    let mut tag = categorical(b, |t| model.pi(t), rng)
        .ok_or_else(|| TaggerError::Domain("initial distribution has no support".into()))?;
    for pos in 0..length {
        if pos > 0 {
            match categorical(b, |to| model.transition(tag, to), rng) {
                Some(next) => tag = next,
                None => break,
            }
        }
        let word =
            categorical(vocabulary.len(), |w| vocabulary[w].1[tag], rng).ok_or_else(|| {
                TaggerError::Generation {
                    tag: model.tag_name(tag).to_string(),
                }
            })?;
        tokens.push(Token::tagged(vocabulary[word].0, model.tag_name(tag)));
    }
    Ok(Sentence { tokens })
}

/// Tags reachable from π within `max_steps` transitions.
fn reachable_tags(model: &HmmModel, max_steps: usize) -> Vec<bool> {
    let b = model.num_tags();
    let mut reachable: Vec<bool> = (0..b).map(|t| model.pi(t) > 0.0).collect();
    let mut frontier: Vec<usize> = (0..b).filter(|&t| reachable[t]).collect();
    for _ in 0..max_steps {
        let mut next = Vec::new();
        for &from in &frontier {
            for (to, seen) in reachable.iter_mut().enumerate() {
                if model.transition(from, to) > 0.0 && !*seen {
                    *seen = true;
                    next.push(to);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    reachable
}

/// Sample a corpus of `sentence_count` sentences from `model`, with lengths
/// uniform in `[1, max_length]`. Deterministic for a given seed.
pub fn generate_synthetic(
    model: &HmmModel,
    sentence_count: usize,
    max_length: usize,
    seed: u64,
) -> Result<Corpus> {
    if sentence_count == 0 {
        return Err(TaggerError::Domain("sentence_count must be >= 1".into()));
    }
    if max_length == 0 {
        return Err(TaggerError::Domain("max_length must be >= 1".into()));
    }
    // Fail up front if the chain can reach a tag that cannot emit.
    let reachable = reachable_tags(model, max_length.saturating_sub(1));
    for t in 0..model.num_tags() {
        if reachable[t] && !model.emission_entries().any(|(_, row)| row[t] > 0.0) {
            return Err(TaggerError::Generation {
                tag: model.tag_name(t).to_string(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(sentence_count);
    let mut tagset: Vec<String> = Vec::new();
    for _ in 0..sentence_count {
        let length = rng.random_range(1..=max_length);
        let sentence = sample_sentence(model, length, &mut rng)?;
        for token in &sentence.tokens {
            let tag = token.tag.as_deref().expect("sampled tokens are tagged");
            if !tagset.iter().any(|t| t == tag) {
                tagset.push(tag.to_string());
            }
        }
        sentences.push(sentence);
    }
    Ok(Corpus { sentences, tagset })
}

fn dirichlet_row<R: Rng>(n: usize, concentration: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
    let mut row: Vec<f64> = (0..n)
        .map(|_| loop {
            let g: f64 = gamma.sample(rng);
            if g > 0.0 && g.is_finite() {
                break g;
            }
        })
        .collect();
    let total: f64 = row.iter().sum();
    for v in &mut row {
        *v /= total;
    }
    row
}

/// Dirichlet concentrations for [`sample_random_model_with`]. Values below
/// one sample peaked rows, one is flat, larger values near-uniform rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelShape {
    pub transition_concentration: f64,
    pub emission_concentration: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            transition_concentration: 1.0,
            emission_concentration: 1.0,
        }
    }
}

/// Sample a valid random model: tags `T0..`, surfaces `w0000..`, with π,
/// every transition row, and every tag's emission column drawn from a flat
/// Dirichlet (all entries strictly positive).
pub fn sample_random_model(num_tags: usize, vocab_size: usize, seed: u64) -> Result<HmmModel> {
    sample_random_model_with(num_tags, vocab_size, seed, ModelShape::default())
}

/// [`sample_random_model`] with explicit Dirichlet concentrations, so
/// experiments can control how peaked the rows are (natural tagging data
/// has highly discriminative emissions).
pub fn sample_random_model_with(
    num_tags: usize,
    vocab_size: usize,
    seed: u64,
    shape: ModelShape,
) -> Result<HmmModel> {
    if num_tags == 0 {
        return Err(TaggerError::Domain("num_tags must be >= 1".into()));
    }
    if vocab_size == 0 {
        return Err(TaggerError::Domain("vocab_size must be >= 1".into()));
    }
    for (value, name) in [
        (shape.transition_concentration, "transition concentration"),
        (shape.emission_concentration, "emission concentration"),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(TaggerError::Domain(format!(
                "{name} must be positive, got {value}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tags: Vec<String> = (0..num_tags).map(|t| format!("T{t}")).collect();
    let surfaces: Vec<String> = (0..vocab_size).map(|w| format!("w{w:04}")).collect();

    let pi_row = dirichlet_row(num_tags, 1.0, &mut rng);
    let pi: Vec<(String, f64)> = tags.iter().cloned().zip(pi_row).collect();

    let mut transition = Vec::with_capacity(num_tags * num_tags);
    for from in &tags {
        let row = dirichlet_row(num_tags, shape.transition_concentration, &mut rng);
        for (to, p) in tags.iter().zip(row) {
            transition.push((from.clone(), to.clone(), p));
        }
    }
    let mut emission = Vec::with_capacity(num_tags * vocab_size);
    for tag in &tags {
        let column = dirichlet_row(vocab_size, shape.emission_concentration, &mut rng);
        for (surface, p) in surfaces.iter().zip(column) {
            emission.push((surface.clone(), tag.clone(), p));
        }
    }
    HmmModel::from_parts(
        tags,
        &pi,
        &transition,
        &emission,
        OovMode::Uniform,
        Validation::Strict,
    )
}

/// Shape of a tagging-style model: sparse emission support (most words can
/// carry exactly one tag, an `ambiguous_fraction` can carry two) over
/// all-positive transition rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggingShape {
    pub transition_concentration: f64,
    pub ambiguous_fraction: f64,
}

/// Sample a model with the sparsity profile of natural tagging data. Every
/// word is assigned one primary tag (the first `num_tags` words cover each
/// tag once, the rest are uniform); ambiguous words get one extra tag.
/// Emission columns are Dirichlet over each tag's supported words,
/// transitions and π are all-positive Dirichlet rows.
pub fn sample_tagging_model(
    num_tags: usize,
    vocab_size: usize,
    seed: u64,
    shape: TaggingShape,
) -> Result<HmmModel> {
    if num_tags == 0 || vocab_size < num_tags {
        return Err(TaggerError::Domain(format!(
            "need vocab_size >= num_tags >= 1, got {num_tags} tags and {vocab_size} words"
        )));
    }
    if !(shape.transition_concentration > 0.0 && shape.transition_concentration.is_finite()) {
        return Err(TaggerError::Domain(
            "transition concentration must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&shape.ambiguous_fraction) {
        return Err(TaggerError::Domain(
            "ambiguous_fraction must be in [0,1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tags: Vec<String> = (0..num_tags).map(|t| format!("T{t}")).collect();
    let surfaces: Vec<String> = (0..vocab_size).map(|w| format!("w{w:04}")).collect();

    let pi_row = dirichlet_row(num_tags, 1.0, &mut rng);
    let pi: Vec<(String, f64)> = tags.iter().cloned().zip(pi_row).collect();

    let mut transition = Vec::with_capacity(num_tags * num_tags);
    for from in &tags {
        let row = dirichlet_row(num_tags, shape.transition_concentration, &mut rng);
        for (to, p) in tags.iter().zip(row) {
            transition.push((from.clone(), to.clone(), p));
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_tags];
    for w in 0..vocab_size {
        let primary = if w < num_tags {
            w
        } else {
            rng.random_range(0..num_tags)
        };
        members[primary].push(w);
        if num_tags > 1 && rng.random::<f64>() < shape.ambiguous_fraction {
            let mut second = rng.random_range(0..num_tags - 1);
            if second >= primary {
                second += 1;
            }
            members[second].push(w);
        }
    }

    let mut emission = Vec::new();
    for (t, tag) in tags.iter().enumerate() {
        let weights = dirichlet_row(members[t].len(), 1.0, &mut rng);
        for (&w, p) in members[t].iter().zip(weights) {
            emission.push((surfaces[w].clone(), tag.clone(), p));
        }
    }
    HmmModel::from_parts(
        tags,
        &pi,
        &transition,
        &emission,
        OovMode::Uniform,
        Validation::Strict,
    )
}
