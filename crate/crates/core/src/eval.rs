//! Accuracy scoring and side-by-side decoder comparison.
//!
//! Accuracy is pooled per token (total correct tags over total tokens, not
//! averaged per sentence). Reports also bucket tokens by gold sentence
//! length (1-10, 11-20, 21-40, 41+) and keep a gold-vs-predicted confusion
//! map.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::aco::{aco_decode, derive_sentence_seed, DecoderConfig};
use crate::corpus::Corpus;
use crate::error::{Result, TaggerError};
use crate::model::{format_probability, HmmModel, OovMode};
use crate::trellis::build_trellis;
use crate::viterbi::viterbi_decode;

/// Tags predicted for one sentence, plus whether the decoder considered the
/// sentence feasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePrediction {
    pub tags: Vec<String>,
    pub feasible: bool,
}

/// The fixed sentence-length buckets: inclusive ranges and report labels.
pub const LENGTH_BUCKETS: [(usize, usize, &str); 4] = [
    (1, 10, "len_1_10"),
    (11, 20, "len_11_20"),
    (21, 40, "len_21_40"),
    (41, usize::MAX, "len_41_plus"),
];

fn bucket_index(length: usize) -> usize {
    LENGTH_BUCKETS
        .iter()
        .position(|&(lo, hi, _)| length >= lo && length <= hi)
        .expect("every length >= 1 falls in a bucket")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BucketStats {
    pub tokens_total: usize,
    pub tokens_correct: usize,
}

impl BucketStats {
    /// Accuracy, or `None` for an empty bucket.
    pub fn accuracy(&self) -> Option<f64> {
        (self.tokens_total > 0).then(|| self.tokens_correct as f64 / self.tokens_total as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub tokens_total: usize,
    pub tokens_correct: usize,
    pub length_buckets: [BucketStats; 4],
    pub infeasible_sentences: usize,
    pub per_tag_confusion: BTreeMap<(String, String), usize>,
}

impl EvalReport {
    pub fn token_accuracy(&self) -> f64 {
        self.tokens_correct as f64 / self.tokens_total as f64
    }

    /// Human-readable table.
    pub fn human_table(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== {title} ==");
        let _ = writeln!(out, "scoring: pooled per-token accuracy");
        let _ = writeln!(
            out,
            "tokens: {}/{} correct, accuracy {}",
            self.tokens_correct,
            self.tokens_total,
            format_probability(self.token_accuracy())
        );
        let _ = writeln!(out, "infeasible sentences: {}", self.infeasible_sentences);
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>8} {:>16}",
            "length", "tokens", "correct", "accuracy"
        );
        for (stats, (lo, hi, _)) in self.length_buckets.iter().zip(LENGTH_BUCKETS) {
            let range = if hi == usize::MAX {
                format!("{lo}+")
            } else {
                format!("{lo}-{hi}")
            };
            let acc = match stats.accuracy() {
                Some(a) => format_probability(a),
                None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>8} {:>16}",
                range, stats.tokens_total, stats.tokens_correct, acc
            );
        }
        let mut confused: Vec<(&(String, String), &usize)> = self
            .per_tag_confusion
            .iter()
            .filter(|((gold, pred), _)| gold != pred)
            .collect();
        confused.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        if !confused.is_empty() {
            let _ = writeln!(out, "top confusions (gold -> predicted):");
            for ((gold, pred), count) in confused.into_iter().take(10) {
                let _ = writeln!(out, "  {gold} -> {pred}  {count}");
            }
        }
        out
    }

    /// Machine form: `metric<TAB>value` lines, plus 4-field
    /// `<prefix>.confusion<TAB>gold<TAB>pred<TAB>count` rows.
    pub fn machine_lines(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}.tokens_total\t{}", self.tokens_total);
        let _ = writeln!(out, "{prefix}.tokens_correct\t{}", self.tokens_correct);
        let _ = writeln!(
            out,
            "{prefix}.token_accuracy\t{}",
            format_probability(self.token_accuracy())
        );
        let _ = writeln!(
            out,
            "{prefix}.infeasible_sentences\t{}",
            self.infeasible_sentences
        );
        for (stats, (_, _, label)) in self.length_buckets.iter().zip(LENGTH_BUCKETS) {
            let _ = writeln!(out, "{prefix}.{label}.tokens_total\t{}", stats.tokens_total);
            let _ = writeln!(
                out,
                "{prefix}.{label}.tokens_correct\t{}",
                stats.tokens_correct
            );
        }
        for ((gold, pred), count) in &self.per_tag_confusion {
            let _ = writeln!(out, "{prefix}.confusion\t{gold}\t{pred}\t{count}");
        }
        out
    }

    /// Rebuild a report from its machine form (inverse of
    /// [`EvalReport::machine_lines`] for the same prefix).
    pub fn from_machine_lines(text: &str, prefix: &str) -> Result<Self> {
        let mut report = EvalReport {
            tokens_total: 0,
            tokens_correct: 0,
            length_buckets: [BucketStats::default(); 4],
            infeasible_sentences: 0,
            per_tag_confusion: BTreeMap::new(),
        };
        let confusion_key = format!("{prefix}.confusion");
        let bad = |line: &str| TaggerError::Evaluation(format!("unparseable report line '{line}'"));
        for line in text.lines() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() == 4 && fields[0] == confusion_key {
                let count: usize = fields[3].parse().map_err(|_| bad(line))?;
                report
                    .per_tag_confusion
                    .insert((fields[1].to_string(), fields[2].to_string()), count);
                continue;
            }
            if fields.len() != 2 {
                continue;
            }
            let Some(key) = fields[0]
                .strip_prefix(prefix)
                .and_then(|k| k.strip_prefix('.'))
            else {
                continue;
            };
            let parse_count = |raw: &str| raw.parse::<usize>().map_err(|_| bad(line));
            match key {
                "tokens_total" => report.tokens_total = parse_count(fields[1])?,
                "tokens_correct" => report.tokens_correct = parse_count(fields[1])?,
                "infeasible_sentences" => report.infeasible_sentences = parse_count(fields[1])?,
                "token_accuracy" => {}
                _ => {
                    for (b, (_, _, label)) in LENGTH_BUCKETS.iter().enumerate() {
                        if key == format!("{label}.tokens_total") {
                            report.length_buckets[b].tokens_total = parse_count(fields[1])?;
                        } else if key == format!("{label}.tokens_correct") {
                            report.length_buckets[b].tokens_correct = parse_count(fields[1])?;
                        }
                    }
                }
            }
        }
        if report.tokens_total == 0 {
            return Err(TaggerError::Evaluation(format!(
                "no '{prefix}.tokens_total' metric found"
            )));
        }
        Ok(report)
    }
}

/// Score predictions against gold tags.
///
/// `predicted` must align 1:1 with the gold sentences in count and length;
/// mismatches are errors naming the sentence index.
pub fn score(gold: &Corpus, predicted: &[SentencePrediction]) -> Result<EvalReport> {
    if gold.sentences.is_empty() {
        return Err(TaggerError::Evaluation("empty test set".into()));
    }
    if gold.sentences.len() != predicted.len() {
        return Err(TaggerError::Evaluation(format!(
            "prediction count {} does not match sentence count {}",
            predicted.len(),
            gold.sentences.len()
        )));
    }
    let mut report = EvalReport {
        tokens_total: 0,
        tokens_correct: 0,
        length_buckets: [BucketStats::default(); 4],
        infeasible_sentences: 0,
        per_tag_confusion: BTreeMap::new(),
    };
    for (index, (sentence, prediction)) in gold.sentences.iter().zip(predicted).enumerate() {
        if sentence.len() != prediction.tags.len() {
            return Err(TaggerError::Evaluation(format!(
                "sentence {index}: prediction length {} does not match sentence length {}",
                prediction.tags.len(),
                sentence.len()
            )));
        }
        if !prediction.feasible {
            report.infeasible_sentences += 1;
        }
        let bucket = &mut report.length_buckets[bucket_index(sentence.len())];
        for (token, predicted_tag) in sentence.tokens.iter().zip(&prediction.tags) {
            let gold_tag = token.tag.as_deref().ok_or_else(|| {
                TaggerError::Evaluation(format!("sentence {index}: gold token without a tag"))
            })?;
            report.tokens_total += 1;
            bucket.tokens_total += 1;
            if gold_tag == predicted_tag {
                report.tokens_correct += 1;
                bucket.tokens_correct += 1;
            }
            *report
                .per_tag_confusion
                .entry((gold_tag.to_string(), predicted_tag.clone()))
                .or_insert(0) += 1;
        }
    }
    Ok(report)
}

/// One row of the per-sentence comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct PerSentenceRow {
    pub index: usize,
    pub length: usize,
    pub aco_cost: f64,
    pub aco_correct: usize,
    pub viterbi_correct: usize,
}

/// Result of running both decoders over the same test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub aco: EvalReport,
    pub viterbi: EvalReport,
    pub per_sentence: Vec<PerSentenceRow>,
}

/// Decode every gold sentence with both decoders and score them.
///
/// Sentences are decoded in parallel; each one uses an independent seed
/// derived from `config.seed` and its index, so results do not depend on
/// thread count or scheduling.
pub fn compare(
    gold: &Corpus,
    model: &HmmModel,
    config: &DecoderConfig,
    oov: OovMode,
) -> Result<Comparison> {
    if gold.sentences.is_empty() {
        return Err(TaggerError::Evaluation("empty test set".into()));
    }
    config.validate()?;
    for sentence in &gold.sentences {
        for token in &sentence.tokens {
            if let Some(tag) = token.tag.as_deref() {
                if model.tag_index(tag).is_none() {
                    return Err(TaggerError::UnknownTag {
                        tag: tag.to_string(),
                    });
                }
            }
        }
    }

    struct Decoded {
        aco: SentencePrediction,
        viterbi: SentencePrediction,
        aco_cost: f64,
    }

    let decoded: Vec<Decoded> = gold
        .sentences
        .par_iter()
        .enumerate()
        .map(|(index, sentence)| -> Result<Decoded> {
            let trellis = build_trellis(model, sentence, oov)?;
            let sentence_config = DecoderConfig {
                seed: derive_sentence_seed(config.seed, index),
                ..*config
            };
            let aco = aco_decode(&trellis, &sentence_config)?;
            let viterbi = viterbi_decode(model, sentence, oov)?;
            let names = |tags: &[usize]| {
                tags.iter()
                    .map(|&t| model.tag_name(t).to_string())
                    .collect::<Vec<_>>()
            };
            Ok(Decoded {
                aco: SentencePrediction {
                    tags: names(&aco.tags),
                    feasible: aco.feasible,
                },
                viterbi: SentencePrediction {
                    tags: names(&viterbi.tags),
                    feasible: viterbi.feasible,
                },
                aco_cost: aco.cost,
            })
        })
        .collect::<Result<_>>()?;

    let aco_predictions: Vec<SentencePrediction> = decoded.iter().map(|d| d.aco.clone()).collect();
    let viterbi_predictions: Vec<SentencePrediction> =
        decoded.iter().map(|d| d.viterbi.clone()).collect();

    let per_sentence = gold
        .sentences
        .iter()
        .zip(&decoded)
        .enumerate()
        .map(|(index, (sentence, d))| {
            let correct = |tags: &[String]| {
                sentence
                    .tokens
                    .iter()
                    .zip(tags)
                    .filter(|(tok, tag)| tok.tag.as_deref() == Some(tag.as_str()))
                    .count()
            };
            PerSentenceRow {
                index,
                length: sentence.len(),
                aco_cost: d.aco_cost,
                aco_correct: correct(&d.aco.tags),
                viterbi_correct: correct(&d.viterbi.tags),
            }
        })
        .collect();

    Ok(Comparison {
        aco: score(gold, &aco_predictions)?,
        viterbi: score(gold, &viterbi_predictions)?,
        per_sentence,
    })
}
