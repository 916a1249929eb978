//! Tagged-corpus data types and file I/O.
//!
//! Corpus files are UTF-8 with LF line endings. Each token is one line of
//! `surface<TAB>tag`, sentences are separated by a single empty line, and the
//! file ends with the final token line's LF. Lines that start with `#` and
//! contain no TAB are comments and are skipped (the tagger emits
//! `# infeasible` annotations in this form).

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TaggerError};

/// A single token: a surface form plus its tag when one is known.
///
/// Gold corpora always carry tags; raw input to the tagger does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub tag: Option<String>,
}

impl Token {
    pub fn tagged(surface: impl Into<String>, tag: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            tag: Some(tag.into()),
        }
    }

    pub fn untagged(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            tag: None,
        }
    }
}

/// A non-empty sequence of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

/// An ordered collection of sentences plus the tag inventory seen in them,
/// in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub tagset: Vec<String>,
}

impl Corpus {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// Parameters of the deterministic train/test split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Fraction of sentences that go to the training half, in (0,1).
    pub train_fraction: f64,
    pub seed: u64,
}

fn validate_tag(tag: &str, line: usize) -> Result<()> {
    if tag.is_empty() {
        return Err(TaggerError::CorpusFormat {
            line,
            message: "empty tag".into(),
        });
    }
    if tag.chars().any(char::is_whitespace) {
        return Err(TaggerError::CorpusFormat {
            line,
            message: format!("tag '{tag}' contains whitespace"),
        });
    }
    Ok(())
}

/// Read a tagged corpus from `source`.
///
/// Sentences are blank-line-delimited blocks of `surface<TAB>tag` lines; the
/// tagset is collected in first-appearance order. Malformed lines and empty
/// inputs are errors.
pub fn read_corpus<R: Read>(source: R) -> Result<Corpus> {
    let reader = BufReader::new(source);
    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut tagset: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let mut line = line?;
        if line.ends_with('\r') {
            line.pop();
        }
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(Sentence {
                    tokens: std::mem::take(&mut current),
                });
            }
            continue;
        }
        if line.starts_with('#') && !line.contains('\t') {
            continue;
        }
        let mut fields = line.split('\t');
        let surface = fields.next().unwrap_or("");
        let tag = fields.next().ok_or_else(|| TaggerError::CorpusFormat {
            line: line_no,
            message: "expected 'surface<TAB>tag', found no TAB".into(),
        })?;
        if fields.next().is_some() {
            return Err(TaggerError::CorpusFormat {
                line: line_no,
                message: "more than two TAB-separated fields".into(),
            });
        }
        if surface.is_empty() {
            return Err(TaggerError::CorpusFormat {
                line: line_no,
                message: "empty surface form".into(),
            });
        }
        validate_tag(tag, line_no)?;
        if !seen.contains(tag) {
            seen.insert(tag.to_string());
            tagset.push(tag.to_string());
        }
        current.push(Token::tagged(surface, tag));
    }
    if !current.is_empty() {
        sentences.push(Sentence { tokens: current });
    }
    if sentences.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    Ok(Corpus { sentences, tagset })
}

/// Write `corpus` in the corpus file format. Every token must be tagged
/// and satisfy the token invariants, or the file would not read back.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut sink: W) -> Result<()> {
    for (i, sentence) in corpus.sentences.iter().enumerate() {
        if i > 0 {
            sink.write_all(b"\n")?;
        }
        for token in &sentence.tokens {
            let tag = token.tag.as_deref().ok_or_else(|| {
                TaggerError::Domain(format!("cannot write untagged token '{}'", token.surface))
            })?;
            if token.surface.is_empty() || token.surface.contains(['\t', '\n']) {
                return Err(TaggerError::Domain(format!(
                    "surface {:?} is not writable in corpus format",
                    token.surface
                )));
            }
            if tag.is_empty() || tag.chars().any(char::is_whitespace) {
                return Err(TaggerError::Domain(format!(
                    "tag {tag:?} is not writable in corpus format"
                )));
            }
            sink.write_all(token.surface.as_bytes())?;
            sink.write_all(b"\t")?;
            sink.write_all(tag.as_bytes())?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Read raw (untagged) text: one sentence per line, tokens split on
/// whitespace. Empty lines are skipped.
pub fn read_raw_sentences<R: Read>(source: R) -> Result<Vec<Sentence>> {
    let reader = BufReader::new(source);
    let mut sentences = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let tokens: Vec<Token> = line.split_whitespace().map(Token::untagged).collect();
        if !tokens.is_empty() {
            sentences.push(Sentence { tokens });
        }
    }
    if sentences.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    Ok(sentences)
}

/// Shuffle sentences with a seeded permutation and split them into
/// train/test halves. The train half gets `ceil(train_fraction * n)`
/// sentences; both halves inherit the parent tagset.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(TaggerError::Split(format!(
            "train_fraction must be in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let n = corpus.sentences.len();
    if n < 2 {
        return Err(TaggerError::Split(format!(
            "need at least 2 sentences to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let train_n = (spec.train_fraction * n as f64).ceil() as usize;
    let pick = |ids: &[usize]| Corpus {
        sentences: ids.iter().map(|&i| corpus.sentences[i].clone()).collect(),
        tagset: corpus.tagset.clone(),
    };
    Ok((pick(&order[..train_n]), pick(&order[train_n..])))
}
