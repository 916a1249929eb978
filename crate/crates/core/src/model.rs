//! HMM probability tables: estimation, lookups, and the on-disk format.
//!
//! A model stores the tag inventory, initial-tag probabilities, tag-to-tag
//! transition probabilities, and per-tag emission probabilities over the
//! training vocabulary. Absent entries mean probability zero. Models are
//! immutable once built.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use crate::corpus::Corpus;
use crate::error::{Result, TaggerError};

/// Tolerance for stochastic row/column sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Policy for emission probabilities of surfaces never seen in training.
///
/// `Uniform` assigns `1/|tagset|` to every tag. `Spread(k)` assigns
/// `k / (support(tag) + k * |vocabulary|)` where `support(tag)` is the
/// number of vocabulary entries the tag can emit; this is an add-k style
/// mass computable from the serialized tables alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OovMode {
    Uniform,
    Spread(f64),
}

impl fmt::Display for OovMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OovMode::Uniform => write!(f, "uniform"),
            OovMode::Spread(k) => write!(f, "spread:{}", format_probability(*k)),
        }
    }
}

impl FromStr for OovMode {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(OovMode::Uniform);
        }
        if let Some(raw) = s.strip_prefix("spread:") {
            let k: f64 = raw
                .parse()
                .map_err(|_| TaggerError::Config(format!("invalid spread factor '{raw}'")))?;
            if !(k > 0.0 && k.is_finite()) {
                return Err(TaggerError::Config(format!(
                    "spread factor must be a positive finite number, got {k}"
                )));
            }
            return Ok(OovMode::Spread(k));
        }
        Err(TaggerError::Config(format!(
            "unknown OOV mode '{s}' (expected 'uniform' or 'spread:<k>')"
        )))
    }
}

/// How thoroughly probability tables are checked on construction.
///
/// `Strict` additionally enforces that π sums to one, that every non-empty
/// transition row sums to one, and that every tag's emission column sums to
/// one. `Relaxed` keeps only the structural checks (known tags, values in
/// `[0,1]`); it exists for hand-built tables that are deliberately
/// unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validation {
    Strict,
    Relaxed,
}

/// An immutable HMM parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    tags: Vec<String>,
    tag_index: HashMap<String, usize>,
    pi: Vec<f64>,
    /// Row-major `[from * B + to]`.
    transition: Vec<f64>,
    /// Surface -> per-tag probabilities (dense row of length B).
    emission: BTreeMap<String, Vec<f64>>,
    /// Per tag: number of vocabulary entries with nonzero emission.
    support: Vec<usize>,
    oov: OovMode,
}

impl HmmModel {
    /// Build a model from sparse named entries, validating per `validation`.
    pub fn from_parts(
        tags: Vec<String>,
        pi: &[(String, f64)],
        transition: &[(String, String, f64)],
        emission: &[(String, String, f64)],
        oov: OovMode,
        validation: Validation,
    ) -> Result<Self> {
        if tags.is_empty() {
            return Err(TaggerError::Domain("tagset must not be empty".into()));
        }
        let mut tag_index = HashMap::new();
        for (i, t) in tags.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(TaggerError::Domain(format!("invalid tag identifier '{t}'")));
            }
            if tag_index.insert(t.clone(), i).is_some() {
                return Err(TaggerError::Domain(format!(
                    "duplicate tag '{t}' in tagset"
                )));
            }
        }
        let b = tags.len();
        let lookup = |t: &str| -> Result<usize> {
            tag_index
                .get(t)
                .copied()
                .ok_or_else(|| TaggerError::UnknownTag { tag: t.to_string() })
        };
        let check_prob = |p: f64, what: &str| -> Result<f64> {
            if !(0.0..=1.0).contains(&p) {
                return Err(TaggerError::Domain(format!(
                    "probability {p} out of range [0,1] for {what}"
                )));
            }
            Ok(p)
        };

        let mut pi_vec = vec![0.0; b];
        for (t, p) in pi {
            pi_vec[lookup(t)?] = check_prob(*p, &format!("pi({t})"))?;
        }
        let mut trans = vec![0.0; b * b];
        for (from, to, p) in transition {
            trans[lookup(from)? * b + lookup(to)?] =
                check_prob(*p, &format!("transition({from},{to})"))?;
        }
        let mut emit: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (surface, t, p) in emission {
            let p = check_prob(*p, &format!("emission({surface},{t})"))?;
            if p > 0.0 {
                emit.entry(surface.clone()).or_insert_with(|| vec![0.0; b])[lookup(t)?] = p;
            }
        }

        let model = HmmModel::assemble(tags, tag_index, pi_vec, trans, emit, oov);
        model.validate(validation)?;
        Ok(model)
    }

    fn assemble(
        tags: Vec<String>,
        tag_index: HashMap<String, usize>,
        pi: Vec<f64>,
        transition: Vec<f64>,
        emission: BTreeMap<String, Vec<f64>>,
        oov: OovMode,
    ) -> Self {
        let b = tags.len();
        let mut support = vec![0usize; b];
        for probs in emission.values() {
            for (t, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    support[t] += 1;
                }
            }
        }
        HmmModel {
            tags,
            tag_index,
            pi,
            transition,
            emission,
            support,
            oov,
        }
    }

    /// Maximum-likelihood estimation over a tagged corpus.
    ///
    /// The model tagset is the set of tags seen in the corpus tokens, in
    /// first-appearance order. The stored OOV mode defaults to `Uniform`.
    pub fn train(corpus: &Corpus) -> Result<Self> {
        if corpus.sentences.is_empty() {
            return Err(TaggerError::Training("corpus has no sentences".into()));
        }
        let mut tags: Vec<String> = Vec::new();
        let mut tag_index: HashMap<String, usize> = HashMap::new();
        let idx_of =
            |tag: &str, tags: &mut Vec<String>, tag_index: &mut HashMap<String, usize>| -> usize {
                if let Some(&i) = tag_index.get(tag) {
                    return i;
                }
                let i = tags.len();
                tags.push(tag.to_string());
                tag_index.insert(tag.to_string(), i);
                i
            };

        // First pass assigns indices and gathers counts.
        let mut first_counts: Vec<u64> = Vec::new();
        let mut tag_counts: Vec<u64> = Vec::new();
        let mut nonfinal_counts: Vec<u64> = Vec::new();
        let mut bigram: HashMap<(usize, usize), u64> = HashMap::new();
        let mut word_tag: BTreeMap<String, HashMap<usize, u64>> = BTreeMap::new();

        for sentence in &corpus.sentences {
            let mut prev: Option<usize> = None;
            for (pos, token) in sentence.tokens.iter().enumerate() {
                let tag = token.tag.as_deref().ok_or_else(|| {
                    TaggerError::Training(format!("untagged token '{}'", token.surface))
                })?;
                let t = idx_of(tag, &mut tags, &mut tag_index);
                while tag_counts.len() <= t {
                    tag_counts.push(0);
                    first_counts.push(0);
                    nonfinal_counts.push(0);
                }
                tag_counts[t] += 1;
                if pos == 0 {
                    first_counts[t] += 1;
                }
                if let Some(p) = prev {
                    nonfinal_counts[p] += 1;
                    *bigram.entry((p, t)).or_insert(0) += 1;
                }
                *word_tag
                    .entry(token.surface.clone())
                    .or_default()
                    .entry(t)
                    .or_insert(0) += 1;
                prev = Some(t);
            }
        }

        let b = tags.len();
        let sentence_count = corpus.sentences.len() as f64;
        let pi: Vec<f64> = first_counts
            .iter()
            .map(|&c| c as f64 / sentence_count)
            .collect();
        let mut transition = vec![0.0; b * b];
        for ((from, to), c) in bigram {
            transition[from * b + to] = c as f64 / nonfinal_counts[from] as f64;
        }
        let mut emission: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (surface, by_tag) in word_tag {
            let mut row = vec![0.0; b];
            for (t, c) in by_tag {
                row[t] = c as f64 / tag_counts[t] as f64;
            }
            emission.insert(surface, row);
        }

        let model = HmmModel::assemble(tags, tag_index, pi, transition, emission, OovMode::Uniform);
        model.validate(Validation::Strict)?;
        Ok(model)
    }

    /// Replace the stored default OOV mode.
    pub fn with_oov(mut self, oov: OovMode) -> Self {
        self.oov = oov;
        self
    }

    pub fn oov_mode(&self) -> OovMode {
        self.oov
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag_name(&self, idx: usize) -> &str {
        &self.tags[idx]
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.tag_index.get(tag).copied()
    }

    pub fn pi(&self, tag: usize) -> f64 {
        self.pi[tag]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.tags.len() + to]
    }

    pub fn vocabulary_len(&self) -> usize {
        self.emission.len()
    }

    pub fn contains_surface(&self, surface: &str) -> bool {
        self.emission.contains_key(surface)
    }

    /// Iterate `(surface, per-tag emission probabilities)` in canonical
    /// (byte-lexicographic) order.
    pub fn emission_entries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.emission
            .iter()
            .map(|(s, p)| (s.as_str(), p.as_slice()))
    }

    /// Emission probability for a tag index, applying `oov` for surfaces
    /// outside the vocabulary.
    pub fn emission_by_index(&self, surface: &str, tag: usize, oov: OovMode) -> f64 {
        match self.emission.get(surface) {
            Some(row) => row[tag],
            None => match oov {
                OovMode::Uniform => 1.0 / self.tags.len() as f64,
                OovMode::Spread(k) => {
                    k / (self.support[tag] as f64 + k * self.emission.len() as f64)
                }
            },
        }
    }

    /// Emission probability by tag name; unknown tags are an error.
    pub fn emission_lookup(&self, surface: &str, tag: &str, oov: OovMode) -> Result<f64> {
        let idx = self.tag_index(tag).ok_or_else(|| TaggerError::UnknownTag {
            tag: tag.to_string(),
        })?;
        Ok(self.emission_by_index(surface, idx, oov))
    }

    /// Check the stochasticity invariants. `Relaxed` only confirms the
    /// structural ranges (already guaranteed by construction) and succeeds.
    pub fn validate(&self, validation: Validation) -> Result<()> {
        let b = self.tags.len();
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        if !self.pi.iter().copied().all(in_range)
            || !self.transition.iter().copied().all(in_range)
            || !self.emission.values().flatten().copied().all(in_range)
        {
            return Err(TaggerError::Domain("probability out of range [0,1]".into()));
        }
        if validation == Validation::Relaxed {
            return Ok(());
        }

        let pi_sum: f64 = self.pi.iter().sum();
        if (pi_sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(TaggerError::Domain(format!(
                "pi sums to {pi_sum}, expected 1"
            )));
        }
        for from in 0..b {
            let row = &self.transition[from * b..(from + 1) * b];
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(TaggerError::Domain(format!(
                    "transition row for tag '{}' sums to {sum}, expected 1",
                    self.tags[from]
                )));
            }
        }
        for t in 0..b {
            let sum: f64 = self.emission.values().map(|row| row[t]).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(TaggerError::Domain(format!(
                    "emission column for tag '{}' sums to {sum}, expected 1",
                    self.tags[t]
                )));
            }
        }
        Ok(())
    }

    /// Serialize in the sectioned TSV model format. Zero entries are
    /// omitted; probabilities use the shortest decimal form preserving
    /// twelve significant digits.
    pub fn write_to<W: Write>(&self, mut sink: W) -> Result<()> {
        let b = self.tags.len();
        writeln!(sink, "ACO-TAGGER-MODEL v1 oov={}", self.oov)?;
        writeln!(sink, "#TAGS")?;
        writeln!(sink, "{}", self.tags.join(" "))?;
        writeln!(sink, "#PI")?;
        for (t, &p) in self.pi.iter().enumerate() {
            if p > 0.0 {
                writeln!(sink, "{}\t{}", self.tags[t], format_probability(p))?;
            }
        }
        writeln!(sink, "#TRANSITION")?;
        for from in 0..b {
            for to in 0..b {
                let p = self.transition[from * b + to];
                if p > 0.0 {
                    writeln!(
                        sink,
                        "{}\t{}\t{}",
                        self.tags[from],
                        self.tags[to],
                        format_probability(p)
                    )?;
                }
            }
        }
        writeln!(sink, "#EMISSION")?;
        for (surface, row) in &self.emission {
            for (t, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    writeln!(
                        sink,
                        "{}\t{}\t{}",
                        surface,
                        self.tags[t],
                        format_probability(p)
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Parse a model file produced by [`HmmModel::write_to`].
    pub fn read_from<R: Read>(source: R, validation: Validation) -> Result<Self> {
        let reader = BufReader::new(source);
        let mut lines = Vec::new();
        for line in reader.lines() {
            let mut line = line?;
            if line.ends_with('\r') {
                line.pop();
            }
            lines.push(line);
        }
        Parser { lines }.parse(validation)
    }
}

struct Parser {
    lines: Vec<String>,
}

impl Parser {
    fn parse(self, validation: Validation) -> Result<HmmModel> {
        let fail = |section: &str, line: usize, message: String| TaggerError::ModelFormat {
            section: section.to_string(),
            line,
            message,
        };

        let mut pos = 0usize;
        let next = |pos: &mut usize| -> Option<(usize, &str)> {
            while *pos < self.lines.len() {
                let i = *pos;
                *pos += 1;
                if !self.lines[i].is_empty() {
                    return Some((i + 1, self.lines[i].as_str()));
                }
            }
            None
        };

        let (line_no, header) =
            next(&mut pos).ok_or_else(|| fail("header", 1, "empty file".into()))?;
        let oov_str = header
            .strip_prefix("ACO-TAGGER-MODEL v1 oov=")
            .ok_or_else(|| {
                if header.starts_with("ACO-TAGGER-MODEL") {
                    fail(
                        "header",
                        line_no,
                        format!("unsupported version in '{header}'"),
                    )
                } else {
                    fail("header", line_no, "missing ACO-TAGGER-MODEL header".into())
                }
            })?;
        let oov: OovMode = oov_str.parse()?;

        let (line_no, tags_marker) =
            next(&mut pos).ok_or_else(|| fail("#TAGS", line_no, "missing #TAGS section".into()))?;
        if tags_marker != "#TAGS" {
            return Err(fail(
                "#TAGS",
                line_no,
                format!("expected #TAGS, found '{tags_marker}'"),
            ));
        }
        let (line_no, tag_line) =
            next(&mut pos).ok_or_else(|| fail("#TAGS", line_no, "missing tag list".into()))?;
        let tags: Vec<String> = tag_line.split(' ').map(str::to_string).collect();
        let mut tag_index: HashMap<String, usize> = HashMap::new();
        for (i, t) in tags.iter().enumerate() {
            if t.is_empty() {
                return Err(fail("#TAGS", line_no, "empty tag in tag list".into()));
            }
            if tag_index.insert(t.clone(), i).is_some() {
                return Err(fail("#TAGS", line_no, format!("duplicate tag '{t}'")));
            }
        }
        let b = tags.len();

        let mut pi = vec![0.0; b];
        let mut pi_seen = vec![false; b];
        let mut transition = vec![0.0; b * b];
        let mut trans_seen = vec![false; b * b];
        let mut emission: BTreeMap<String, Vec<f64>> = BTreeMap::new();

        let mut section = "#PI";
        let (line_no, marker) =
            next(&mut pos).ok_or_else(|| fail("#PI", line_no, "missing #PI section".into()))?;
        if marker != "#PI" {
            return Err(fail(
                "#PI",
                line_no,
                format!("expected #PI, found '{marker}'"),
            ));
        }

        let tag_of = |name: &str, section: &str, line: usize| -> Result<usize> {
            tag_index
                .get(name)
                .copied()
                .ok_or_else(|| fail(section, line, format!("unknown tag '{name}'")))
        };
        let prob_of = |raw: &str, section: &str, line: usize| -> Result<f64> {
            let p: f64 = raw
                .parse()
                .map_err(|_| fail(section, line, format!("invalid probability '{raw}'")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(TaggerError::ProbabilityRange {
                    section: section.to_string(),
                    line,
                    value: p,
                });
            }
            Ok(p)
        };

        let mut saw_transition = false;
        let mut saw_emission = false;
        while let Some((line_no, line)) = next(&mut pos) {
            // Markers are matched exactly; a tag may well start with '#'.
            if line == "#TRANSITION" || line == "#EMISSION" || line == "#TAGS" || line == "#PI" {
                section = match line {
                    "#TRANSITION" if section == "#PI" => {
                        saw_transition = true;
                        "#TRANSITION"
                    }
                    "#EMISSION" if section == "#TRANSITION" => {
                        saw_emission = true;
                        "#EMISSION"
                    }
                    _ => {
                        return Err(fail(
                            section,
                            line_no,
                            format!("unexpected section marker '{line}'"),
                        ))
                    }
                };
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match section {
                "#PI" => {
                    if fields.len() != 2 {
                        return Err(fail(section, line_no, "expected 'tag<TAB>prob'".into()));
                    }
                    let t = tag_of(fields[0], section, line_no)?;
                    if pi_seen[t] {
                        return Err(fail(
                            section,
                            line_no,
                            format!("duplicate pi entry '{}'", fields[0]),
                        ));
                    }
                    pi_seen[t] = true;
                    pi[t] = prob_of(fields[1], section, line_no)?;
                }
                "#TRANSITION" => {
                    if fields.len() != 3 {
                        return Err(fail(
                            section,
                            line_no,
                            "expected 'from<TAB>to<TAB>prob'".into(),
                        ));
                    }
                    let from = tag_of(fields[0], section, line_no)?;
                    let to = tag_of(fields[1], section, line_no)?;
                    if trans_seen[from * b + to] {
                        return Err(fail(
                            section,
                            line_no,
                            format!("duplicate transition entry '{} {}'", fields[0], fields[1]),
                        ));
                    }
                    trans_seen[from * b + to] = true;
                    transition[from * b + to] = prob_of(fields[2], section, line_no)?;
                }
                "#EMISSION" => {
                    if fields.len() != 3 {
                        return Err(fail(
                            section,
                            line_no,
                            "expected 'surface<TAB>tag<TAB>prob'".into(),
                        ));
                    }
                    let t = tag_of(fields[1], section, line_no)?;
                    let p = prob_of(fields[2], section, line_no)?;
                    let row = emission
                        .entry(fields[0].to_string())
                        .or_insert_with(|| vec![0.0; b]);
                    if row[t] != 0.0 {
                        return Err(fail(
                            section,
                            line_no,
                            format!("duplicate emission entry '{} {}'", fields[0], fields[1]),
                        ));
                    }
                    if p > 0.0 {
                        row[t] = p;
                    }
                }
                _ => unreachable!(),
            }
        }
        if !saw_transition {
            return Err(fail(
                "#TRANSITION",
                self.lines.len(),
                "missing #TRANSITION section".into(),
            ));
        }
        if !saw_emission {
            return Err(fail(
                "#EMISSION",
                self.lines.len(),
                "missing #EMISSION section".into(),
            ));
        }
        emission.retain(|_, row| row.iter().any(|&p| p > 0.0));

        let model = HmmModel::assemble(tags, tag_index, pi, transition, emission, oov);
        model.validate(validation)?;
        Ok(model)
    }
}

/// Shortest plain-decimal representation of `v` that preserves twelve
/// significant digits.
pub fn format_probability(v: f64) -> String {
    let target = format_significant(v, 12);
    for sig in 1..12 {
        let s = format_significant(v, sig);
        if let Ok(parsed) = s.parse::<f64>() {
            if format_significant(parsed, 12) == target {
                return s;
            }
        }
    }
    target
}

fn format_significant(v: f64, sig: i32) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let mut exp = v.abs().log10().floor() as i32;
    if 10f64.powi(exp) > v.abs() {
        exp -= 1;
    } else if 10f64.powi(exp + 1) <= v.abs() {
        exp += 1;
    }
    let decimals = (sig - 1 - exp).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_corpus;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn mle_counts_match_hand_derivation() {
        // Two sentences: [a/X b/Y] and [a/X a/X a/X]: three non-final X
        // occurrences, one followed by Y and two by X.
        let corpus = read_corpus("a\tX\nb\tY\n\na\tX\na\tX\na\tX\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        let x = model.tag_index("X").unwrap();
        let y = model.tag_index("Y").unwrap();
        assert!(close(model.pi(x), 1.0));
        assert!(close(model.pi(y), 0.0));
        assert!(close(model.transition(x, y), 1.0 / 3.0));
        assert!(close(model.transition(x, x), 2.0 / 3.0));
        assert!(close(
            model.emission_lookup("a", "X", OovMode::Uniform).unwrap(),
            1.0
        ));
        assert!(close(
            model.emission_lookup("b", "Y", OovMode::Uniform).unwrap(),
            1.0
        ));
    }

    #[test]
    fn single_sentence_degenerates_cleanly() {
        let corpus = read_corpus("w\tT\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        let t = model.tag_index("T").unwrap();
        assert!(close(model.pi(t), 1.0));
        assert!(close(model.transition(t, t), 0.0));
        assert!(close(
            model.emission_by_index("w", t, OovMode::Uniform),
            1.0
        ));
        model.validate(Validation::Strict).unwrap();
    }

    #[test]
    fn training_on_empty_corpus_fails() {
        let corpus = Corpus {
            sentences: vec![],
            tagset: vec![],
        };
        assert!(matches!(
            HmmModel::train(&corpus),
            Err(TaggerError::Training(_))
        ));
    }

    #[test]
    fn uniform_oov_spreads_over_the_tagset() {
        let corpus = read_corpus("a\tA\n\nb\tB\n\nc\tC\n\nd\tD\n\ne\tE\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        for tag in ["A", "B", "C", "D", "E"] {
            let p = model
                .emission_lookup("unseen", tag, OovMode::Uniform)
                .unwrap();
            assert!(close(p, 0.2));
        }
    }

    #[test]
    fn spread_oov_uses_support_and_vocabulary_size() {
        let corpus = read_corpus("a\tX\n\nb\tY\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        // support(X) = 1, |V| = 2, k = 0.5 -> 0.5 / (1 + 0.5*2) = 0.25
        let p = model
            .emission_lookup("unseen", "X", OovMode::Spread(0.5))
            .unwrap();
        assert!(close(p, 0.25));
        // Known surfaces are unaffected by the OOV mode.
        let known = model
            .emission_lookup("a", "X", OovMode::Spread(0.5))
            .unwrap();
        assert!(close(known, 1.0));
    }

    #[test]
    fn unknown_tag_lookup_is_an_error() {
        let corpus = read_corpus("a\tX\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        assert!(matches!(
            model.emission_lookup("a", "NOPE", OovMode::Uniform),
            Err(TaggerError::UnknownTag { .. })
        ));
    }

    #[test]
    fn oov_mode_round_trips_through_strings() {
        for mode in [OovMode::Uniform, OovMode::Spread(0.5), OovMode::Spread(2.0)] {
            let parsed: OovMode = mode.to_string().parse().unwrap();
            assert_eq!(parsed, mode);
        }
        assert!("spread:0".parse::<OovMode>().is_err());
        assert!("spread:-1".parse::<OovMode>().is_err());
        assert!("banana".parse::<OovMode>().is_err());
    }

    #[test]
    fn probability_formatting_is_shortest_preserving_12_digits() {
        assert_eq!(format_probability(0.6), "0.6");
        assert_eq!(format_probability(1.0), "1");
        assert_eq!(format_probability(0.05), "0.05");
        assert_eq!(format_probability(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_probability(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_probability(1e-4), "0.0001");
        let v = 0.123456789012345;
        assert_eq!(format_probability(v), "0.123456789012");
        // Every emitted form parses back to the same 12-digit value.
        for p in [0.1, 0.25, 1.0 / 7.0, 1e-9, 0.999999999999, 123.0f64.recip()] {
            let s = format_probability(p);
            let q: f64 = s.parse().unwrap();
            assert_eq!(format_significant(q, 12), format_significant(p, 12));
        }
    }

    #[test]
    fn model_file_round_trip_is_lossless_and_canonical() {
        let corpus =
            read_corpus("t1\tN\nt2\tV\n\nt1\tN\nt3\tADJ\nt2\tV\n\nt3\tN\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus)
            .unwrap()
            .with_oov(OovMode::Spread(0.5));
        let mut bytes = Vec::new();
        model.write_to(&mut bytes).unwrap();
        let reread = HmmModel::read_from(bytes.as_slice(), Validation::Strict).unwrap();
        assert_eq!(reread.tags(), model.tags());
        assert_eq!(reread.oov_mode(), model.oov_mode());
        for t in 0..model.num_tags() {
            assert!(close(reread.pi(t), model.pi(t)));
            for u in 0..model.num_tags() {
                assert!(close(reread.transition(t, u), model.transition(t, u)));
            }
        }
        // Re-serializing what we read is byte-identical: the format is
        // canonical.
        let mut again = Vec::new();
        reread.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn hash_prefixed_tags_survive_the_file_format() {
        let corpus = read_corpus("a\t#X\nb\t#PI\n".as_bytes()).unwrap();
        let model = HmmModel::train(&corpus).unwrap();
        let mut bytes = Vec::new();
        model.write_to(&mut bytes).unwrap();
        let reread = HmmModel::read_from(bytes.as_slice(), Validation::Strict).unwrap();
        assert_eq!(reread.tags(), ["#X", "#PI"]);
        assert!(close(
            reread
                .emission_lookup("b", "#PI", OovMode::Uniform)
                .unwrap(),
            1.0
        ));
    }

    #[test]
    fn model_format_errors_name_section_and_line() {
        let missing_pi = "ACO-TAGGER-MODEL v1 oov=uniform\n#TAGS\nN V\n#TRANSITION\n";
        match HmmModel::read_from(missing_pi.as_bytes(), Validation::Relaxed) {
            Err(TaggerError::ModelFormat { section, .. }) => assert_eq!(section, "#PI"),
            other => panic!("unexpected: {other:?}"),
        }

        let bad_version = "ACO-TAGGER-MODEL v2 oov=uniform\n#TAGS\nN\n";
        assert!(matches!(
            HmmModel::read_from(bad_version.as_bytes(), Validation::Relaxed),
            Err(TaggerError::ModelFormat { .. })
        ));

        let out_of_range =
            "ACO-TAGGER-MODEL v1 oov=uniform\n#TAGS\nN\n#PI\nN\t1.5\n#TRANSITION\n#EMISSION\nw\tN\t1\n";
        match HmmModel::read_from(out_of_range.as_bytes(), Validation::Relaxed) {
            Err(TaggerError::ProbabilityRange {
                section,
                line,
                value,
            }) => {
                assert_eq!(section, "#PI");
                assert_eq!(line, 5);
                assert!(close(value, 1.5));
            }
            other => panic!("unexpected: {other:?}"),
        }

        let unknown_tag =
            "ACO-TAGGER-MODEL v1 oov=uniform\n#TAGS\nN\n#PI\nN\t1\n#TRANSITION\nN\tV\t0.5\n#EMISSION\nw\tN\t1\n";
        assert!(matches!(
            HmmModel::read_from(unknown_tag.as_bytes(), Validation::Relaxed),
            Err(TaggerError::ModelFormat { .. })
        ));
    }

    #[test]
    fn strict_validation_rejects_unnormalized_rows() {
        let file =
            "ACO-TAGGER-MODEL v1 oov=uniform\n#TAGS\nN V\n#PI\nN\t0.5\nV\t0.5\n#TRANSITION\nN\tN\t0.4\nN\tV\t0.7\n#EMISSION\nw\tN\t1\nw\tV\t1\n";
        assert!(HmmModel::read_from(file.as_bytes(), Validation::Strict).is_err());
        let model = HmmModel::read_from(file.as_bytes(), Validation::Relaxed).unwrap();
        assert!(close(model.transition(0, 1), 0.7));
    }

    proptest! {
        #[test]
        fn trained_models_round_trip_within_1e_12(
            sentences in prop::collection::vec(
                prop::collection::vec(("[a-f]{1,3}", "[A-D]"), 1..6),
                1..10,
            )
        ) {
            let corpus = crate::corpus::Corpus {
                sentences: sentences
                    .iter()
                    .map(|toks| crate::corpus::Sentence {
                        tokens: toks
                            .iter()
                            .map(|(s, t)| crate::corpus::Token::tagged(s.clone(), t.clone()))
                            .collect(),
                    })
                    .collect(),
                tagset: Vec::new(),
            };
            let model = HmmModel::train(&corpus).unwrap();
            model.validate(Validation::Strict).unwrap();

            let mut bytes = Vec::new();
            model.write_to(&mut bytes).unwrap();
            let reread = HmmModel::read_from(bytes.as_slice(), Validation::Strict).unwrap();

            prop_assert_eq!(reread.tags(), model.tags());
            for t in 0..model.num_tags() {
                prop_assert!((reread.pi(t) - model.pi(t)).abs() <= 1e-12);
                for u in 0..model.num_tags() {
                    prop_assert!((reread.transition(t, u) - model.transition(t, u)).abs() <= 1e-12);
                }
            }
            let lhs: Vec<_> = model.emission_entries().collect();
            let rhs: Vec<_> = reread.emission_entries().collect();
            prop_assert_eq!(lhs.len(), rhs.len());
            for ((ws, wp), (rs, rp)) in lhs.iter().zip(rhs.iter()) {
                prop_assert_eq!(ws, rs);
                for (a, b) in wp.iter().zip(rp.iter()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
