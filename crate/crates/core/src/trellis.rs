//! Layered sentence graph with probability-derived edge lengths.
//!
//! One segment per token, one node per tag. The length of an edge into a
//! node is `emission ^ log10(transition)`, so likelier pairs sit closer
//! together; a zero emission or transition makes the edge infinitely long.
//! Edges out of the virtual start node use π in place of a transition.

use std::io::Write;

use crate::corpus::Sentence;
use crate::error::{Result, TaggerError};
use crate::model::{HmmModel, OovMode};

/// Distance between two trellis nodes given the destination's emission
/// probability and the connecting transition (or π) probability.
///
/// Finite results are always >= 1, with equality exactly when either
/// probability is 1. Zero probability on either side yields infinity.
pub fn edge_distance(emission_p: f64, transition_p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&emission_p) {
        return Err(TaggerError::Domain(format!(
            "emission probability {emission_p} out of range [0,1]"
        )));
    }
    if !(0.0..=1.0).contains(&transition_p) {
        return Err(TaggerError::Domain(format!(
            "transition probability {transition_p} out of range [0,1]"
        )));
    }
    if emission_p == 0.0 || transition_p == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(emission_p.powf(transition_p.log10()))
}

/// The per-sentence graph: distances and heuristics for every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    num_tags: usize,
    segments: usize,
    tag_names: Vec<String>,
    /// Distances from the virtual start node to segment 0, length B.
    initial: Vec<f64>,
    initial_etas: Vec<f64>,
    /// Distances into segment t (t >= 1), flattened `[((t-1)*B + from)*B + to]`.
    edges: Vec<f64>,
    etas: Vec<f64>,
}

impl Trellis {
    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn num_segments(&self) -> usize {
        self.segments
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn initial_distance(&self, to: usize) -> f64 {
        self.initial[to]
    }

    pub fn initial_distances(&self) -> &[f64] {
        &self.initial
    }

    pub fn initial_etas(&self) -> &[f64] {
        &self.initial_etas
    }

    fn row_start(&self, segment: usize, from: usize) -> usize {
        ((segment - 1) * self.num_tags + from) * self.num_tags
    }

    /// Distance of the edge from `from` in segment `segment - 1` to `to`
    /// in `segment` (1-based segments).
    pub fn distance(&self, segment: usize, from: usize, to: usize) -> f64 {
        self.edges[self.row_start(segment, from) + to]
    }

    pub fn distance_row(&self, segment: usize, from: usize) -> &[f64] {
        let start = self.row_start(segment, from);
        &self.edges[start..start + self.num_tags]
    }

    pub fn eta(&self, segment: usize, from: usize, to: usize) -> f64 {
        self.etas[self.row_start(segment, from) + to]
    }

    pub fn eta_row(&self, segment: usize, from: usize) -> &[f64] {
        let start = self.row_start(segment, from);
        &self.etas[start..start + self.num_tags]
    }

    /// Total length of the path selecting `tags[t]` at each segment.
    /// Infinity-absorbing: one infinite edge makes the whole path infinite.
    pub fn path_cost(&self, tags: &[usize]) -> Result<f64> {
        if tags.len() != self.segments {
            return Err(TaggerError::Domain(format!(
                "path length {} does not match segment count {}",
                tags.len(),
                self.segments
            )));
        }
        for &t in tags {
            if t >= self.num_tags {
                return Err(TaggerError::Domain(format!("tag index {t} out of range")));
            }
        }
        let mut cost = self.initial[tags[0]];
        for t in 1..tags.len() {
            cost += self.distance(t, tags[t - 1], tags[t]);
        }
        Ok(cost)
    }

    /// Emit `segment<TAB>from_tag<TAB>to_tag<TAB>distance` lines, `inf` for
    /// the infinite sentinel. Initial edges use segment 0 and `Ø`.
    pub fn dump<W: Write>(&self, mut sink: W) -> Result<()> {
        let fmt = |d: f64| {
            if d.is_finite() {
                format!("{d}")
            } else {
                "inf".to_string()
            }
        };
        for (to, &d) in self.initial.iter().enumerate() {
            writeln!(sink, "0\tØ\t{}\t{}", self.tag_names[to], fmt(d))?;
        }
        for segment in 1..self.segments {
            for from in 0..self.num_tags {
                for to in 0..self.num_tags {
                    writeln!(
                        sink,
                        "{}\t{}\t{}\t{}",
                        segment,
                        self.tag_names[from],
                        self.tag_names[to],
                        fmt(self.distance(segment, from, to))
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn eta_of(distance: f64) -> f64 {
    if distance.is_finite() {
        1.0 / distance
    } else {
        0.0
    }
}

/// Build the trellis for `sentence` under `model`, computing every edge
/// distance and its heuristic value 1/D.
pub fn build_trellis(model: &HmmModel, sentence: &Sentence, oov: OovMode) -> Result<Trellis> {
    if sentence.is_empty() {
        return Err(TaggerError::Domain(
            "cannot build a trellis for an empty sentence".into(),
        ));
    }
    let b = model.num_tags();
    let n = sentence.len();
    let surfaces: Vec<&str> = sentence.surfaces().collect();

    let mut initial = Vec::with_capacity(b);
    for to in 0..b {
        let em = model.emission_by_index(surfaces[0], to, oov);
        initial.push(edge_distance(em, model.pi(to))?);
    }
    let initial_etas = initial.iter().copied().map(eta_of).collect();

    let mut edges = Vec::with_capacity((n - 1) * b * b);
    for surface in &surfaces[1..] {
        let emissions: Vec<f64> = (0..b)
            .map(|to| model.emission_by_index(surface, to, oov))
            .collect();
        for from in 0..b {
            for (to, &em) in emissions.iter().enumerate() {
                edges.push(edge_distance(em, model.transition(from, to))?);
            }
        }
    }
    let etas = edges.iter().copied().map(eta_of).collect();

    Ok(Trellis {
        num_tags: b,
        segments: n,
        tag_names: model.tags().to_vec(),
        initial,
        initial_etas,
        edges,
        etas,
    })
}
