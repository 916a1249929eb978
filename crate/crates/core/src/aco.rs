//! Ant-colony decoding over a trellis.
//!
//! A colony of `ants` walks the trellis for `generations` rounds. Each ant
//! chooses its next node by roulette over `c^alpha * eta^beta` (pheromone
//! times heuristic); pheromone starts at zero everywhere, evaporates by
//! `1 - rho` at every generation boundary, and each ant that completed a
//! finite tour of length `L` deposits `quantity / L` on every edge it used.
//! The best finite tour seen across all generations is the answer.
//!
//! Randomness discipline: every (generation, ant) pair reads an independent
//! ChaCha stream derived from the config seed, so ants may run in any order
//! or in parallel without changing results. Per-sentence seeds are derived
//! with [`derive_sentence_seed`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TaggerError};
use crate::trellis::Trellis;

/// Decoder parameters. The defaults are the tuned combination
/// (generations 3, ants 20, alpha 0.9, beta 0.9, rho 0.95, quantity 10).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub generations: usize,
    pub ants: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Evaporation rate in `[0,1]`; pheromone keeps a factor of `1 - rho`.
    pub rho: f64,
    /// Deposit numerator Q; an ant with tour length L deposits Q/L.
    pub quantity: f64,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            generations: 3,
            ants: 20,
            alpha: 0.9,
            beta: 0.9,
            rho: 0.95,
            quantity: 10.0,
            seed: 0,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.generations == 0 {
            return Err(TaggerError::Config("generations must be >= 1".into()));
        }
        if self.ants == 0 {
            return Err(TaggerError::Config("ants must be >= 1".into()));
        }
        for (value, name) in [(self.alpha, "alpha"), (self.beta, "beta")] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(TaggerError::Config(format!(
                    "{name} must be a nonnegative finite number, got {value}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(TaggerError::Config(format!(
                "rho must be in [0,1], got {}",
                self.rho
            )));
        }
        if !(self.quantity > 0.0 && self.quantity.is_finite()) {
            return Err(TaggerError::Config(format!(
                "quantity must be positive, got {}",
                self.quantity
            )));
        }
        Ok(())
    }
}

/// Per-edge pheromone accumulators mirroring the trellis layout,
/// including the initial edges. Updated only at generation boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    num_tags: usize,
    initial: Vec<f64>,
    edges: Vec<f64>,
}

impl PheromoneTable {
    /// All-zero table for `trellis` (no pheromone before the first
    /// generation).
    pub fn zeroed(trellis: &Trellis) -> Self {
        let b = trellis.num_tags();
        let n = trellis.num_segments();
        PheromoneTable {
            num_tags: b,
            initial: vec![0.0; b],
            edges: vec![0.0; (n - 1) * b * b],
        }
    }

    pub fn initial_values(&self) -> &[f64] {
        &self.initial
    }

    pub fn initial_value(&self, to: usize) -> f64 {
        self.initial[to]
    }

    pub fn edge_row(&self, segment: usize, from: usize) -> &[f64] {
        let start = ((segment - 1) * self.num_tags + from) * self.num_tags;
        &self.edges[start..start + self.num_tags]
    }

    pub fn edge_value(&self, segment: usize, from: usize, to: usize) -> f64 {
        self.edge_row(segment, from)[to]
    }

    /// Add `amount` to every edge along `tags` (the Δc primitive).
    pub fn deposit(&mut self, tags: &[usize], amount: f64) {
        self.initial[tags[0]] += amount;
        for t in 1..tags.len() {
            let idx = ((t - 1) * self.num_tags + tags[t - 1]) * self.num_tags + tags[t];
            self.edges[idx] += amount;
        }
    }
}

/// Outcome of decoding one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub tags: Vec<usize>,
    /// Path cost of `tags` on the trellis the decode ran over.
    pub cost: f64,
    /// True exactly when `cost` is finite.
    pub feasible: bool,
    pub generations_run: usize,
    /// Generation (0-based) where the best tour was first found; 0 when no
    /// ant ever completed a finite tour.
    pub best_generation: usize,
}

/// Roulette selection over candidate weights `c^alpha * eta^beta`.
///
/// Returns the smallest index whose cumulative normalized weight exceeds
/// `draw`. When all weights are zero but some heuristic is positive, the
/// weights fall back to `eta^beta` alone (the zero-pheromone cold start);
/// when every heuristic is zero too, candidates are uniform. `0^0` counts
/// as 1, so `alpha = 0` disables pheromone influence exactly and `beta = 0`
/// disables heuristic influence exactly.
pub fn select_next(
    pheromones: &[f64],
    heuristics: &[f64],
    alpha: f64,
    beta: f64,
    draw: f64,
) -> Result<usize> {
    if pheromones.is_empty() {
        return Err(TaggerError::Domain("empty candidate list".into()));
    }
    if pheromones.len() != heuristics.len() {
        return Err(TaggerError::Domain(format!(
            "candidate lists differ in length: {} vs {}",
            pheromones.len(),
            heuristics.len()
        )));
    }
    Ok(select_unchecked(pheromones, heuristics, alpha, beta, draw))
}

fn roulette(weight_of: impl Fn(usize) -> f64, len: usize, draw: f64) -> usize {
    let mut total = 0.0;
    for k in 0..len {
        total += weight_of(k);
    }
    let mut acc = 0.0;
    let mut last_positive = 0usize;
    for k in 0..len {
        let w = weight_of(k);
        if w > 0.0 {
            acc += w / total;
            last_positive = k;
            if acc > draw {
                return k;
            }
        }
    }
    last_positive
}

fn select_unchecked(c: &[f64], eta: &[f64], alpha: f64, beta: f64, draw: f64) -> usize {
    let len = c.len();
    let weight = |k: usize| c[k].powf(alpha) * eta[k].powf(beta);
    let total: f64 = (0..len).map(weight).sum();
    if total > 0.0 {
        return roulette(weight, len, draw);
    }
    if eta.iter().any(|&e| e > 0.0) {
        return roulette(|k| eta[k].powf(beta), len, draw);
    }
    roulette(|_| 1.0, len, draw)
}

/// Walk one ant from the virtual start node to the last segment, selecting
/// each step with [`select_next`] over the current node's outgoing edges.
/// Returns the traversed tag sequence and its path cost.
pub fn run_ant<R: Rng>(
    trellis: &Trellis,
    pheromones: &PheromoneTable,
    config: &DecoderConfig,
    rng: &mut R,
) -> (Vec<usize>, f64) {
    let n = trellis.num_segments();
    let mut tags = Vec::with_capacity(n);

    let draw: f64 = rng.random();
    let first = select_unchecked(
        pheromones.initial_values(),
        trellis.initial_etas(),
        config.alpha,
        config.beta,
        draw,
    );
    let mut cost = trellis.initial_distance(first);
    tags.push(first);

    for segment in 1..n {
        let from = *tags.last().expect("tags is non-empty");
        let draw: f64 = rng.random();
        let to = select_unchecked(
            pheromones.edge_row(segment, from),
            trellis.eta_row(segment, from),
            config.alpha,
            config.beta,
            draw,
        );
        cost += trellis.distance(segment, from, to);
        tags.push(to);
    }
    (tags, cost)
}

/// Generation-boundary pheromone update: every edge first evaporates to
/// `(1 - rho) * c`, then each ant with a finite tour length `L` deposits
/// `quantity / L` along its path. Infinite tours deposit nothing.
pub fn update_pheromones(
    pheromones: &mut PheromoneTable,
    ant_results: &[(Vec<usize>, f64)],
    rho: f64,
    quantity: f64,
) {
    let keep = 1.0 - rho;
    for value in pheromones.initial.iter_mut() {
        *value *= keep;
    }
    for value in pheromones.edges.iter_mut() {
        *value *= keep;
    }
    for (tags, cost) in ant_results {
        if cost.is_finite() {
            pheromones.deposit(tags, quantity / cost);
        }
    }
}

fn ant_rng(seed: u64, generation: usize, ants: usize, ant: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation * ants + ant) as u64);
    rng
}

/// Per-segment greedy minimum-incoming-edge path, used when no ant ever
/// completed a finite tour.
fn greedy_min_edge_tags(trellis: &Trellis) -> Vec<usize> {
    let argmin = |row: &[f64]| {
        let mut best = f64::INFINITY;
        let mut best_i = 0usize;
        for (i, &v) in row.iter().enumerate() {
            if v < best {
                best = v;
                best_i = i;
            }
        }
        best_i
    };
    let n = trellis.num_segments();
    let mut tags = Vec::with_capacity(n);
    tags.push(argmin(trellis.initial_distances()));
    for segment in 1..n {
        let from = *tags.last().expect("non-empty");
        tags.push(argmin(trellis.distance_row(segment, from)));
    }
    tags
}

/// Run the full colony over `trellis` and return the best tour found.
///
/// Pheromone starts at zero; each generation runs `ants` ants and then one
/// synchronized pheromone update. The global best is the minimum finite
/// cost, ties resolved to the earliest generation and then to the
/// lexicographically smallest tag sequence within a generation.
pub fn aco_decode(trellis: &Trellis, config: &DecoderConfig) -> Result<DecodeResult> {
    config.validate()?;
    let mut pheromones = PheromoneTable::zeroed(trellis);
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    let mut results: Vec<(Vec<usize>, f64)> = Vec::with_capacity(config.ants);

    for generation in 0..config.generations {
        results.clear();
        for ant in 0..config.ants {
            let mut rng = ant_rng(config.seed, generation, config.ants, ant);
            results.push(run_ant(trellis, &pheromones, config, &mut rng));
        }
        let generation_best = results.iter().filter(|(_, cost)| cost.is_finite()).min_by(
            |(tags_a, cost_a), (tags_b, cost_b)| {
                cost_a
                    .partial_cmp(cost_b)
                    .expect("finite costs compare")
                    .then_with(|| tags_a.cmp(tags_b))
            },
        );
        if let Some((tags, cost)) = generation_best {
            let improves = match &best {
                Some((best_cost, _, _)) => cost < best_cost,
                None => true,
            };
            if improves {
                best = Some((*cost, tags.clone(), generation));
            }
        }
        update_pheromones(&mut pheromones, &results, config.rho, config.quantity);
    }

    Ok(match best {
        Some((cost, tags, generation)) => DecodeResult {
            tags,
            cost,
            feasible: true,
            generations_run: config.generations,
            best_generation: generation,
        },
        None => {
            let tags = greedy_min_edge_tags(trellis);
            let cost = trellis.path_cost(&tags)?;
            DecodeResult {
                feasible: cost.is_finite(),
                tags,
                cost,
                generations_run: config.generations,
                best_generation: 0,
            }
        }
    })
}

/// Run [`aco_decode`] twice with the same configuration and report whether
/// the results are identical. Always true: decoding is a pure function of
/// `(trellis, config)`.
pub fn decode_determinism_harness(trellis: &Trellis, config: &DecoderConfig) -> Result<bool> {
    let first = aco_decode(trellis, config)?;
    let second = aco_decode(trellis, config)?;
    Ok(first == second)
}

/// Independent decoder seed for the sentence at `index`, so sentences can
/// be decoded in parallel in any order.
pub fn derive_sentence_seed(master: u64, index: usize) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(master ^ splitmix64(index as u64 + 1))
}
