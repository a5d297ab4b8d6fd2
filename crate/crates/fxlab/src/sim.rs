//! The positional Moran process: stepwise dynamics and Monte-Carlo
//! fixation-probability estimates.
//!
//! Each step selects a birth node `u` with probability proportional to its
//! fitness (`1 + delta` iff `u` is a mutant on an active node, else `1`) and
//! a death neighbor `v` with probability `w(u, v)`; `v` takes `u`'s type.
//! The process absorbs at the all-mutant configuration (fixation) or the
//! empty one (extinction).
//!
//! Trials are driven by counter-based RNG streams derived from
//! `(seed, trial index)`, so estimates are reproducible regardless of how
//! trials are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{ActiveSet, Graph, NodeId};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(
        "mutant fitness advantage must be finite and >= 0, got {0}; \
         the delta -> infinity regime has its own strong-selection entry points"
    )]
    InvalidDelta(f64),
    #[error("the default step cap is only justified on undirected graphs; pass an explicit cap")]
    DirectedNeedsCap,
    #[error("strong-selection dynamics are only defined on undirected graphs")]
    DirectedUnsupported,
    #[error("{timeouts} of {trials} trials hit the step cap (tolerated: 0.1%)")]
    ExcessiveTimeouts { timeouts: u64, trials: u64 },
}

/// The set of nodes currently occupied by mutants, as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Configuration {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut cfg = Configuration::empty(n);
        for u in 0..n {
            cfg.insert(u);
        }
        cfg
    }

    pub fn single(n: usize, u: NodeId) -> Self {
        let mut cfg = Configuration::empty(n);
        cfg.insert(u);
        cfg
    }

    pub fn from_members(n: usize, members: impl IntoIterator<Item = NodeId>) -> Self {
        let mut cfg = Configuration::empty(n);
        for u in members {
            cfg.insert(u);
        }
        cfg
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn contains(&self, u: NodeId) -> bool {
        assert!(u < self.n);
        self.words[u / 64] >> (u % 64) & 1 == 1
    }

    pub fn insert(&mut self, u: NodeId) {
        assert!(u < self.n);
        self.words[u / 64] |= 1 << (u % 64);
    }

    pub fn remove(&mut self, u: NodeId) {
        assert!(u < self.n);
        self.words[u / 64] &= !(1 << (u % 64));
    }

    /// Number of mutant-occupied nodes.
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).filter(|&u| self.contains(u))
    }
}

/// Process parameters: the active set `S` and the finite fitness advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessParams {
    active: ActiveSet,
    delta: f64,
}

impl ProcessParams {
    pub fn new(active: ActiveSet, delta: f64) -> Result<Self, SimError> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(SimError::InvalidDelta(delta));
        }
        Ok(ProcessParams { active, delta })
    }

    pub fn neutral(active: ActiveSet) -> Self {
        ProcessParams { active, delta: 0.0 }
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Fixation,
    Extinction,
    Timeout,
}

/// Result of a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub steps: u64,
}

/// A Monte-Carlo fixation-probability estimate. Timeouts count as
/// extinction in `mean` (never inflating the estimate) but are reported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpEstimate {
    pub mean: f64,
    pub trials: u64,
    pub fixations: u64,
    pub timeouts: u64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub mean_steps: f64,
}

impl FpEstimate {
    fn from_counts(trials: u64, fixations: u64, timeouts: u64, total_steps: u64) -> Self {
        let mean = fixations as f64 / trials as f64;
        let stderr = (mean * (1.0 - mean) / trials as f64).sqrt();
        FpEstimate {
            mean,
            trials,
            fixations,
            timeouts,
            stderr,
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            mean_steps: total_steps as f64 / trials as f64,
        }
    }
}

/// Fitness of the agent on `u`: `1 + delta` iff `u` hosts a mutant on an
/// active node, else `1`.
pub fn fitness(cfg: &Configuration, params: &ProcessParams, u: NodeId) -> f64 {
    if cfg.contains(u) && params.active().contains(u) {
        1.0 + params.delta()
    } else {
        1.0
    }
}

/// Total population fitness `F_S(X)`. Only active mutants contribute more
/// than 1, so this is `n + delta * |X ∩ S|`.
pub fn total_fitness(cfg: &Configuration, params: &ProcessParams, n: usize) -> f64 {
    let active_mutants = params.active().iter().filter(|&u| cfg.contains(u)).count();
    n as f64 + params.delta() * active_mutants as f64
}

/// One birth-death step. Absorbing configurations are returned unchanged
/// without consuming randomness.
pub fn step(
    g: &Graph,
    params: &ProcessParams,
    cfg: &Configuration,
    rng: &mut impl Rng,
) -> Configuration {
    assert_eq!(cfg.node_count(), g.node_count());
    if cfg.is_empty() || cfg.is_full() {
        return cfg.clone();
    }
    let mut engine = Engine::new(g, params.active(), params.delta(), cfg);
    engine.step(rng);
    engine.configuration()
}

/// Default step cap `20 * (1 + delta) * n^6`. The expected absorption time
/// on undirected graphs is at most `(1 + delta) * n^6`, so by Markov's
/// inequality a run exceeds this cap with probability at most 5%; observed
/// timeouts are counted as extinction and surfaced.
pub fn default_step_cap(n: usize, delta: f64) -> u64 {
    (20.0 * (1.0 + delta) * (n as f64).powi(6)).ceil() as u64
}

/// Trials needed for a two-sided Hoeffding bound of width `epsilon` at 95%
/// confidence: `ceil(ln(2 / 0.05) / (2 epsilon^2))`.
pub fn hoeffding_trials(epsilon: f64) -> u64 {
    assert!(epsilon > 0.0);
    ((2.0f64 / 0.05).ln() / (2.0 * epsilon * epsilon)).ceil() as u64
}

/// Counter-based per-trial stream: all trials share one ChaCha key derived
/// from `seed` and differ in the stream id, so aggregation order never
/// affects results.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs the process from `start` until absorption or `cap` steps.
pub fn simulate(
    g: &Graph,
    params: &ProcessParams,
    start: &Configuration,
    rng: &mut impl Rng,
    cap: u64,
) -> Outcome {
    assert!(cap >= 1);
    assert_eq!(start.node_count(), g.node_count());
    let mut engine = Engine::new(g, params.active(), params.delta(), start);
    for steps in 0..cap {
        match engine.absorbed() {
            Some(kind) => return Outcome { kind, steps },
            None => engine.step(rng),
        }
    }
    match engine.absorbed() {
        Some(kind) => Outcome { kind, steps: cap },
        None => Outcome {
            kind: OutcomeKind::Timeout,
            steps: cap,
        },
    }
}

/// Strong-selection trajectory: neutral dynamics until a mutant reaches an
/// active node (fixation) or the mutants die out. With `S = ∅` this is plain
/// neutral absorption. Undirected graphs only.
pub fn simulate_strong(
    g: &Graph,
    active: &ActiveSet,
    start: &Configuration,
    rng: &mut impl Rng,
) -> Result<Outcome, SimError> {
    if !g.is_undirected() {
        return Err(SimError::DirectedUnsupported);
    }
    let n = g.node_count();
    assert_eq!(start.node_count(), n);
    let cap = default_step_cap(n, 0.0);

    let active_mask = active.mask(n);
    let mut mutant = vec![false; n];
    let mut mutant_count = 0usize;
    let mut touching = 0usize;
    for u in start.iter() {
        mutant[u] = true;
        mutant_count += 1;
        if active_mask[u] {
            touching += 1;
        }
    }

    for steps in 0..=cap {
        if touching > 0 || mutant_count == n {
            return Ok(Outcome {
                kind: OutcomeKind::Fixation,
                steps,
            });
        }
        if mutant_count == 0 {
            return Ok(Outcome {
                kind: OutcomeKind::Extinction,
                steps,
            });
        }
        if steps == cap {
            break;
        }
        // Neutral step: uniform birth, weighted death.
        let u = rng.random_range(0..n);
        let v = g.sample_out_neighbor(u, rng.random::<f64>());
        if mutant[u] != mutant[v] {
            mutant[v] = mutant[u];
            if mutant[v] {
                mutant_count += 1;
                if active_mask[v] {
                    touching += 1;
                }
            } else {
                mutant_count -= 1;
                if active_mask[v] {
                    touching -= 1;
                }
            }
        }
    }
    Ok(Outcome {
        kind: OutcomeKind::Timeout,
        steps: cap,
    })
}

/// Estimates `fp(G^S, delta)` over `trials` runs, each starting from a
/// uniformly random single mutant. Uses the default step cap, which is only
/// justified on undirected graphs; use [`estimate_fp_with_cap`] for directed
/// graphs.
pub fn estimate_fp(
    g: &Graph,
    params: &ProcessParams,
    trials: u64,
    seed: u64,
) -> Result<FpEstimate, SimError> {
    if !g.is_undirected() {
        return Err(SimError::DirectedNeedsCap);
    }
    estimate_fp_with_cap(
        g,
        params,
        trials,
        seed,
        default_step_cap(g.node_count(), params.delta()),
    )
}

/// [`estimate_fp`] with an explicit step cap.
pub fn estimate_fp_with_cap(
    g: &Graph,
    params: &ProcessParams,
    trials: u64,
    seed: u64,
    cap: u64,
) -> Result<FpEstimate, SimError> {
    assert!(trials >= 1);
    let n = g.node_count();
    let run = |trial: u64| {
        let mut rng = trial_rng(seed, trial);
        let start = Configuration::single(n, rng.random_range(0..n));
        let outcome = simulate(g, params, &start, &mut rng, cap);
        tally(outcome)
    };
    let (fixations, timeouts, total_steps) = run_trials(trials, run);
    finish(trials, fixations, timeouts, total_steps)
}

/// Estimates `fp^inf(G^S)` (the `delta -> infinity` limit) via the
/// strong-selection shortcut, from uniformly random single-mutant starts.
pub fn estimate_fp_strong(
    g: &Graph,
    active: &ActiveSet,
    trials: u64,
    seed: u64,
) -> Result<FpEstimate, SimError> {
    if !g.is_undirected() {
        return Err(SimError::DirectedUnsupported);
    }
    assert!(trials >= 1);
    let n = g.node_count();
    let run = |trial: u64| {
        let mut rng = trial_rng(seed, trial);
        let start = Configuration::single(n, rng.random_range(0..n));
        let outcome = simulate_strong(g, active, &start, &mut rng).expect("checked undirected");
        tally(outcome)
    };
    let (fixations, timeouts, total_steps) = run_trials(trials, run);
    finish(trials, fixations, timeouts, total_steps)
}

fn tally(outcome: Outcome) -> (u64, u64, u64) {
    match outcome.kind {
        OutcomeKind::Fixation => (1, 0, outcome.steps),
        OutcomeKind::Extinction => (0, 0, outcome.steps),
        OutcomeKind::Timeout => (0, 1, outcome.steps),
    }
}

fn finish(
    trials: u64,
    fixations: u64,
    timeouts: u64,
    total_steps: u64,
) -> Result<FpEstimate, SimError> {
    if timeouts as f64 / trials as f64 > 1e-3 {
        return Err(SimError::ExcessiveTimeouts { timeouts, trials });
    }
    Ok(FpEstimate::from_counts(trials, fixations, timeouts, total_steps))
}

#[cfg(feature = "parallel")]
fn run_trials(trials: u64, run: impl Fn(u64) -> (u64, u64, u64) + Sync + Send) -> (u64, u64, u64) {
    (0..trials)
        .into_par_iter()
        .map(run)
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
}

#[cfg(not(feature = "parallel"))]
fn run_trials(trials: u64, run: impl Fn(u64) -> (u64, u64, u64) + Sync + Send) -> (u64, u64, u64) {
    (0..trials)
        .map(run)
        .fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
}

const NOT_IN_LIST: u32 = u32::MAX;

/// Trial-local simulation state.
///
/// Fitness takes exactly two values: `1 + delta` on active mutants and `1`
/// everywhere else. Birth sampling therefore reduces to a two-class draw:
/// pick the hot class with probability `|X ∩ S| (1 + delta) / F`, then a
/// uniform member, all in O(1). The class rosters are maintained with
/// swap-removal on type flips, and `F = n + delta * |X ∩ S|` is recomputed
/// from the count each step so it cannot drift over long runs.
struct Engine<'a> {
    g: &'a Graph,
    n: usize,
    delta: f64,
    active: Vec<bool>,
    mutant: Vec<bool>,
    mutant_count: usize,
    /// Active mutants (fitness `1 + delta`).
    hot: Vec<u32>,
    /// Everyone else (fitness 1).
    cold: Vec<u32>,
    /// Position of each node in its roster: `hot_pos` when hot, `cold_pos`
    /// when cold, `NOT_IN_LIST` in the other.
    hot_pos: Vec<u32>,
    cold_pos: Vec<u32>,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Graph, active: &ActiveSet, delta: f64, cfg: &Configuration) -> Self {
        let n = g.node_count();
        let active = active.mask(n);
        let mut mutant = vec![false; n];
        let mut mutant_count = 0;
        for u in cfg.iter() {
            mutant[u] = true;
            mutant_count += 1;
        }
        let mut hot = Vec::with_capacity(n);
        let mut cold = Vec::with_capacity(n);
        let mut hot_pos = vec![NOT_IN_LIST; n];
        let mut cold_pos = vec![NOT_IN_LIST; n];
        for u in 0..n {
            if mutant[u] && active[u] {
                hot_pos[u] = hot.len() as u32;
                hot.push(u as u32);
            } else {
                cold_pos[u] = cold.len() as u32;
                cold.push(u as u32);
            }
        }
        Engine {
            g,
            n,
            delta,
            active,
            mutant,
            mutant_count,
            hot,
            cold,
            hot_pos,
            cold_pos,
        }
    }

    fn absorbed(&self) -> Option<OutcomeKind> {
        if self.mutant_count == 0 {
            Some(OutcomeKind::Extinction)
        } else if self.mutant_count == self.n {
            Some(OutcomeKind::Fixation)
        } else {
            None
        }
    }

    fn step(&mut self, rng: &mut impl Rng) {
        // Birth: f(u)/F reduces to a class draw plus a uniform member. The
        // single uniform r covers both: r/(1+delta) is uniform over hot
        // positions, r - hot_mass uniform over cold positions.
        let hot_mass = (1.0 + self.delta) * self.hot.len() as f64;
        let total = self.cold.len() as f64 + hot_mass;
        let r = rng.random::<f64>() * total;
        let u = if (r < hot_mass && !self.hot.is_empty()) || self.cold.is_empty() {
            let i = ((r / (1.0 + self.delta)) as usize).min(self.hot.len() - 1);
            self.hot[i] as usize
        } else {
            let i = ((r - hot_mass).max(0.0) as usize).min(self.cold.len() - 1);
            self.cold[i] as usize
        };
        // Death: neighbor by replacement weight; v takes u's type.
        let v = self.g.sample_out_neighbor(u, rng.random::<f64>());
        let t = self.mutant[u];
        if t != self.mutant[v] {
            self.mutant[v] = t;
            if t {
                self.mutant_count += 1;
            } else {
                self.mutant_count -= 1;
            }
            if self.active[v] {
                if t {
                    self.cold_to_hot(v);
                } else {
                    self.hot_to_cold(v);
                }
            }
        }
    }

    fn cold_to_hot(&mut self, v: usize) {
        let pos = self.cold_pos[v] as usize;
        let moved = *self.cold.last().expect("v is in the cold roster");
        self.cold.swap_remove(pos);
        if pos < self.cold.len() {
            self.cold_pos[moved as usize] = pos as u32;
        }
        self.cold_pos[v] = NOT_IN_LIST;
        self.hot_pos[v] = self.hot.len() as u32;
        self.hot.push(v as u32);
    }

    fn hot_to_cold(&mut self, v: usize) {
        let pos = self.hot_pos[v] as usize;
        let moved = *self.hot.last().expect("v is in the hot roster");
        self.hot.swap_remove(pos);
        if pos < self.hot.len() {
            self.hot_pos[moved as usize] = pos as u32;
        }
        self.hot_pos[v] = NOT_IN_LIST;
        self.cold_pos[v] = self.cold.len() as u32;
        self.cold.push(v as u32);
    }

    fn configuration(&self) -> Configuration {
        Configuration::from_members(self.n, (0..self.n).filter(|&u| self.mutant[u]))
    }
}
