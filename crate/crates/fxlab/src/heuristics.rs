//! Activation-set selection heuristics.
//!
//! Seven ways to pick `k` nodes to activate, from the oblivious (uniform
//! random) through structural scores (degree, betweenness, temperature,
//! greedy edge coverage) to the process-aware ones: the weak-selection
//! ranking and a lazy (CELF-style) greedy maximizer over a pluggable
//! fixation-probability oracle.
//!
//! All ties break toward the lowest node index so selections are
//! reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{ActiveSet, Graph, NodeId};
use crate::weak::{self, WeakError};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("oracle failed: {0}")]
    Oracle(Box<dyn std::error::Error + Send + Sync + 'static>),
}

impl OptError {
    pub fn oracle(err: impl std::error::Error + Send + Sync + 'static) -> Self {
        OptError::Oracle(Box::new(err))
    }
}

/// The heuristic catalogue. String names are stable and used verbatim by
/// the CLI and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    Random,
    HighDegree,
    Centrality,
    Temperature,
    VertexCover,
    WeakSelector,
    LazyGreedy,
}

impl Heuristic {
    pub const ALL: [Heuristic; 7] = [
        Heuristic::Random,
        Heuristic::HighDegree,
        Heuristic::Centrality,
        Heuristic::Temperature,
        Heuristic::VertexCover,
        Heuristic::WeakSelector,
        Heuristic::LazyGreedy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Heuristic::Random => "random",
            Heuristic::HighDegree => "high-degree",
            Heuristic::Centrality => "centrality",
            Heuristic::Temperature => "temperature",
            Heuristic::VertexCover => "vertex-cover",
            Heuristic::WeakSelector => "weak-selector",
            Heuristic::LazyGreedy => "lazy-greedy",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| format!("unknown heuristic `{s}`"))
    }
}

impl serde::Serialize for Heuristic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for Heuristic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// A chosen activation set together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub heuristic: Heuristic,
    pub chosen: ActiveSet,
    pub k: usize,
    pub seed: Option<u64>,
    pub oracle_evals: Option<u64>,
}

impl Selection {
    fn new(heuristic: Heuristic, chosen: ActiveSet, k: usize) -> Self {
        Selection {
            heuristic,
            chosen,
            k,
            seed: None,
            oracle_evals: None,
        }
    }
}

/// Uniformly random `min(k, n)`-subset, deterministic given `seed`.
pub fn select_random(g: &Graph, k: usize, seed: u64) -> Selection {
    let n = g.node_count();
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<NodeId> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    let mut sel = Selection::new(Heuristic::Random, ActiveSet::new(pool), k);
    sel.seed = Some(seed);
    sel
}

/// Top-k nodes by out-degree of the support (the degree, for undirected
/// graphs).
pub fn select_high_degree(g: &Graph, k: usize) -> Selection {
    let scores: Vec<f64> = (0..g.node_count()).map(|u| g.degree(u) as f64).collect();
    Selection::new(Heuristic::HighDegree, top_k(&scores, k), k.min(g.node_count()))
}

/// Top-k nodes by shortest-path betweenness on the unweighted support graph
/// (directed shortest paths on directed graphs), via Brandes' pair-dependency
/// accumulation.
pub fn select_centrality(g: &Graph, k: usize) -> Selection {
    let scores = betweenness(g);
    Selection::new(Heuristic::Centrality, top_k(&scores, k), k.min(g.node_count()))
}

/// Top-k nodes by temperature `T(u) = sum_v w(v, u)`.
pub fn select_temperature(g: &Graph, k: usize) -> Selection {
    let scores: Vec<f64> = (0..g.node_count()).map(|u| g.temperature(u)).collect();
    Selection::new(Heuristic::Temperature, top_k(&scores, k), k.min(g.node_count()))
}

/// Greedy edge coverage: `k` steps, each adding the node covering the most
/// not-yet-covered edges (undirected edges, or arcs on directed graphs).
pub fn select_vertex_cover(g: &Graph, k: usize) -> Selection {
    let n = g.node_count();
    let k = k.min(n);
    // Edge list with incidence per node; undirected graphs count each edge once.
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..n {
        for (v, _) in g.out_neighbors(u) {
            if !g.is_undirected() || u < v {
                edges.push((u, v));
            }
        }
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        incident[u].push(e);
        incident[v].push(e);
    }
    let mut covered = vec![false; edges.len()];
    let mut in_set = vec![false; n];
    let mut chosen: Vec<NodeId> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = usize::MAX;
        let mut best_gain = 0usize;
        for u in 0..n {
            if in_set[u] {
                continue;
            }
            let gain = incident[u].iter().filter(|&&e| !covered[e]).count();
            if best == usize::MAX || gain > best_gain {
                best = u;
                best_gain = gain;
            }
        }
        in_set[best] = true;
        chosen.push(best);
        for &e in &incident[best] {
            covered[e] = true;
        }
    }
    Selection::new(Heuristic::VertexCover, ActiveSet::new(chosen), k)
}

/// The weak-selection heuristic: a thin wrapper over
/// [`weak::weak_select`], so the heuristic and the FM0 solver cannot drift
/// apart.
pub fn select_weak(g: &Graph, k: usize) -> Result<Selection, WeakError> {
    let sel = weak::weak_select(g, k)?;
    Ok(Selection::new(
        Heuristic::WeakSelector,
        sel.chosen,
        k.min(g.node_count()),
    ))
}

/// Lazy (CELF) greedy maximization of a set function given by `oracle`,
/// which returns `(value, stderr)` for a candidate set.
///
/// Marginal-gain upper bounds live in a max-ordered queue; the top candidate
/// is re-evaluated against the current set and accepted once its fresh gain
/// is at least the runner-up's bound minus `epsilon`. With an exact
/// submodular oracle (the strong-selection fixation probability on
/// undirected graphs) and `epsilon = 0` this is the plain greedy algorithm
/// and inherits its `1 - 1/e` guarantee; with a Monte-Carlo oracle, set
/// `epsilon` to about twice the oracle's standard error.
pub fn lazy_greedy<F>(
    g: &Graph,
    k: usize,
    mut oracle: F,
    epsilon: f64,
) -> Result<Selection, OptError>
where
    F: FnMut(&ActiveSet) -> Result<(f64, f64), OptError>,
{
    let n = g.node_count();
    let k = k.min(n);
    let mut evals: u64 = 0;
    let mut chosen: Vec<NodeId> = Vec::with_capacity(k);
    if k > 0 {
        let (mut current, _) = oracle(&ActiveSet::empty())?;
        evals += 1;

        let mut queue: BinaryHeap<Candidate> = BinaryHeap::with_capacity(n);
        for node in 0..n {
            let (value, _) = oracle(&ActiveSet::new([node]))?;
            evals += 1;
            queue.push(Candidate {
                bound: value - current,
                node,
                evaluated_at: 0,
            });
        }

        while chosen.len() < k {
            let top = queue.pop().expect("queue holds all unchosen nodes");
            if top.evaluated_at == chosen.len() {
                // Bound is the true marginal gain for the current set.
                chosen.push(top.node);
                current += top.bound;
                continue;
            }
            let mut candidate_set = chosen.clone();
            candidate_set.push(top.node);
            let (value, _) = oracle(&ActiveSet::new(candidate_set))?;
            evals += 1;
            let gain = value - current;
            let runner_up = queue.peek().map_or(f64::NEG_INFINITY, |c| c.bound);
            if gain >= runner_up - epsilon {
                chosen.push(top.node);
                current += gain;
            } else {
                queue.push(Candidate {
                    bound: gain,
                    node: top.node,
                    evaluated_at: chosen.len(),
                });
            }
        }
    }
    let mut sel = Selection::new(Heuristic::LazyGreedy, ActiveSet::new(chosen), k);
    sel.oracle_evals = Some(evals);
    Ok(sel)
}

struct Candidate {
    bound: f64,
    node: NodeId,
    evaluated_at: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max by bound; lower node index wins ties.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Top-k by score, ties toward the lowest index.
fn top_k(scores: &[f64], k: usize) -> ActiveSet {
    let mut order: Vec<NodeId> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| a.cmp(&b)));
    order.truncate(k.min(scores.len()));
    ActiveSet::new(order)
}

/// Brandes' betweenness centrality on the unweighted support.
fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut centrality = vec![0.0f64; n];
    let mut order: Vec<NodeId> = Vec::with_capacity(n);
    let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::new();

    for s in 0..n {
        order.clear();
        queue.clear();
        for u in 0..n {
            preds[u].clear();
            sigma[u] = 0.0;
            dist[u] = -1;
            delta[u] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for (w, _) in g.out_neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = order.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    centrality
}
