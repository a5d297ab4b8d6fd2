//! Population-structure graphs.
//!
//! A graph is a strongly connected weighted digraph in which every node's
//! outgoing weights form a probability distribution (the replacement
//! distribution of the birth-death process). Undirected graphs are the
//! special case of a symmetric edge relation with uniform weights
//! `w(u, v) = 1/deg(u)`.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Dense node index in `[0, n)`. External string labels map bijectively to
/// indices in first-appearance order; see [`Graph::label`].
pub type NodeId = usize;

/// Row sums must match 1 to this tolerance after construction.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// Inputs whose row sums are off by at most this much are renormalized;
/// anything worse is rejected. Absorbs decimal-text rounding without hiding
/// real mistakes.
const ROW_RENORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node index {index} out of range for n={n}")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("self-loop on node `{node}`")]
    SelfLoop { node: String },
    #[error("duplicate edge `{u}` -> `{v}`")]
    DuplicateEdge { u: String, v: String },
    #[error("edge `{u}` -> `{v}` has non-positive weight {w}")]
    InvalidWeight { u: String, v: String, w: f64 },
    #[error("outgoing weights of node `{node}` sum to {sum}, expected 1")]
    RowNotStochastic { node: String, sum: f64 },
    #[error("graph is not strongly connected on the support of its weights")]
    NotStronglyConnected,
    #[error("undirected graphs take uniform weights; weighted input is not supported")]
    WeightedUndirected,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// How [`Graph::parse_edge_list`] interprets its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub directed: bool,
    /// Whether each line carries an explicit third `w` column. Only valid
    /// together with `directed`.
    pub weighted: bool,
}

/// A set of active nodes `S`: the locations where the mutant fitness
/// advantage is realized. Members are kept sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    members: Vec<NodeId>,
}

impl ActiveSet {
    pub fn new(members: impl IntoIterator<Item = NodeId>) -> Self {
        let mut members: Vec<NodeId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        ActiveSet { members }
    }

    pub fn empty() -> Self {
        ActiveSet::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.members.binary_search(&u).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.members
    }

    /// Membership mask over `[0, n)`. Panics if any member is out of range.
    pub(crate) fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &u in &self.members {
            assert!(u < n, "active node {u} out of range for n={n}");
            mask[u] = true;
        }
        mask
    }
}

impl FromIterator<NodeId> for ActiveSet {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        ActiveSet::new(iter)
    }
}

/// Immutable population structure. Safe to share across threads; all
/// mutation happens at construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    undirected: bool,
    labels: Vec<String>,
    index_of: HashMap<String, NodeId>,
    // Outgoing adjacency in CSR form, plus per-row cumulative weights for
    // O(log deg) neighbor sampling. The last cumulative entry of each row is
    // forced to exactly 1.0.
    out_off: Vec<usize>,
    out_to: Vec<NodeId>,
    out_w: Vec<f64>,
    out_cum: Vec<f64>,
    // Incoming adjacency (transpose), used for temperatures and the
    // weak-selection systems.
    in_off: Vec<usize>,
    in_from: Vec<NodeId>,
    in_w: Vec<f64>,
}

impl Graph {
    /// Builds a weighted digraph. Every node's outgoing weights must sum to 1
    /// (within [`ROW_TOLERANCE`] after an optional renormalization), the
    /// support must be strongly connected, and self-loops are rejected.
    pub fn directed(n: usize, weighted_edges: &[(NodeId, NodeId, f64)]) -> Result<Self, GraphError> {
        let labels = default_labels(n);
        Self::build(n, weighted_edges, false, labels)
    }

    /// Builds a simple undirected graph with uniform replacement weights
    /// `w(u, v) = 1/deg(u)`. The edge list must not contain duplicates or
    /// self-loops, and the graph must be connected.
    pub fn undirected(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let labels = default_labels(n);
        Self::undirected_labeled(n, edges, labels)
    }

    fn undirected_labeled(
        n: usize,
        edges: &[(NodeId, NodeId)],
        labels: Vec<String>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut seen: HashMap<(NodeId, NodeId), ()> = HashMap::new();
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            check_range(u, n)?;
            check_range(v, n)?;
            if u == v {
                return Err(GraphError::SelfLoop {
                    node: labels[u].clone(),
                });
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, ()).is_some() {
                return Err(GraphError::DuplicateEdge {
                    u: labels[u].clone(),
                    v: labels[v].clone(),
                });
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut arcs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            arcs.push((u, v, 1.0 / deg[u] as f64));
            arcs.push((v, u, 1.0 / deg[v] as f64));
        }
        Self::build(n, &arcs, true, labels)
    }

    fn build(
        n: usize,
        arcs: &[(NodeId, NodeId, f64)],
        undirected: bool,
        labels: Vec<String>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        for &(u, v, w) in arcs {
            check_range(u, n)?;
            check_range(v, n)?;
            if u == v {
                return Err(GraphError::SelfLoop {
                    node: labels[u].clone(),
                });
            }
            if w.is_nan() || w <= 0.0 || w > 1.0 + ROW_RENORM_TOLERANCE {
                return Err(GraphError::InvalidWeight {
                    u: labels[u].clone(),
                    v: labels[v].clone(),
                    w,
                });
            }
        }

        // CSR over sorted (u, v); duplicates surface as adjacent entries.
        let mut sorted: Vec<(NodeId, NodeId, f64)> = arcs.to_vec();
        sorted.sort_unstable_by_key(|&(u, v, _)| (u, v));
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(GraphError::DuplicateEdge {
                    u: labels[pair[0].0].clone(),
                    v: labels[pair[0].1].clone(),
                });
            }
        }

        let mut out_off = vec![0usize; n + 1];
        for &(u, _, _) in &sorted {
            out_off[u + 1] += 1;
        }
        for i in 0..n {
            out_off[i + 1] += out_off[i];
        }
        let mut out_to = Vec::with_capacity(sorted.len());
        let mut out_w = Vec::with_capacity(sorted.len());
        for &(_, v, w) in &sorted {
            out_to.push(v);
            out_w.push(w);
        }

        // Connectivity before row sums: a node with no outgoing support is a
        // reachability problem, not a weighting problem.
        if !strongly_connected(n, &out_off, &out_to) {
            return Err(GraphError::NotStronglyConnected);
        }

        // Per-row stochasticity, with renormalization of near-misses.
        for u in 0..n {
            let row = out_off[u]..out_off[u + 1];
            let sum: f64 = out_w[row.clone()].iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                if (sum - 1.0).abs() <= ROW_RENORM_TOLERANCE {
                    for w in &mut out_w[row.clone()] {
                        *w /= sum;
                    }
                } else {
                    return Err(GraphError::RowNotStochastic {
                        node: labels[u].clone(),
                        sum,
                    });
                }
            }
            let sum: f64 = out_w[row].iter().sum();
            debug_assert!((sum - 1.0).abs() <= ROW_TOLERANCE);
        }

        let mut out_cum = Vec::with_capacity(out_w.len());
        for u in 0..n {
            let mut acc = 0.0;
            let row = out_off[u]..out_off[u + 1];
            let last = row.end;
            for i in row {
                acc += out_w[i];
                out_cum.push(if i + 1 == last { 1.0 } else { acc });
            }
        }

        // Transpose.
        let mut in_off = vec![0usize; n + 1];
        for &v in &out_to {
            in_off[v + 1] += 1;
        }
        for i in 0..n {
            in_off[i + 1] += in_off[i];
        }
        let mut cursor = in_off.clone();
        let mut in_from = vec![0usize; out_to.len()];
        let mut in_w = vec![0f64; out_to.len()];
        for u in 0..n {
            for i in out_off[u]..out_off[u + 1] {
                let v = out_to[i];
                in_from[cursor[v]] = u;
                in_w[cursor[v]] = out_w[i];
                cursor[v] += 1;
            }
        }

        let index_of = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Graph {
            n,
            undirected,
            labels,
            index_of,
            out_off,
            out_to,
            out_w,
            out_cum,
            in_off,
            in_from,
            in_w,
        })
    }

    /// Parses an edge list: one `<u> <v> [<w>]` per line, `#` starts a
    /// comment, blank lines are ignored. Labels are arbitrary
    /// whitespace-free tokens, mapped to dense indices in first-appearance
    /// order. Unweighted directed input gets uniform weights by out-degree.
    pub fn parse_edge_list(text: &str, options: ParseOptions) -> Result<Self, GraphError> {
        if !options.directed && options.weighted {
            return Err(GraphError::WeightedUndirected);
        }
        let mut labels: Vec<String> = Vec::new();
        let mut index_of: HashMap<String, NodeId> = HashMap::new();
        let mut intern = |tok: &str, labels: &mut Vec<String>| -> NodeId {
            match index_of.get(tok) {
                Some(&i) => i,
                None => {
                    let i = labels.len();
                    labels.push(tok.to_string());
                    index_of.insert(tok.to_string(), i);
                    i
                }
            }
        };

        let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let expected = if options.weighted { 3 } else { 2 };
            if tokens.len() != expected {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} fields, found {}", expected, tokens.len()),
                });
            }
            let u = intern(tokens[0], &mut labels);
            let v = intern(tokens[1], &mut labels);
            let w = if options.weighted {
                tokens[2].parse::<f64>().map_err(|e| GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("bad weight `{}`: {}", tokens[2], e),
                })?
            } else {
                f64::NAN // filled in below for directed-unweighted
            };
            if u == v {
                return Err(GraphError::SelfLoop {
                    node: labels[u].clone(),
                });
            }
            edges.push((u, v, w));
        }
        let n = labels.len();
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }

        if options.directed {
            if !options.weighted {
                let mut outdeg = vec![0usize; n];
                for &(u, _, _) in &edges {
                    outdeg[u] += 1;
                }
                for e in &mut edges {
                    e.2 = 1.0 / outdeg[e.0] as f64;
                }
            }
            Self::build(n, &edges, false, labels)
        } else {
            let pairs: Vec<(NodeId, NodeId)> = edges.iter().map(|&(u, v, _)| (u, v)).collect();
            Self::undirected_labeled(n, &pairs, labels)
        }
    }

    /// Canonical serialization: edges sorted by `(u, v)` index, original
    /// labels echoed. Undirected graphs emit each edge once (`u < v`) with no
    /// weight column; directed graphs emit every arc with its weight.
    /// `parse_edge_list` of the output (with matching options) reproduces the
    /// graph exactly.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for u in 0..self.n {
            for i in self.out_off[u]..self.out_off[u + 1] {
                let v = self.out_to[i];
                if self.undirected {
                    if u < v {
                        let _ = writeln!(out, "{} {}", self.labels[u], self.labels[v]);
                    }
                } else {
                    let _ = writeln!(out, "{} {} {}", self.labels[u], self.labels[v], self.out_w[i]);
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.index_of.get(label).copied()
    }

    /// Out-degree of the support (equals the degree for undirected graphs).
    pub fn degree(&self, u: NodeId) -> usize {
        self.out_off[u + 1] - self.out_off[u]
    }

    pub fn out_neighbors(&self, u: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let row = self.out_off[u]..self.out_off[u + 1];
        row.map(move |i| (self.out_to[i], self.out_w[i]))
    }

    pub fn in_neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let row = self.in_off[v]..self.in_off[v + 1];
        row.map(move |i| (self.in_from[i], self.in_w[i]))
    }

    /// Temperature `T(u) = sum_v w(v, u)`: the total incoming replacement
    /// weight. Hot nodes are replaced often.
    pub fn temperature(&self, u: NodeId) -> f64 {
        let row = self.in_off[u]..self.in_off[u + 1];
        self.in_w[row].iter().sum()
    }

    /// Picks the out-neighbor of `u` hit by a uniform draw `x` in `[0, 1)`.
    pub(crate) fn sample_out_neighbor(&self, u: NodeId, x: f64) -> NodeId {
        let row = &self.out_cum[self.out_off[u]..self.out_off[u + 1]];
        let idx = row.partition_point(|&c| c <= x);
        self.out_to[self.out_off[u] + idx.min(row.len() - 1)]
    }

}

/// Strong connectivity of the support: every node reachable from node 0
/// along out-edges, and node 0 reachable from every node (checked on the
/// transpose).
fn strongly_connected(n: usize, off: &[usize], to: &[NodeId]) -> bool {
    let mut rev_off = vec![0usize; n + 1];
    for &v in to {
        rev_off[v + 1] += 1;
    }
    for i in 0..n {
        rev_off[i + 1] += rev_off[i];
    }
    let mut cursor = rev_off.clone();
    let mut rev_to = vec![0usize; to.len()];
    for u in 0..n {
        for i in off[u]..off[u + 1] {
            rev_to[cursor[to[i]]] = u;
            cursor[to[i]] += 1;
        }
    }
    reaches_all(n, off, to) && reaches_all(n, &rev_off, &rev_to)
}

fn reaches_all(n: usize, off: &[usize], to: &[NodeId]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &to[off[u]..off[u + 1]] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

fn check_range(u: NodeId, n: usize) -> Result<(), GraphError> {
    if u < n {
        Ok(())
    } else {
        Err(GraphError::NodeOutOfRange { index: u, n })
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Built-in graph generators. These replace dataset dependencies in tests
/// and give the CLI self-contained inputs.
pub mod gen {
    use super::{Graph, NodeId};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Cycle `0 - 1 - ... - (n-1) - 0`; requires `n >= 3`.
    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::undirected(n, &edges).expect("cycle is valid")
    }

    /// Complete graph on `n >= 2` nodes.
    pub fn complete(n: usize) -> Graph {
        assert!(n >= 2, "complete graph needs at least 2 nodes");
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Graph::undirected(n, &edges).expect("complete graph is valid")
    }

    /// Star with center 0 and `n - 1` leaves; requires `n >= 2`.
    pub fn star(n: usize) -> Graph {
        assert!(n >= 2, "star needs at least 2 nodes");
        let edges: Vec<_> = (1..n).map(|leaf| (0, leaf)).collect();
        Graph::undirected(n, &edges).expect("star is valid")
    }

    /// Path `0 - 1 - ... - (n-1)`; requires `n >= 2`.
    pub fn path(n: usize) -> Graph {
        assert!(n >= 2, "path needs at least 2 nodes");
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::undirected(n, &edges).expect("path is valid")
    }

    /// Connected undirected graph with `n` nodes and `m` edges: a uniform
    /// random spanning tree plus `m - (n-1)` distinct extra edges.
    pub fn random_connected(n: usize, m: usize, seed: u64) -> Graph {
        assert!(n >= 2);
        let max_m = n * (n - 1) / 2;
        assert!(
            (n - 1..=max_m).contains(&m),
            "m={m} out of range [{}, {max_m}] for n={n}",
            n - 1
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(m);
        let mut present = vec![false; n * n];
        // Random attachment tree: connects node i to a uniform earlier node.
        for i in 1..n {
            let j = rng.random_range(0..i);
            edges.push((j, i));
            present[j * n + i] = true;
            present[i * n + j] = true;
        }
        while edges.len() < m {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v && !present[u * n + v] {
                edges.push((u.min(v), u.max(v)));
                present[u * n + v] = true;
                present[v * n + u] = true;
            }
        }
        Graph::undirected(n, &edges).expect("spanning tree keeps it connected")
    }

    /// Strongly connected weighted digraph: a random Hamiltonian cycle plus
    /// extra random arcs, with random weights normalized per row.
    pub fn random_strongly_connected(n: usize, extra_arcs: usize, seed: u64) -> Graph {
        assert!(n >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<NodeId> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut present = vec![false; n * n];
        let mut arcs: Vec<(NodeId, NodeId)> = Vec::new();
        for i in 0..n {
            let u = order[i];
            let v = order[(i + 1) % n];
            arcs.push((u, v));
            present[u * n + v] = true;
        }
        let mut added = 0;
        let mut attempts = 0;
        while added < extra_arcs && attempts < 100 * (extra_arcs + 1) {
            attempts += 1;
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v && !present[u * n + v] {
                arcs.push((u, v));
                present[u * n + v] = true;
                added += 1;
            }
        }
        let mut weighted: Vec<(NodeId, NodeId, f64)> = Vec::with_capacity(arcs.len());
        let mut row_sum = vec![0.0f64; n];
        let raw: Vec<f64> = arcs
            .iter()
            .map(|&(u, _)| {
                let w = rng.random_range(0.2..1.0);
                row_sum[u] += w;
                w
            })
            .collect();
        for (&(u, v), &w) in arcs.iter().zip(raw.iter()) {
            weighted.push((u, v, w / row_sum[u]));
        }
        Graph::directed(n, &weighted).expect("hamiltonian cycle keeps it strong")
    }
}
