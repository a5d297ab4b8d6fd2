//! Weak-selection (`delta -> 0`) solver.
//!
//! Near `delta = 0` the fixation probability expands as
//! `fp(G^S, delta) = 1/n + delta * fp'(G^S, 0) + O(delta^2)`, and the
//! derivative decomposes linearly over the active set:
//! `fp'(G^S, 0) = sum_{i in S} alpha(i)` with
//! `alpha(i) = (1/n) * sum_j p_ij * pi_j * psi_ij`.
//!
//! Here `pi_i` is the neutral fixation probability from a single mutant on
//! node `i` (the solution of the balance system below) and `psi_ij` is the
//! expected total number of neutral-process steps with `i` mutant and `j`
//! resident, from a uniform singleton start. Maximizing the derivative under
//! a budget is therefore just a top-k ranking by `alpha`.
//!
//! Both linear systems are solved by dense elimination with deterministic
//! pivoting. The pairwise `psi` system has `n(n-1)` unknowns, so the solve
//! costs `O(n^6)`; fine at desk scale (roughly a minute around n = 60), far
//! from the `O(n^{2w})` that fast matrix multiplication would give.

use thiserror::Error;

use crate::graph::{ActiveSet, Graph, NodeId};
use crate::linalg;

#[derive(Debug, Error)]
pub enum WeakError {
    #[error("linear system is singular; this indicates a bug, not bad input")]
    SolverSingular,
    #[error("the closed form for pi requires an undirected graph")]
    DirectedUnsupported,
}

/// Neutral per-node fixation probabilities, normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PiVector {
    values: Vec<f64>,
}

impl PiVector {
    pub fn get(&self, u: NodeId) -> f64 {
        self.values[u]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Pairwise occupation times `psi_ij`, diagonal pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    n: usize,
    values: Vec<f64>, // row-major n x n
}

impl PsiTable {
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

/// Per-node marginal contributions to `fp'(G^S, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScores {
    values: Vec<f64>,
}

impl AlphaScores {
    pub fn get(&self, u: NodeId) -> f64 {
        self.values[u]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `fp'(G^S, 0)` for the given set, by linearity. Summed in ascending
    /// node order so equal sets always produce identical floats.
    pub fn objective(&self, set: &ActiveSet) -> f64 {
        set.iter().map(|u| self.values[u]).sum()
    }
}

/// An optimal budget-k activation for the weak-selection regime.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSelection {
    pub chosen: ActiveSet,
    pub objective: f64,
}

/// Solves the balance system
/// `pi_i = (1 - sum_j p_ji) pi_i + sum_j p_ij pi_j` with `sum_i pi_i = 1`.
/// The last balance row is the redundant one and is replaced by the
/// normalization.
pub fn solve_pi(g: &Graph) -> Result<PiVector, WeakError> {
    let n = g.node_count();
    let mut a = vec![0.0f64; n * n];
    let mut b = vec![0.0f64; n];
    for i in 0..n {
        a[i * n + i] = g.temperature(i);
        for (j, w) in g.out_neighbors(i) {
            a[i * n + j] -= w;
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    b[n - 1] = 1.0;
    linalg::solve_in_place(&mut a, &mut b, n).map_err(|_| WeakError::SolverSingular)?;
    Ok(PiVector { values: b })
}

/// Closed form for undirected graphs:
/// `pi_i = (1/deg(i)) / sum_j (1/deg(j))`.
pub fn pi_closed_form_undirected(g: &Graph) -> Result<PiVector, WeakError> {
    if !g.is_undirected() {
        return Err(WeakError::DirectedUnsupported);
    }
    let n = g.node_count();
    let inv: Vec<f64> = (0..n).map(|u| 1.0 / g.degree(u) as f64).collect();
    let total: f64 = inv.iter().sum();
    Ok(PiVector {
        values: inv.into_iter().map(|x| x / total).collect(),
    })
}

/// Solves the pairwise occupation system
/// `psi_ij = (1 + sum_l (p_li psi_lj + p_lj psi_il)) / (sum_l (p_li + p_lj))`
/// over the `n(n-1)` off-diagonal unknowns; the diagonal is pinned to zero
/// and excluded.
pub fn solve_psi(g: &Graph) -> Result<PsiTable, WeakError> {
    let n = g.node_count();
    let m = n * (n - 1);
    // Row-major over ordered pairs (i, j), i != j.
    let idx = |i: usize, j: usize| i * (n - 1) + j - usize::from(j > i);
    let mut a = vec![0.0f64; m * m];
    let mut b = vec![1.0f64; m];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = idx(i, j);
            a[r * m + r] += g.temperature(i) + g.temperature(j);
            for (l, w) in g.in_neighbors(i) {
                if l != j {
                    a[r * m + idx(l, j)] -= w;
                }
            }
            for (l, w) in g.in_neighbors(j) {
                if l != i {
                    a[r * m + idx(i, l)] -= w;
                }
            }
        }
    }
    linalg::solve_in_place(&mut a, &mut b, m).map_err(|_| WeakError::SolverSingular)?;
    let mut values = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = b[idx(i, j)];
            }
        }
    }
    Ok(PsiTable { n, values })
}

/// `alpha(i) = (1/n) * sum_j p_ij * pi_j * psi_ij`, combining [`solve_pi`]
/// and [`solve_psi`].
pub fn alpha_scores(g: &Graph) -> Result<AlphaScores, WeakError> {
    let n = g.node_count();
    let pi = solve_pi(g)?;
    let psi = solve_psi(g)?;
    let values = (0..n)
        .map(|i| {
            g.out_neighbors(i)
                .map(|(j, w)| w * pi.get(j) * psi.get(i, j))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    Ok(AlphaScores { values })
}

/// Exact solution of the budget-k weak-selection problem: the top
/// `min(k, n)` nodes by `alpha`, ties broken by smaller index.
pub fn weak_select(g: &Graph, k: usize) -> Result<WeakSelection, WeakError> {
    Ok(weak_select_from_alpha(&alpha_scores(g)?, k))
}

/// Ranking step of [`weak_select`], reusable when `alpha` is cached.
pub fn weak_select_from_alpha(alpha: &AlphaScores, k: usize) -> WeakSelection {
    let n = alpha.as_slice().len();
    let mut order: Vec<NodeId> = (0..n).collect();
    order.sort_by(|&a, &b| {
        alpha
            .get(b)
            .total_cmp(&alpha.get(a))
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k.min(n));
    let chosen = ActiveSet::new(order);
    let objective = alpha.objective(&chosen);
    WeakSelection { chosen, objective }
}
