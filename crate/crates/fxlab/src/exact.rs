//! Ground-truth fixation probabilities on small graphs.
//!
//! Every mutant configuration is a state of an absorbing Markov chain; the
//! fixation probabilities solve one linear equation per configuration. That
//! is `2^n` unknowns and a dense direct solve, so the size cap matters: the
//! cost grows as `O(8^n)` and the matrix as `O(4^n)`. The default cap of 12
//! (4096 unknowns) is the practical desk-scale limit.
//!
//! These solvers are the oracles that everything else in the crate is tested
//! against.

use thiserror::Error;

use crate::graph::{ActiveSet, Graph, NodeId};
use crate::linalg;

/// Default node-count cap for the exact solvers.
pub const DEFAULT_CAP_N: usize = 12;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("graph has {n} nodes, exact solve capped at {cap_n} (cost grows as 8^n)")]
    TooLarge { n: usize, cap_n: usize },
    #[error("mutant fitness advantage must be finite and >= 0, got {0}")]
    InvalidDelta(f64),
    #[error("strong-selection semantics are only defined on undirected graphs")]
    DirectedUnsupported,
    #[error("configuration-chain system is singular; this indicates a bug, not bad input")]
    SolverSingular,
}

/// Exact fixation probabilities: one entry per singleton start, plus their
/// average `fp(G^S, delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub per_start: Vec<f64>,
    pub average: f64,
}

impl ExactResult {
    fn from_per_start(per_start: Vec<f64>) -> Self {
        let average = per_start.iter().sum::<f64>() / per_start.len() as f64;
        ExactResult { per_start, average }
    }
}

/// Solves the full `2^n`-configuration chain for the positional Moran
/// process with advantage `delta` on active set `active`.
pub fn exact_fp(
    g: &Graph,
    active: &ActiveSet,
    delta: f64,
    cap_n: usize,
) -> Result<ExactResult, ExactError> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(ExactError::InvalidDelta(delta));
    }
    let n = check_size(g, cap_n)?;
    let smask = set_mask(active, n);
    let full: usize = (1 << n) - 1;
    let m = full - 1; // transient configurations, ∅ and V excluded
    let mut a = vec![0.0f64; m * m];
    let mut b = vec![0.0f64; m];

    for mask in 1..full {
        let row = mask - 1;
        a[row * m + row] = 1.0;
        let active_mutants = (mask & smask).count_ones();
        let total_fitness = n as f64 + delta * active_mutants as f64;
        for u in 0..n {
            let f_u = 1.0 + delta * (((mask & smask) >> u) & 1) as f64;
            let p_birth = f_u / total_fitness;
            let u_mutant = (mask >> u) & 1 == 1;
            for (v, w) in g.out_neighbors(u) {
                let q = p_birth * w;
                let v_mutant = (mask >> v) & 1 == 1;
                let next = if u_mutant == v_mutant {
                    mask
                } else if u_mutant {
                    mask | (1 << v)
                } else {
                    mask & !(1 << v)
                };
                if next == full {
                    b[row] += q;
                } else if next != 0 {
                    a[row * m + (next - 1)] -= q;
                }
            }
        }
    }

    linalg::solve_in_place(&mut a, &mut b, m).map_err(|_| ExactError::SolverSingular)?;
    let per_start = (0..n).map(|u| b[(1usize << u) - 1]).collect();
    Ok(ExactResult::from_per_start(per_start))
}

/// Exact `fp^inf(G^S)`: the neutral chain restricted to configurations
/// disjoint from `S`; any configuration touching `S` is fixation-absorbing
/// and `∅` is extinction-absorbing. With `S = ∅` this degenerates to plain
/// neutral absorption at `V`.
pub fn exact_fp_strong(
    g: &Graph,
    active: &ActiveSet,
    cap_n: usize,
) -> Result<ExactResult, ExactError> {
    if !g.is_undirected() {
        return Err(ExactError::DirectedUnsupported);
    }
    let n = check_size(g, cap_n)?;
    let smask = set_mask(active, n);
    let full: usize = (1 << n) - 1;
    let rmask = full & !smask;

    // Transient states: nonempty subsets of V \ S (minus V itself when S = ∅).
    let mut index = vec![usize::MAX; full + 1];
    let mut states: Vec<usize> = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for mask in 1..=rmask {
        if mask & !rmask == 0 && !(smask == 0 && mask == full) {
            index[mask] = states.len();
            states.push(mask);
        }
    }
    let m = states.len();
    let mut a = vec![0.0f64; m * m];
    let mut b = vec![0.0f64; m];

    for (row, &mask) in states.iter().enumerate() {
        a[row * m + row] = 1.0;
        for u in 0..n {
            let p_birth = 1.0 / n as f64; // neutral: uniform birth
            let u_mutant = (mask >> u) & 1 == 1;
            for (v, w) in g.out_neighbors(u) {
                let q = p_birth * w;
                let v_mutant = (mask >> v) & 1 == 1;
                let next = if u_mutant == v_mutant {
                    mask
                } else if u_mutant {
                    mask | (1 << v)
                } else {
                    mask & !(1 << v)
                };
                if next & smask != 0 || next == full {
                    b[row] += q; // a mutant reached S (or fixated outright)
                } else if next != 0 {
                    a[row * m + index[next]] -= q;
                }
            }
        }
    }

    linalg::solve_in_place(&mut a, &mut b, m).map_err(|_| ExactError::SolverSingular)?;
    let per_start = (0..n)
        .map(|u| {
            if (smask >> u) & 1 == 1 {
                1.0
            } else {
                b[index[1usize << u]]
            }
        })
        .collect();
    Ok(ExactResult::from_per_start(per_start))
}

/// Expected neutral-process occupation times `psi[i][j]`: total expected
/// number of steps with node `i` mutant and node `j` resident, starting from
/// a uniformly random single mutant. Computed from expected visit counts to
/// every transient configuration (the fundamental-matrix route), so it is
/// independent of the pairwise linear system in [`crate::weak`] and serves
/// as its oracle.
pub fn exact_occupation_psi(g: &Graph, cap_n: usize) -> Result<Vec<Vec<f64>>, ExactError> {
    let n = check_size(g, cap_n)?;
    let full: usize = (1 << n) - 1;
    let m = full - 1;
    // Expected visits v solve (I - P^T) v = mu with mu the start distribution.
    let mut a = vec![0.0f64; m * m];
    let mut b = vec![0.0f64; m];
    for mask in 1..full {
        let col = mask - 1;
        a[col * m + col] += 1.0;
        if mask.count_ones() == 1 {
            b[col] = 1.0 / n as f64;
        }
        for u in 0..n {
            let p_birth = 1.0 / n as f64;
            let u_mutant = (mask >> u) & 1 == 1;
            for (v, w) in g.out_neighbors(u) {
                let q = p_birth * w;
                let v_mutant = (mask >> v) & 1 == 1;
                let next = if u_mutant == v_mutant {
                    mask
                } else if u_mutant {
                    mask | (1 << v)
                } else {
                    mask & !(1 << v)
                };
                if next != full && next != 0 {
                    a[(next - 1) * m + col] -= q;
                }
            }
        }
    }
    linalg::solve_in_place(&mut a, &mut b, m).map_err(|_| ExactError::SolverSingular)?;

    let mut psi = vec![vec![0.0f64; n]; n];
    for mask in 1..full {
        let visits = b[mask - 1];
        for (i, row) in psi.iter_mut().enumerate() {
            if (mask >> i) & 1 == 1 {
                for (j, cell) in row.iter_mut().enumerate() {
                    if (mask >> j) & 1 == 0 {
                        *cell += visits;
                    }
                }
            }
        }
    }
    Ok(psi)
}

/// Forward-difference derivative of `fp(G^S, delta)` at `delta = 0`, using
/// the exact solver at `delta = h` and the analytic value `1/n` at zero
/// (negative `delta` is undefined, so a central difference is not an
/// option).
pub fn finite_diff_fp_derivative(
    g: &Graph,
    active: &ActiveSet,
    h: f64,
    cap_n: usize,
) -> Result<f64, ExactError> {
    assert!(h > 0.0);
    let n = g.node_count() as f64;
    let at_h = exact_fp(g, active, h, cap_n)?;
    Ok((at_h.average - 1.0 / n) / h)
}

fn check_size(g: &Graph, cap_n: usize) -> Result<usize, ExactError> {
    let n = g.node_count();
    if n > cap_n || n >= usize::BITS as usize - 1 {
        return Err(ExactError::TooLarge { n, cap_n });
    }
    Ok(n)
}

fn set_mask(active: &ActiveSet, n: usize) -> usize {
    let mut mask = 0usize;
    for u in active.iter() {
        assert!(u < n, "active node {u} out of range for n={n}");
        mask |= 1 << u;
    }
    mask
}

/// Convenience for tests and callers scoring singleton-start averages of
/// specific sets.
pub fn exact_fp_of_set(
    g: &Graph,
    members: impl IntoIterator<Item = NodeId>,
    delta: f64,
    cap_n: usize,
) -> Result<f64, ExactError> {
    Ok(exact_fp(g, &ActiveSet::new(members), delta, cap_n)?.average)
}
