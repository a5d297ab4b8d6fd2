//! Positional Moran process toolkit.
//!
//! A single mutant invades a population of residents placed on the nodes of a
//! strongly connected weighted digraph. The mutant fitness advantage `delta`
//! is realized only on a chosen set of *active* nodes. This crate provides:
//!
//! - [`graph`]: population-structure graphs, edge-list ingestion, generators;
//! - [`sim`]: stepwise simulation and Monte-Carlo fixation-probability
//!   estimates, including the strong-selection (`delta -> inf`) shortcut;
//! - [`exact`]: ground-truth fixation probabilities on small graphs via the
//!   absorbing Markov chain over all `2^n` mutant configurations;
//! - [`weak`]: the weak-selection (`delta -> 0`) solver that ranks nodes by
//!   their exact marginal contribution to the fixation-probability derivative;
//! - [`heuristics`]: activation-set selection heuristics, including a lazy
//!   (CELF-style) greedy maximizer over a pluggable fixation oracle;
//! - [`experiment`]: a deterministic harness that compares heuristics across
//!   graphs and budgets and emits CSV/JSON reports.

pub mod exact;
pub mod experiment;
pub mod graph;
pub mod heuristics;
mod linalg;
pub mod sim;
pub mod weak;

pub use graph::{ActiveSet, Graph, GraphError, NodeId};
pub use sim::{Configuration, FpEstimate, Outcome, OutcomeKind, ProcessParams};
