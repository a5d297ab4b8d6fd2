//! Browser bindings for the demo page in `www/`.
//!
//! Three interactive operations, all on generator graphs small enough for
//! the exact solvers:
//!
//! - fixation-probability curves over the fitness advantage, with the
//!   strong-selection limit and the weak-selection tangent;
//! - heuristic activation picks and per-node alpha scores;
//! - single stochastic trajectories for animation.
//!
//! Everything crosses the JS boundary as JSON strings, keeping the
//! interface independent of wasm-bindgen's richer type support. The `api`
//! module is plain Rust and unit-tested on the host; the `#[wasm_bindgen]`
//! wrappers only translate errors.

use wasm_bindgen::prelude::*;

pub mod api {
    use fxlab::exact;
    use fxlab::experiment;
    use fxlab::graph::{ActiveSet, Graph};
    use fxlab::heuristics::{self, Heuristic, OptError};
    use fxlab::sim::{self, Configuration, OutcomeKind, ProcessParams};
    use fxlab::weak;
    use rand::Rng;
    use serde_json::json;

    /// Exact solves on the page stay fast up to this size.
    const DEMO_CAP_N: usize = 12;
    const MAX_TRACE_STEPS: u64 = 200_000;

    fn load(spec: &str) -> Result<Graph, String> {
        let graph = experiment::parse_gen_spec(spec).map_err(|e| e.to_string())?;
        Ok(graph)
    }

    fn active_from_csv(graph: &Graph, csv: &str) -> Result<ActiveSet, String> {
        let mut members = Vec::new();
        for token in csv.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let node: usize = token.parse().map_err(|_| format!("bad node index `{token}`"))?;
            if node >= graph.node_count() {
                return Err(format!("node {node} out of range"));
            }
            members.push(node);
        }
        Ok(ActiveSet::new(members))
    }

    /// Graph structure for rendering: labels and an edge list (one entry per
    /// undirected edge or directed arc).
    pub fn graph_info(spec: &str) -> Result<String, String> {
        let graph = load(spec)?;
        let n = graph.node_count();
        let mut edges = Vec::new();
        for u in 0..n {
            for (v, _) in graph.out_neighbors(u) {
                if !graph.is_undirected() || u < v {
                    edges.push(json!([u, v]));
                }
            }
        }
        Ok(json!({
            "n": n,
            "undirected": graph.is_undirected(),
            "labels": (0..n).map(|u| graph.label(u)).collect::<Vec<_>>(),
            "edges": edges,
        })
        .to_string())
    }

    /// Exact fp(G^S, delta) for each delta, plus the strong-selection limit
    /// and the weak-selection slope at 0 for the same set.
    pub fn fixation_curve(spec: &str, active_csv: &str, deltas: &[f64]) -> Result<String, String> {
        let graph = load(spec)?;
        let active = active_from_csv(&graph, active_csv)?;
        if graph.node_count() > DEMO_CAP_N {
            return Err(format!("exact curves need n <= {DEMO_CAP_N}"));
        }
        let mut curve = Vec::with_capacity(deltas.len());
        for &delta in deltas {
            if !delta.is_finite() || delta < 0.0 {
                return Err(format!("bad delta {delta}"));
            }
            let r = exact::exact_fp(&graph, &active, delta, DEMO_CAP_N)
                .map_err(|e| e.to_string())?;
            curve.push(r.average);
        }
        let strong = exact::exact_fp_strong(&graph, &active, DEMO_CAP_N)
            .map(|r| r.average)
            .ok();
        let alpha = weak::alpha_scores(&graph).map_err(|e| e.to_string())?;
        Ok(json!({
            "deltas": deltas,
            "fp": curve,
            "strong_limit": strong,
            "weak_slope": alpha.objective(&active),
            "neutral": 1.0 / graph.node_count() as f64,
        })
        .to_string())
    }

    /// Per-node weak-selection scores (the exact marginal contributions to
    /// the fp derivative at delta = 0).
    pub fn alpha_scores(spec: &str) -> Result<String, String> {
        let graph = load(spec)?;
        let alpha = weak::alpha_scores(&graph).map_err(|e| e.to_string())?;
        Ok(json!(alpha.as_slice()).to_string())
    }

    /// Runs one activation heuristic; lazy-greedy uses the exact
    /// strong-selection oracle.
    pub fn select_nodes(spec: &str, heuristic: &str, k: usize, seed: u64) -> Result<String, String> {
        let graph = load(spec)?;
        let heuristic: Heuristic = heuristic.parse()?;
        let selection = match heuristic {
            Heuristic::Random => heuristics::select_random(&graph, k, seed),
            Heuristic::HighDegree => heuristics::select_high_degree(&graph, k),
            Heuristic::Centrality => heuristics::select_centrality(&graph, k),
            Heuristic::Temperature => heuristics::select_temperature(&graph, k),
            Heuristic::VertexCover => heuristics::select_vertex_cover(&graph, k),
            Heuristic::WeakSelector => {
                heuristics::select_weak(&graph, k).map_err(|e| e.to_string())?
            }
            Heuristic::LazyGreedy => {
                if graph.node_count() > DEMO_CAP_N {
                    return Err(format!("lazy-greedy demo needs n <= {DEMO_CAP_N}"));
                }
                if !graph.is_undirected() {
                    return Err("lazy-greedy demo needs an undirected graph".into());
                }
                let oracle = |s: &ActiveSet| {
                    exact::exact_fp_strong(&graph, s, DEMO_CAP_N)
                        .map(|r| (r.average, 0.0))
                        .map_err(OptError::oracle)
                };
                heuristics::lazy_greedy(&graph, k, oracle, 0.0).map_err(|e| e.to_string())?
            }
        };
        Ok(json!({
            "heuristic": selection.heuristic.name(),
            "chosen": selection.chosen.as_slice(),
            "oracle_evals": selection.oracle_evals,
        })
        .to_string())
    }

    /// One trajectory from a uniformly random single mutant: the start node
    /// and every type flip, ready to animate. Flips are `[step, node, kind]`
    /// with kind 1 for resident -> mutant.
    pub fn simulate_trace(
        spec: &str,
        active_csv: &str,
        delta: f64,
        seed: u64,
    ) -> Result<String, String> {
        let graph = load(spec)?;
        let active = active_from_csv(&graph, active_csv)?;
        if !delta.is_finite() || delta < 0.0 {
            return Err(format!("bad delta {delta}"));
        }
        let params = ProcessParams::new(active, delta).map_err(|e| e.to_string())?;
        let n = graph.node_count();
        let mut rng = sim::trial_rng(seed, 0);
        let start = rng.random_range(0..n);
        let mut cfg = Configuration::single(n, start);
        let mut flips = Vec::new();
        let mut steps: u64 = 0;
        let outcome = loop {
            if cfg.is_full() {
                break OutcomeKind::Fixation;
            }
            if cfg.is_empty() {
                break OutcomeKind::Extinction;
            }
            if steps == MAX_TRACE_STEPS {
                break OutcomeKind::Timeout;
            }
            let next = sim::step(&graph, &params, &cfg, &mut rng);
            steps += 1;
            for u in 0..n {
                if cfg.contains(u) != next.contains(u) {
                    flips.push(json!([steps, u, u8::from(next.contains(u))]));
                }
            }
            cfg = next;
        };
        Ok(json!({
            "start": start,
            "steps": steps,
            "outcome": match outcome {
                OutcomeKind::Fixation => "fixation",
                OutcomeKind::Extinction => "extinction",
                OutcomeKind::Timeout => "timeout",
            },
            "flips": flips,
        })
        .to_string())
    }
}

#[wasm_bindgen]
pub fn graph_info(spec: &str) -> Result<String, JsValue> {
    api::graph_info(spec).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fixation_curve(spec: &str, active_csv: &str, deltas: Vec<f64>) -> Result<String, JsValue> {
    api::fixation_curve(spec, active_csv, &deltas).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn alpha_scores(spec: &str) -> Result<String, JsValue> {
    api::alpha_scores(spec).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn select_nodes(spec: &str, heuristic: &str, k: usize, seed: u64) -> Result<String, JsValue> {
    api::select_nodes(spec, heuristic, k, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_trace(
    spec: &str,
    active_csv: &str,
    delta: f64,
    seed: u64,
) -> Result<String, JsValue> {
    api::simulate_trace(spec, active_csv, delta, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::api;

    #[test]
    fn graph_info_shape() {
        let info: serde_json::Value =
            serde_json::from_str(&api::graph_info("cycle(5)").unwrap()).unwrap();
        assert_eq!(info["n"], 5);
        assert_eq!(info["edges"].as_array().unwrap().len(), 5);
        assert_eq!(info["undirected"], true);
        assert!(api::graph_info("blob(3)").is_err());
    }

    #[test]
    fn curve_brackets_the_limits() {
        let out: serde_json::Value = serde_json::from_str(
            &api::fixation_curve("cycle(4)", "0,2", &[0.0, 1.0, 50.0]).unwrap(),
        )
        .unwrap();
        let fp = out["fp"].as_array().unwrap();
        assert!((fp[0].as_f64().unwrap() - 0.25).abs() < 1e-12);
        let strong = out["strong_limit"].as_f64().unwrap();
        assert!((strong - 0.75).abs() < 1e-12);
        // Monotone in delta, below the strong limit.
        assert!(fp[1].as_f64().unwrap() > fp[0].as_f64().unwrap());
        assert!(fp[2].as_f64().unwrap() > fp[1].as_f64().unwrap());
        assert!(fp[2].as_f64().unwrap() < strong);
        assert!(out["weak_slope"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn alpha_scores_star() {
        let alpha: Vec<f64> =
            serde_json::from_str(&api::alpha_scores("star(4)").unwrap()).unwrap();
        assert!((alpha[0] - 9.0 / 40.0).abs() < 1e-12);
        assert!((alpha[1] - 3.0 / 40.0).abs() < 1e-12);
    }

    #[test]
    fn select_nodes_c4_lazy_greedy() {
        let out: serde_json::Value =
            serde_json::from_str(&api::select_nodes("cycle(4)", "lazy-greedy", 2, 0).unwrap())
                .unwrap();
        let chosen: Vec<usize> =
            serde_json::from_value(out["chosen"].clone()).unwrap();
        assert_eq!(chosen.len(), 2);
        assert_eq!((chosen[0] + 2) % 4, chosen[1] % 4);
        assert!(api::select_nodes("cycle(4)", "bogus", 1, 0).is_err());
    }

    #[test]
    fn trace_reaches_absorption() {
        let out: serde_json::Value =
            serde_json::from_str(&api::simulate_trace("complete(4)", "0,1", 2.0, 9).unwrap())
                .unwrap();
        let outcome = out["outcome"].as_str().unwrap();
        assert!(outcome == "fixation" || outcome == "extinction");
        let flips = out["flips"].as_array().unwrap();
        match outcome {
            "fixation" => assert!(flips.len() >= 3),
            _ => assert!(!flips.is_empty() || out["steps"].as_u64().unwrap() >= 1),
        }
    }
}
