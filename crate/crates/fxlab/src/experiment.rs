//! Heuristic-comparison experiments.
//!
//! An experiment runs every configured heuristic on every (graph, budget)
//! pair, scores the chosen activation sets in the configured regime, and
//! normalizes scores within each (graph, budget) group by the group maximum.
//!
//! Determinism contract: identical configs produce byte-identical reports,
//! independent of thread count or scheduling. Selection seeds derive from
//! `(master seed, graph id, k, heuristic name)`; scoring seeds derive from
//! `(master seed, graph id, k, chosen set)`, so heuristics that pick the
//! same set always receive exactly the same score.

use std::collections::HashMap;
use std::collections::HashSet;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::graph::{gen, ActiveSet, Graph, GraphError, ParseOptions};
use crate::heuristics::{self, Heuristic, OptError, Selection};
use crate::sim::{self, SimError};
use crate::weak::{self, AlphaScores, WeakError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Exact(#[from] exact::ExactError),
    #[error(transparent)]
    Weak(#[from] WeakError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("graph `{graph_id}`, k={k}, {heuristic}: {source}")]
    RowFailed {
        graph_id: String,
        k: usize,
        heuristic: Heuristic,
        source: Box<ExperimentError>,
    },
}

/// One graph input: either a generator spec or an edge-list file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub weighted: bool,
    /// Report identifier; defaults to the generator spec or the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

/// Budgets, either as fractions of `n` (the defaults are 10%, 30%, 50%) or
/// as absolute sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetSpec {
    Fractions(Vec<f64>),
    Ks(Vec<usize>),
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec::Fractions(vec![0.1, 0.3, 0.5])
    }
}

/// Scoring regime for chosen sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `delta -> infinity`: strong-selection fixation probability, exact when
    /// `n <= exact_cap`, Monte-Carlo otherwise. Undirected graphs only.
    Strong,
    /// `delta -> 0`: the exact linear objective `sum_{u in S} alpha(u)`.
    Weak,
    /// Finite advantage: Monte-Carlo `fp(G^S, delta)`.
    Finite(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graphs: Vec<GraphSpec>,
    #[serde(default)]
    pub budgets: BudgetSpec,
    pub regime: Regime,
    /// Defaults to all heuristics; the weak regime drops `lazy-greedy`
    /// (it coincides with `weak-selector` there).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heuristics: Option<Vec<Heuristic>>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub seed: u64,
    /// Explicit simulation step cap; required for finite-regime scoring on
    /// directed graphs, where the polynomial absorption bound does not apply.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<u64>,
    /// Use the exact strong-selection solver for graphs up to this size.
    #[serde(default = "default_exact_cap")]
    pub exact_cap: usize,
}

fn default_trials() -> u64 {
    10_000
}

fn default_exact_cap() -> usize {
    exact::DEFAULT_CAP_N
}

/// One scored heuristic on one (graph, k) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub graph_id: String,
    pub n: usize,
    pub k: usize,
    pub heuristic: Heuristic,
    pub chosen: Vec<String>,
    pub raw: f64,
    pub stderr: f64,
    pub normalized: f64,
    pub seed: u64,
    pub trials: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

/// Parses a generator spec: `cycle(n)`, `complete(n)`, `star(n)`, `path(n)`
/// or `random-connected(n, m, seed)`.
pub fn parse_gen_spec(spec: &str) -> Result<Graph, ExperimentError> {
    let bad = |msg: &str| ExperimentError::Config(format!("generator `{spec}`: {msg}"));
    let open = spec.find('(').ok_or_else(|| bad("expected `name(args)`"))?;
    if !spec.ends_with(')') {
        return Err(bad("expected `name(args)`"));
    }
    let name = spec[..open].trim();
    let args: Vec<&str> = spec[open + 1..spec.len() - 1]
        .split(',')
        .map(str::trim)
        .collect();
    let arg = |i: usize| -> Result<usize, ExperimentError> {
        args.get(i)
            .ok_or_else(|| bad("missing argument"))?
            .parse::<usize>()
            .map_err(|e| bad(&format!("bad argument: {e}")))
    };
    let expect_args = |count: usize| -> Result<(), ExperimentError> {
        if args.len() == count {
            Ok(())
        } else {
            Err(bad(&format!("expected {count} argument(s), got {}", args.len())))
        }
    };
    match name {
        "cycle" => {
            expect_args(1)?;
            let n = arg(0)?;
            if n < 3 {
                return Err(bad("cycle needs n >= 3"));
            }
            Ok(gen::cycle(n))
        }
        "complete" => {
            expect_args(1)?;
            let n = arg(0)?;
            if n < 2 {
                return Err(bad("complete needs n >= 2"));
            }
            Ok(gen::complete(n))
        }
        "star" => {
            expect_args(1)?;
            let n = arg(0)?;
            if n < 2 {
                return Err(bad("star needs n >= 2"));
            }
            Ok(gen::star(n))
        }
        "path" => {
            expect_args(1)?;
            let n = arg(0)?;
            if n < 2 {
                return Err(bad("path needs n >= 2"));
            }
            Ok(gen::path(n))
        }
        "random-connected" => {
            expect_args(3)?;
            let (n, m, seed) = (arg(0)?, arg(1)?, arg(2)?);
            if n < 2 || m < n - 1 || m > n * (n - 1) / 2 {
                return Err(bad("need n >= 2 and n-1 <= m <= n(n-1)/2"));
            }
            Ok(gen::random_connected(n, m, seed as u64))
        }
        other => Err(bad(&format!("unknown generator `{other}`"))),
    }
}

/// Loads a [`GraphSpec`], returning the graph and its report id.
pub fn load_graph_spec(spec: &GraphSpec) -> Result<(Graph, String), ExperimentError> {
    match (&spec.gen, &spec.file) {
        (Some(gen_spec), None) => {
            let g = parse_gen_spec(gen_spec)?;
            Ok((g, spec.id.clone().unwrap_or_else(|| gen_spec.clone())))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let g = Graph::parse_edge_list(
                &text,
                ParseOptions {
                    directed: spec.directed,
                    weighted: spec.weighted,
                },
            )?;
            let id = spec.id.clone().unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.to_string_lossy().into_owned())
            });
            Ok((g, id))
        }
        _ => Err(ExperimentError::Config(
            "each graph needs exactly one of `gen` or `file`".into(),
        )),
    }
}

#[derive(Clone, Copy)]
struct Scored {
    raw: f64,
    stderr: f64,
    trials: u64,
}

/// Runs the full experiment. Rows come back sorted by
/// `(graph id, k, heuristic name)` and normalized within `(graph id, k)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    if cfg.graphs.is_empty() {
        return Err(ExperimentError::Config("no graphs configured".into()));
    }
    if cfg.trials == 0 {
        return Err(ExperimentError::Config("trials must be >= 1".into()));
    }
    if let Regime::Finite(delta) = cfg.regime {
        if !delta.is_finite() || delta < 0.0 {
            return Err(ExperimentError::Config(format!(
                "finite regime needs a finite delta >= 0, got {delta}"
            )));
        }
    }
    if let BudgetSpec::Fractions(fractions) = &cfg.budgets {
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(ExperimentError::Config(
                "budget fractions must lie in [0, 1]".into(),
            ));
        }
    }
    let heuristics = resolve_heuristics(cfg);

    let mut loaded: Vec<(Graph, String)> = Vec::new();
    let mut ids = HashSet::new();
    for spec in &cfg.graphs {
        let (graph, id) = load_graph_spec(spec)?;
        if !ids.insert(id.clone()) {
            return Err(ExperimentError::Config(format!("duplicate graph id `{id}`")));
        }
        if cfg.regime == Regime::Strong && !graph.is_undirected() {
            return Err(ExperimentError::Config(format!(
                "strong regime requires undirected graphs, but `{id}` is directed"
            )));
        }
        if matches!(cfg.regime, Regime::Finite(_)) && !graph.is_undirected() && cfg.step_cap.is_none()
        {
            return Err(ExperimentError::Config(format!(
                "finite-regime scoring on the directed graph `{id}` needs an explicit step_cap"
            )));
        }
        loaded.push((graph, id));
    }

    let mut rows: Vec<ReportRow> = Vec::new();
    for (graph, graph_id) in &loaded {
        let n = graph.node_count();
        // Alpha scores are computed once per graph, when something needs them.
        let alpha = if cfg.regime == Regime::Weak || heuristics.contains(&Heuristic::WeakSelector)
        {
            Some(weak::alpha_scores(graph)?)
        } else {
            None
        };
        for k in resolve_budgets(&cfg.budgets, n) {
            let mut memo: HashMap<ActiveSet, Scored> = HashMap::new();
            for &heuristic in &heuristics {
                let started = Instant::now();
                let row_seed = stable_seed(&[
                    b"select",
                    &cfg.seed.to_le_bytes(),
                    graph_id.as_bytes(),
                    &(k as u64).to_le_bytes(),
                    heuristic.name().as_bytes(),
                ]);
                let wrap = |source: ExperimentError| ExperimentError::RowFailed {
                    graph_id: graph_id.clone(),
                    k,
                    heuristic,
                    source: Box::new(source),
                };
                let selection = select(
                    cfg, graph, graph_id, heuristic, k, row_seed, alpha.as_ref(), &mut memo,
                )
                .map_err(wrap)?;
                let scored = score_set(
                    cfg,
                    graph,
                    graph_id,
                    k,
                    &selection.chosen,
                    alpha.as_ref(),
                    &mut memo,
                )
                .map_err(wrap)?;
                rows.push(ReportRow {
                    graph_id: graph_id.clone(),
                    n,
                    k,
                    heuristic,
                    chosen: selection
                        .chosen
                        .iter()
                        .map(|u| graph.label(u).to_string())
                        .collect(),
                    raw: scored.raw,
                    stderr: scored.stderr,
                    normalized: 0.0,
                    seed: row_seed,
                    trials: scored.trials,
                    wall_ms: started.elapsed().as_millis() as u64,
                });
            }
        }
    }

    rows.sort_by(|a, b| {
        (&a.graph_id, a.k, a.heuristic.name()).cmp(&(&b.graph_id, b.k, b.heuristic.name()))
    });
    normalize_scores(&mut rows);
    Ok(ExperimentReport { rows })
}

/// Divides each row's raw score by the maximum within its `(graph id, k)`
/// group. A group whose maximum is zero (possible for weak objectives)
/// normalizes to all ones.
pub fn normalize_scores(rows: &mut [ReportRow]) {
    let mut start = 0;
    while start < rows.len() {
        let mut end = start + 1;
        while end < rows.len()
            && rows[end].graph_id == rows[start].graph_id
            && rows[end].k == rows[start].k
        {
            end += 1;
        }
        let max = rows[start..end].iter().map(|r| r.raw).fold(0.0, f64::max);
        for row in &mut rows[start..end] {
            row.normalized = if max > 0.0 { row.raw / max } else { 1.0 };
        }
        start = end;
    }
}

fn resolve_heuristics(cfg: &ExperimentConfig) -> Vec<Heuristic> {
    let mut list = match &cfg.heuristics {
        Some(list) => list.clone(),
        None => Heuristic::ALL
            .into_iter()
            .filter(|&h| !(cfg.regime == Regime::Weak && h == Heuristic::LazyGreedy))
            .collect(),
    };
    list.sort_by_key(|h| h.name());
    list.dedup();
    list
}

fn resolve_budgets(budgets: &BudgetSpec, n: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = match budgets {
        BudgetSpec::Fractions(fractions) => fractions
            .iter()
            .map(|f| ((f * n as f64).floor() as usize).min(n))
            .collect(),
        BudgetSpec::Ks(ks) => ks.iter().map(|&k| k.min(n)).collect(),
    };
    ks.sort_unstable();
    ks.dedup();
    ks
}

#[allow(clippy::too_many_arguments)]
fn select(
    cfg: &ExperimentConfig,
    graph: &Graph,
    graph_id: &str,
    heuristic: Heuristic,
    k: usize,
    row_seed: u64,
    alpha: Option<&AlphaScores>,
    memo: &mut HashMap<ActiveSet, Scored>,
) -> Result<Selection, ExperimentError> {
    match heuristic {
        Heuristic::Random => Ok(heuristics::select_random(graph, k, row_seed)),
        Heuristic::HighDegree => Ok(heuristics::select_high_degree(graph, k)),
        Heuristic::Centrality => Ok(heuristics::select_centrality(graph, k)),
        Heuristic::Temperature => Ok(heuristics::select_temperature(graph, k)),
        Heuristic::VertexCover => Ok(heuristics::select_vertex_cover(graph, k)),
        Heuristic::WeakSelector => {
            let alpha = alpha.expect("alpha precomputed when weak-selector is enabled");
            let picked = weak::weak_select_from_alpha(alpha, k);
            Ok(Selection {
                heuristic: Heuristic::WeakSelector,
                chosen: picked.chosen,
                k: k.min(graph.node_count()),
                seed: None,
                oracle_evals: None,
            })
        }
        Heuristic::LazyGreedy => {
            let epsilon = match cfg.regime {
                Regime::Weak => 0.0,
                Regime::Strong if graph.node_count() <= cfg.exact_cap => 0.0,
                // Monte-Carlo oracle: stderr is at most 0.5/sqrt(trials).
                _ => 1.0 / (cfg.trials as f64).sqrt(),
            };
            let oracle = |set: &ActiveSet| {
                score_set(cfg, graph, graph_id, k, set, alpha, memo)
                    .map(|s| (s.raw, s.stderr))
                    .map_err(OptError::oracle)
            };
            let selection = heuristics::lazy_greedy(graph, k, oracle, epsilon)?;
            Ok(selection)
        }
    }
}

fn score_set(
    cfg: &ExperimentConfig,
    graph: &Graph,
    graph_id: &str,
    k: usize,
    set: &ActiveSet,
    alpha: Option<&AlphaScores>,
    memo: &mut HashMap<ActiveSet, Scored>,
) -> Result<Scored, ExperimentError> {
    if let Some(hit) = memo.get(set) {
        return Ok(*hit);
    }
    let scored = match cfg.regime {
        Regime::Weak => {
            let alpha = alpha.expect("alpha precomputed for weak regime");
            Scored {
                raw: alpha.objective(set),
                stderr: 0.0,
                trials: 0,
            }
        }
        Regime::Strong => {
            if graph.node_count() <= cfg.exact_cap {
                let result = exact::exact_fp_strong(graph, set, cfg.exact_cap)?;
                Scored {
                    raw: result.average,
                    stderr: 0.0,
                    trials: 0,
                }
            } else {
                let est =
                    sim::estimate_fp_strong(graph, set, cfg.trials, score_seed(cfg, graph_id, k, set))?;
                Scored {
                    raw: est.mean,
                    stderr: est.stderr,
                    trials: est.trials,
                }
            }
        }
        Regime::Finite(delta) => {
            let params = sim::ProcessParams::new(set.clone(), delta)?;
            let seed = score_seed(cfg, graph_id, k, set);
            let est = match cfg.step_cap {
                Some(cap) => sim::estimate_fp_with_cap(graph, &params, cfg.trials, seed, cap)?,
                None => sim::estimate_fp(graph, &params, cfg.trials, seed)?,
            };
            Scored {
                raw: est.mean,
                stderr: est.stderr,
                trials: est.trials,
            }
        }
    };
    memo.insert(set.clone(), scored);
    Ok(scored)
}

/// Scoring seed: a function of the chosen set (not the heuristic), so equal
/// sets score identically within a group.
fn score_seed(cfg: &ExperimentConfig, graph_id: &str, k: usize, set: &ActiveSet) -> u64 {
    let members = set
        .iter()
        .map(|u| u.to_string())
        .collect::<Vec<_>>()
        .join(",");
    stable_seed(&[
        b"score",
        &cfg.seed.to_le_bytes(),
        graph_id.as_bytes(),
        &(k as u64).to_le_bytes(),
        members.as_bytes(),
    ])
}

/// Stable seed mixing (FNV-1a over the parts with a splitmix64 finalizer);
/// must never change across platforms or releases, or reports stop being
/// reproducible.
pub fn stable_seed(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &byte in *part {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Rounds to 12 significant digits; report floats all pass through this.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-290..=290).contains(&exp) {
        return x;
    }
    let factor = 10f64.powi(11 - exp);
    (x * factor).round() / factor
}

/// Formats a float at 12 significant digits (shortest representation of the
/// rounded value).
pub fn fmt_f64(x: f64) -> String {
    format!("{}", round_sig12(x))
}

fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// Writes the report as CSV. Column order is fixed; `timings` appends the
/// wall-clock column, which is excluded by default because it is the one
/// field that is not reproducible across runs.
pub fn write_csv(
    report: &ExperimentReport,
    out: &mut impl Write,
    timings: bool,
) -> std::io::Result<()> {
    write!(
        out,
        "graph_id,n,k,heuristic,chosen,raw_score,stderr,normalized_score,seed,trials"
    )?;
    writeln!(out, "{}", if timings { ",wall_ms" } else { "" })?;
    for row in &report.rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&row.graph_id),
            row.n,
            row.k,
            row.heuristic,
            csv_field(&row.chosen.join(";")),
            fmt_f64(row.raw),
            fmt_f64(row.stderr),
            fmt_f64(row.normalized),
            row.seed,
            row.trials,
        )?;
        if timings {
            write!(out, ",{}", row.wall_ms)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes the report as a JSON array, one object per row, mirroring the CSV
/// columns.
pub fn write_json(
    report: &ExperimentReport,
    out: &mut impl Write,
    timings: bool,
) -> std::io::Result<()> {
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|row| {
            let mut value = serde_json::json!({
                "graph_id": row.graph_id,
                "n": row.n,
                "k": row.k,
                "heuristic": row.heuristic.name(),
                "chosen": row.chosen,
                "raw_score": round_sig12(row.raw),
                "stderr": round_sig12(row.stderr),
                "normalized_score": round_sig12(row.normalized),
                "seed": row.seed,
                "trials": row.trials,
            });
            if timings {
                value["wall_ms"] = serde_json::json!(row.wall_ms);
            }
            value
        })
        .collect();
    serde_json::to_writer_pretty(&mut *out, &rows)?;
    writeln!(out)?;
    Ok(())
}
