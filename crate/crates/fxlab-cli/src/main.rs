//! `fxlab`: fixation probabilities and activation optimization for the
//! positional Moran process on graphs.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fxlab::exact;
use fxlab::experiment::{self, ExperimentConfig, GraphSpec};
use fxlab::graph::{ActiveSet, Graph};
use fxlab::heuristics::{self, Heuristic, Selection};
use fxlab::sim::{self, FpEstimate, ProcessParams};
use fxlab::weak;

#[derive(Parser)]
#[command(
    name = "fxlab",
    version,
    about = "Positional Moran process: simulate, solve and optimize mutant fixation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo estimate of the fixation probability fp(G^S, delta).
    Simulate(SimulateArgs),
    /// Exact fixation probability via the 2^n configuration chain.
    Exact(ExactArgs),
    /// Strong-selection fixation probability fp^inf(G^S).
    Strong(StrongArgs),
    /// Optimal activation set for the weak-selection regime (top-k alpha).
    WeakSelect(WeakSelectArgs),
    /// Run a single activation heuristic.
    Select(SelectArgs),
    /// Run a heuristic-comparison experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file: one `<u> <v> [<w>]` per line, `#` comments.
    #[arg(long, value_name = "PATH", conflicts_with = "gen")]
    graph: Option<PathBuf>,
    /// Generator spec: cycle(n), complete(n), star(n), path(n),
    /// random-connected(n,m,seed).
    #[arg(long, value_name = "SPEC")]
    gen: Option<String>,
    /// Treat the file as a directed graph.
    #[arg(long)]
    directed: bool,
    /// File lines carry an explicit weight column (directed only).
    #[arg(long)]
    weighted: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph, CliError> {
        let spec = GraphSpec {
            gen: self.gen.clone(),
            file: self.graph.clone(),
            directed: self.directed,
            weighted: self.weighted,
            id: None,
        };
        if self.gen.is_none() && self.graph.is_none() {
            return Err(CliError::Usage(
                "provide a graph with --graph <path> or --gen <spec>".into(),
            ));
        }
        let (graph, _) = experiment::load_graph_spec(&spec)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        Ok(graph)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn write(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(CliError::Runtime),
            None => {
                println!("{}", text.trim_end());
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Active nodes as a comma-separated list of labels (empty for none).
    #[arg(long, value_name = "LIST", default_value = "")]
    active: String,
    /// Mutant fitness advantage.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Pick the trial count for a +/- epsilon Hoeffding bound at 95%
    /// confidence (overrides --trials).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit step cap; defaults to 20*(1+delta)*n^6, which requires an
    /// undirected graph.
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_name = "LIST", default_value = "")]
    active: String,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Size cap for the 2^n solve.
    #[arg(long, default_value_t = exact::DEFAULT_CAP_N)]
    cap_n: usize,
}

#[derive(Args)]
struct StrongArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_name = "LIST", default_value = "")]
    active: String,
    /// exact: configuration-chain solve; mc: Monte-Carlo; auto: exact when
    /// n <= cap-n.
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    method: Method,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = exact::DEFAULT_CAP_N)]
    cap_n: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Exact,
    Mc,
}

#[derive(Args)]
struct WeakSelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Budget: an integer, or a fraction of n like 0.3.
    #[arg(short, long, value_name = "K")]
    k: String,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// One of: random, high-degree, centrality, temperature, vertex-cover,
    /// weak-selector, lazy-greedy.
    #[arg(long, value_name = "NAME")]
    heuristic: String,
    #[arg(short, long, value_name = "K")]
    k: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective regime for lazy-greedy: strong, weak, or finite.
    #[arg(long, default_value = "strong")]
    regime: String,
    /// Fitness advantage for --regime finite.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = exact::DEFAULT_CAP_N)]
    cap_n: usize,
    /// Lazy-greedy slack; defaults to 0 for exact oracles and
    /// 1/sqrt(trials) for Monte-Carlo ones.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Step cap for finite-regime scoring on directed graphs.
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON file mirroring the experiment configuration schema.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or json; defaults to the --out extension, else csv.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Append the per-row wall-clock column (not reproducible run to run).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    fn runtime(err: impl Display) -> Self {
        CliError::Runtime(anyhow::anyhow!("{err}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here with a zero exit.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    if let Err(err) = configure_threads() {
        eprintln!("fxlab: {err}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("fxlab: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("fxlab: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// `FXLAB_THREADS` caps simulation parallelism; it never changes results.
fn configure_threads() -> Result<(), String> {
    match std::env::var("FXLAB_THREADS") {
        Ok(raw) => {
            let threads: usize = raw
                .parse()
                .map_err(|_| format!("FXLAB_THREADS must be a positive integer, got `{raw}`"))?;
            if threads == 0 {
                return Err("FXLAB_THREADS must be >= 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Exact(args) => exact_cmd(args),
        Command::Strong(args) => strong(args),
        Command::WeakSelect(args) => weak_select(args),
        Command::Select(args) => select(args),
        Command::Experiment(args) => run_experiment(args),
    }
}

fn parse_active(graph: &Graph, list: &str) -> Result<ActiveSet, CliError> {
    let mut members = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let node = graph.node_by_label(token).ok_or_else(|| {
            CliError::Usage(format!("--active: no node labeled `{token}` in the graph"))
        })?;
        members.push(node);
    }
    Ok(ActiveSet::new(members))
}

/// Budgets: `18` or a fraction of n such as `0.36`.
fn parse_k(raw: &str, n: usize) -> Result<usize, CliError> {
    if raw.contains('.') {
        let f: f64 = raw
            .parse()
            .map_err(|_| CliError::Usage(format!("bad budget `{raw}`")))?;
        if !(0.0..=1.0).contains(&f) {
            return Err(CliError::Usage(format!(
                "fractional budget must be in [0, 1], got {f}"
            )));
        }
        Ok((f * n as f64).floor() as usize)
    } else {
        raw.parse()
            .map_err(|_| CliError::Usage(format!("bad budget `{raw}`")))
    }
}

fn jnum(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(experiment::round_sig12(x))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn estimate_json(est: &FpEstimate) -> serde_json::Value {
    json!({
        "mean": jnum(est.mean),
        "stderr": jnum(est.stderr),
        "ci95": [jnum(est.ci95.0), jnum(est.ci95.1)],
        "trials": est.trials,
        "fixations": est.fixations,
        "timeouts": est.timeouts,
        "mean_steps": jnum(est.mean_steps),
    })
}

fn labels(graph: &Graph, set: &ActiveSet) -> Vec<String> {
    set.iter().map(|u| graph.label(u).to_string()).collect()
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let active = parse_active(&graph, &args.active)?;
    let params = ProcessParams::new(active, args.delta).map_err(CliError::runtime)?;
    let trials = match args.epsilon {
        Some(eps) if eps > 0.0 => sim::hoeffding_trials(eps),
        Some(eps) => return Err(CliError::Usage(format!("--epsilon must be > 0, got {eps}"))),
        None => args.trials,
    };
    let est = match args.cap {
        Some(cap) => sim::estimate_fp_with_cap(&graph, &params, trials, args.seed, cap),
        None => sim::estimate_fp(&graph, &params, trials, args.seed),
    }
    .map_err(CliError::runtime)?;
    println!("{}", estimate_json(&est));
    Ok(())
}

fn exact_cmd(args: ExactArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let active = parse_active(&graph, &args.active)?;
    let result =
        exact::exact_fp(&graph, &active, args.delta, args.cap_n).map_err(CliError::runtime)?;
    println!("{}", exact_json(&graph, &result));
    Ok(())
}

fn exact_json(graph: &Graph, result: &exact::ExactResult) -> serde_json::Value {
    let per_start: serde_json::Map<String, serde_json::Value> = result
        .per_start
        .iter()
        .enumerate()
        .map(|(u, &fp)| (graph.label(u).to_string(), jnum(fp)))
        .collect();
    json!({ "average": jnum(result.average), "per_start": per_start })
}

fn strong(args: StrongArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let active = parse_active(&graph, &args.active)?;
    let use_exact = match args.method {
        Method::Exact => true,
        Method::Mc => false,
        Method::Auto => graph.node_count() <= args.cap_n,
    };
    if use_exact {
        let result =
            exact::exact_fp_strong(&graph, &active, args.cap_n).map_err(CliError::runtime)?;
        let mut value = exact_json(&graph, &result);
        value["method"] = json!("exact");
        println!("{value}");
    } else {
        let est = sim::estimate_fp_strong(&graph, &active, args.trials, args.seed)
            .map_err(CliError::runtime)?;
        let mut value = estimate_json(&est);
        value["method"] = json!("monte-carlo");
        println!("{value}");
    }
    Ok(())
}

fn weak_select(args: WeakSelectArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let k = parse_k(&args.k, graph.node_count())?;
    let picked = weak::weak_select(&graph, k).map_err(CliError::runtime)?;
    println!(
        "{}",
        json!({
            "chosen": labels(&graph, &picked.chosen),
            "objective": jnum(picked.objective),
        })
    );
    Ok(())
}

fn select(args: SelectArgs) -> Result<(), CliError> {
    let graph = args.graph.load()?;
    let n = graph.node_count();
    let k = parse_k(&args.k, n)?;
    let heuristic: Heuristic = args
        .heuristic
        .parse()
        .map_err(|e: String| CliError::Usage(e))?;
    let selection = match heuristic {
        Heuristic::Random => heuristics::select_random(&graph, k, args.seed),
        Heuristic::HighDegree => heuristics::select_high_degree(&graph, k),
        Heuristic::Centrality => heuristics::select_centrality(&graph, k),
        Heuristic::Temperature => heuristics::select_temperature(&graph, k),
        Heuristic::VertexCover => heuristics::select_vertex_cover(&graph, k),
        Heuristic::WeakSelector => heuristics::select_weak(&graph, k).map_err(CliError::runtime)?,
        Heuristic::LazyGreedy => lazy_greedy_cmd(&graph, k, &args)?,
    };
    println!("{}", selection_json(&graph, &selection));
    Ok(())
}

fn lazy_greedy_cmd(graph: &Graph, k: usize, args: &SelectArgs) -> Result<Selection, CliError> {
    let n = graph.node_count();
    let exact_strong = n <= args.cap_n;
    let mc_epsilon = 1.0 / (args.trials as f64).sqrt();
    let seed_for = |set: &ActiveSet| {
        let members = set
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join(",");
        experiment::stable_seed(&[b"cli", &args.seed.to_le_bytes(), members.as_bytes()])
    };
    let (oracle, epsilon): (Box<dyn FnMut(&ActiveSet) -> _>, f64) = match args.regime.as_str() {
        "strong" => {
            if exact_strong {
                (
                    Box::new(move |set: &ActiveSet| {
                        exact::exact_fp_strong(graph, set, args.cap_n)
                            .map(|r| (r.average, 0.0))
                            .map_err(heuristics::OptError::oracle)
                    }),
                    0.0,
                )
            } else {
                (
                    Box::new(move |set: &ActiveSet| {
                        sim::estimate_fp_strong(graph, set, args.trials, seed_for(set))
                            .map(|e| (e.mean, e.stderr))
                            .map_err(heuristics::OptError::oracle)
                    }),
                    mc_epsilon,
                )
            }
        }
        "weak" => {
            let alpha = weak::alpha_scores(graph).map_err(CliError::runtime)?;
            (
                Box::new(move |set: &ActiveSet| Ok((alpha.objective(set), 0.0))),
                0.0,
            )
        }
        "finite" => {
            let delta = args.delta.ok_or_else(|| {
                CliError::Usage("--regime finite needs --delta".into())
            })?;
            let cap = args.cap;
            (
                Box::new(move |set: &ActiveSet| {
                    let params = ProcessParams::new(set.clone(), delta)
                        .map_err(heuristics::OptError::oracle)?;
                    let est = match cap {
                        Some(cap) => {
                            sim::estimate_fp_with_cap(graph, &params, args.trials, seed_for(set), cap)
                        }
                        None => sim::estimate_fp(graph, &params, args.trials, seed_for(set)),
                    }
                    .map_err(heuristics::OptError::oracle)?;
                    Ok((est.mean, est.stderr))
                }),
                mc_epsilon,
            )
        }
        other => {
            return Err(CliError::Usage(format!(
                "--regime must be strong, weak or finite, got `{other}`"
            )))
        }
    };
    let epsilon = args.epsilon.unwrap_or(epsilon);
    heuristics::lazy_greedy(graph, k, oracle, epsilon).map_err(CliError::runtime)
}

fn selection_json(graph: &Graph, selection: &Selection) -> serde_json::Value {
    let mut value = json!({
        "heuristic": selection.heuristic.name(),
        "k": selection.k,
        "chosen": labels(graph, &selection.chosen),
    });
    if let Some(seed) = selection.seed {
        value["seed"] = json!(seed);
    }
    if let Some(evals) = selection.oracle_evals {
        value["oracle_evals"] = json!(evals);
    }
    value
}

fn run_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))
        .map_err(CliError::Runtime)?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", args.config.display())))?;
    let report = experiment::run_experiment(&config).map_err(CliError::runtime)?;

    let format = args.format.unwrap_or_else(|| {
        match args.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    });
    let mut buf = Vec::new();
    match format {
        Format::Csv => experiment::write_csv(&report, &mut buf, args.timings),
        Format::Json => experiment::write_json(&report, &mut buf, args.timings),
    }
    .map_err(CliError::runtime)?;
    let text = String::from_utf8(buf).expect("reports are UTF-8");
    OutArgs { out: args.out }.write(&text)
}
