//! `stratdiff`: solve, generate, compare and simulate strategic diffusion
//! instances. Results go to stdout (or `--out`) as JSON; tables as CSV.
//!
//! Exit codes: 0 success, 1 bad input, 2 size guard refusal, 3 infeasible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stratdiff::decompose::{biconnected_components, solve_full_via_decomposition};
use stratdiff::exact::{brute_force_optimal, dp_optimal};
use stratdiff::generators::{
    brute_force_set_cover, make_gk, make_inapprox, make_np_hardness, random_connected, SetCoverInstance, Weights,
};
use stratdiff::heuristics::{greedy_sequence_with, majority_sequence_with, strategy_a_gk, TieBreak};
use stratdiff::io::{instance_from_json, instance_to_json, network_from_json, network_from_text, Format};
use stratdiff::simulate::simulate_sequence_with_workers;
use stratdiff::treewidth::{
    min_fill_decomposition, tw_full_optimal, tw_partial_optimal, validate_decomposition, TreeDecomposition,
};
use stratdiff::{harmonic, sequence_time, DiffusionInstance, Error, InfluenceNetwork, Limits, Model, SolveResult};

const EXIT_INPUT: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "stratdiff", version, about = "Optimal and heuristic activation strategies for influence diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the sequence, step times and total time.
    Solve(SolveArgs),
    /// Write a generated instance and its `.meta.json` sidecar.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Tabulate strategy A, greedy and majority on G(k) as CSV.
    Compare(CompareArgs),
    /// Monte Carlo estimate of a sequence's total time.
    Simulate(SimulateArgs),
    /// Check a network (and optionally a tree decomposition) for errors.
    Validate(ValidateArgs),
    /// Blocks, cut nodes and a min-fill tree decomposition of a network.
    Decompose(DecomposeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Solver {
    Brute,
    Dp,
    Greedy,
    Majority,
    TwFull,
    TwPartial,
    DecomposeDp,
}

/// How to read an instance and which parts of it to override.
#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON, or a bare network (JSON or text) diffused from `--source`.
    instance: PathBuf,
    /// Seed node when the input is a bare network.
    #[arg(long, default_value_t = 0)]
    source: usize,
    /// Number of nodes to activate (default: from the file, or all nodes).
    #[arg(long)]
    z: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct GuardArgs {
    /// Run exponential solvers beyond their size guards.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Solver::Dp)]
    solver: Solver,
    /// Tree decomposition for the treewidth solvers (JSON, or PACE `.td`);
    /// a min-fill decomposition is used when absent.
    #[arg(long)]
    td: Option<PathBuf>,
    /// Seeded random tie-breaking for the heuristics.
    #[arg(long = "rng-seed", alias = "seed")]
    rng_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    guard: GuardArgs,
}

#[derive(Subcommand)]
enum Family {
    /// The lower-bound family G(k) with k² + k nodes.
    Gk {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Set-cover hardness gadget with threshold t*.
    NpHard {
        #[command(flatten)]
        cover: CoverArgs,
        /// Cover size bound.
        #[arg(long)]
        k: usize,
        /// Expand the heavy q → S weights into unit-weight chains.
        #[arg(long)]
        binary: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Set-cover gadget whose optimum encodes the minimum cover size.
    Inapprox {
        #[command(flatten)]
        cover: CoverArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Connected random network: spanning tree plus extra edges with probability `p`.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long = "rng-seed", alias = "seed", default_value_t = 0)]
        rng_seed: u64,
        #[arg(long, value_enum, default_value_t = WeightKind::Unit)]
        weights: WeightKind,
        /// Weight range for `uniform` and `integer`.
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long)]
        z: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Serialize)]
struct CoverArgs {
    /// Universe size; elements are numbered from 1.
    #[arg(long)]
    universe: usize,
    /// Sets separated by `;`, elements by `,`, e.g. "1,2;2,3".
    #[arg(long)]
    sets: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WeightKind {
    Unit,
    Uniform,
    Integer,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    /// Also solve each G(k) exactly; rows beyond the guard leave the column empty.
    #[arg(long)]
    dp: bool,
    /// Seeded random tie-breaking for the heuristics.
    #[arg(long = "rng-seed", alias = "seed")]
    rng_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    guard: GuardArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: InstanceArgs,
    /// Comma-separated node ids; defaults to the sequence chosen by `--solver`.
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long, value_enum, default_value_t = Solver::Dp)]
    solver: Solver,
    #[arg(long)]
    td: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long = "rng-seed", alias = "seed", default_value_t = 0)]
    rng_seed: u64,
    #[arg(long, default_value_t = stratdiff::simulate::DEFAULT_WORKERS)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    guard: GuardArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Network or instance file.
    input: PathBuf,
    #[arg(long)]
    td: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Network or instance file.
    input: PathBuf,
    /// Where to write the min-fill decomposition (`.td` for PACE, else JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_size_limit() { EXIT_GUARD } else { EXIT_INPUT };
        let message = if e.is_size_limit() { format!("{e} (use --force or {} to override)", stratdiff::DP_NODES_ENV) } else { e.to_string() };
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_INPUT, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Generate { family } => cmd_generate(family),
        Command::Compare(a) => cmd_compare(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Decompose(a) => cmd_decompose(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn limits(guard: &GuardArgs) -> Limits {
    let mut limits = Limits::from_env();
    if guard.force {
        eprintln!("warning: --force disables the size guards; exponential solvers may run for a very long time");
        limits.force = true;
    }
    limits
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Parses a network file, accepting instance JSON (extra keys ignored).
fn read_network(path: &Path) -> Result<(InfluenceNetwork, Option<serde_json::Value>), Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    match Format::detect(path, &text) {
        Format::Text => Ok((network_from_text(&text)?, None)),
        Format::Json => {
            let mut value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
            let extra = value.as_object_mut().map(|obj| {
                let mut extra = serde_json::Map::new();
                for key in ["seed", "z", "alpha", "beta"] {
                    if let Some(v) = obj.remove(key) {
                        extra.insert(key.to_string(), v);
                    }
                }
                serde_json::Value::Object(extra)
            });
            let net = network_from_json(&value.to_string())?;
            Ok((net, extra.filter(|e| e.as_object().is_some_and(|o| !o.is_empty()))))
        }
    }
}

fn read_instance(a: &InstanceArgs) -> Result<DiffusionInstance, Failure> {
    let text = fs::read_to_string(&a.instance).map_err(|e| input_error(format!("{}: {e}", a.instance.display())))?;
    let is_instance = Format::detect(&a.instance, &text) == Format::Json
        && serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .is_some_and(|v| v.get("seed").is_some());
    let base = if is_instance {
        instance_from_json(&text)?
    } else {
        let (net, _) = read_network(&a.instance)?;
        DiffusionInstance::full(net, a.source)?
    };
    let model = Model::new(a.alpha.unwrap_or(base.model.alpha), a.beta.unwrap_or(base.model.beta))?;
    let z = a.z.unwrap_or(base.z);
    Ok(DiffusionInstance::with_model(base.network, base.seed, z, model)?)
}

fn read_td(path: Option<&Path>, net: &InfluenceNetwork) -> Result<TreeDecomposition, Failure> {
    match path {
        Some(p) => Ok(TreeDecomposition::load(p)?),
        None => Ok(min_fill_decomposition(net)),
    }
}

fn run_solver(
    inst: &DiffusionInstance,
    solver: Solver,
    td: Option<&Path>,
    tie: TieBreak,
    limits: &Limits,
) -> Result<SolveResult, Failure> {
    Ok(match solver {
        Solver::Brute => brute_force_optimal(inst, limits)?,
        Solver::Dp => dp_optimal(inst, limits)?,
        Solver::Greedy => greedy_sequence_with(inst, tie),
        Solver::Majority => majority_sequence_with(inst, tie),
        Solver::TwFull => tw_full_optimal(inst, &read_td(td, &inst.network)?, limits)?,
        Solver::TwPartial => tw_partial_optimal(inst, &read_td(td, &inst.network)?, limits)?,
        Solver::DecomposeDp => solve_full_via_decomposition(inst, |c| dp_optimal(c, limits))?,
    })
}

fn tie_break(seed: Option<u64>) -> TieBreak {
    seed.map_or(TieBreak::SmallestId, TieBreak::Seeded)
}

#[derive(Serialize)]
struct SolveOutput {
    solver: Solver,
    #[serde(flatten)]
    result: SolveResult,
    wall_ms: f64,
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let limits = limits(&a.guard);
    let inst = read_instance(&a.input)?;
    let start = Instant::now();
    let result = run_solver(&inst, a.solver, a.td.as_deref(), tie_break(a.rng_seed), &limits)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let code = if result.is_feasible() { 0 } else { EXIT_INFEASIBLE };
    let out = SolveOutput { solver: a.solver, result, wall_ms };
    emit(&serde_json::to_string_pretty(&out).expect("result serializes"), a.out.as_deref())?;
    Ok(code)
}

/// Parses `"1,2;2,3"` into 0-based sets over `1..=universe`.
fn parse_sets(universe: usize, text: &str) -> Result<Vec<Vec<usize>>, Failure> {
    text.split(';')
        .map(|set| {
            set.split(',')
                .map(|tok| {
                    let e: usize = tok
                        .trim()
                        .parse()
                        .map_err(|_| input_error(format!("--sets: cannot parse element {tok:?}")))?;
                    if e == 0 || e > universe {
                        return Err(input_error(format!("--sets: element {e} outside 1..={universe}")));
                    }
                    Ok(e - 1)
                })
                .collect()
        })
        .collect()
}

#[derive(Serialize)]
struct Meta {
    family: &'static str,
    params: serde_json::Value,
    n: usize,
    /// Decision threshold of the hardness gadget.
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    /// Optimum-to-cover scale of the inapproximability gadget.
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    /// Minimum cover size, when the family is small enough to search.
    #[serde(skip_serializing_if = "Option::is_none")]
    min_cover: Option<Option<usize>>,
}

fn write_generated(inst: &DiffusionInstance, meta: Meta, out: Option<PathBuf>, default: String) -> CmdResult {
    let path = out.unwrap_or_else(|| PathBuf::from(default));
    fs::write(&path, instance_to_json(inst))?;
    let meta_path = path.with_extension("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("metadata serializes"))?;
    println!("{}", path.display());
    println!("{}", meta_path.display());
    Ok(0)
}

fn cover_instance(cover: &CoverArgs) -> Result<(SetCoverInstance, Option<Option<usize>>), Failure> {
    let sc = SetCoverInstance::new(cover.universe, parse_sets(cover.universe, &cover.sets)?, None)?;
    let min = brute_force_set_cover(&sc).ok();
    Ok((sc, min))
}

fn cmd_generate(family: Family) -> CmdResult {
    match family {
        Family::Gk { k, out } => {
            let inst = make_gk(k)?;
            let meta = Meta {
                family: "gk",
                params: serde_json::json!({ "k": k }),
                n: inst.n(),
                threshold: None,
                scale: None,
                min_cover: None,
            };
            write_generated(&inst, meta, out, format!("gk-{k}.json"))
        }
        Family::NpHard { cover, k, binary, out } => {
            let (sc, min_cover) = cover_instance(&cover)?;
            let g = make_np_hardness(&sc, k, binary)?;
            let meta = Meta {
                family: "np-hard",
                params: serde_json::json!({ "universe": cover.universe, "sets": cover.sets, "k": k, "binary": binary }),
                n: g.instance.n(),
                threshold: Some(g.threshold),
                scale: None,
                min_cover,
            };
            write_generated(&g.instance, meta, out, format!("np-hard-k{k}.json"))
        }
        Family::Inapprox { cover, lambda, out } => {
            let (sc, min_cover) = cover_instance(&cover)?;
            let g = make_inapprox(&sc, lambda)?;
            let meta = Meta {
                family: "inapprox",
                params: serde_json::json!({ "universe": cover.universe, "sets": cover.sets, "lambda": lambda }),
                n: g.instance.n(),
                threshold: None,
                scale: Some(g.scale),
                min_cover,
            };
            write_generated(&g.instance, meta, out, "inapprox.json".into())
        }
        Family::Random { n, p, rng_seed, weights, lo, hi, z, alpha, beta, out } => {
            let w = match weights {
                WeightKind::Unit => Weights::Unit,
                WeightKind::Uniform => Weights::Uniform { lo, hi },
                WeightKind::Integer => {
                    if lo < 0.0 || hi < lo || lo.fract() != 0.0 || hi.fract() != 0.0 {
                        return Err(input_error("integer weights need whole --lo <= --hi, both >= 0"));
                    }
                    Weights::Integer { lo: lo as u32, hi: hi as u32 }
                }
            };
            let net = random_connected(n, p, w, rng_seed)?;
            let model = Model::new(alpha.unwrap_or(1.0), beta.unwrap_or(1.0))?;
            let inst = DiffusionInstance::with_model(net, 0, z.unwrap_or(n), model)?;
            let meta = Meta {
                family: "random",
                params: serde_json::json!({ "n": n, "p": p, "rng_seed": rng_seed, "weights": weights, "lo": lo, "hi": hi }),
                n,
                threshold: None,
                scale: None,
                min_cover: None,
            };
            write_generated(&inst, meta, out, format!("random-{n}-{rng_seed}.json"))
        }
    }
}

#[derive(Serialize)]
struct CompareRow {
    k: usize,
    n: usize,
    strategy_a: f64,
    greedy: f64,
    majority: f64,
    dp: Option<f64>,
    greedy_ratio: f64,
    majority_ratio: f64,
    greedy_ratio_dp: Option<f64>,
    majority_ratio_dp: Option<f64>,
    #[serde(rename = "H_k")]
    h_k: f64,
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    if a.k_min == 0 || a.k_min > a.k_max {
        return Err(input_error("need 1 <= --k-min <= --k-max"));
    }
    let limits = limits(&a.guard);
    let tie = tie_break(a.rng_seed);
    let mut writer = csv::Writer::from_writer(Vec::new());
    for k in a.k_min..=a.k_max {
        let g = make_gk(k)?;
        let strategy_a = strategy_a_gk(k)?.total_time;
        let greedy = greedy_sequence_with(&g, tie).total_time;
        let majority = majority_sequence_with(&g, tie).total_time;
        let dp = if a.dp {
            match dp_optimal(&g, &limits) {
                Ok(r) => Some(r.total_time),
                Err(e) if e.is_size_limit() => {
                    eprintln!("note: k={k}: {e}; dp column left empty");
                    None
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        let row = CompareRow {
            k,
            n: g.n(),
            strategy_a,
            greedy,
            majority,
            dp,
            greedy_ratio: greedy / strategy_a,
            majority_ratio: majority / strategy_a,
            greedy_ratio_dp: dp.map(|d| greedy / d),
            majority_ratio_dp: dp.map(|d| majority / d),
            h_k: harmonic(k),
        };
        writer.serialize(row).map_err(|e| input_error(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| input_error(e.to_string()))?;
    emit(&String::from_utf8(bytes).expect("csv is utf-8"), a.out.as_deref())?;
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let limits = limits(&a.guard);
    let inst = read_instance(&a.input)?;
    let seq: Vec<usize> = match &a.sequence {
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| input_error(format!("--sequence: cannot parse {t:?}"))))
            .collect::<Result<_, _>>()?,
        None => {
            let r = run_solver(&inst, a.solver, a.td.as_deref(), TieBreak::SmallestId, &limits)?;
            if !r.is_feasible() {
                return Err(Failure { code: EXIT_INFEASIBLE, message: "solver found no feasible sequence".into() });
            }
            r.nodes().to_vec()
        }
    };
    let eval = sequence_time(&inst, &seq)?;
    if !eval.is_feasible() {
        return Err(Failure { code: EXIT_INFEASIBLE, message: "sequence has infinite expected time".into() });
    }
    let summary = simulate_sequence_with_workers(&inst, &seq, a.trials, a.rng_seed, a.workers)?;
    emit(&serde_json::to_string_pretty(&summary).expect("summary serializes"), a.out.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct ValidateOutput {
    valid: bool,
    n: usize,
    edges: usize,
    connected: bool,
    violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    td: Option<TdOutput>,
}

#[derive(Serialize)]
struct TdOutput {
    valid: bool,
    treewidth: usize,
    violations: Vec<String>,
}

fn cmd_validate(a: ValidateArgs) -> CmdResult {
    let (net, _) = read_network(&a.input)?;
    let violations: Vec<String> = net.validate().iter().map(ToString::to_string).collect();
    let td = match &a.td {
        Some(path) => {
            let report = validate_decomposition(&net, &TreeDecomposition::load(path)?);
            Some(TdOutput {
                valid: report.is_valid(),
                treewidth: report.treewidth,
                violations: report.violations.iter().map(ToString::to_string).collect(),
            })
        }
        None => None,
    };
    let valid = violations.is_empty() && td.as_ref().is_none_or(|t| t.valid);
    let out = ValidateOutput {
        valid,
        n: net.node_count(),
        edges: net.edge_count(),
        connected: net.is_connected(),
        violations,
        td,
    };
    emit(&serde_json::to_string_pretty(&out).expect("report serializes"), None)?;
    Ok(if valid { 0 } else { EXIT_INPUT })
}

#[derive(Serialize)]
struct DecomposeOutput {
    blocks: Vec<Vec<usize>>,
    cut_nodes: Vec<usize>,
    treewidth_upper_bound: usize,
    bags: usize,
    max_degree: usize,
}

fn cmd_decompose(a: DecomposeArgs) -> CmdResult {
    let (net, _) = read_network(&a.input)?;
    let bc = biconnected_components(&net)?;
    let td = min_fill_decomposition(&net);
    if let Some(path) = &a.out {
        td.save(path, net.node_count())?;
    }
    let out = DecomposeOutput {
        blocks: bc.components,
        cut_nodes: bc.cut_nodes,
        treewidth_upper_bound: td.width(),
        bags: td.bags.len(),
        max_degree: net.max_degree(),
    };
    emit(&serde_json::to_string_pretty(&out).expect("report serializes"), None)?;
    Ok(0)
}
