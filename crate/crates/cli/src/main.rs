//! Batch front end: solve, compare, preprocess, export, and run the sampling
//! heuristic from the command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver limit reached
//! without an optimality proof, 4 internal invariant violation.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spcp_core::exact::{binomial, evaluate_centers, greedy_centers};
use spcp_core::formulations::{
    build_formulation, extract_centers, incumbent_vector, FormulationSpec, Inequality,
};
use spcp_core::index::DistanceIndex;
use spcp_core::instance::orlib::{all_pairs_shortest, parse_orlib};
use spcp_core::instance::sample::sample_strata;
use spcp_core::instance::{DistanceMatrix, Instance, StrataSet};
use spcp_core::milp::{export_mps, lp_gap, lp_relax_solve, milp_solve_from, MilpStatus, SolveLimits};
use spcp_core::preprocess::{compute_fixset, reduction_stats, stratum_lbs, lb_fixings, BoundMethod, PreprocessMode};
use spcp_core::saa::{exact_ppcp_capped, saa_run, PpcpInstance, SaaParams, ScenarioSolver};

const EXIT_CONFIG: i32 = 2;
const EXIT_LIMIT: i32 = 3;
const EXIT_INTERNAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "spcp",
    about = "Stratified center location: formulations, preprocessing, exact search, and a sampling heuristic for the probabilistic variant"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with one formulation; writes a JSON solution.
    Solve(SolveArgs),
    /// Solve each instance with several formulations; writes a CSV table and
    /// fails hard if the optima disagree.
    Compare(CompareArgs),
    /// Variable-fixing percentages per instance as CSV.
    PreprocessStats(StatsArgs),
    /// Sampling heuristic for the probabilistic variant; writes an iteration
    /// CSV and a JSON summary.
    Saa(SaaArgs),
    /// Export the configured model as fixed-format MPS.
    Export(ExportArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Graph file: header `n m p`, then `m` lines `i j cost` (1-based).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Explicit distance matrix file: first line `n`, then `n` rows.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Strata JSON: {"weights": [...], "members": [[...], ...]}, 1-based ids.
    #[arg(long)]
    strata: Option<PathBuf>,
    /// Generate strata instead: `COUNT,SEED`.
    #[arg(long, value_name = "S,SEED")]
    gen_strata: Option<String>,
    /// Comma-separated stratum weights overriding the defaults.
    #[arg(long)]
    weights: Option<String>,
    /// Number of centers (defaults to the graph header value).
    #[arg(long)]
    p: Option<usize>,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Formulation name: F1, F2, F2prime, F3, F3mod, F4, F4mod, or
    /// F5-<linking> with linking in {F55, F2_3, desagregada, F52, agg53, F6};
    /// a trailing `*` relaxes the z tail.
    #[arg(long, default_value = "F5-agg53")]
    formulation: String,
    /// Override the F5 linking variant.
    #[arg(long)]
    f5_linking: Option<String>,
    /// Relax integrality of the site-covering tail ranks.
    #[arg(long)]
    relax_z: bool,
    /// Relax integrality of the stratum-covering variables (valid for F5
    /// with F55, F2_3 or desagregada linking).
    #[arg(long)]
    relax_u: bool,
    /// Valid inequalities to append: R1mod, escenarios2, escenarios3, Restz,
    /// F2_3 (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    ineq: Vec<String>,
    /// Preprocessing: none, classic-rel, binary, binary-star.
    #[arg(long, default_value = "none")]
    preprocess: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    spec: SpecArgs,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Node limit for branch and bound.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Graph files (repeatable).
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Matrix files (repeatable).
    #[arg(long)]
    matrix: Vec<PathBuf>,
    /// Strata JSON applied to every instance.
    #[arg(long)]
    strata: Option<PathBuf>,
    /// Generate strata per instance: `COUNT,SEED`.
    #[arg(long, value_name = "S,SEED")]
    gen_strata: Option<String>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    /// Comma-separated canonical names, or `all`.
    #[arg(long, default_value = "all")]
    formulations: String,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    instance: Vec<PathBuf>,
    #[arg(long)]
    matrix: Vec<PathBuf>,
    #[arg(long)]
    strata: Option<PathBuf>,
    #[arg(long, value_name = "S,SEED")]
    gen_strata: Option<String>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SaaArgs {
    /// Distances: graph file or matrix file.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// One demand probability per line, site order.
    #[arg(long)]
    q: PathBuf,
    #[arg(long)]
    p: Option<usize>,
    /// Scenarios per iteration.
    #[arg(long, alias = "M", default_value_t = 10)]
    m: usize,
    /// Maximum iterations.
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario solver: `combinatorial` or a formulation name.
    #[arg(long, default_value = "combinatorial")]
    spcp: String,
    /// Preprocessing for a formulation-based scenario solver.
    #[arg(long, default_value = "none")]
    preprocess: String,
    /// Output prefix: writes PREFIX.csv and PREFIX.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    spec: SpecArgs,
    /// Output MPS path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Config(anyhow::Error),
    Limit(String),
    Internal(anyhow::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Limit(_) => EXIT_LIMIT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e:#}"),
            CliError::Limit(m) => write!(f, "solver limit reached: {m}"),
            CliError::Internal(e) => write!(f, "internal invariant violation: {e:#}"),
        }
    }
}

fn config<T>(r: Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Config)
}

fn internal<T>(r: Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Internal)
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        configure_jobs(jobs);
    }
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
        Command::PreprocessStats(args) => cmd_preprocess_stats(args),
        Command::Saa(args) => cmd_saa(args),
        Command::Export(args) => cmd_export(args),
    };
    if let Err(err) = outcome {
        eprintln!("spcp: {err}");
        std::process::exit(err.code());
    }
}

fn configure_jobs(jobs: usize) {
    // Ignored (with a note) when the core was built without rayon.
    #[allow(unused)]
    let mut configured = false;
    #[cfg(feature = "parallel")]
    {
        configured = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_ok();
    }
    if !configured {
        eprintln!("spcp: note: --jobs {jobs} has no effect in this build");
    }
}

fn parse_weights(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("bad weight {t:?}: {e}")))
        .collect()
}

fn load_distances(
    instance: &Option<PathBuf>,
    matrix: &Option<PathBuf>,
) -> Result<(DistanceMatrix, Option<usize>, String)> {
    match (instance, matrix) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let graph = parse_orlib(&text)?;
            let dm = all_pairs_shortest(&graph)?;
            let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            Ok((dm, Some(graph.p_default), name))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let dm = DistanceMatrix::from_text(&text)?;
            let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            Ok((dm, None, name))
        }
        (Some(_), Some(_)) => bail!("--instance and --matrix are mutually exclusive"),
        (None, None) => bail!("one of --instance or --matrix is required"),
    }
}

fn load_instance(args: &InstanceArgs) -> Result<(Instance, String)> {
    let (dm, p_default, name) = load_distances(&args.instance, &args.matrix)?;
    let n = dm.n();
    let mut strata = match (&args.strata, &args.gen_strata) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            StrataSet::from_json_str(&text)?
        }
        (None, Some(spec)) => {
            let (s, seed) = spec
                .split_once(',')
                .ok_or_else(|| anyhow!("--gen-strata expects `S,SEED`"))?;
            sample_strata(n, s.trim().parse()?, seed.trim().parse()?)?
        }
        (Some(_), Some(_)) => bail!("--strata and --gen-strata are mutually exclusive"),
        (None, None) => StrataSet::single(n),
    };
    if let Some(raw) = &args.weights {
        strata.set_weights(parse_weights(raw)?)?;
    }
    let p = args
        .p
        .or(p_default)
        .ok_or_else(|| anyhow!("--p is required with --matrix"))?;
    Ok((Instance::new(dm, strata, p)?, name))
}

fn build_spec(args: &SpecArgs) -> Result<(FormulationSpec, PreprocessMode)> {
    let mut spec = FormulationSpec::parse(&args.formulation)?;
    if let Some(link) = &args.f5_linking {
        let linking = spcp_core::F5Linking::parse(link)
            .ok_or_else(|| anyhow!("unknown F5 linking {link:?}"))?;
        if spec.family != spcp_core::Family::F5 {
            bail!("--f5-linking only applies to F5");
        }
        spec.f5_linking = Some(linking);
    }
    if args.relax_z {
        spec.relax_z_tail = true;
    }
    if args.relax_u {
        spec.relax_u = true;
    }
    for raw in &args.ineq {
        let ineq = Inequality::parse(raw)
            .ok_or_else(|| anyhow!("unknown inequality {raw:?}"))?;
        spec.inequalities.insert(ineq);
    }
    let mode = PreprocessMode::parse(&args.preprocess)
        .ok_or_else(|| anyhow!("unknown preprocessing mode {:?}", args.preprocess))?;
    if mode == PreprocessMode::BinaryStar && spec.family.has_z() {
        spec.relax_z_tail = true;
    }
    spec.validate()?;
    Ok((spec, mode))
}

fn limits_from(time_limit: Option<f64>, node_limit: Option<u64>) -> SolveLimits {
    SolveLimits {
        max_nodes: node_limit.unwrap_or(u64::MAX),
        time_limit: time_limit.map(Duration::from_secs_f64),
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{content}"),
    }
    Ok(())
}

struct SolvedSpec {
    status: MilpStatus,
    objective: f64,
    bound: f64,
    lp_value: f64,
    nodes: u64,
    centers: Vec<usize>,
    per_stratum_max: Vec<f64>,
    t_prep: f64,
    t_solv: f64,
}

fn solve_one(
    inst: &Instance,
    spec: &FormulationSpec,
    mode: PreprocessMode,
    limits: &SolveLimits,
) -> Result<SolvedSpec, CliError> {
    let prep_start = Instant::now();
    let idx = DistanceIndex::build(inst);
    let mut spec = spec.clone();
    spec.fixings = internal(compute_fixset(inst, &idx, mode).map_err(Into::into))?;
    let (model, varmap) =
        internal(build_formulation(inst, &idx, &spec).map_err(Into::into))?;
    let t_prep = prep_start.elapsed().as_secs_f64();

    let solve_start = Instant::now();
    let lp = internal(lp_relax_solve(&model).map_err(Into::into))?;
    let start = incumbent_vector(inst, &idx, &varmap, &model, &greedy_centers(inst));
    let res = internal(milp_solve_from(&model, limits, Some(&start)).map_err(Into::into))?;
    let t_solv = solve_start.elapsed().as_secs_f64();

    match res.status {
        MilpStatus::Optimal | MilpStatus::Feasible => {}
        MilpStatus::Infeasible => {
            return Err(CliError::Internal(anyhow!("model reported infeasible")))
        }
        MilpStatus::LimitReached => {
            return Err(CliError::Limit("no incumbent before the limit".into()))
        }
    }
    let centers =
        internal(extract_centers(&varmap, &res, spec.family, inst.p).map_err(Into::into))?;
    let sol = internal(evaluate_centers(inst, &centers).map_err(Into::into))?;
    if res.status == MilpStatus::Optimal {
        let drift = (sol.objective - res.value).abs() / res.value.abs().max(1.0);
        if drift > 1e-6 {
            return Err(CliError::Internal(anyhow!(
                "incumbent objective {} does not match its center set value {}",
                res.value,
                sol.objective
            )));
        }
    }
    Ok(SolvedSpec {
        status: res.status,
        objective: res.value,
        bound: res.bound,
        lp_value: lp.value,
        nodes: res.nodes,
        centers: centers.sites().iter().map(|i| i + 1).collect(),
        per_stratum_max: sol.per_stratum_max,
        t_prep,
        t_solv,
    })
}

fn status_str(status: MilpStatus) -> &'static str {
    match status {
        MilpStatus::Optimal => "Optimal",
        MilpStatus::Feasible => "Feasible",
        MilpStatus::Infeasible => "Infeasible",
        MilpStatus::LimitReached => "LimitReached",
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let (inst, name) = config(load_instance(&args.inst))?;
    let (spec, mode) = config(build_spec(&args.spec))?;
    let limits = limits_from(args.time_limit, args.node_limit);
    let solved = solve_one(&inst, &spec, mode, &limits)?;
    let report = serde_json::json!({
        "instance": name,
        "n": inst.n(),
        "p": inst.p,
        "formulation": spec.name(),
        "preprocess": mode.as_str(),
        "status": status_str(solved.status),
        "objective": solved.objective,
        "best_bound": solved.bound,
        "lp_value": solved.lp_value,
        "nodes": solved.nodes,
        "centers": solved.centers,
        "per_stratum_max": solved.per_stratum_max,
        "timings": {
            "t_prep": solved.t_prep,
            "t_solv": solved.t_solv,
            "t_total": solved.t_prep + solved.t_solv,
        },
    });
    let mut text = serde_json::to_string_pretty(&report).expect("serialize");
    text.push('\n');
    config(write_output(&args.out, &text))?;
    if solved.status != MilpStatus::Optimal {
        return Err(CliError::Limit(format!("status {}", status_str(solved.status))));
    }
    Ok(())
}

fn collect_instances(
    instances: &[PathBuf],
    matrices: &[PathBuf],
    strata: &Option<PathBuf>,
    gen_strata: &Option<String>,
    weights: &Option<String>,
    p: Option<usize>,
) -> Result<Vec<(Instance, String)>> {
    let mut out = Vec::new();
    for path in instances {
        let args = InstanceArgs {
            instance: Some(path.clone()),
            matrix: None,
            strata: strata.clone(),
            gen_strata: gen_strata.clone(),
            weights: weights.clone(),
            p,
        };
        out.push(load_instance(&args)?);
    }
    for path in matrices {
        let args = InstanceArgs {
            instance: None,
            matrix: Some(path.clone()),
            strata: strata.clone(),
            gen_strata: gen_strata.clone(),
            weights: weights.clone(),
            p,
        };
        out.push(load_instance(&args)?);
    }
    if out.is_empty() {
        bail!("no instances given");
    }
    Ok(out)
}

fn parse_spec_list(raw: &str) -> Result<Vec<(FormulationSpec, PreprocessMode)>> {
    if raw == "all" {
        let mut specs: Vec<(FormulationSpec, PreprocessMode)> = FormulationSpec::all_base()
            .into_iter()
            .map(|s| (s, PreprocessMode::None))
            .collect();
        specs.push((
            FormulationSpec::f5(spcp_core::F5Linking::Agg53).with_relax_z(),
            PreprocessMode::None,
        ));
        return Ok(specs);
    }
    raw.split(',')
        .map(|name| Ok((FormulationSpec::parse(name.trim())?, PreprocessMode::None)))
        .collect()
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let cases = config(collect_instances(
        &args.instance,
        &args.matrix,
        &args.strata,
        &args.gen_strata,
        &args.weights,
        args.p,
    ))?;
    let specs = config(parse_spec_list(&args.formulations))?;
    let limits = limits_from(args.time_limit, None);

    let mut csv = String::from(
        "instance,n,p,spec,status,optimum,lp_value,lp_gap_pct,nodes,t_prep,t_solv,t_total\n",
    );
    for (inst, name) in &cases {
        let mut reference: Option<f64> = None;
        for (spec, mode) in &specs {
            let solved = solve_one(inst, spec, *mode, &limits)?;
            let gap = match lp_gap(solved.objective, solved.lp_value) {
                Ok(g) => format!("{g:.4}"),
                Err(_) => String::new(),
            };
            writeln!(
                csv,
                "{},{},{},{},{},{:.6},{:.6},{},{},{:.4},{:.4},{:.4}",
                name,
                inst.n(),
                inst.p,
                spec.name(),
                status_str(solved.status),
                solved.objective,
                solved.lp_value,
                gap,
                solved.nodes,
                solved.t_prep,
                solved.t_solv,
                solved.t_prep + solved.t_solv
            )
            .expect("write to string");
            if solved.status == MilpStatus::Optimal {
                match reference {
                    None => reference = Some(solved.objective),
                    Some(expect) => {
                        let rel = (solved.objective - expect).abs() / expect.abs().max(1.0);
                        if rel > 1e-6 {
                            return Err(CliError::Internal(anyhow!(
                                "optimum disagreement on {name}: {} gives {}, expected {expect}",
                                spec.name(),
                                solved.objective
                            )));
                        }
                    }
                }
            }
        }
    }
    config(write_output(&args.out, &csv))
}

fn cmd_preprocess_stats(args: StatsArgs) -> Result<(), CliError> {
    let cases = config(collect_instances(
        &args.instance,
        &args.matrix,
        &args.strata,
        &args.gen_strata,
        &args.weights,
        args.p,
    ))?;
    let mut csv = String::from("instance,n,p,pct_z,pct_u_lp,pct_u_binary\n");
    for (inst, name) in &cases {
        let idx = DistanceIndex::build(inst);
        let classic = internal(
            stratum_lbs(inst, &idx, BoundMethod::ClassicRelaxation)
                .and_then(|lbs| lb_fixings(inst, &idx, &lbs))
                .map_err(Into::into),
        )?;
        let binary = internal(
            stratum_lbs(inst, &idx, BoundMethod::Binary)
                .and_then(|lbs| lb_fixings(inst, &idx, &lbs))
                .map_err(Into::into),
        )?;
        let s_classic = reduction_stats(&idx, &classic);
        let s_binary = reduction_stats(&idx, &binary);
        writeln!(
            csv,
            "{},{},{},{:.4},{:.4},{:.4}",
            name,
            inst.n(),
            inst.p,
            s_classic.pct_z_fixed,
            s_classic.pct_u_fixed,
            s_binary.pct_u_fixed
        )
        .expect("write to string");
    }
    config(write_output(&args.out, &csv))
}

fn cmd_saa(args: SaaArgs) -> Result<(), CliError> {
    let (dm, p_default, name) = config(load_distances(&args.instance, &args.matrix))?;
    let q_text = config(
        fs::read_to_string(&args.q).with_context(|| format!("reading {}", args.q.display())),
    )?;
    let q: Vec<f64> = config(
        q_text
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| anyhow!("bad probability {t:?}: {e}")))
            .collect::<Result<_>>(),
    )?;
    let p = config(
        args.p
            .or(p_default)
            .ok_or_else(|| anyhow!("--p is required with --matrix")),
    )?;
    let ppcp = config(PpcpInstance::new(dm, p, q).map_err(Into::into))?;

    let solver = if args.spcp == "combinatorial" {
        ScenarioSolver::Combinatorial
    } else {
        let spec = config(FormulationSpec::parse(&args.spcp).map_err(Into::into))?;
        let mode = config(
            PreprocessMode::parse(&args.preprocess)
                .ok_or_else(|| anyhow!("unknown preprocessing mode {:?}", args.preprocess)),
        )?;
        ScenarioSolver::Milp { spec, preprocess: mode }
    };
    let params = SaaParams {
        m: args.m,
        max_iters: args.iters,
        solver,
        seed: args.seed,
        ..Default::default()
    };
    let start = Instant::now();
    let report = internal(saa_run(&ppcp, &params).map_err(Into::into))?;
    let wall = start.elapsed().as_secs_f64();

    let mut csv = String::from(
        "iter,scenario_seed,distinct_scenarios,sampled_value,exact_value,incumbent_value,error\n",
    );
    for it in &report.iterations {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            it.iter,
            it.scenario_seed,
            it.distinct_scenarios,
            it.sampled_value,
            it.exact_value,
            it.incumbent_value,
            it.error.clone().unwrap_or_default()
        )
        .expect("write to string");
    }

    // Exact reference when enumeration is affordable.
    let exact = if binomial(ppcp.n(), ppcp.p) <= 200_000 {
        Some(internal(exact_ppcp_capped(&ppcp, 200_000).map_err(Into::into))?)
    } else {
        None
    };
    let mut summary = serde_json::json!({
        "instance": name,
        "n": ppcp.n(),
        "p": ppcp.p,
        "m": report.m,
        "seed": report.seed,
        "iters_run": report.iters_run,
        "converged": report.converged,
        "best_exact": report.best_exact,
        "best_centers": report.best_centers.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "mean_sampled": report.mean_sampled,
        "stderr_sampled": report.stderr_sampled,
        "gap_pct": report.gap_pct,
        "warnings": report.warnings,
        "timings": { "t_total": wall },
    });
    if let Some(sol) = exact {
        let gap = if sol.objective != 0.0 {
            100.0 * (report.best_exact - sol.objective) / sol.objective
        } else {
            0.0
        };
        summary["exact_optimum"] = serde_json::json!(sol.objective);
        summary["gap_vs_exact_pct"] = serde_json::json!(gap);
    }
    let mut json_text = serde_json::to_string_pretty(&summary).expect("serialize");
    json_text.push('\n');

    match &args.out {
        Some(prefix) => {
            let csv_path = prefix.with_extension("csv");
            let json_path = prefix.with_extension("json");
            config(
                fs::write(&csv_path, &csv)
                    .with_context(|| format!("writing {}", csv_path.display())),
            )?;
            config(
                fs::write(&json_path, &json_text)
                    .with_context(|| format!("writing {}", json_path.display())),
            )?;
        }
        None => {
            print!("{csv}");
            print!("{json_text}");
        }
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    let (inst, _) = config(load_instance(&args.inst))?;
    let (mut spec, mode) = config(build_spec(&args.spec))?;
    let idx = DistanceIndex::build(&inst);
    spec.fixings = internal(compute_fixset(&inst, &idx, mode).map_err(Into::into))?;
    let (model, _) = internal(build_formulation(&inst, &idx, &spec).map_err(Into::into))?;
    let mps = internal(export_mps(&model).map_err(Into::into))?;
    config(
        fs::write(&args.out, &mps).with_context(|| format!("writing {}", args.out.display())),
    )?;
    eprintln!(
        "spcp: wrote {} ({} rows, {} columns)",
        args.out.display(),
        model.num_rows(),
        model.num_vars()
    );
    Ok(())
}
