//! `expander`: command-line front end for the decomposition library.
//!
//! Exit status is 0 on success or PASS, 1 on FAIL, 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use expander_core::bench::{
    bench, write_csv, Task, DEFAULT_BETA, DEFAULT_EPSILON, DEFAULT_PHI, DEFAULT_TRIANGLE_EPSILON,
};
use expander_core::config::{resolve_seed, ConstantOverrides, RunConfig, SEED_ENV};
use expander_core::congest::Backend;
use expander_core::expander::expander_decomposition;
use expander_core::generators::GraphSpec;
use expander_core::low_diam::low_diam_decomposition;
use expander_core::rng::{seeded, stream};
use expander_core::sparse_cut::{nearly_balanced_sparse_cut, CutProblem};
use expander_core::triangles::{brute_force_triangles, triangle_enumeration, Triangle, BRUTE_FORCE_MAX};
use expander_core::verify::{verify_decomposition, verify_triangles};
use expander_core::walks::Profile;
use expander_core::{Error, Graph};

#[derive(Parser)]
#[command(name = "expander", version, about = "Simulated CONGEST expander decomposition and friends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph in the edge-list format.
    Gen(GenArgs),
    /// Nearly most balanced sparse cut.
    SparseCut(SparseCutArgs),
    /// Low-diameter decomposition.
    Lowdiam(LowdiamArgs),
    /// Expander decomposition.
    Decompose(DecomposeArgs),
    /// Triangle enumeration.
    Triangles(TrianglesArgs),
    /// Re-check a decomposition or triangle output against its graph.
    Verify(VerifyArgs),
    /// Repeated runs with metrics.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Edge-list file.
    #[arg(long, conflicts_with = "spec")]
    graph: Option<PathBuf>,
    /// Generator spec such as `chain:3:12:1` or `er:40:0.3`.
    #[arg(long)]
    spec: Option<GraphSpec>,
    /// Seed; the EXPANDER_SEED environment variable takes precedence.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
    profile: ProfileArg,
    #[arg(long, value_enum, default_value_t = BackendArg::Charged)]
    backend: BackendArg,
    /// Override of C_H.
    #[arg(long)]
    c_h: Option<f64>,
    /// Override of K_Φ in the Partition bound check.
    #[arg(long)]
    k_phi: Option<f64>,
    /// Override of the router constant C_R.
    #[arg(long)]
    c_r: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Simulated,
    Charged,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    spec: GraphSpec,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SparseCutArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_PHI)]
    phi: f64,
    /// Failure probability; 1/n² when omitted.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct LowdiamArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// The constant K in b = K log₂ n / β.
    #[arg(long = "K")]
    big_k: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
}

#[derive(Args)]
struct TrianglesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_TRIANGLE_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Compare with the brute-force set (up to 2000 vertices).
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// The original graph.
    #[arg(long)]
    graph: PathBuf,
    /// JSON written by `decompose` or `triangles`.
    #[arg(long)]
    input: PathBuf,
    /// Conductance threshold; the output's `phi_k` when omitted.
    #[arg(long)]
    phi: Option<f64>,
    /// Edge budget; the output's `epsilon` when omitted.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_task)]
    task: Task,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Why a command did not succeed.
enum Failure {
    Usage(String),
    Fail(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BadParameter(_)
            | Error::BadEpsilon(_)
            | Error::BadPhi(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::UnknownVertex(_)
            | Error::Infeasible(_)
            | Error::TooLarge { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Fail(e.to_string()),
        }
    }
}

type CmdResult = Result<bool, Failure>;

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

impl Common {
    fn config(&self, command: &str) -> Result<RunConfig, Failure> {
        let seed = resolve_seed(self.seed, env_seed().as_deref())?;
        Ok(RunConfig {
            command: command.into(),
            graph: self.graph.as_ref().map(|p| p.display().to_string()),
            spec: self.spec.clone(),
            profile: match self.profile {
                ProfileArg::Paper => Profile::Paper,
                ProfileArg::Desk => Profile::Desk,
            },
            backend: match self.backend {
                BackendArg::Simulated => Backend::Simulated,
                BackendArg::Charged => Backend::Charged,
            },
            constants: ConstantOverrides { c_h: self.c_h, k_phi: self.k_phi, k_low_diam: None, c_r: self.c_r },
            seed,
            output: self.out.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        })
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn emit_json(out: Option<&PathBuf>, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(out, &text)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("output types serialize")
}

fn gen(args: GenArgs) -> CmdResult {
    let seed = resolve_seed(args.seed, env_seed().as_deref())?;
    let g = args.spec.generate(seed)?;
    emit(args.out.as_ref(), &g.to_text())?;
    Ok(true)
}

fn sparse_cut(args: SparseCutArgs) -> CmdResult {
    let cfg = RunConfig { phi: Some(args.phi), p: args.p, ..args.common.config("sparse-cut")? };
    let g = cfg.load_graph()?;
    let all: Vec<_> = (0..g.n()).collect();
    let work = g.contract(&all);
    let mut net = cfg.network(&g);
    let res = nearly_balanced_sparse_cut(&mut net, CutProblem::whole(&g, &all, &work), args.phi, &cfg.cut_config(), &mut seeded(cfg.seed))?;
    let k_phi = cfg.constants.k_phi.unwrap_or(res.k_phi);
    let log_n = (g.n().max(2) as f64).log2();
    let cut = res.cut.as_ref();
    let conductance = cut.map(|c| c.conductance_as::<f64>());
    let bound_ok = conductance.is_none_or(|c| c <= k_phi * res.phi_internal * log_n);
    let out = json!({
        "cut": cut.map_or(Vec::new(), |c| c.members().to_vec()),
        "phi": conductance,
        "vol": cut.map_or(0, |c| c.volume()),
        "bal": cut.map(|c| c.balance_as::<f64>()),
        "rounds": net.ledger().total().rounds,
        "phi_target": args.phi,
        "phi_internal": res.phi_internal,
        "h_bound": res.h_bound,
        "filtered": res.filtered,
        "K_Φ": k_phi,
        "bound_ok": bound_ok,
        "ledger": net.ledger().to_json(),
        "seed": cfg.seed,
        "config": to_value(&cfg),
    });
    emit_json(args.common.out.as_ref(), &out)?;
    Ok(true)
}

fn lowdiam(args: LowdiamArgs) -> CmdResult {
    let mut cfg = RunConfig { beta: Some(args.beta), trials: args.trials, ..args.common.config("lowdiam")? };
    cfg.constants.k_low_diam = args.big_k;
    let g = cfg.load_graph()?;
    let ld_cfg = cfg.low_diam_config();
    let mut runs = Vec::new();
    for trial in 0..args.trials.max(1) {
        let mut net = cfg.network(&g);
        let out = low_diam_decomposition(&mut net, &g, args.beta, &ld_cfg, &mut stream(cfg.seed, trial as u64))?;
        runs.push(json!({
            "trial": trial,
            "components": out.components,
            "cut_edges": out.cut_edges,
            "max_diameter": out.max_diameter,
            "diameter_bound": out.diameter_bound,
            "rounds": out.rounds,
        }));
    }
    emit_json(args.common.out.as_ref(), &json!({ "runs": runs, "seed": cfg.seed, "config": to_value(&cfg) }))?;
    Ok(true)
}

fn decompose(args: DecomposeArgs) -> CmdResult {
    let cfg = RunConfig { epsilon: Some(args.epsilon), k: args.k, ..args.common.config("decompose")? };
    let g = cfg.load_graph()?;
    let mut net = cfg.network(&g);
    let d = expander_decomposition(&mut net, &g, args.epsilon, args.k, &cfg.decomp_config(), &mut seeded(cfg.seed))?;
    let out = json!({
        "components": d.components,
        "removed": d.removed,
        "epsilon": d.epsilon,
        "phi_k": d.phi_k,
        "constants": {
            "C_H": d.constants.c_h,
            "K_Φ": cfg.constants.k_phi.unwrap_or(d.constants.k_phi),
            "profile": d.constants.profile,
            "low_diam_K": d.constants.low_diam_k,
            "low_diam_f": d.constants.low_diam_f,
            "small_volume": d.constants.small_volume,
        },
        "rounds": d.rounds,
        "messages": d.messages,
        "params": d.params,
        "max_depth": d.max_depth,
        "phase2": d.phase2,
        "certificates": d.certificates,
        "seed": cfg.seed,
        "config": to_value(&cfg),
    });
    emit_json(args.common.out.as_ref(), &out)?;
    Ok(true)
}

fn triangles(args: TrianglesArgs) -> CmdResult {
    let cfg = RunConfig { epsilon: Some(args.epsilon), k: args.k, ..args.common.config("triangles")? };
    let g = cfg.load_graph()?;
    let mut net = cfg.network(&g);
    let run = triangle_enumeration(&mut net, &g, args.epsilon, args.k, &cfg.triangle_config(), &mut seeded(cfg.seed))?;
    let verified = if args.verify && g.n() <= BRUTE_FORCE_MAX {
        let oracle = brute_force_triangles(&g)?;
        Some(verify_triangles(&g, &run.triangles, Some(&oracle)).pass)
    } else {
        None
    };
    let out = json!({
        "count": run.triangles.len(),
        "levels": run.levels,
        "rounds_charged": run.rounds_charged,
        "rounds_total": run.rounds_total,
        "verified": verified,
        "triangles": run.triangles,
        "reporters": run.reporters,
        "seed": cfg.seed,
        "config": to_value(&cfg),
    });
    emit_json(args.common.out.as_ref(), &out)?;
    Ok(verified != Some(false))
}

fn malformed(what: &str) -> Failure {
    Failure::Fail(Error::Malformed(what.into()).to_string())
}

fn verify(args: VerifyArgs) -> CmdResult {
    let g = Graph::read_file(&args.graph)?;
    let text = fs::read_to_string(&args.input).map_err(|e| Failure::Usage(format!("{}: {e}", args.input.display())))?;
    let output: Value = serde_json::from_str(&text).map_err(|e| malformed(&e.to_string()))?;
    let report = if let Some(components) = output.get("components") {
        let components: Vec<Vec<usize>> =
            serde_json::from_value(components.clone()).map_err(|_| malformed("components must be lists of vertex IDs"))?;
        let epsilon = args.epsilon.or(output["epsilon"].as_f64()).ok_or_else(|| malformed("no epsilon"))?;
        let phi = args.phi.or(output["phi_k"].as_f64()).ok_or_else(|| malformed("no phi_k"))?;
        let claimed = output.get("removed").and_then(|r| {
            ["r1", "r2", "r3"].iter().map(|k| r.get(k).and_then(Value::as_u64)).sum::<Option<u64>>().map(|x| x as usize)
        });
        let r = verify_decomposition(&g, &components, epsilon, phi, claimed).map_err(|e| Failure::Fail(e.to_string()))?;
        json!({ "kind": "decomposition", "pass": r.pass, "report": to_value(&r) })
    } else if let Some(triples) = output.get("triangles") {
        let triples: Vec<Triangle> =
            serde_json::from_value(triples.clone()).map_err(|_| malformed("triangles must be vertex triples"))?;
        let oracle = if g.n() <= BRUTE_FORCE_MAX { Some(brute_force_triangles(&g)?) } else { None };
        let r = verify_triangles(&g, &triples, oracle.as_deref());
        json!({ "kind": "triangles", "pass": r.pass, "report": to_value(&r) })
    } else {
        return Err(malformed("expected a `components` or `triangles` field"));
    };
    emit_json(args.out.as_ref(), &report)?;
    Ok(report["pass"].as_bool() == Some(true))
}

fn run_bench(args: BenchArgs) -> CmdResult {
    let cfg = RunConfig {
        epsilon: args.epsilon,
        k: args.k,
        phi: args.phi,
        beta: args.beta,
        trials: args.trials,
        ..args.common.config("bench")?
    };
    let g = cfg.load_graph()?;
    let report = bench(&cfg, args.task, &g)?;
    match args.format {
        Format::Json => emit_json(args.common.out.as_ref(), &to_value(&report))?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&report.rows, &mut buf)?;
            emit(args.common.out.as_ref(), &String::from_utf8(buf).expect("CSV output is UTF-8"))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::SparseCut(a) => sparse_cut(a),
        Command::Lowdiam(a) => lowdiam(a),
        Command::Decompose(a) => decompose(a),
        Command::Triangles(a) => triangles(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("FAIL");
            ExitCode::from(1)
        }
        Err(Failure::Fail(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
