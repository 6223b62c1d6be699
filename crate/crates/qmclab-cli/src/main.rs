//! `qmclab` — the command-line driver wiring every qmclab module into
//! reproducible, seeded experiments with JSON/CSV artifacts.
//!
//! Exit codes: `0` success, `1` usage error, `2` validation failure
//! (including property reports with violations). Every artifact carries the
//! schema tag `qmclab/1`, the tool version, and — for stochastic runs — the
//! seed and chunk count, so identical invocations reproduce identical bytes.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use qmclab::fourier::dictator_test_parameters;
use qmclab::graph::{bh_error_bound, WeightedGraph};
use qmclab::instances::{
    dictator_assignment, discretized_gaussian_graph, hypercube_loop_weight, noisy_hypercube,
    standard_graph, ug_reduction_graph, UgInstance,
};
use qmclab::quantum::{build_hamiltonian, max_energy, product_state_value, EigMethod};
use qmclab::rounding::{empirical_rounding_ratio, empirical_rounding_ratio_with_assignment};
use qmclab::sdp::{
    evaluate_assignment, solve_vector_program, Objective, SolveOptions, UnitVectorAssignment,
};
use qmclab::special::{find_alpha_rho, RatioKind};
use qmclab::spherical::{borell_nk_check, check_key_lemma, default_borell_candidates};

/// Schema tag stamped on every JSON artifact.
const SCHEMA: &str = "qmclab/1";

#[derive(Parser)]
#[command(
    name = "qmclab",
    version,
    about = "Relaxations, rounding, exact diagonalization, and property checks \
             for Quantum Max-Cut style problems",
    propagate_version = true
)]
struct Cli {
    /// RNG seed; recorded in the artifact so reruns are byte-identical.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the artifact to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; csv is available only for flat tables (`constants`).
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    MaxCut,
    Product,
    QuantumMaxCut,
}

impl ObjectiveArg {
    fn to_objective(self) -> Objective {
        match self {
            ObjectiveArg::MaxCut => Objective::MAX_CUT,
            ObjectiveArg::Product => Objective::PRODUCT,
            ObjectiveArg::QuantumMaxCut => Objective::QUANTUM_MAX_CUT,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dense,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceKind {
    Hypercube,
    Gaussian,
}

#[derive(Subcommand)]
enum Command {
    /// Approximation constants (alpha, rho*) of the kMC and GP ratio curves.
    Constants(ConstantsArgs),
    /// Solve the unit-vector relaxation of a graph objective.
    SolveSdp(SolveSdpArgs),
    /// Solve the relaxation, projection-round it, and report the ratio.
    Round(RoundArgs),
    /// Exact maximum energy of a graph's interaction Hamiltonian.
    ExactDiag(ExactDiagArgs),
    /// Best product (Bloch-vector) state by multi-restart ascent.
    ProdOpt(ProdOptArgs),
    /// Build a gap instance: noisy hypercube or discretized Gaussian graph.
    GapInstance(GapInstanceArgs),
    /// Expand a Unique Games instance into its reduction graph.
    UgReduce(UgReduceArgs),
    /// Soundness parameters (gamma, delta, degree) of the dictatorship test.
    DictatorTest(DictatorTestArgs),
    /// Grid check of the key Gegenbauer antiderivative lemma.
    GegenbauerCheck(GegenbauerCheckArgs),
    /// Monte Carlo check of the n-dimensional Borell inequality.
    BorellCheck(BorellCheckArgs),
    /// Additive product-state error bound from endpoint statistics.
    BhBound(BhBoundArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    /// Largest rounding dimension for the kMC family (1MC..kMC).
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Coarse scan spacing in rho.
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
    /// Width of the final refinement bracket in rho.
    #[arg(long, default_value_t = 1e-8)]
    refine_tol: f64,
}

#[derive(Args)]
struct SolveSdpArgs {
    /// Builtin name (single_edge, complete:N, cycle:N) or a graph file.
    #[arg(long)]
    graph: String,
    /// Objective coefficients (a, b).
    #[arg(long, value_enum, default_value_t = ObjectiveArg::QuantumMaxCut)]
    objective: ObjectiveArg,
    /// Embedding dimension; 0 means full rank |V|.
    #[arg(long, default_value_t = 0)]
    rank: usize,
    /// Independent random restarts.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Per-sweep value-gain convergence threshold.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Sweep cap per restart; 0 means automatic.
    #[arg(long, default_value_t = 0)]
    max_iters: usize,
    /// Include the unit-vector assignment in the artifact.
    #[arg(long)]
    emit_vectors: bool,
}

#[derive(Args)]
struct RoundArgs {
    /// Builtin name or a graph file.
    #[arg(long)]
    graph: String,
    /// Objective for the relaxation (rounded value uses its product form).
    #[arg(long, value_enum, default_value_t = ObjectiveArg::QuantumMaxCut)]
    objective: ObjectiveArg,
    /// Projection dimension of the rounding.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Independent rounding trials.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Embedding dimension of the relaxation; 0 means full rank.
    #[arg(long, default_value_t = 0)]
    rank: usize,
    /// Solver restarts.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Solver convergence threshold.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct ExactDiagArgs {
    /// Builtin name or a graph file.
    #[arg(long)]
    graph: String,
    /// Eigensolver: dense (n <= 12 qubits) or iterative Lanczos (n <= 24).
    #[arg(long, value_enum, default_value_t = MethodArg::Dense)]
    method: MethodArg,
    /// Eigenvalue residual tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Include the top eigenvector in the artifact.
    #[arg(long)]
    emit_state: bool,
}

#[derive(Args)]
struct ProdOptArgs {
    /// Builtin name or a graph file.
    #[arg(long)]
    graph: String,
    /// Independent ascent restarts.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Convergence threshold.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Include the Bloch vectors in the artifact.
    #[arg(long)]
    emit_vectors: bool,
}

#[derive(Args)]
struct GapInstanceArgs {
    /// Instance family.
    #[arg(long, value_enum, default_value_t = InstanceKind::Hypercube)]
    kind: InstanceKind,
    /// Hypercube dimension / sphere dimension.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Edge correlation.
    #[arg(long, default_value_t = -0.584, allow_hyphen_values = true)]
    rho: f64,
    /// Keep self-loops instead of conditioning them away.
    #[arg(long)]
    loops: bool,
    /// Net size (gaussian kind only).
    #[arg(long, default_value_t = 40)]
    net_size: usize,
    /// Sampled pairs (gaussian kind only).
    #[arg(long, default_value_t = 200_000)]
    mc_samples: u64,
    /// Vertex splitting multiplicity (gaussian kind only).
    #[arg(long, default_value_t = 1)]
    m_split: usize,
    /// Also write the instance as a graph file.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Evaluate the identity embedding, the dictator, and projection
    /// rounding on the instance.
    #[arg(long)]
    analyze: bool,
    /// Rounding trials for --analyze.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Rounding projection dimension for --analyze.
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args)]
struct UgReduceArgs {
    /// Unique Games instance file (`qmclab-ug v1`); omit for the builtin
    /// satisfiable complete-bipartite identity instance.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Left vertex count of the builtin instance.
    #[arg(long, default_value_t = 4)]
    left: usize,
    /// Right vertex count of the builtin instance.
    #[arg(long, default_value_t = 4)]
    right: usize,
    /// Alphabet size of the builtin instance.
    #[arg(long, default_value_t = 3)]
    labels: usize,
    /// Edge correlation of the reduction graph.
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    /// Keep self-loops instead of conditioning them away.
    #[arg(long)]
    loops: bool,
    /// Also write the reduction graph to a file.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    /// Evaluate the embedded dictator of this coordinate on the reduction.
    #[arg(long)]
    dictator: Option<usize>,
}

#[derive(Args)]
struct DictatorTestArgs {
    /// Completeness slack epsilon in (0, 1).
    #[arg(long)]
    epsilon: f64,
    /// Test correlation in (-1, 0).
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    /// Influence-to-stability constant c(m) of the soundness argument.
    #[arg(long)]
    c_m: f64,
    /// Low-degree level m of the notable-coordinate extraction.
    #[arg(long)]
    m: usize,
}

#[derive(Args)]
struct GegenbauerCheckArgs {
    /// Sphere dimension (alpha = (n-2)/2; needs n >= 3).
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Largest polynomial degree checked.
    #[arg(long, default_value_t = 10)]
    dmax: usize,
    /// Grid spacing in t.
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
}

#[derive(Args)]
struct BorellCheckArgs {
    /// Ambient dimension (function domain and range).
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Correlation in (-1, 0).
    #[arg(long, default_value_t = -0.584, allow_hyphen_values = true)]
    rho: f64,
    /// Correlated Gaussian pairs per candidate.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
}

#[derive(Args)]
struct BhBoundArgs {
    /// Builtin name or a graph file.
    #[arg(long)]
    graph: String,
}

/// Errors with their exit-code class.
enum RunError {
    /// Flag combinations the parser cannot catch; exits 1.
    Usage(String),
    /// Domain/validation failures from the library or I/O; exits 2.
    Validation(String),
}

impl From<qmclab::Error> for RunError {
    fn from(e: qmclab::Error) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Validation(e.to_string())
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

/// A rendered artifact plus whether the run found property violations.
struct Outcome {
    body: Vec<u8>,
    violations: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = write_artifact(&cli.out, &outcome.body) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if outcome.violations {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor flag documentation run `qmclab <COMMAND> --help`.");
            ExitCode::from(1)
        }
        Err(RunError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> RunResult<Outcome> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Constants(_)) {
        return Err(RunError::Usage(
            "--format csv is only available for flat tables (the `constants` command)".into(),
        ));
    }
    match &cli.command {
        Command::Constants(args) => constants(cli, args),
        Command::SolveSdp(args) => solve_sdp(cli, args),
        Command::Round(args) => round(cli, args),
        Command::ExactDiag(args) => exact_diag(cli, args),
        Command::ProdOpt(args) => prod_opt(cli, args),
        Command::GapInstance(args) => gap_instance(cli, args),
        Command::UgReduce(args) => ug_reduce(cli, args),
        Command::DictatorTest(args) => dictator_test(cli, args),
        Command::GegenbauerCheck(args) => gegenbauer_check(cli, args),
        Command::BorellCheck(args) => borell_check(cli, args),
        Command::BhBound(args) => bh_bound(cli, args),
    }
}

// ---------------------------------------------------------------------------
// Artifact plumbing
// ---------------------------------------------------------------------------

/// Serialize a JSON value with every float printed as 17 significant digits
/// in scientific notation, so values round-trip exactly and artifacts are
/// byte-stable across platforms.
fn json_bytes(value: &Value) -> Vec<u8> {
    struct Sci;
    impl serde_json::ser::Formatter for Sci {
        fn write_f64<W: ?Sized + std::io::Write>(
            &mut self,
            writer: &mut W,
            value: f64,
        ) -> std::io::Result<()> {
            write!(writer, "{value:.16e}")
        }
    }
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sci);
    serde::Serialize::serialize(value, &mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

/// Wrap a payload in the versioned artifact envelope.
fn envelope(command: &str, seed: Option<u64>, payload: Map<String, Value>) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::from(SCHEMA));
    map.insert("command".into(), Value::from(command));
    map.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    if let Some(seed) = seed {
        map.insert("seed".into(), Value::from(seed));
    }
    map.extend(payload);
    Value::Object(map)
}

fn write_artifact(out: &Option<PathBuf>, body: &[u8]) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, body),
        None => std::io::stdout().write_all(body),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

/// Resolve `--graph`: an existing file is parsed as `qmclab-graph v1`,
/// anything else must be a builtin family name. The result is normalized.
fn load_graph(spec: &str) -> RunResult<WeightedGraph> {
    let path = Path::new(spec);
    let graph = if path.exists() {
        WeightedGraph::read_text_file(path)?
    } else {
        standard_graph(spec).map_err(|e| {
            RunError::Validation(format!(
                "--graph {spec:?} is neither a readable file nor a builtin graph: {e}"
            ))
        })?
    };
    Ok(graph.normalize_weights()?)
}

/// Strip self-loops for commands whose objectives only see proper edges,
/// reporting the conditioned-away loop mass.
fn strip_loops(graph: WeightedGraph) -> RunResult<(WeightedGraph, f64)> {
    Ok(graph.remove_self_loops()?)
}

fn graph_summary(spec: &str, graph: &WeightedGraph, w_loops: f64) -> Value {
    let mut m = Map::new();
    m.insert("spec".into(), Value::from(spec));
    m.insert("vertices".into(), Value::from(graph.vertex_count()));
    m.insert("edges".into(), Value::from(graph.edge_count()));
    m.insert("loop_weight_removed".into(), Value::from(w_loops));
    Value::Object(m)
}

fn solve_options(
    rank: usize,
    restarts: usize,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> SolveOptions {
    SolveOptions {
        rank: (rank > 0).then_some(rank),
        tol,
        max_iter: (max_iters > 0).then_some(max_iters),
        restarts,
        seed,
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn constants(cli: &Cli, args: &ConstantsArgs) -> RunResult<Outcome> {
    if args.k < 1 {
        return Err(RunError::Usage("--k must be at least 1".into()));
    }
    let mut kinds: Vec<RatioKind> = (1..=args.k).map(RatioKind::KMc).collect();
    kinds.push(RatioKind::Gp);
    let reports = kinds
        .into_iter()
        .map(|kind| find_alpha_rho(kind, args.grid_step, args.refine_tol))
        .collect::<qmclab::Result<Vec<_>>>()?;

    if cli.format == Format::Csv {
        // The flat table: every curve's coarse grid, ready for plotting.
        let mut csv = String::from("name,k,rho,ratio\n");
        for report in &reports {
            let k = match report.kind {
                RatioKind::KMc(k) => k,
                RatioKind::Gp => 3,
            };
            for point in &report.grid {
                csv.push_str(&format!(
                    "{},{},{:.16e},{:.16e}\n",
                    report.name, k, point.rho, point.ratio
                ));
            }
        }
        return Ok(Outcome { body: csv.into_bytes(), violations: false });
    }

    let records: Vec<Value> = reports
        .iter()
        .map(|report| {
            let mut m = Map::new();
            m.insert("name".into(), Value::from(report.name.clone()));
            m.insert(
                "k".into(),
                Value::from(match report.kind {
                    RatioKind::KMc(k) => k,
                    RatioKind::Gp => 3,
                }),
            );
            m.insert("alpha".into(), Value::from(report.alpha));
            m.insert("rho_star".into(), Value::from(report.rho_star));
            Value::Object(m)
        })
        .collect();
    let mut payload = Map::new();
    payload.insert("grid_step".into(), Value::from(args.grid_step));
    payload.insert("refine_tol".into(), Value::from(args.refine_tol));
    payload.insert("records".into(), Value::from(records));
    Ok(Outcome { body: json_bytes(&envelope("constants", None, payload)), violations: false })
}

fn solve_sdp(cli: &Cli, args: &SolveSdpArgs) -> RunResult<Outcome> {
    let (graph, w_loops) = strip_loops(load_graph(&args.graph)?)?;
    let objective = args.objective.to_objective();
    let options = solve_options(args.rank, args.restarts, args.tol, args.max_iters, cli.seed);
    let solution = solve_vector_program(&graph, objective, &options)?;

    let mut payload = Map::new();
    payload.insert("graph".into(), graph_summary(&args.graph, &graph, w_loops));
    payload.insert("objective".into(), Value::from(objective.name()));
    payload.insert("value".into(), Value::from(solution.value));
    payload.insert("rank".into(), Value::from(solution.assignment.rank()));
    payload.insert("iterations".into(), Value::from(solution.iterations));
    payload.insert("residual".into(), Value::from(solution.residual));
    payload.insert("restarts".into(), Value::from(solution.restarts));
    if args.emit_vectors {
        payload.insert("assignment".into(), to_value(&solution.assignment));
    }
    Ok(Outcome {
        body: json_bytes(&envelope("solve-sdp", Some(cli.seed), payload)),
        violations: false,
    })
}

fn round(cli: &Cli, args: &RoundArgs) -> RunResult<Outcome> {
    let (graph, w_loops) = strip_loops(load_graph(&args.graph)?)?;
    let objective = args.objective.to_objective();
    let options = solve_options(args.rank, args.restarts, args.tol, 0, cli.seed);
    let (report, solution) =
        empirical_rounding_ratio(&graph, objective, args.k, args.trials, cli.seed, &options)?;

    let mut payload = Map::new();
    payload.insert("graph".into(), graph_summary(&args.graph, &graph, w_loops));
    payload.insert("chunk_count".into(), Value::from(report.trials));
    payload.insert("report".into(), to_value(&report));
    payload.insert("sdp_iterations".into(), Value::from(solution.iterations));
    payload.insert("sdp_residual".into(), Value::from(solution.residual));
    Ok(Outcome {
        body: json_bytes(&envelope("round", Some(cli.seed), payload)),
        violations: false,
    })
}

fn exact_diag(cli: &Cli, args: &ExactDiagArgs) -> RunResult<Outcome> {
    let (graph, w_loops) = strip_loops(load_graph(&args.graph)?)?;
    let hamiltonian = build_hamiltonian(&graph)?;
    let method = match args.method {
        MethodArg::Dense => EigMethod::Dense,
        MethodArg::Iterative => EigMethod::Iterative,
    };
    let (energy, state) = max_energy(&hamiltonian, method, args.tol, cli.seed)?;

    let mut payload = Map::new();
    payload.insert("graph".into(), graph_summary(&args.graph, &graph, w_loops));
    payload.insert(
        "method".into(),
        Value::from(match args.method {
            MethodArg::Dense => "dense",
            MethodArg::Iterative => "iterative",
        }),
    );
    payload.insert("qubits".into(), Value::from(graph.vertex_count()));
    payload.insert("max_energy".into(), Value::from(energy));
    if args.emit_state {
        payload.insert("state".into(), to_value(&state));
    }
    Ok(Outcome {
        body: json_bytes(&envelope("exact-diag", Some(cli.seed), payload)),
        violations: false,
    })
}

fn prod_opt(cli: &Cli, args: &ProdOptArgs) -> RunResult<Outcome> {
    let (graph, w_loops) = strip_loops(load_graph(&args.graph)?)?;
    let options = SolveOptions {
        tol: args.tol,
        restarts: args.restarts,
        seed: cli.seed,
        ..SolveOptions::default()
    };
    let (value, bloch) = product_state_value(&graph, &options)?;

    let mut payload = Map::new();
    payload.insert("graph".into(), graph_summary(&args.graph, &graph, w_loops));
    payload.insert("value".into(), Value::from(value));
    payload.insert("restarts".into(), Value::from(args.restarts));
    if args.emit_vectors {
        payload.insert("bloch".into(), to_value(&bloch.into_assignment()));
    }
    Ok(Outcome {
        body: json_bytes(&envelope("prod-opt", Some(cli.seed), payload)),
        violations: false,
    })
}

/// Identity-embedding + dictator + rounding analysis shared by the two gap
/// instance families.
fn analyze_instance(
    graph: &WeightedGraph,
    identity: &UnitVectorAssignment,
    dictator_expected: Option<f64>,
    trials: u64,
    k: usize,
    seed: u64,
) -> RunResult<Value> {
    let mut m = Map::new();
    let identity_value = evaluate_assignment(graph, Objective::PRODUCT, identity)?;
    m.insert("identity_product_value".into(), Value::from(identity_value));
    if let Some(expected) = dictator_expected {
        let dict = dictator_assignment(graph, 0)?;
        let value = evaluate_assignment(graph, Objective::PRODUCT, &dict)?;
        m.insert("dictator_product_value".into(), Value::from(value));
        m.insert("dictator_expected".into(), Value::from(expected));
    }
    let report = empirical_rounding_ratio_with_assignment(
        graph,
        Objective::PRODUCT,
        identity,
        k,
        trials,
        seed,
    )?;
    m.insert("rounding".into(), to_value(&report));
    Ok(Value::Object(m))
}

fn gap_instance(cli: &Cli, args: &GapInstanceArgs) -> RunResult<Outcome> {
    let mut payload = Map::new();
    let graph = match args.kind {
        InstanceKind::Hypercube => {
            let graph = noisy_hypercube(args.n, args.rho, args.loops)?;
            let w_loops = if args.loops { 0.0 } else { hypercube_loop_weight(args.n, args.rho) };
            payload.insert("kind".into(), Value::from("hypercube"));
            payload.insert("n".into(), Value::from(args.n));
            payload.insert("rho".into(), Value::from(args.rho));
            payload.insert("loops".into(), Value::from(args.loops));
            payload.insert("loop_weight_removed".into(), Value::from(w_loops));
            if args.analyze {
                let identity = UnitVectorAssignment::hypercube_identity(graph.labels())?;
                let expected = if args.loops {
                    0.25 - args.rho / 4.0
                } else {
                    (0.25 - args.rho / 4.0) / (1.0 - w_loops)
                };
                payload.insert(
                    "analysis".into(),
                    analyze_instance(&graph, &identity, Some(expected), args.trials, args.k, cli.seed)?,
                );
            }
            graph
        }
        InstanceKind::Gaussian => {
            let gg = discretized_gaussian_graph(
                args.n,
                args.rho,
                args.net_size,
                args.mc_samples,
                args.m_split,
                cli.seed,
            )?;
            payload.insert("kind".into(), Value::from("gaussian"));
            payload.insert("meta".into(), to_value(&gg.meta));
            payload.insert("binned_vertices".into(), Value::from(gg.binned.vertex_count()));
            payload.insert("binned_edges".into(), Value::from(gg.binned.edge_count()));
            if args.analyze {
                let identity = gg.identity_assignment()?;
                payload.insert(
                    "analysis".into(),
                    analyze_instance(&gg.graph, &identity, None, args.trials, args.k, cli.seed)?,
                );
            }
            gg.graph
        }
    };
    payload.insert("vertices".into(), Value::from(graph.vertex_count()));
    payload.insert("edges".into(), Value::from(graph.edge_count()));
    if let Some(path) = &args.graph_out {
        graph.write_text_file(path)?;
        payload.insert("graph_out".into(), Value::from(path.display().to_string()));
    }
    Ok(Outcome {
        body: json_bytes(&envelope("gap-instance", Some(cli.seed), payload)),
        violations: false,
    })
}

fn ug_reduce(_cli: &Cli, args: &UgReduceArgs) -> RunResult<Outcome> {
    let instance = match &args.instance {
        Some(path) => UgInstance::read_text_file(path)?,
        None => UgInstance::complete_identity(args.left, args.right, args.labels),
    };
    let graph = ug_reduction_graph(&instance, args.rho, args.loops)?;

    let mut payload = Map::new();
    payload.insert("left".into(), Value::from(instance.left.len()));
    payload.insert("right".into(), Value::from(instance.right.len()));
    payload.insert("label_count".into(), Value::from(instance.label_count));
    payload.insert("constraints".into(), Value::from(instance.edges.len()));
    payload.insert("rho".into(), Value::from(args.rho));
    payload.insert("loops".into(), Value::from(args.loops));
    payload.insert("vertices".into(), Value::from(graph.vertex_count()));
    payload.insert("edges".into(), Value::from(graph.edge_count()));
    if let Some(coord) = args.dictator {
        let dict = dictator_assignment(&graph, coord)?;
        let value = evaluate_assignment(&graph, Objective::PRODUCT, &dict)?;
        payload.insert("dictator_coord".into(), Value::from(coord));
        payload.insert("dictator_product_value".into(), Value::from(value));
    }
    if let Some(path) = &args.graph_out {
        graph.write_text_file(path)?;
        payload.insert("graph_out".into(), Value::from(path.display().to_string()));
    }
    Ok(Outcome { body: json_bytes(&envelope("ug-reduce", None, payload)), violations: false })
}

fn dictator_test(_cli: &Cli, args: &DictatorTestArgs) -> RunResult<Outcome> {
    let params = dictator_test_parameters(args.epsilon, args.rho, args.c_m, args.m)?;
    let mut payload = Map::new();
    payload.insert("epsilon".into(), Value::from(args.epsilon));
    payload.insert("rho".into(), Value::from(args.rho));
    payload.insert("c_m".into(), Value::from(args.c_m));
    payload.insert("m".into(), Value::from(args.m));
    payload.insert("parameters".into(), to_value(&params));
    Ok(Outcome { body: json_bytes(&envelope("dictator-test", None, payload)), violations: false })
}

fn gegenbauer_check(_cli: &Cli, args: &GegenbauerCheckArgs) -> RunResult<Outcome> {
    if args.n < 3 {
        return Err(RunError::Validation(format!(
            "the closed-form antiderivative needs n >= 3, got {}",
            args.n
        )));
    }
    let alpha = (args.n as f64 - 2.0) / 2.0;
    let report = check_key_lemma(alpha, args.dmax, args.grid_step)?;
    let violations = !report.pass;
    let mut payload = Map::new();
    payload.insert("n".into(), Value::from(args.n));
    payload.insert("report".into(), to_value(&report));
    Ok(Outcome { body: json_bytes(&envelope("gegenbauer-check", None, payload)), violations })
}

fn borell_check(cli: &Cli, args: &BorellCheckArgs) -> RunResult<Outcome> {
    let candidates = default_borell_candidates(args.n);
    let report = borell_nk_check(args.n, args.rho, &candidates, args.samples, cli.seed)?;
    let violations = !report.all_pass;
    let mut payload = Map::new();
    payload.insert("chunk_count".into(), Value::from(report.chunk_count));
    payload.insert("report".into(), to_value(&report));
    Ok(Outcome {
        body: json_bytes(&envelope("borell-check", Some(cli.seed), payload)),
        violations,
    })
}

fn bh_bound(_cli: &Cli, args: &BhBoundArgs) -> RunResult<Outcome> {
    let graph = load_graph(&args.graph)?;
    let stats = graph.bh_stats()?;
    let bound = bh_error_bound(&stats);
    let mut payload = Map::new();
    payload.insert("graph".into(), graph_summary(&args.graph, &graph, 0.0));
    payload.insert("stats".into(), to_value(&stats));
    payload.insert("bound".into(), Value::from(bound));
    Ok(Outcome { body: json_bytes(&envelope("bh-bound", None, payload)), violations: false })
}
