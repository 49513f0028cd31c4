use std::fs;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qbacktrack::classical::{backtrack_solve, bench_heuristics, build_tree, DEFAULT_TREE_CAP};
use qbacktrack::csp::parse_dimacs;
use qbacktrack::driver::{acceptance_sweep, detect, find_in_tree, DetectionConfig};
use qbacktrack::walk::WalkOptions;
use qbacktrack::{
    Backend, BacktrackTree, ClassicalError, CspInstance, DriverError, Heuristic, Mode, ProblemKind,
    VariableOrder, WalkError,
};

/// Quantum backtracking on graph coloring and SAT instances.
#[derive(Parser, Debug)]
#[command(name = "qbacktrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical depth-first backtracking.
    Solve(SolveArgs),
    /// Detection on the tree root or a labelled subtree.
    Detect(DetectArgs),
    /// Detect-and-descend search for a solution; prints JSON.
    Find(FindArgs),
    /// Acceptance probability per root label and precision; prints CSV.
    Sweep(SweepArgs),
    /// Mean detection calls per heuristic on random graphs; prints CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// DIMACS graph (`p edge`/`p col`) or CNF (`p cnf`) file.
    input: PathBuf,
    /// Number of colors for graph inputs.
    #[arg(long)]
    colors: Option<usize>,
    #[arg(long, default_value = "naive")]
    heuristic: Heuristic,
}

#[derive(Args, Debug)]
struct TreeArgs {
    /// Only build the branch where the first ordered variable takes this
    /// value.
    #[arg(long = "fix-first")]
    fix_first: Option<usize>,
    /// Largest tree to build.
    #[arg(long = "tree-cap", default_value_t = DEFAULT_TREE_CAP)]
    tree_cap: usize,
}

#[derive(Args, Debug)]
struct DetectionArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Tree)]
    backend: BackendArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Phase-estimation bits; defaults to the size-derived value plus 2.
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 4.0)]
    gamma: f64,
    /// Allowed failure probability.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Repetition count, replacing the one derived from gamma and delta.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[command(flatten)]
    detection: DetectionArgs,
    /// Subtree root, e.g. `a` or `a12`.
    #[arg(long, default_value = "a")]
    label: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FindArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[command(flatten)]
    detection: DetectionArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[arg(long, value_enum, default_value_t = BackendArg::Tree)]
    backend: BackendArg,
    /// A single precision `N` or an inclusive range `a..b`.
    #[arg(long, default_value = "1..8")]
    bits: BitsRange,
    /// Subtree roots; repeat for several.
    #[arg(long = "label", default_value = "a")]
    labels: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    colors: usize,
    /// Comma-separated edge counts; defaults to five counts spread over the
    /// possible range.
    #[arg(long, value_delimiter = ',')]
    edges: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Tree,
    Circuit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Debug)]
struct BitsRange(RangeInclusive<u32>);

impl FromStr for BitsRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad precision {t:?}"))
        };
        let range = match s.split_once("..") {
            Some((a, b)) => num(a)?..=num(b.trim_start_matches('='))?,
            None => {
                let b = num(s)?;
                b..=b
            }
        };
        if *range.start() == 0 || range.start() > range.end() {
            return Err(format!(
                "precision range {s:?} must be nonempty and start at 1 or more"
            ));
        }
        Ok(BitsRange(range))
    }
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Tree => Backend::Tree,
            BackendArg::Circuit => Backend::Circuit,
        }
    }
}

/// Error with the process exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            msg: msg.into(),
        }
    }
}

impl From<ClassicalError> for Failure {
    fn from(e: ClassicalError) -> Self {
        let code = match e {
            ClassicalError::TreeCap { .. } => 2,
            ClassicalError::Input(_) => 1,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        let code = match &e {
            DriverError::Tree(ClassicalError::TreeCap { .. })
            | DriverError::Walk(WalkError::Resource(_)) => 2,
            DriverError::Inconclusive { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Find(a) => cmd_find(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &InputArgs) -> Result<(CspInstance, VariableOrder), Failure> {
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.input.display())))?;
    let inst = parse_dimacs(&text, args.colors).map_err(|e| Failure::usage(e.to_string()))?;
    let order = args.heuristic.order(&inst);
    Ok((inst, order))
}

fn load_tree(input: &InputArgs, tree: &TreeArgs) -> Result<BacktrackTree, Failure> {
    let (inst, order) = load(input)?;
    Ok(build_tree(&inst, &order, tree.fix_first, tree.tree_cap)?)
}

fn emit(out: &OutputArgs, text: &str) -> Outcome {
    match &out.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn format_of(out: &OutputArgs, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = out.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::usage(format!("format {f:?} not available here")))
    }
}

fn detection_config(a: &DetectionArgs, tree_cap: usize) -> DetectionConfig {
    DetectionConfig {
        beta: a.beta,
        gamma: a.gamma,
        delta_fail: a.delta,
        k_override: a.k,
        bits: a.bits,
        mode: match a.mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sample => Mode::Sample,
        },
        backend: a.backend.into(),
        seed: a.seed,
        tree_cap,
        ..DetectionConfig::default()
    }
}

/// Values as printed: colors as-is, SAT variables as signed DIMACS literals.
fn render(inst: &CspInstance, values: &[usize]) -> String {
    let parts: Vec<String> = match inst.kind() {
        ProblemKind::GraphColoring => values.iter().map(|v| v.to_string()).collect(),
        ProblemKind::Sat => values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v == 2 {
                    format!("{}", i + 1)
                } else {
                    format!("-{}", i + 1)
                }
            })
            .collect(),
    };
    parts.join(" ")
}

fn cmd_solve(a: SolveArgs) -> Outcome {
    let (inst, order) = load(&a.input)?;
    let solution = backtrack_solve(&inst, &order);
    let text = match format_of(&a.output, Format::Text, &[Format::Text, Format::Json])? {
        Format::Json => {
            let v = json!({
                "status": if solution.is_some() { "solution" } else { "none" },
                "assignment": solution.as_ref().map(|s| s.values().to_vec()),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        _ => match &solution {
            Some(s) => format!("solution: {}\n", render(&inst, s.values())),
            None => "no solution\n".to_string(),
        },
    };
    emit(&a.output, &text)
}

fn cmd_detect(a: DetectArgs) -> Outcome {
    let tree = load_tree(&a.input, &a.tree)?;
    let v = tree
        .find_label(&a.label)
        .ok_or_else(|| DriverError::UnknownLabel(a.label.clone()))?;
    let cfg = detection_config(&a.detection, a.tree.tree_cap);
    let r = detect(&tree, v, &cfg)?;
    let text = match format_of(&a.output, Format::Text, &[Format::Text, Format::Json])? {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&r).expect("json")),
        _ => {
            let mut s = format!(
                "label {}\nsubtree size {}\nprecision bits {}\np_accept {:.6}\n",
                r.label, r.subtree_size, r.bits, r.p_accept
            );
            if let Some(c) = r.accept_count {
                s.push_str(&format!("accepted {c} of {}\n", r.k));
            }
            s.push_str(&format!("verdict {}\n", r.verdict));
            s
        }
    };
    emit(&a.output, &text)
}

fn cmd_find(a: FindArgs) -> Outcome {
    format_of(&a.output, Format::Json, &[Format::Json])?;
    let tree = load_tree(&a.input, &a.tree)?;
    let cfg = detection_config(&a.detection, a.tree.tree_cap);
    let r = find_in_tree(&tree, &cfg)?;
    emit(&a.output, &format!("{}\n", r.to_json()))
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let tree = load_tree(&a.input, &a.tree)?;
    let table = acceptance_sweep(
        &tree,
        &a.labels,
        a.bits.0.clone(),
        a.backend.into(),
        &WalkOptions::default(),
    )?;
    let text = match format_of(&a.output, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&table.rows).expect("json")
        ),
        _ => table.to_csv(),
    };
    emit(&a.output, &text)
}

/// Five edge counts spread over `1..=n(n-1)/2`.
fn default_edge_counts(n: usize) -> Vec<usize> {
    let max = n * n.saturating_sub(1) / 2;
    let mut counts: Vec<usize> = (1..=5).map(|k| max * k / 6).filter(|&e| e > 0).collect();
    counts.dedup();
    counts
}

fn cmd_bench(a: BenchArgs) -> Outcome {
    let edges = if a.edges.is_empty() {
        default_edge_counts(a.nodes)
    } else {
        a.edges.clone()
    };
    let result = bench_heuristics(a.nodes, a.colors, &edges, a.samples, a.seed)?;
    let text = match format_of(&a.output, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&result.rows).expect("json")
        ),
        _ => result.to_csv(),
    };
    emit(&a.output, &text)
}
