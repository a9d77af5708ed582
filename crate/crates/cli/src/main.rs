//! `nuot`: generate problems, run the fast and dense Sinkhorn solvers,
//! compare them, and time them across sizes.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nonuniform_ot::bench::{
    compare, plan_to_csv, solve, sweep, time_to_error, BenchReport, ProblemDescriptor, Variant, DEFAULT_EPSILONS,
    DEFAULT_THRESHOLDS,
};
use nonuniform_ot::problem::{generate, load_problem, reweight, GenSpec, NodeKind, Problem};
use nonuniform_ot::SolverConfig;

#[derive(Parser)]
#[command(name = "nuot", version, about = "Linear-time Sinkhorn for W1 on non-uniform meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated problem file.
    Gen(GenArgs),
    /// Solve one problem and write a report.
    Solve(SolveArgs),
    /// Run the fast and dense solvers on the same problem.
    Compare(CompareArgs),
    /// Time solvers across sizes and fit log-log exponents.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Nodes {
    Chebyshev,
    Random,
    /// Node lists from `--input`, weights redrawn from `--seed`.
    File,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    Finom,
    Dense,
    Both,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Problem file to load.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: Option<u8>,
    /// Defaults to chebyshev in 1D and random in 2D.
    #[arg(long, alias = "gen")]
    nodes: Option<Nodes>,
    #[arg(long)]
    n: Option<usize>,
    /// Target size in 1D, second grid axis in 2D (defaults to `n`).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    stabilize: Switch,
    #[arg(long, default_value_t = 200.0)]
    absorb_threshold: f64,
    #[arg(long, default_value_t = 1)]
    check_every: usize,
    /// Largest dense kernel or plan, in entries.
    #[arg(long, default_value_t = nonuniform_ot::dense::DEFAULT_SIZE_CAP)]
    plan_cap: usize,
}

impl SolverArgs {
    fn config(&self, default_tol: f64) -> SolverConfig {
        SolverConfig {
            epsilon: self.eps,
            itr_max: self.iters,
            tol: self.tol.unwrap_or(default_tol),
            stabilize: self.stabilize == Switch::On,
            absorb_threshold: self.absorb_threshold,
            check_every: self.check_every,
            plan_cap: self.plan_cap,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write node/weight columns as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = SolverChoice::Finom)]
    variant: SolverChoice,
    /// Write the dense plan as CSV (subject to `--plan-cap`).
    #[arg(long)]
    plan_dump: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), default_value_t = 1)]
    dim: u8,
    /// Node layout in 1D; 2D grids always use random nodes.
    #[arg(long, alias = "gen", value_enum, default_value_t = Nodes::Chebyshev)]
    nodes: Nodes,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated sizes (`N` in 1D, `N` of an `N × N` grid in 2D).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = SolverChoice::Finom)]
    variant: SolverChoice,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Record when the marginal error crosses each threshold instead of sweeping sizes.
    #[arg(long)]
    time_to_error: bool,
    /// Problem size for `--time-to-error`.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    eps_list: Vec<f64>,
    /// CSV table of the sweep or crossing times.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Bad flag combination; exits with status 2 like a parse error.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn node_kind(nodes: Nodes) -> NodeKind {
    match nodes {
        Nodes::Random => NodeKind::Random,
        _ => NodeKind::Chebyshev,
    }
}

fn variants(choice: SolverChoice) -> Vec<Variant> {
    match choice {
        SolverChoice::Finom => vec![Variant::Finom],
        SolverChoice::Dense => vec![Variant::Dense],
        SolverChoice::Both => vec![Variant::Finom, Variant::Dense],
    }
}

fn load(args: &ProblemArgs) -> Result<(Problem, ProblemDescriptor)> {
    if let Some(path) = &args.input {
        let problem = load_problem(path).with_context(|| format!("loading {}", path.display()))?;
        if args.nodes == Some(Nodes::File) {
            let problem = reweight(&problem, args.seed)?;
            let d = ProblemDescriptor::from_problem(&problem, path.display().to_string(), Some(args.seed));
            return Ok((problem, d));
        }
        let d = ProblemDescriptor::from_problem(&problem, path.display().to_string(), None);
        return Ok((problem, d));
    }
    let dim = args.dim.unwrap_or(1);
    let nodes = match args.nodes {
        Some(Nodes::File) => return Err(usage("--nodes file requires --input")),
        Some(nodes) => nodes,
        None if dim == 2 => Nodes::Random,
        None => Nodes::Chebyshev,
    };
    let Some(n) = args.n else {
        return Err(usage("no problem given: pass --input FILE or --n SIZE"));
    };
    if n == 0 || args.m == Some(0) {
        return Err(usage("--n and --m must be at least 1"));
    }
    let spec = GenSpec { dim, n, m: args.m.unwrap_or(n), nodes: node_kind(nodes), seed: args.seed };
    let problem = generate(&spec)?;
    Ok((problem, ProblemDescriptor::generated(&spec)))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "{text}").context("writing to stdout")
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let (problem, _) = load(&args.problem)?;
    write_out(args.output.as_deref(), &problem.to_json()?)?;
    if let Some(csv) = &args.csv {
        fs::write(csv, problem.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let (problem, descriptor) = load(&args.problem)?;
    let config = args.solver.config(1e-9);
    let mut report = BenchReport::new("solve", &config);
    for (k, variant) in variants(args.variant).into_iter().enumerate() {
        let dump = if k == 0 { args.plan_dump.as_ref() } else { None };
        let out = solve(&problem, variant, &config, dump.is_some())?;
        if let (Some(path), Some(plan)) = (dump, &out.plan) {
            fs::write(path, plan_to_csv(plan)).with_context(|| format!("writing {}", path.display()))?;
        }
        report.records.push(nonuniform_ot::bench::record(&descriptor, &problem, variant, 0, &config, &out));
    }
    write_out(args.output.as_deref(), &report.to_json()?)
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let (problem, descriptor) = load(&args.problem)?;
    let config = args.solver.config(0.0);
    let (summary, records) = compare(&problem, &descriptor, &config, args.trials)?;
    let mut report = BenchReport::new("compare", &config);
    report.records = records;
    report.compare = Some(summary);
    write_out(args.output.as_deref(), &report.to_json()?)
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let config = args.solver.config(0.0);
    if args.nodes == Nodes::File {
        return Err(usage("bench generates its own problems; --nodes file is not supported here"));
    }
    let kind = if args.dim == 2 { NodeKind::Random } else { node_kind(args.nodes) };
    let template = GenSpec { dim: args.dim, n: 0, m: 0, nodes: kind, seed: args.seed };
    let mut report = BenchReport::new("bench", &config);
    let mut csv = String::new();

    if args.time_to_error {
        let Some(n) = args.n else {
            return Err(usage("--time-to-error needs --n"));
        };
        let problem = generate(&GenSpec { n, m: n, ..template })?;
        let eps = if args.eps_list.is_empty() { DEFAULT_EPSILONS.to_vec() } else { args.eps_list.clone() };
        let thr = if args.thresholds.is_empty() { DEFAULT_THRESHOLDS.to_vec() } else { args.thresholds.clone() };
        csv.push_str("solver,epsilon,threshold,iteration,time\n");
        for variant in variants(args.variant) {
            let rows = time_to_error(&problem, variant, &eps, &thr, &config)?;
            for r in &rows {
                let it = r.iteration.map(|i| i.to_string()).unwrap_or_default();
                let t = r.time.map(|t| format!("{t:?}")).unwrap_or_default();
                csv.push_str(&format!("{},{:?},{:?},{it},{t}\n", variant.name(), r.epsilon, r.threshold));
            }
            report.time_to_error.extend(rows);
        }
    } else {
        if args.sizes.is_empty() {
            return Err(usage("--sizes is required (at least four sizes)"));
        }
        for variant in variants(args.variant) {
            let (summary, records) = sweep(&template, &args.sizes, variant, &config, args.trials)?;
            let table = summary.to_csv();
            if csv.is_empty() {
                csv.push_str(&table);
            } else {
                csv.extend(table.lines().skip(1).map(|l| format!("{l}\n")));
            }
            report.records.extend(records);
            report.sweeps.push(summary);
        }
    }
    if let Some(path) = &args.csv {
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    write_out(args.output.as_deref(), &report.to_json()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
