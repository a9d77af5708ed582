//! Timing harness behind the command-line tool: single solves, fast vs
//! dense comparisons, size sweeps with log-log fits, and time-to-error runs.

use std::time::Duration;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dense::{dense_sinkhorn_1d, dense_sinkhorn_2d, frobenius_diff};
use crate::error::{Error, Result};
use crate::problem::{generate, GenSpec, NodeKind, Problem};
use crate::solver::{plan_dense, sinkhorn_1d, sinkhorn_2d, ErrorRecord, SinkhornKernel, Solution, SolverConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Minimum number of distinct sizes for an exponent fit.
pub const MIN_FIT_SIZES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Finom,
    Dense,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Finom => "finom",
            Variant::Dense => "dense",
        }
    }
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub dim: u8,
    pub n: usize,
    pub m: usize,
    /// `chebyshev`, `random`, or the input file path.
    pub source: String,
    pub seed: Option<u64>,
}

impl ProblemDescriptor {
    pub fn generated(spec: &GenSpec) -> Self {
        let source = match spec.nodes {
            NodeKind::Chebyshev => "chebyshev",
            NodeKind::Random => "random",
        };
        Self { dim: spec.dim, n: spec.n, m: spec.m, source: source.into(), seed: Some(spec.seed) }
    }

    pub fn from_problem(problem: &Problem, source: impl Into<String>, seed: Option<u64>) -> Self {
        let (n, m) = problem.shape();
        Self { dim: problem.dim(), n, m, source: source.into(), seed }
    }
}

/// One timed solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: ProblemDescriptor,
    pub solver: Variant,
    pub trial: usize,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds in the iteration loop.
    pub wall_time: f64,
    /// Seconds spent building the kernel.
    pub setup_time: f64,
    pub marginal_error: f64,
    pub cost: f64,
}

/// Solver output with the kernel dropped.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub absorptions: usize,
    pub history: Vec<ErrorRecord>,
    pub marginal_error: f64,
    pub wall_time: Duration,
    pub setup_time: Duration,
    pub cost: f64,
    pub plan: Option<Array2<f64>>,
}

fn finish<K: SinkhornKernel>(sol: Solution<K>, want_plan: bool, cap: usize) -> Result<Outcome> {
    let plan = if want_plan { Some(plan_dense(&sol, cap)?) } else { None };
    Ok(Outcome {
        iterations: sol.iterations,
        converged: sol.converged,
        absorptions: sol.absorptions,
        marginal_error: sol.marginal_error,
        wall_time: sol.wall_time,
        setup_time: sol.setup_time,
        cost: sol.cost,
        history: sol.history,
        phi: sol.phi,
        psi: sol.psi,
        plan,
    })
}

/// Runs one solver on `problem`; the plan is materialized when `want_plan`
/// (subject to `config.plan_cap`).
pub fn solve(problem: &Problem, variant: Variant, config: &SolverConfig, want_plan: bool) -> Result<Outcome> {
    let cap = config.plan_cap;
    match (problem, variant) {
        (Problem::OneD(p), Variant::Finom) => finish(sinkhorn_1d(&p.x, &p.y, &p.u, &p.v, config)?, want_plan, cap),
        (Problem::OneD(p), Variant::Dense) => {
            finish(dense_sinkhorn_1d(&p.x, &p.y, &p.u, &p.v, config)?, want_plan, cap)
        }
        (Problem::TwoD(p), Variant::Finom) => {
            finish(sinkhorn_2d(&p.source, &p.target, &p.u, &p.v, config)?, want_plan, cap)
        }
        (Problem::TwoD(p), Variant::Dense) => {
            finish(dense_sinkhorn_2d(&p.source, &p.target, &p.u, &p.v, config)?, want_plan, cap)
        }
    }
}

pub fn record(
    descriptor: &ProblemDescriptor,
    problem: &Problem,
    variant: Variant,
    trial: usize,
    config: &SolverConfig,
    out: &Outcome,
) -> RunRecord {
    let (n, m) = problem.shape();
    RunRecord {
        problem: descriptor.clone(),
        solver: variant,
        trial,
        n,
        m,
        epsilon: config.epsilon,
        iterations: out.iterations,
        converged: out.converged,
        wall_time: out.wall_time.as_secs_f64(),
        setup_time: out.setup_time.as_secs_f64(),
        marginal_error: out.marginal_error,
        cost: out.cost,
    }
}

/// Fast vs dense on the same instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub trials: usize,
    pub iterations: usize,
    pub finom_mean_time: f64,
    pub dense_mean_time: f64,
    pub finom_mean_setup: f64,
    pub dense_mean_setup: f64,
    /// `dense_mean_time / finom_mean_time`.
    pub speedup: f64,
    /// `‖Γ_finom − Γ_dense‖_F`.
    pub delta_gamma: f64,
    /// Largest relative ∞-norm gap between the final scaling vectors.
    pub iterate_divergence: f64,
    pub cost_finom: f64,
    pub cost_dense: f64,
}

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Runs both solvers `trials` times with one config. The plan difference
/// comes from the first trial; both legs always run the same iteration
/// count, so `config.tol` should be 0 for timing parity.
pub fn compare(
    problem: &Problem,
    descriptor: &ProblemDescriptor,
    config: &SolverConfig,
    trials: usize,
) -> Result<(CompareSummary, Vec<RunRecord>)> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(2 * trials);
    let mut first: Option<(Outcome, Outcome)> = None;
    for trial in 0..trials {
        let keep = first.is_none();
        let fast = solve(problem, Variant::Finom, config, keep)?;
        let dense = solve(problem, Variant::Dense, config, keep)?;
        if fast.iterations != dense.iterations {
            return Err(Error::InvalidConfig(format!(
                "legs stopped at different iterations ({} vs {}); rerun with tol = 0",
                fast.iterations, dense.iterations
            )));
        }
        records.push(record(descriptor, problem, Variant::Finom, trial, config, &fast));
        records.push(record(descriptor, problem, Variant::Dense, trial, config, &dense));
        if keep {
            first = Some((fast, dense));
        }
    }
    let (fast, dense) = first.expect("at least one trial");
    let delta_gamma = frobenius_diff(
        fast.plan.as_ref().expect("plan requested"),
        dense.plan.as_ref().expect("plan requested"),
    )?;
    let times = |v: Variant| mean(records.iter().filter(|r| r.solver == v).map(|r| r.wall_time));
    let setups = |v: Variant| mean(records.iter().filter(|r| r.solver == v).map(|r| r.setup_time));
    let (finom_mean_time, dense_mean_time) = (times(Variant::Finom), times(Variant::Dense));
    let summary = CompareSummary {
        trials,
        iterations: fast.iterations,
        finom_mean_time,
        dense_mean_time,
        finom_mean_setup: setups(Variant::Finom),
        dense_mean_setup: setups(Variant::Dense),
        speedup: dense_mean_time / finom_mean_time,
        delta_gamma,
        iterate_divergence: rel_inf(&fast.phi, &dense.phi).max(rel_inf(&fast.psi, &dense.psi)),
        cost_finom: fast.cost,
        cost_dense: dense.cost,
    };
    Ok((summary, records))
}

/// `ln t ≈ exponent · ln s + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

/// Ordinary least squares on `(ln size, ln time)`. Needs at least
/// [`MIN_FIT_SIZES`] distinct sizes and positive values throughout.
pub fn fit_power_law(sizes: &[f64], times: &[f64]) -> Result<PowerFit> {
    crate::error::check_len(sizes.len(), times.len())?;
    let mut distinct: Vec<f64> = sizes.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_FIT_SIZES {
        return Err(Error::UnderdeterminedFit { needed: MIN_FIT_SIZES, got: distinct.len() });
    }
    if sizes.iter().chain(times).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidConfig("fit needs positive finite sizes and times".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - exponent * x - intercept).powi(2)).sum();
    Ok(PowerFit { exponent, intercept, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub n: usize,
    pub m: usize,
    /// `N` in 1D, `N·M` in 2D.
    pub size: usize,
    pub mean_time: f64,
    pub mean_setup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub solver: Variant,
    pub points: Vec<SizePoint>,
    pub fit: PowerFit,
}

impl SweepSummary {
    /// `solver,size,mean_time` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("solver,size,mean_time\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{:?}\n", self.solver.name(), p.size, p.mean_time));
        }
        out
    }
}

/// Times `variant` over `sizes`. Each size `s` generates `template` with
/// `n = s` (and `m = s` as well). The fit is refused before any timing
/// runs when fewer than [`MIN_FIT_SIZES`] sizes are given.
pub fn sweep(
    template: &GenSpec,
    sizes: &[usize],
    variant: Variant,
    config: &SolverConfig,
    trials: usize,
) -> Result<(SweepSummary, Vec<RunRecord>)> {
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < MIN_FIT_SIZES {
        return Err(Error::UnderdeterminedFit { needed: MIN_FIT_SIZES, got: distinct.len() });
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let mut records = Vec::new();
    let mut points = Vec::new();
    for &s in sizes {
        let spec = GenSpec { n: s, m: s, ..*template };
        let problem = generate(&spec)?;
        let descriptor = ProblemDescriptor::generated(&spec);
        let mut times = Vec::with_capacity(trials);
        let mut setups = Vec::with_capacity(trials);
        for trial in 0..trials {
            let out = solve(&problem, variant, config, false)?;
            times.push(out.wall_time.as_secs_f64());
            setups.push(out.setup_time.as_secs_f64());
            records.push(record(&descriptor, &problem, variant, trial, config, &out));
        }
        points.push(SizePoint {
            n: s,
            m: s,
            size: problem.size(),
            mean_time: mean(times.into_iter()),
            mean_setup: mean(setups.into_iter()),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.size as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_time).collect();
    let fit = fit_power_law(&xs, &ys)?;
    Ok((SweepSummary { solver: variant, points, fit }, records))
}

/// Loop time at which the marginal error first reached `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeToError {
    pub solver: Variant,
    pub epsilon: f64,
    pub threshold: f64,
    pub iteration: Option<usize>,
    pub time: Option<f64>,
}

pub const DEFAULT_THRESHOLDS: [f64; 3] = [1e-2, 1e-4, 1e-6];
pub const DEFAULT_EPSILONS: [f64; 3] = [0.1, 0.01, 0.001];

/// For each ε, solves once (stopping at the smallest threshold or
/// `config.itr_max`) and reads the crossing times off the error history.
pub fn time_to_error(
    problem: &Problem,
    variant: Variant,
    epsilons: &[f64],
    thresholds: &[f64],
    config: &SolverConfig,
) -> Result<Vec<TimeToError>> {
    if thresholds.is_empty() || thresholds.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidConfig("thresholds must be positive".into()));
    }
    let tightest = thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    for &epsilon in epsilons {
        let cfg = SolverConfig { epsilon, tol: tightest, check_every: 1, ..config.clone() };
        let out = solve(problem, variant, &cfg, false)?;
        for &threshold in thresholds {
            let hit = out.history.iter().find(|r| r.error <= threshold);
            rows.push(TimeToError {
                solver: variant,
                epsilon,
                threshold,
                iteration: hit.map(|r| r.iteration),
                time: hit.map(|r| r.elapsed),
            });
        }
    }
    Ok(rows)
}

/// Structured report written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub command: String,
    pub config: SolverConfig,
    pub records: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub time_to_error: Vec<TimeToError>,
}

impl BenchReport {
    pub fn new(command: impl Into<String>, config: &SolverConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.into(),
            config: config.clone(),
            records: Vec::new(),
            compare: None,
            sweeps: Vec::new(),
            time_to_error: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Dense CSV of a plan, one row per line.
pub fn plan_to_csv(plan: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in plan.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let sizes = [10.0, 20.0, 40.0, 80.0, 160.0];
        let times: Vec<f64> = sizes.iter().map(|s: &f64| 3e-6 * s.powf(1.5)).collect();
        let fit = fit_power_law(&sizes, &times).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3e-6f64.ln()).abs() < 1e-10);
        assert!(fit.residual < 1e-20);
    }

    #[test]
    fn noisy_fit_matches_hand_computation() {
        let sizes = [1.0, 2.0, 4.0, 8.0];
        let times = [1.0, 2.0, 8.0, 8.0];
        let fit = fit_power_law(&sizes, &times).unwrap();
        // x = k ln 2, y = (0, 1, 3, 3) ln 2
        let (xs, ys) = ([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 3.0, 3.0]);
        let (mx, my) = (1.5, 1.75);
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        assert!((fit.exponent - sxy / sxx).abs() < 1e-12);
        assert!(fit.residual > 0.0);
    }

    #[test]
    fn fit_refuses_few_sizes() {
        assert_eq!(
            fit_power_law(&[100.0], &[1.0]).unwrap_err(),
            Error::UnderdeterminedFit { needed: 4, got: 1 }
        );
        assert!(fit_power_law(&[1.0, 1.0, 2.0, 2.0, 3.0], &[1.0; 5]).is_err());
        let template = GenSpec::one_d(NodeKind::Random, 0, 1);
        let cfg = SolverConfig::new(0.1, 5, 0.0);
        assert!(matches!(
            sweep(&template, &[100], Variant::Finom, &cfg, 1),
            Err(Error::UnderdeterminedFit { .. })
        ));
    }

    #[test]
    fn compare_small_instance() {
        let spec = GenSpec::one_d(NodeKind::Chebyshev, 60, 4);
        let problem = generate(&spec).unwrap();
        let cfg = SolverConfig::new(0.05, 50, 0.0);
        let d = ProblemDescriptor::generated(&spec);
        let (one, recs) = compare(&problem, &d, &cfg, 1).unwrap();
        let (three, _) = compare(&problem, &d, &cfg, 3).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(one.iterations, 50);
        assert!(one.delta_gamma <= 1e-12);
        assert_eq!(one.delta_gamma, three.delta_gamma);
        assert_eq!(one.iterate_divergence, three.iterate_divergence);
        assert!(one.speedup > 0.0);
        assert!((one.cost_finom - one.cost_dense).abs() <= 1e-10 * one.cost_dense);
    }

    #[test]
    fn sweep_records_every_trial() {
        let template = GenSpec::one_d(NodeKind::Random, 0, 2);
        let cfg = SolverConfig::new(0.05, 20, 0.0);
        let (summary, recs) = sweep(&template, &[50, 100, 200, 400], Variant::Finom, &cfg, 2).unwrap();
        assert_eq!(recs.len(), 8);
        assert_eq!(summary.points.iter().map(|p| p.size).collect::<Vec<_>>(), vec![50, 100, 200, 400]);
        assert!(summary.fit.exponent.is_finite());
        let csv = summary.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("finom,50,"));
    }

    #[test]
    fn sweep_2d_sizes_are_total_points() {
        let template = GenSpec::two_d(0, 0, 2);
        let cfg = SolverConfig::new(0.05, 5, 0.0);
        let (summary, _) = sweep(&template, &[3, 4, 5, 6], Variant::Finom, &cfg, 1).unwrap();
        assert_eq!(summary.points.iter().map(|p| p.size).collect::<Vec<_>>(), vec![9, 16, 25, 36]);
    }

    #[test]
    fn crossing_times_are_monotone() {
        let problem = generate(&GenSpec::one_d(NodeKind::Random, 80, 3)).unwrap();
        let cfg = SolverConfig::new(0.1, 20_000, 0.0);
        let rows = time_to_error(&problem, Variant::Finom, &[0.1, 0.05], &DEFAULT_THRESHOLDS, &cfg).unwrap();
        assert_eq!(rows.len(), 6);
        for pair in rows.chunks(3) {
            let its: Vec<usize> = pair.iter().map(|r| r.iteration.unwrap()).collect();
            assert!(its.windows(2).all(|w| w[0] <= w[1]), "{its:?}");
        }
    }

    #[test]
    fn report_round_trip() {
        let mut report = BenchReport::new("compare", &SolverConfig::default());
        let spec = GenSpec::one_d(NodeKind::Random, 30, 1);
        let problem = generate(&spec).unwrap();
        let (summary, records) =
            compare(&problem, &ProblemDescriptor::generated(&spec), &SolverConfig::new(0.1, 10, 0.0), 1).unwrap();
        report.compare = Some(summary);
        report.records = records;
        let back = BenchReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn plan_csv() {
        let plan = ndarray::array![[0.25, 0.0], [0.125, 0.625]];
        assert_eq!(plan_to_csv(&plan), "0.25,0.0\n0.125,0.625\n");
    }
}
