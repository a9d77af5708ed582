//! Sinkhorn iteration driver shared by the fast and dense kernels.
//!
//! One loop iteration computes `ψ ← v ⊘ K'ᵀφ` then `φ ← u ⊘ K'ψ`. The
//! marginal error of the incoming state is read off the same `K'ᵀφ`
//! product, so checking it costs `O(N)` extra work.

use std::time::{Duration, Instant};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::kernel1d::KernelOperator1D;
use crate::kernel2d::KernelOperator2D;
use crate::mesh::{Grid2D, Measure, Measure2D, Mesh1D};

/// Kernel operations the driver needs. `K'` is the kernel with the current
/// absorption, `K'_ij = exp((a_i + b_j - c_ij)/ε)`.
pub trait SinkhornKernel {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()>;
    fn apply_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()>;
    fn absorb(&mut self, delta_left: &[f64], delta_right: &[f64]) -> Result<()>;
    fn absorption(&self) -> (&[f64], &[f64]);
    fn entry(&self, i: usize, j: usize) -> f64;
    /// `⟨C, diag(φ) K' diag(ψ)⟩`.
    fn transport_cost(&self, phi: &[f64], psi: &[f64]) -> Result<f64>;
}

impl SinkhornKernel for KernelOperator1D {
    fn rows(&self) -> usize {
        KernelOperator1D::rows(self)
    }

    fn cols(&self) -> usize {
        KernelOperator1D::cols(self)
    }

    fn apply_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()> {
        KernelOperator1D::apply_into(self, psi, out)
    }

    fn apply_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        KernelOperator1D::apply_transpose_into(self, phi, out)
    }

    fn absorb(&mut self, delta_left: &[f64], delta_right: &[f64]) -> Result<()> {
        KernelOperator1D::absorb(self, delta_left, delta_right)
    }

    fn absorption(&self) -> (&[f64], &[f64]) {
        KernelOperator1D::absorption(self)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        KernelOperator1D::entry(self, i, j)
    }

    fn transport_cost(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        check_len(self.rows(), phi.len())?;
        let (a, b) = KernelOperator1D::absorption(self);
        let mut out = vec![0.0; self.rows()];
        self.apply_cost_weighted_absorbed_into(a, b, psi, &mut out)?;
        Ok(phi.iter().zip(&out).map(|(f, w)| f * w).sum())
    }
}

impl SinkhornKernel for KernelOperator2D {
    fn rows(&self) -> usize {
        self.len()
    }

    fn cols(&self) -> usize {
        self.len()
    }

    fn apply_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()> {
        KernelOperator2D::apply_into(self, psi, out)
    }

    fn apply_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        KernelOperator2D::apply_transpose_into(self, phi, out)
    }

    fn absorb(&mut self, delta_left: &[f64], delta_right: &[f64]) -> Result<()> {
        KernelOperator2D::absorb(self, delta_left, delta_right)
    }

    fn absorption(&self) -> (&[f64], &[f64]) {
        KernelOperator2D::absorption(self)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        KernelOperator2D::entry(self, i, j)
    }

    fn transport_cost(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        check_len(self.len(), phi.len())?;
        let weighted = self.apply_cost_weighted(psi)?;
        Ok(phi.iter().zip(&weighted).map(|(f, w)| f * w).sum())
    }
}

/// Loop parameters. `tol = 0` runs exactly `itr_max` iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub itr_max: usize,
    pub tol: f64,
    pub stabilize: bool,
    /// Absorb once `max(|ln φ_i|, |ln ψ_j|)` exceeds this.
    pub absorb_threshold: f64,
    pub check_every: usize,
    /// Largest dense kernel or plan, in entries.
    pub plan_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            itr_max: 1000,
            tol: 1e-9,
            stabilize: false,
            absorb_threshold: 200.0,
            check_every: 1,
            plan_cap: crate::dense::DEFAULT_SIZE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn new(epsilon: f64, itr_max: usize, tol: f64) -> Self {
        Self { epsilon, itr_max, tol, ..Self::default() }
    }

    pub fn stabilized(mut self, on: bool) -> Self {
        self.stabilize = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::check_epsilon(self.epsilon)?;
        if self.itr_max == 0 {
            return Err(Error::InvalidConfig("itr_max must be at least 1".into()));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be finite and nonnegative, got {}", self.tol)));
        }
        if !(self.absorb_threshold > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "absorb_threshold must exceed 1, got {}",
                self.absorb_threshold
            )));
        }
        if self.check_every == 0 {
            return Err(Error::InvalidConfig("check_every must be at least 1".into()));
        }
        if self.plan_cap == 0 {
            return Err(Error::InvalidConfig("plan_cap must be positive".into()));
        }
        Ok(())
    }
}

/// One marginal-error evaluation. `iteration` counts completed iterations;
/// `elapsed` is loop time at the moment of the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub iteration: usize,
    pub error: f64,
    pub elapsed: f64,
}

/// Final state of a run. The plan stays factored as
/// `diag(φ) K' diag(ψ)` with `K'` held by `kernel`.
#[derive(Debug, Clone)]
pub struct Solution<K> {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub kernel: K,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub absorptions: usize,
    pub history: Vec<ErrorRecord>,
    /// Marginal error of the returned state.
    pub marginal_error: f64,
    /// Iteration loop only.
    pub wall_time: Duration,
    /// Kernel construction.
    pub setup_time: Duration,
    pub cost: f64,
}

impl<K: SinkhornKernel> Solution<K> {
    pub fn a(&self) -> &[f64] {
        self.kernel.absorption().0
    }

    pub fn b(&self) -> &[f64] {
        self.kernel.absorption().1
    }

    pub fn total_time(&self) -> Duration {
        self.wall_time + self.setup_time
    }
}

/// `‖ψ ⊙ K'ᵀφ − v‖₁`.
pub fn marginal_error<K: SinkhornKernel>(kernel: &K, phi: &[f64], psi: &[f64], v: &[f64]) -> Result<f64> {
    check_len(kernel.rows(), phi.len())?;
    check_len(kernel.cols(), psi.len())?;
    check_len(kernel.cols(), v.len())?;
    let mut kt = vec![0.0; kernel.cols()];
    kernel.apply_transpose_into(phi, &mut kt)?;
    Ok(l1_residual(psi, &kt, v))
}

/// `‖φ ⊙ K'ψ − u‖₁`.
pub fn row_marginal_error<K: SinkhornKernel>(kernel: &K, phi: &[f64], psi: &[f64], u: &[f64]) -> Result<f64> {
    check_len(kernel.rows(), phi.len())?;
    check_len(kernel.cols(), psi.len())?;
    check_len(kernel.rows(), u.len())?;
    let mut k = vec![0.0; kernel.rows()];
    kernel.apply_into(psi, &mut k)?;
    Ok(l1_residual(phi, &k, u))
}

fn l1_residual(scale: &[f64], product: &[f64], target: &[f64]) -> f64 {
    scale
        .iter()
        .zip(product)
        .zip(target)
        .map(|((s, p), t)| (s * p - t).abs())
        .sum()
}

/// Materializes `Γ_ij = φ_i · exp((a_i + b_j − c_ij)/ε) · ψ_j`.
pub fn plan_dense<K: SinkhornKernel>(solution: &Solution<K>, cap: usize) -> Result<Array2<f64>> {
    let (n, m) = (solution.phi.len(), solution.psi.len());
    let requested = n.saturating_mul(m);
    if requested > cap {
        return Err(Error::SizeCapExceeded { requested, cap });
    }
    let k = &solution.kernel;
    Ok(Array2::from_shape_fn((n, m), |(i, j)| {
        let (f, s) = (solution.phi[i], solution.psi[j]);
        if f == 0.0 || s == 0.0 {
            0.0
        } else {
            f * k.entry(i, j) * s
        }
    }))
}

/// `⟨C, Γ⟩` through the kernel's linear-time cost-weighted product.
pub fn transport_cost_fast<K: SinkhornKernel>(solution: &Solution<K>) -> Result<f64> {
    solution.kernel.transport_cost(&solution.phi, &solution.psi)
}

/// Fast 1D solve.
pub fn sinkhorn_1d(
    x: &Mesh1D,
    y: &Mesh1D,
    u: &Measure,
    v: &Measure,
    config: &SolverConfig,
) -> Result<Solution<KernelOperator1D>> {
    config.validate()?;
    check_len(x.len(), u.len())?;
    check_len(y.len(), v.len())?;
    let start = Instant::now();
    let kernel = KernelOperator1D::new(x, y, config.epsilon)?;
    let setup = start.elapsed();
    run(kernel, u.weights(), v.weights(), config, 1.0 / x.len() as f64, setup)
}

/// Fast 2D solve on tensor grids of equal shape.
pub fn sinkhorn_2d(
    source: &Grid2D,
    target: &Grid2D,
    u: &Measure2D,
    v: &Measure2D,
    config: &SolverConfig,
) -> Result<Solution<KernelOperator2D>> {
    config.validate()?;
    check_len(source.num_points(), u.as_vec().len())?;
    check_len(target.num_points(), v.as_vec().len())?;
    let start = Instant::now();
    let kernel = KernelOperator2D::new(source, target, config.epsilon)?;
    let setup = start.elapsed();
    run(kernel, u.as_vec(), v.as_vec(), config, 1.0 / source.num_points() as f64, setup)
}

/// The iteration loop. `init` fills both scaling vectors.
pub fn run<K: SinkhornKernel>(
    mut kernel: K,
    u: &[f64],
    v: &[f64],
    config: &SolverConfig,
    init: f64,
    setup_time: Duration,
) -> Result<Solution<K>> {
    config.validate()?;
    let (n, m) = (kernel.rows(), kernel.cols());
    check_len(n, u.len())?;
    check_len(m, v.len())?;
    check_finite(u)?;
    check_finite(v)?;

    let mut phi = vec![init; n];
    let mut psi = vec![init; m];
    let mut kt = vec![0.0; m];
    let mut k = vec![0.0; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut absorptions = 0;
    let mut last_error = f64::NAN;
    let mut done = 0;

    let start = Instant::now();
    while done < config.itr_max {
        kernel.apply_transpose_into(&phi, &mut kt)?;
        if done % config.check_every == 0 {
            last_error = l1_residual(&psi, &kt, v);
            history.push(ErrorRecord { iteration: done, error: last_error, elapsed: secs(start) });
            if last_error <= config.tol {
                converged = true;
                break;
            }
        }
        let iteration = done + 1;
        divide(v, &kt, &mut psi, iteration)?;
        kernel.apply_into(&psi, &mut k)?;
        divide(u, &k, &mut phi, iteration)?;
        done = iteration;

        if config.stabilize && exceeds(&phi, &psi, config.absorb_threshold) {
            let da: Vec<f64> = phi.iter().map(|&f| log_or_zero(f, config.epsilon)).collect();
            let db: Vec<f64> = psi.iter().map(|&s| log_or_zero(s, config.epsilon)).collect();
            kernel.absorb(&da, &db)?;
            reset_positive(&mut phi);
            reset_positive(&mut psi);
            absorptions += 1;
        }
    }
    let wall_time = start.elapsed();

    if !converged {
        kernel.apply_transpose_into(&phi, &mut kt)?;
        last_error = l1_residual(&psi, &kt, v);
        if history.last().map(|r| r.iteration) != Some(done) {
            history.push(ErrorRecord { iteration: done, error: last_error, elapsed: wall_time.as_secs_f64() });
        }
        converged = last_error <= config.tol;
    }
    let cost = kernel.transport_cost(&phi, &psi)?;

    Ok(Solution {
        phi,
        psi,
        kernel,
        epsilon: config.epsilon,
        iterations: done,
        converged,
        absorptions,
        history,
        marginal_error: last_error,
        wall_time,
        setup_time,
        cost,
    })
}

fn secs(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// `out = target ⊘ denom`, with zero-mass entries pinned to zero.
fn divide(target: &[f64], denom: &[f64], out: &mut [f64], iteration: usize) -> Result<()> {
    for (index, ((o, &t), &d)) in out.iter_mut().zip(target).zip(denom).enumerate() {
        if t == 0.0 {
            if !d.is_finite() {
                return Err(Error::NonFiniteIterate { iteration, index });
            }
            *o = 0.0;
            continue;
        }
        if d == 0.0 {
            return Err(Error::ZeroDenominator { iteration, index });
        }
        let q = t / d;
        if !q.is_finite() || q == 0.0 {
            return Err(Error::NonFiniteIterate { iteration, index });
        }
        *o = q;
    }
    Ok(())
}

fn exceeds(phi: &[f64], psi: &[f64], threshold: f64) -> bool {
    phi.iter()
        .chain(psi)
        .filter(|&&s| s > 0.0)
        .any(|&s| s.ln().abs() > threshold)
}

fn log_or_zero(s: f64, epsilon: f64) -> f64 {
    if s > 0.0 {
        epsilon * s.ln()
    } else {
        0.0
    }
}

fn reset_positive(s: &mut [f64]) {
    s.iter_mut().filter(|v| **v > 0.0).for_each(|v| *v = 1.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{dense_sinkhorn_1d, frobenius_diff, transport_cost_dense};
    use crate::mesh::{chebyshev_nodes, random_measure, random_sorted_nodes, validate_mesh};

    fn instance(n: usize, seed: u64) -> (Mesh1D, Mesh1D, Measure, Measure) {
        (
            random_sorted_nodes(n, seed).unwrap(),
            random_sorted_nodes(n, seed + 100).unwrap(),
            random_measure(n, seed + 200).unwrap(),
            random_measure(n, seed + 300).unwrap(),
        )
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig { epsilon: 0.0, ..Default::default() },
            SolverConfig { itr_max: 0, ..Default::default() },
            SolverConfig { tol: -1.0, ..Default::default() },
            SolverConfig { tol: f64::NAN, ..Default::default() },
            SolverConfig { absorb_threshold: 1.0, ..Default::default() },
            SolverConfig { check_every: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(SolverConfig { tol: 0.0, ..Default::default() }.validate().is_ok());
    }

    #[test]
    fn self_transport_converges() {
        let x = chebyshev_nodes(60).unwrap();
        let u = random_measure(60, 4).unwrap();
        let cfg = SolverConfig::new(0.05, 20_000, 1e-10);
        let sol = sinkhorn_1d(&x, &x, &u, &u, &cfg).unwrap();
        assert!(sol.converged);
        assert!(sol.marginal_error <= 1e-10);
        let plan = plan_dense(&sol, 1 << 20).unwrap();
        for (i, row) in plan.rows().into_iter().enumerate() {
            assert!((row.sum() - u.weights()[i]).abs() < 1e-9);
        }
        for (j, col) in plan.columns().into_iter().enumerate() {
            assert!((col.sum() - u.weights()[j]).abs() <= 1e-10 + 1e-15);
        }
    }

    #[test]
    fn zero_scalings_give_unit_error() {
        let (x, y, _, v) = instance(30, 1);
        let k = KernelOperator1D::new(&x, &y, 0.1).unwrap();
        let e = marginal_error(&k, &[0.0; 30], &[0.0; 30], v.weights()).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fixed_point_has_zero_error() {
        let (x, y, _, _) = instance(20, 2);
        let k = KernelOperator1D::new(&x, &y, 0.1).unwrap();
        let phi: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 / 40.0).collect();
        let psi: Vec<f64> = (0..20).map(|j| 1.0 + j as f64 / 20.0).collect();
        let kt = k.apply_transpose(&phi).unwrap();
        let v: Vec<f64> = psi.iter().zip(&kt).map(|(s, t)| s * t).collect();
        assert_eq!(marginal_error(&k, &phi, &psi, &v).unwrap(), 0.0);
    }

    #[test]
    fn marginal_error_matches_dense() {
        let (x, y, u, v) = instance(40, 3);
        let cfg = SolverConfig::new(0.02, 25, 0.0);
        let sol = sinkhorn_1d(&x, &y, &u, &v, &cfg).unwrap();
        let k = crate::dense::dense_kernel(&x, &y, 0.02).unwrap();
        let kt = k.matvec_transpose(&sol.phi).unwrap();
        let want = l1_residual(&sol.psi, &kt, v.weights());
        assert!((sol.marginal_error - want).abs() < 1e-12);
    }

    #[test]
    fn fixed_iterations_with_zero_tol() {
        let (x, y, u, v) = instance(50, 5);
        let sol = sinkhorn_1d(&x, &y, &u, &v, &SolverConfig::new(0.05, 37, 0.0)).unwrap();
        assert_eq!(sol.iterations, 37);
        assert!(!sol.converged);
        assert_eq!(sol.history.len(), 38);
        assert_eq!(sol.history.last().unwrap().iteration, 37);
    }

    #[test]
    fn check_cadence() {
        let (x, y, u, v) = instance(50, 6);
        let cfg = SolverConfig { check_every: 10, ..SolverConfig::new(0.05, 35, 0.0) };
        let sol = sinkhorn_1d(&x, &y, &u, &v, &cfg).unwrap();
        let its: Vec<usize> = sol.history.iter().map(|r| r.iteration).collect();
        assert_eq!(its, vec![0, 10, 20, 30, 35]);
    }

    #[test]
    fn zero_plan_at_start() {
        let (x, y, u, v) = instance(12, 7);
        let sol = run(
            KernelOperator1D::new(&x, &y, 0.3).unwrap(),
            u.weights(),
            v.weights(),
            &SolverConfig::new(0.3, 1, 2.0),
            1.0 / 12.0,
            Duration::ZERO,
        )
        .unwrap();
        assert_eq!(sol.iterations, 0);
        let plan = plan_dense(&sol, 1000).unwrap();
        let k = crate::dense::dense_kernel(&x, &y, 0.3).unwrap();
        for ((i, j), g) in plan.indexed_iter() {
            let want = k.entries()[[i, j]] / 144.0;
            assert!((g - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn matches_dense_solver() {
        let x = chebyshev_nodes(80).unwrap();
        let y = random_sorted_nodes(70, 9).unwrap();
        let u = random_measure(80, 10).unwrap();
        let v = random_measure(70, 11).unwrap();
        let cfg = SolverConfig::new(0.01, 300, 0.0);
        let fast = sinkhorn_1d(&x, &y, &u, &v, &cfg).unwrap();
        let dense = dense_sinkhorn_1d(&x, &y, &u, &v, &cfg).unwrap();
        assert_eq!(fast.iterations, dense.iterations);
        let rel = |a: &[f64], b: &[f64]| {
            let d = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            d / b.iter().map(|q| q.abs()).fold(0.0, f64::max)
        };
        assert!(rel(&fast.phi, &dense.phi) < 1e-12);
        assert!(rel(&fast.psi, &dense.psi) < 1e-12);
        let pf = plan_dense(&fast, 1 << 20).unwrap();
        let pd = plan_dense(&dense, 1 << 20).unwrap();
        assert!(frobenius_diff(&pf, &pd).unwrap() < 1e-12);
    }

    #[test]
    fn fast_cost_matches_dense() {
        let (x, y, u, v) = instance(90, 12);
        let sol = sinkhorn_1d(&x, &y, &u, &v, &SolverConfig::new(0.01, 5000, 1e-9)).unwrap();
        let plan = plan_dense(&sol, 1 << 20).unwrap();
        let c = crate::dense::dense_kernel(&x, &y, 0.01).unwrap();
        let want = transport_cost_dense(&plan, c.cost()).unwrap();
        assert!((sol.cost - want).abs() <= 1e-10 * want);
        assert_eq!(transport_cost_fast(&sol).unwrap(), sol.cost);
    }

    #[test]
    fn point_mass_cost() {
        let x = validate_mesh(&[0.0, 1.0]).unwrap();
        let y = validate_mesh(&[0.25, 3.0]).unwrap();
        let k = KernelOperator1D::new(&x, &y, 0.5).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut phi = vec![0.0; 2];
                let mut psi = vec![0.0; 2];
                phi[i] = 1.0 / k.entry(i, j);
                psi[j] = 1.0;
                let c = SinkhornKernel::transport_cost(&k, &phi, &psi).unwrap();
                let want = (x.nodes()[i] - y.nodes()[j]).abs();
                assert!((c - want).abs() < 1e-14, "{i} {j}: {c} vs {want}");
            }
        }
    }

    #[test]
    fn symmetric_costs() {
        let (x, y, u, v) = instance(70, 13);
        let cfg = SolverConfig::new(0.02, 10_000, 1e-11);
        let forward = sinkhorn_1d(&x, &y, &u, &v, &cfg).unwrap();
        let backward = sinkhorn_1d(&y, &x, &v, &u, &cfg).unwrap();
        assert!(forward.converged && backward.converged);
        assert!((forward.cost - backward.cost).abs() <= 1e-10 * forward.cost);
    }

    #[test]
    fn stabilized_matches_plain() {
        let (x, y, u, v) = instance(60, 14);
        let plain_cfg = SolverConfig::new(0.01, 20_000, 1e-11);
        let stab_cfg = SolverConfig { absorb_threshold: 5.0, ..plain_cfg.clone().stabilized(true) };
        let plain = sinkhorn_1d(&x, &y, &u, &v, &plain_cfg).unwrap();
        let stab = sinkhorn_1d(&x, &y, &u, &v, &stab_cfg).unwrap();
        assert!(plain.converged && stab.converged);
        assert!(stab.absorptions > 0);
        let d = frobenius_diff(&plan_dense(&plain, 1 << 20).unwrap(), &plan_dense(&stab, 1 << 20).unwrap())
            .unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn zero_mass_entries_stay_zero() {
        let x = random_sorted_nodes(10, 15).unwrap();
        let mut w = vec![0.1; 10];
        w[3] = 0.0;
        w[7] = 0.2;
        let u = Measure::new(w).unwrap();
        let v = random_measure(10, 16).unwrap();
        let cfg = SolverConfig { absorb_threshold: 3.0, ..SolverConfig::new(0.05, 5000, 1e-10).stabilized(true) };
        let sol = sinkhorn_1d(&x, &x, &u, &v, &cfg).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.phi[3], 0.0);
        assert!(sol.phi.iter().chain(&sol.psi).all(|s| s.is_finite()));
    }

    #[test]
    fn small_epsilon_without_stabilization_fails() {
        let x = validate_mesh(&[0.0, 1.0]).unwrap();
        let y = validate_mesh(&[0.5, 10.0]).unwrap();
        let u = Measure::new(vec![0.5, 0.5]).unwrap();
        let v = Measure::new(vec![0.5, 0.5]).unwrap();
        let err = sinkhorn_1d(&x, &y, &u, &v, &SolverConfig::new(0.001, 10, 1e-9)).unwrap_err();
        assert!(matches!(err, Error::ZeroDenominator { .. } | Error::NonFiniteIterate { .. }), "{err:?}");
    }

    #[test]
    fn dimension_checks() {
        let (x, y, u, _) = instance(10, 17);
        let short = random_measure(9, 1).unwrap();
        assert!(matches!(
            sinkhorn_1d(&x, &y, &u, &short, &SolverConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn plan_cap_enforced() {
        let (x, y, u, v) = instance(10, 18);
        let sol = sinkhorn_1d(&x, &y, &u, &v, &SolverConfig::new(0.1, 2, 0.0)).unwrap();
        assert!(matches!(plan_dense(&sol, 99), Err(Error::SizeCapExceeded { requested: 100, cap: 99 })));
    }

    #[test]
    fn two_dimensional_matches_dense() {
        let g1 = Grid2D::new(random_sorted_nodes(6, 20).unwrap(), random_sorted_nodes(5, 21).unwrap());
        let g2 = Grid2D::new(random_sorted_nodes(6, 22).unwrap(), random_sorted_nodes(5, 23).unwrap());
        let u = crate::mesh::random_measure_2d(6, 5, 24).unwrap();
        let v = crate::mesh::random_measure_2d(6, 5, 25).unwrap();
        let cfg = SolverConfig::new(0.05, 5000, 1e-11);
        let fast = sinkhorn_2d(&g1, &g2, &u, &v, &cfg).unwrap();
        let dense = crate::dense::dense_sinkhorn_2d(&g1, &g2, &u, &v, &cfg).unwrap();
        assert!(fast.converged);
        assert_eq!(fast.iterations, dense.iterations);
        let pf = plan_dense(&fast, 1 << 20).unwrap();
        let pd = plan_dense(&dense, 1 << 20).unwrap();
        assert!(frobenius_diff(&pf, &pd).unwrap() < 1e-12);
        assert!((fast.cost - dense.cost).abs() <= 1e-10 * dense.cost);
        for (q, col) in pf.columns().into_iter().enumerate() {
            assert!((col.sum() - v.as_vec()[q]).abs() <= 1e-11);
        }
    }
}
