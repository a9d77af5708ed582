//! Brute-force reference: materialized kernels, `O(NM)` matvecs, dense plans.
//!
//! Everything here is the straightforward formula. The fast paths are
//! checked against it and the benchmarks time against it.

use std::time::Instant;

use ndarray::Array2;

use crate::error::{check_epsilon, check_finite, check_len, Error, Result};
use crate::mesh::{Grid2D, Measure, Measure2D, Mesh1D};
use crate::solver::{self, SinkhornKernel, Solution, SolverConfig};

/// Default limit on materialized entries.
pub const DEFAULT_SIZE_CAP: usize = 100_000_000;

/// Materialized `K'_ij = exp((a_i + b_j - c_ij)/ε)` together with its cost.
#[derive(Debug, Clone)]
pub struct DenseKernel {
    entries: Array2<f64>,
    cost: Array2<f64>,
    epsilon: f64,
    absorption_left: Vec<f64>,
    absorption_right: Vec<f64>,
}

fn check_cap(rows: usize, cols: usize, cap: usize) -> Result<()> {
    let requested = rows.saturating_mul(cols);
    if requested > cap {
        return Err(Error::SizeCapExceeded { requested, cap });
    }
    Ok(())
}

/// Dense 1D kernel with `c_ij = |x_i - y_j|`.
pub fn dense_kernel(x: &Mesh1D, y: &Mesh1D, epsilon: f64) -> Result<DenseKernel> {
    dense_kernel_capped(x, y, epsilon, DEFAULT_SIZE_CAP)
}

pub fn dense_kernel_capped(x: &Mesh1D, y: &Mesh1D, epsilon: f64, cap: usize) -> Result<DenseKernel> {
    check_epsilon(epsilon)?;
    check_cap(x.len(), y.len(), cap)?;
    let cost = Array2::from_shape_fn((x.len(), y.len()), |(i, j)| {
        (x.nodes()[i] - y.nodes()[j]).abs()
    });
    Ok(DenseKernel::from_cost(cost, epsilon))
}

/// Dense 2D kernel between two grids with the separable cost
/// `|x¹_k - x²_l| + |y¹_i - y²_j|`; points are indexed column-major.
pub fn dense_kernel_2d(source: &Grid2D, target: &Grid2D, epsilon: f64, cap: usize) -> Result<DenseKernel> {
    check_epsilon(epsilon)?;
    let (n, m) = source.shape();
    let (tn, tm) = target.shape();
    check_cap(n * m, tn * tm, cap)?;
    let (sx, sy) = (source.x().nodes(), source.y().nodes());
    let (tx, ty) = (target.x().nodes(), target.y().nodes());
    let cost = Array2::from_shape_fn((n * m, tn * tm), |(p, q)| {
        let (k, i) = (p % n, p / n);
        let (l, j) = (q % tn, q / tn);
        (sx[k] - tx[l]).abs() + (sy[i] - ty[j]).abs()
    });
    Ok(DenseKernel::from_cost(cost, epsilon))
}

impl DenseKernel {
    pub fn from_cost(cost: Array2<f64>, epsilon: f64) -> Self {
        let (n, m) = cost.dim();
        let entries = cost.mapv(|c| (-c / epsilon).exp());
        Self {
            entries,
            cost,
            epsilon,
            absorption_left: vec![0.0; n],
            absorption_right: vec![0.0; m],
        }
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// `K'ψ`, rows summed left to right.
    pub fn matvec(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_finite(psi)?;
        let mut out = vec![0.0; self.rows()];
        self.matvec_into(psi, &mut out)?;
        Ok(out)
    }

    pub fn matvec_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.cols(), psi.len())?;
        check_len(self.rows(), out.len())?;
        for (o, row) in out.iter_mut().zip(self.entries.rows()) {
            let row = row.to_slice().expect("row-major storage");
            *o = row.iter().zip(psi).map(|(k, p)| k * p).sum();
        }
        Ok(())
    }

    /// `K'ᵀφ`, accumulated row by row.
    pub fn matvec_transpose(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_finite(phi)?;
        let mut out = vec![0.0; self.cols()];
        self.matvec_transpose_into(phi, &mut out)?;
        Ok(out)
    }

    pub fn matvec_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.rows(), phi.len())?;
        check_len(self.cols(), out.len())?;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&f, row) in phi.iter().zip(self.entries.rows()) {
            let row = row.to_slice().expect("row-major storage");
            for (o, k) in out.iter_mut().zip(row) {
                *o += k * f;
            }
        }
        Ok(())
    }

    pub fn absorption(&self) -> (&[f64], &[f64]) {
        (&self.absorption_left, &self.absorption_right)
    }

    /// `a += δa`, `b += δb`; entries recomputed from the cost.
    pub fn absorb(&mut self, delta_a: &[f64], delta_b: &[f64]) -> Result<()> {
        check_len(self.rows(), delta_a.len())?;
        check_len(self.cols(), delta_b.len())?;
        check_finite(delta_a)?;
        check_finite(delta_b)?;
        self.absorption_left.iter_mut().zip(delta_a).for_each(|(a, d)| *a += d);
        self.absorption_right.iter_mut().zip(delta_b).for_each(|(b, d)| *b += d);
        let (a, b, eps) = (&self.absorption_left, &self.absorption_right, self.epsilon);
        for ((i, j), k) in self.entries.indexed_iter_mut() {
            *k = ((a[i] + b[j] - self.cost[[i, j]]) / eps).exp();
        }
        Ok(())
    }
}

impl SinkhornKernel for DenseKernel {
    fn rows(&self) -> usize {
        DenseKernel::rows(self)
    }

    fn cols(&self) -> usize {
        DenseKernel::cols(self)
    }

    fn apply_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()> {
        self.matvec_into(psi, out)
    }

    fn apply_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        self.matvec_transpose_into(phi, out)
    }

    fn absorb(&mut self, delta_left: &[f64], delta_right: &[f64]) -> Result<()> {
        DenseKernel::absorb(self, delta_left, delta_right)
    }

    fn absorption(&self) -> (&[f64], &[f64]) {
        DenseKernel::absorption(self)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.absorption_left, &self.absorption_right);
        ((a[i] + b[j] - self.cost[[i, j]]) / self.epsilon).exp()
    }

    fn transport_cost(&self, phi: &[f64], psi: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (i, row) in self.entries.rows().into_iter().enumerate() {
            for (j, k) in row.iter().enumerate() {
                total += phi[i] * k * psi[j] * self.cost[[i, j]];
            }
        }
        Ok(total)
    }
}

/// `‖A − B‖_F`.
pub fn frobenius_diff(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        let (an, am) = a.dim();
        let (bn, bm) = b.dim();
        return Err(Error::DimensionMismatch { expected: an * am, found: bn * bm });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// `⟨C, Γ⟩ = Σ_ij c_ij γ_ij`.
pub fn transport_cost_dense(plan: &Array2<f64>, cost: &Array2<f64>) -> Result<f64> {
    if plan.dim() != cost.dim() {
        let (an, am) = plan.dim();
        let (bn, bm) = cost.dim();
        return Err(Error::DimensionMismatch { expected: an * am, found: bn * bm });
    }
    Ok(plan.iter().zip(cost.iter()).map(|(g, c)| g * c).sum())
}

/// Textbook Sinkhorn on a materialized 1D kernel, driven by the same loop as
/// the fast solver.
pub fn dense_sinkhorn_1d(
    x: &Mesh1D,
    y: &Mesh1D,
    u: &Measure,
    v: &Measure,
    config: &SolverConfig,
) -> Result<Solution<DenseKernel>> {
    config.validate()?;
    check_len(x.len(), u.len())?;
    check_len(y.len(), v.len())?;
    let start = Instant::now();
    let kernel = dense_kernel_capped(x, y, config.epsilon, config.plan_cap)?;
    let setup = start.elapsed();
    solver::run(kernel, u.weights(), v.weights(), config, 1.0 / x.len() as f64, setup)
}

/// Textbook Sinkhorn on the materialized `(NM) × (NM)` 2D kernel.
pub fn dense_sinkhorn_2d(
    source: &Grid2D,
    target: &Grid2D,
    u: &Measure2D,
    v: &Measure2D,
    config: &SolverConfig,
) -> Result<Solution<DenseKernel>> {
    config.validate()?;
    check_len(source.num_points(), u.as_vec().len())?;
    check_len(target.num_points(), v.as_vec().len())?;
    let start = Instant::now();
    let kernel = dense_kernel_2d(source, target, config.epsilon, config.plan_cap)?;
    let setup = start.elapsed();
    solver::run(kernel, u.as_vec(), v.as_vec(), config, 1.0 / source.num_points() as f64, setup)
}
