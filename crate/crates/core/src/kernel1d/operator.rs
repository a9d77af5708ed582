use ndarray::Array2;

use super::rep::{build_rep, validate_absorption, Orientation, QuasiCollinearRep};
use super::sweep::{sweep, sweep_both, sweep_cost_weighted, OnTheFly, OpCount, Stored};
use crate::error::{check_epsilon, check_finite, check_len, Result};
use crate::mesh::Mesh1D;

/// Linear-time operator for `K' = diag(e^{a/ε}) K diag(e^{b/ε})` with
/// `K_ij = exp(-|x_i - y_j|/ε)`.
///
/// Holds the lower/upper block representations of `K` (rows on `x`) and of
/// `Kᵀ` (rows on `y`), plus the accumulated absorption `a` (length `N`) and
/// `b` (length `M`).
#[derive(Debug, Clone)]
pub struct KernelOperator1D {
    x: Mesh1D,
    y: Mesh1D,
    epsilon: f64,
    lower: QuasiCollinearRep,
    upper: QuasiCollinearRep,
    t_lower: QuasiCollinearRep,
    t_upper: QuasiCollinearRep,
    absorption_left: Vec<f64>,
    absorption_right: Vec<f64>,
}

impl KernelOperator1D {
    pub fn new(x: &Mesh1D, y: &Mesh1D, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            lower: build_rep(x, y, epsilon, Orientation::Lower)?,
            upper: build_rep(x, y, epsilon, Orientation::Upper)?,
            t_lower: build_rep(y, x, epsilon, Orientation::Lower)?,
            t_upper: build_rep(y, x, epsilon, Orientation::Upper)?,
            absorption_left: vec![0.0; x.len()],
            absorption_right: vec![0.0; y.len()],
            x: x.clone(),
            y: y.clone(),
            epsilon,
        })
    }

    pub fn rows(&self) -> usize {
        self.x.len()
    }

    pub fn cols(&self) -> usize {
        self.y.len()
    }

    pub fn x(&self) -> &Mesh1D {
        &self.x
    }

    pub fn y(&self) -> &Mesh1D {
        &self.y
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lower(&self) -> &QuasiCollinearRep {
        &self.lower
    }

    pub fn upper(&self) -> &QuasiCollinearRep {
        &self.upper
    }

    pub fn transpose_lower(&self) -> &QuasiCollinearRep {
        &self.t_lower
    }

    pub fn transpose_upper(&self) -> &QuasiCollinearRep {
        &self.t_upper
    }

    /// Accumulated `(a, b)`.
    pub fn absorption(&self) -> (&[f64], &[f64]) {
        (&self.absorption_left, &self.absorption_right)
    }

    /// `K'ψ` with input validation.
    pub fn apply(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_finite(psi)?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(psi, &mut out)?;
        Ok(out)
    }

    /// `K'ψ` into a caller-provided buffer. Checks lengths only.
    pub fn apply_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.cols(), psi.len())?;
        check_len(self.rows(), out.len())?;
        sweep_both(&Stored(&self.lower), &Stored(&self.upper), psi, out, &mut ());
        Ok(())
    }

    /// `K'ψ` with multiplication/addition tallies added to `count`.
    pub fn apply_counted(&self, psi: &[f64], count: &mut OpCount) -> Result<Vec<f64>> {
        check_len(self.cols(), psi.len())?;
        check_finite(psi)?;
        let mut out = vec![0.0; self.rows()];
        sweep_both(&Stored(&self.lower), &Stored(&self.upper), psi, &mut out, count);
        Ok(out)
    }

    /// `K'ᵀφ` with input validation.
    pub fn apply_transpose(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_finite(phi)?;
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(phi, &mut out)?;
        Ok(out)
    }

    pub fn apply_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.rows(), phi.len())?;
        check_len(self.cols(), out.len())?;
        sweep_both(&Stored(&self.t_lower), &Stored(&self.t_upper), phi, out, &mut ());
        Ok(())
    }

    pub fn apply_transpose_counted(&self, phi: &[f64], count: &mut OpCount) -> Result<Vec<f64>> {
        check_len(self.rows(), phi.len())?;
        check_finite(phi)?;
        let mut out = vec![0.0; self.cols()];
        sweep_both(&Stored(&self.t_lower), &Stored(&self.t_upper), phi, &mut out, count);
        Ok(out)
    }

    /// The two block products `(K'_L ψ, K'_U ψ)` separately.
    pub fn apply_split(&self, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(self.cols(), psi.len())?;
        check_finite(psi)?;
        let mut p = vec![0.0; self.rows()];
        let mut q = vec![0.0; self.rows()];
        sweep(&Stored(&self.lower), psi, &mut p, &mut ());
        sweep(&Stored(&self.upper), psi, &mut q, &mut ());
        Ok((p, q))
    }

    /// `(C ∘ K')ψ` where `C_ij = |x_i - y_j|`.
    pub fn apply_cost_weighted(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), psi.len())?;
        check_finite(psi)?;
        let mut out = vec![0.0; self.rows()];
        sweep_cost_weighted(
            &Stored(&self.lower),
            &Stored(&self.upper),
            self.x.nodes(),
            self.y.nodes(),
            psi,
            &mut out,
        );
        Ok(out)
    }

    /// `diag(e^{a/ε}) K diag(e^{b/ε}) ψ` for an explicit absorption pair,
    /// evaluated from exponents without touching the stored absorption.
    pub fn apply_absorbed_into(&self, a: &[f64], b: &[f64], psi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.cols(), psi.len())?;
        check_len(self.rows(), out.len())?;
        validate_absorption(a, b, self.rows(), self.cols())?;
        let lower = OnTheFly { rep: &self.lower, left: a, right: b };
        let upper = OnTheFly { rep: &self.upper, left: a, right: b };
        sweep_both(&lower, &upper, psi, out, &mut ());
        Ok(())
    }

    /// Transpose of [`Self::apply_absorbed_into`]; `a` and `b` are still the
    /// row and column absorption of `K`.
    pub fn apply_transpose_absorbed_into(
        &self,
        a: &[f64],
        b: &[f64],
        phi: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_len(self.rows(), phi.len())?;
        check_len(self.cols(), out.len())?;
        validate_absorption(a, b, self.rows(), self.cols())?;
        let lower = OnTheFly { rep: &self.t_lower, left: b, right: a };
        let upper = OnTheFly { rep: &self.t_upper, left: b, right: a };
        sweep_both(&lower, &upper, phi, out, &mut ());
        Ok(())
    }

    /// `(C ∘ K'')ψ` for an explicit absorption pair.
    pub fn apply_cost_weighted_absorbed_into(
        &self,
        a: &[f64],
        b: &[f64],
        psi: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_len(self.cols(), psi.len())?;
        check_len(self.rows(), out.len())?;
        validate_absorption(a, b, self.rows(), self.cols())?;
        let lower = OnTheFly { rep: &self.lower, left: a, right: b };
        let upper = OnTheFly { rep: &self.upper, left: a, right: b };
        sweep_cost_weighted(&lower, &upper, self.x.nodes(), self.y.nodes(), psi, out);
        Ok(())
    }

    /// `a += δa`, `b += δb`, then rebuilds every ratio and edge entry from
    /// the coordinate exponents plus the new totals.
    pub fn absorb(&mut self, delta_a: &[f64], delta_b: &[f64]) -> Result<()> {
        validate_absorption(delta_a, delta_b, self.rows(), self.cols())?;
        self.absorption_left.iter_mut().zip(delta_a).for_each(|(a, d)| *a += d);
        self.absorption_right.iter_mut().zip(delta_b).for_each(|(b, d)| *b += d);
        self.rebuild();
        Ok(())
    }

    /// Replaces the accumulated absorption with `(a, b)`.
    pub fn set_absorption(&mut self, a: &[f64], b: &[f64]) -> Result<()> {
        validate_absorption(a, b, self.rows(), self.cols())?;
        self.absorption_left.copy_from_slice(a);
        self.absorption_right.copy_from_slice(b);
        self.rebuild();
        Ok(())
    }

    fn rebuild(&mut self) {
        let (a, b) = (&self.absorption_left, &self.absorption_right);
        self.lower.set_absorption(a, b);
        self.upper.set_absorption(a, b);
        self.t_lower.set_absorption(b, a);
        self.t_upper.set_absorption(b, a);
    }

    /// `K'_ij` recomputed from coordinates and absorption.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let c = (self.x.nodes()[i] - self.y.nodes()[j]).abs();
        ((self.absorption_left[i] + self.absorption_right[j] - c) / self.epsilon).exp()
    }

    /// Dense `K'` expanded from the lower/upper representations.
    pub fn to_dense(&self) -> Array2<f64> {
        self.lower.to_dense() + self.upper.to_dense()
    }
}
