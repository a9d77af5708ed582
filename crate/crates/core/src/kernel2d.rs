//! 2D kernel on tensor-product grids.
//!
//! With column-major vectorization the kernel between `x¹ × y¹` and
//! `x² × y²` factors as `K = K_y ⊗ K_x`, so `Kψ = vec((K_x Ψ) K_yᵀ)`: one 1D
//! product per grid column followed by one per grid row.
//!
//! With absorption `K' = diag(e^{a/ε}) K diag(e^{b/ε})` has no Kronecker
//! form. It is applied as a column pass with right absorption `B(:, i)` and a
//! row pass with left absorption `A(k, :)`. Before the column pass each
//! column of `B` is shifted by its maximum `β_i`; the row pass then carries
//! `β` as its right absorption. This keeps the intermediate matrix bounded
//! when `B` alone would overflow, and reduces to the plain two-pass schedule
//! when `β = 0`.

use ndarray::Array2;

use crate::error::{check_finite, check_len, Error, Result};
use crate::kernel1d::{KernelOperator1D, OpCount};
use crate::mesh::Grid2D;

#[derive(Debug, Clone)]
pub struct KernelOperator2D {
    kx: KernelOperator1D,
    ky: KernelOperator1D,
    epsilon: f64,
    absorption_left: Vec<f64>,
    absorption_right: Vec<f64>,
    absorbed: bool,
}

/// Which 1D factor, if any, carries the ground-cost weight in a product.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Weight {
    None,
    X,
    Y,
}

impl KernelOperator2D {
    /// Kernel from `source` points (rows) to `target` points (columns). Both
    /// grids must have the same `(N, M)` shape.
    pub fn new(source: &Grid2D, target: &Grid2D, epsilon: f64) -> Result<Self> {
        let (n, m) = source.shape();
        let (tn, tm) = target.shape();
        check_len(n, tn)?;
        check_len(m, tm)?;
        Ok(Self {
            kx: KernelOperator1D::new(source.x(), target.x(), epsilon)?,
            ky: KernelOperator1D::new(source.y(), target.y(), epsilon)?,
            epsilon,
            absorption_left: vec![0.0; n * m],
            absorption_right: vec![0.0; n * m],
            absorbed: false,
        })
    }

    /// `(N, M)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.kx.rows(), self.ky.rows())
    }

    pub fn len(&self) -> usize {
        self.kx.rows() * self.ky.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kx(&self) -> &KernelOperator1D {
        &self.kx
    }

    pub fn ky(&self) -> &KernelOperator1D {
        &self.ky
    }

    /// Column-major `(A, B)`.
    pub fn absorption(&self) -> (&[f64], &[f64]) {
        (&self.absorption_left, &self.absorption_right)
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorbed
    }

    /// `A += δA`, `B += δB` (column-major, length `N·M` each).
    pub fn absorb(&mut self, delta_a: &[f64], delta_b: &[f64]) -> Result<()> {
        check_len(self.len(), delta_a.len())?;
        check_len(self.len(), delta_b.len())?;
        check_finite(delta_a)?;
        check_finite(delta_b)?;
        self.absorption_left.iter_mut().zip(delta_a).for_each(|(a, d)| *a += d);
        self.absorption_right.iter_mut().zip(delta_b).for_each(|(b, d)| *b += d);
        self.absorbed = self
            .absorption_left
            .iter()
            .chain(&self.absorption_right)
            .any(|&v| v != 0.0);
        Ok(())
    }

    /// Replaces the absorption arrays.
    pub fn set_absorption(&mut self, a: &[f64], b: &[f64]) -> Result<()> {
        self.absorption_left.iter_mut().for_each(|v| *v = 0.0);
        self.absorption_right.iter_mut().for_each(|v| *v = 0.0);
        self.absorb(a, b)
    }

    /// Unabsorbed `Kψ = vec((K_x Ψ) K_yᵀ)` for column-major `psi`.
    pub fn apply_2d(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_finite(psi)?;
        let mut out = vec![0.0; self.len()];
        self.plain_forward(psi, &mut out, Weight::None)?;
        Ok(out)
    }

    /// Unabsorbed `Kᵀφ = vec((K_xᵀ Φ) K_y)`.
    pub fn apply_transpose_2d(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_finite(phi)?;
        let mut out = vec![0.0; self.len()];
        self.plain_transpose(phi, &mut out)?;
        Ok(out)
    }

    /// `K'ψ` with the stored absorption arrays.
    pub fn apply_2d_stabilized(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_finite(psi)?;
        let mut out = vec![0.0; self.len()];
        self.absorbed_forward(psi, &mut out, Weight::None)?;
        Ok(out)
    }

    /// `K'ᵀφ` with the stored absorption arrays.
    pub fn apply_transpose_2d_stabilized(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_finite(phi)?;
        let mut out = vec![0.0; self.len()];
        self.absorbed_transpose(phi, &mut out)?;
        Ok(out)
    }

    /// `K'ψ`, taking the unabsorbed path while no absorption is stored.
    pub fn apply_into(&self, psi: &[f64], out: &mut [f64]) -> Result<()> {
        if self.absorbed {
            self.absorbed_forward(psi, out, Weight::None)
        } else {
            self.plain_forward(psi, out, Weight::None)
        }
    }

    pub fn apply_transpose_into(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        if self.absorbed {
            self.absorbed_transpose(phi, out)
        } else {
            self.plain_transpose(phi, out)
        }
    }

    /// `(C ∘ K')ψ` with the separable cost `|x¹_k - x²_l| + |y¹_i - y²_j|`,
    /// evaluated as an x-weighted plus a y-weighted product.
    pub fn apply_cost_weighted(&self, psi: &[f64]) -> Result<Vec<f64>> {
        check_finite(psi)?;
        let mut x_part = vec![0.0; self.len()];
        let mut y_part = vec![0.0; self.len()];
        if self.absorbed {
            self.absorbed_forward(psi, &mut x_part, Weight::X)?;
            self.absorbed_forward(psi, &mut y_part, Weight::Y)?;
        } else {
            self.plain_forward(psi, &mut x_part, Weight::X)?;
            self.plain_forward(psi, &mut y_part, Weight::Y)?;
        }
        Ok(x_part.iter().zip(&y_part).map(|(a, b)| a + b).collect())
    }

    /// Unabsorbed `Kψ` with multiplication/addition tallies.
    pub fn apply_2d_counted(&self, psi: &[f64], count: &mut OpCount) -> Result<Vec<f64>> {
        check_len(self.len(), psi.len())?;
        check_finite(psi)?;
        let (n, m) = self.shape();
        let mut s = vec![0.0; n * m];
        for i in 0..m {
            let col = self.kx.apply_counted(&psi[i * n..(i + 1) * n], count)?;
            s[i * n..(i + 1) * n].copy_from_slice(&col);
        }
        let mut out = vec![0.0; n * m];
        let mut row = vec![0.0; m];
        for k in 0..n {
            gather_row(&s, n, k, &mut row);
            let t = self.ky.apply_counted(&row, count)?;
            scatter_row(&t, n, k, &mut out);
        }
        Ok(out)
    }

    fn plain_forward(&self, psi: &[f64], out: &mut [f64], weight: Weight) -> Result<()> {
        check_len(self.len(), psi.len())?;
        check_len(self.len(), out.len())?;
        let (n, m) = self.shape();
        let mut s = vec![0.0; n * m];
        for (src, dst) in psi.chunks_exact(n).zip(s.chunks_exact_mut(n)) {
            if weight == Weight::X {
                dst.copy_from_slice(&self.kx.apply_cost_weighted(src)?);
            } else {
                self.kx.apply_into(src, dst)?;
            }
        }
        let mut row = vec![0.0; m];
        let mut t = vec![0.0; m];
        for k in 0..n {
            gather_row(&s, n, k, &mut row);
            if weight == Weight::Y {
                t.copy_from_slice(&self.ky.apply_cost_weighted(&row)?);
            } else {
                self.ky.apply_into(&row, &mut t)?;
            }
            scatter_row(&t, n, k, out);
        }
        Ok(())
    }

    fn plain_transpose(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.len(), phi.len())?;
        check_len(self.len(), out.len())?;
        let (n, m) = self.shape();
        let mut s = vec![0.0; n * m];
        for (src, dst) in phi.chunks_exact(n).zip(s.chunks_exact_mut(n)) {
            self.kx.apply_transpose_into(src, dst)?;
        }
        let mut row = vec![0.0; m];
        let mut t = vec![0.0; m];
        for k in 0..n {
            gather_row(&s, n, k, &mut row);
            self.ky.apply_transpose_into(&row, &mut t)?;
            scatter_row(&t, n, k, out);
        }
        Ok(())
    }

    fn absorbed_forward(&self, psi: &[f64], out: &mut [f64], weight: Weight) -> Result<()> {
        check_len(self.len(), psi.len())?;
        check_len(self.len(), out.len())?;
        let (n, m) = self.shape();
        let (a, b) = (&self.absorption_left, &self.absorption_right);

        let shift: Vec<f64> = b.chunks_exact(n).map(column_max).collect();
        let zeros_n = vec![0.0; n];
        let mut b_col = vec![0.0; n];
        let mut s = vec![0.0; n * m];
        for i in 0..m {
            let col = &b[i * n..(i + 1) * n];
            b_col.iter_mut().zip(col).for_each(|(d, v)| *d = v - shift[i]);
            let (src, dst) = (&psi[i * n..(i + 1) * n], &mut s[i * n..(i + 1) * n]);
            if weight == Weight::X {
                self.kx.apply_cost_weighted_absorbed_into(&zeros_n, &b_col, src, dst)?;
            } else {
                self.kx.apply_absorbed_into(&zeros_n, &b_col, src, dst)?;
            }
        }

        let mut row = vec![0.0; m];
        let mut a_row = vec![0.0; m];
        let mut t = vec![0.0; m];
        for k in 0..n {
            gather_row(&s, n, k, &mut row);
            gather_row(a, n, k, &mut a_row);
            if weight == Weight::Y {
                self.ky.apply_cost_weighted_absorbed_into(&a_row, &shift, &row, &mut t)?;
            } else {
                self.ky.apply_absorbed_into(&a_row, &shift, &row, &mut t)?;
            }
            scatter_row(&t, n, k, out);
        }
        Ok(())
    }

    fn absorbed_transpose(&self, phi: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.len(), phi.len())?;
        check_len(self.len(), out.len())?;
        let (n, m) = self.shape();
        let (a, b) = (&self.absorption_left, &self.absorption_right);

        // K'ᵀ = diag(e^{b/ε}) Kᵀ diag(e^{a/ε}): roles of A and B swap.
        let shift: Vec<f64> = a.chunks_exact(n).map(column_max).collect();
        let zeros_n = vec![0.0; n];
        let mut a_col = vec![0.0; n];
        let mut s = vec![0.0; n * m];
        for i in 0..m {
            let col = &a[i * n..(i + 1) * n];
            a_col.iter_mut().zip(col).for_each(|(d, v)| *d = v - shift[i]);
            self.kx.apply_transpose_absorbed_into(
                &a_col,
                &zeros_n,
                &phi[i * n..(i + 1) * n],
                &mut s[i * n..(i + 1) * n],
            )?;
        }

        let mut row = vec![0.0; m];
        let mut b_row = vec![0.0; m];
        let mut t = vec![0.0; m];
        for k in 0..n {
            gather_row(&s, n, k, &mut row);
            gather_row(b, n, k, &mut b_row);
            self.ky.apply_transpose_absorbed_into(&shift, &b_row, &row, &mut t)?;
            scatter_row(&t, n, k, out);
        }
        Ok(())
    }

    /// `K'_{pq}` from coordinates and absorption; `p = k + i·N`, `q = l + j·N`.
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        let n = self.kx.rows();
        let (k, i) = (p % n, p / n);
        let (l, j) = (q % n, q / n);
        let cx = (self.kx.x().nodes()[k] - self.kx.y().nodes()[l]).abs();
        let cy = (self.ky.x().nodes()[i] - self.ky.y().nodes()[j]).abs();
        ((self.absorption_left[p] + self.absorption_right[q] - (cx + cy)) / self.epsilon).exp()
    }

    /// Dense `K'` built as `K_y ⊗ K_x` from the two expanded 1D factors, then
    /// scaled by the absorption. Errors above `cap` entries.
    pub fn to_dense(&self, cap: usize) -> Result<Array2<f64>> {
        let total = self.len();
        let requested = total.saturating_mul(total);
        if requested > cap {
            return Err(Error::SizeCapExceeded { requested, cap });
        }
        let (n, m) = self.shape();
        let kx = self.kx.to_dense();
        let ky = self.ky.to_dense();
        let mut dense = Array2::zeros((total, total));
        for i in 0..m {
            for j in 0..m {
                let s = ky[[i, j]];
                for k in 0..n {
                    for l in 0..n {
                        dense[[k + i * n, l + j * n]] = s * kx[[k, l]];
                    }
                }
            }
        }
        if self.absorbed {
            let eps = self.epsilon;
            for ((p, q), v) in dense.indexed_iter_mut() {
                *v *= ((self.absorption_left[p] + self.absorption_right[q]) / eps).exp();
            }
        }
        Ok(dense)
    }
}

fn column_max(col: &[f64]) -> f64 {
    col.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn gather_row(src: &[f64], n: usize, k: usize, row: &mut [f64]) {
    for (i, r) in row.iter_mut().enumerate() {
        *r = src[k + i * n];
    }
}

fn scatter_row(row: &[f64], n: usize, k: usize, dst: &mut [f64]) {
    for (i, r) in row.iter().enumerate() {
        dst[k + i * n] = *r;
    }
}
