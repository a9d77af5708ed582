//! Forward/backward recursions over one block representation.
//!
//! Lower block: `p_{i+1} = r_i p_i + η_{i+1}·ψ_{i+1}`, seeded at the first
//! nonempty row. Upper block: `q_i = r'_i q_{i+1} + η'_i·ψ'_i`, seeded at the
//! last nonempty row. Rows outside the seeded range are identically zero.

use std::ops::Range;

use super::rep::{Orientation, QuasiCollinearRep};

/// Multiplication/addition tallies for instrumented matvecs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub multiplications: usize,
    pub additions: usize,
}

/// Sink for operation tallies. `()` discards them at zero cost.
pub trait OpCounter {
    fn mul(&mut self, n: usize);
    fn add(&mut self, n: usize);
}

impl OpCounter for () {
    #[inline(always)]
    fn mul(&mut self, _: usize) {}
    #[inline(always)]
    fn add(&mut self, _: usize) {}
}

impl OpCounter for OpCount {
    fn mul(&mut self, n: usize) {
        self.multiplications += n;
    }
    fn add(&mut self, n: usize) {
        self.additions += n;
    }
}

/// Ratio and edge values fed to the recursion.
pub(crate) trait BlockValues {
    fn rep(&self) -> &QuasiCollinearRep;
    fn ratio(&self, i: usize) -> f64;
    fn segment_dot(&self, row: usize, cols: Range<usize>, psi: &[f64]) -> f64;
}

/// Values stored in the representation (absorption already baked in).
pub(crate) struct Stored<'a>(pub &'a QuasiCollinearRep);

impl BlockValues for Stored<'_> {
    #[inline]
    fn rep(&self) -> &QuasiCollinearRep {
        self.0
    }

    #[inline]
    fn ratio(&self, i: usize) -> f64 {
        self.0.ratios()[i]
    }

    #[inline]
    fn segment_dot(&self, _row: usize, cols: Range<usize>, psi: &[f64]) -> f64 {
        let edge = self.0.edge_slice(cols.clone());
        edge.iter().zip(&psi[cols]).map(|(e, p)| e * p).sum()
    }
}

/// Values recomputed on the fly for an arbitrary absorption pair, ignoring
/// whatever absorption the representation currently holds.
pub(crate) struct OnTheFly<'a> {
    pub rep: &'a QuasiCollinearRep,
    pub left: &'a [f64],
    pub right: &'a [f64],
}

impl BlockValues for OnTheFly<'_> {
    #[inline]
    fn rep(&self) -> &QuasiCollinearRep {
        self.rep
    }

    #[inline]
    fn ratio(&self, i: usize) -> f64 {
        self.rep.absorbed_ratio(i, self.left)
    }

    #[inline]
    fn segment_dot(&self, row: usize, cols: Range<usize>, psi: &[f64]) -> f64 {
        let eps = self.rep.epsilon();
        let a = self.left[row];
        cols.map(|j| (self.rep.edge_exponent(j) + (a + self.right[j]) / eps).exp() * psi[j])
            .sum()
    }
}

/// Writes the block product into `out` (every row is assigned).
pub(crate) fn sweep<V: BlockValues, C: OpCounter>(
    view: &V,
    psi: &[f64],
    out: &mut [f64],
    counter: &mut C,
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    sweep_add(view, psi, out, counter);
}

/// Adds the block product into `out`. Rows of an empty block row are left
/// untouched.
pub(crate) fn sweep_add<V: BlockValues, C: OpCounter>(
    view: &V,
    psi: &[f64],
    out: &mut [f64],
    counter: &mut C,
) {
    let rep = view.rep();
    let n = rep.rows();
    let Some(seed) = rep.seed_row() else {
        return;
    };
    let seed_cols = rep.segment(seed);
    let k = seed_cols.len();
    let mut acc = view.segment_dot(seed, seed_cols, psi);
    counter.mul(k);
    counter.add(k.saturating_sub(1));
    out[seed] += acc;

    match rep.orientation() {
        Orientation::Lower => {
            for i in seed + 1..n {
                let cols = rep.segment(i);
                let k = cols.len();
                acc = view.ratio(i - 1) * acc + view.segment_dot(i, cols, psi);
                counter.mul(1 + k);
                counter.add(k);
                out[i] += acc;
            }
        }
        Orientation::Upper => {
            for i in (0..seed).rev() {
                let cols = rep.segment(i);
                let k = cols.len();
                acc = view.ratio(i) * acc + view.segment_dot(i, cols, psi);
                counter.mul(1 + k);
                counter.add(k);
                out[i] += acc;
            }
        }
    }
}

/// `out = lower·psi + upper·psi`. The `N` additions combining the two
/// parts are tallied here; they happen inside the upper sweep.
pub(crate) fn sweep_both<L: BlockValues, U: BlockValues, C: OpCounter>(
    lower: &L,
    upper: &U,
    psi: &[f64],
    out: &mut [f64],
    counter: &mut C,
) {
    sweep(lower, psi, out, counter);
    sweep_add(upper, psi, out, counter);
    counter.add(out.len());
}

/// Writes `out_i = Σ_j |x_i - y_j| K_ij psi_j` using four block products:
/// `x_i (L psi - U psi)_i - (L (y∘psi))_i + (U (y∘psi))_i`.
pub(crate) fn sweep_cost_weighted<L: BlockValues, U: BlockValues>(
    lower: &L,
    upper: &U,
    x: &[f64],
    y: &[f64],
    psi: &[f64],
    out: &mut [f64],
) {
    let n = x.len();
    let weighted: Vec<f64> = y.iter().zip(psi).map(|(a, b)| a * b).collect();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut pw = vec![0.0; n];
    let mut qw = vec![0.0; n];
    sweep(lower, psi, &mut p, &mut ());
    sweep(upper, psi, &mut q, &mut ());
    sweep(lower, &weighted, &mut pw, &mut ());
    sweep(upper, &weighted, &mut qw, &mut ());
    for i in 0..n {
        out[i] = (x[i] * p[i] - pw[i]) + (qw[i] - x[i] * q[i]);
    }
}
