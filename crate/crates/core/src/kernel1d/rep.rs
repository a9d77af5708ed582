//! Dividing index and the ratio/block-edge representation of the two kernel
//! blocks.
//!
//! For row coordinates `x` and column coordinates `y`, the dividing index
//! `ζ(i)` counts the columns with `y_j <= x_i`. The lower block keeps the
//! entries `j < ζ(i)` (zero based), the upper block the rest. Inside each
//! block consecutive rows differ by the constant factor
//! `exp(-(x_{i+1} - x_i)/ε)` on their shared columns, so a block is fully
//! described by one ratio per row transition plus the entries each row adds
//! beyond the previous one (its block edge).

use ndarray::Array2;
use serde::Serialize;
use std::ops::Range;

use crate::error::{check_epsilon, check_finite, check_len, Result};
use crate::mesh::Mesh1D;

/// `zeta[i]` = number of column nodes `<= ` row node `i`; non-decreasing,
/// each entry in `0..=cols`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DividingIndex {
    zeta: Vec<usize>,
    cols: usize,
}

impl DividingIndex {
    pub fn as_slice(&self) -> &[usize] {
        &self.zeta
    }

    pub fn rows(&self) -> usize {
        self.zeta.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize) -> usize {
        self.zeta[i]
    }
}

/// Single merge pass over the two sorted meshes. A tie `x_i == y_j` puts
/// column `j` on the lower side of row `i`.
pub fn dividing_index(x: &Mesh1D, y: &Mesh1D) -> DividingIndex {
    let ys = y.nodes();
    let mut j = 0;
    let zeta = x
        .nodes()
        .iter()
        .map(|&xi| {
            while j < ys.len() && ys[j] <= xi {
                j += 1;
            }
            j
        })
        .collect();
    DividingIndex { zeta, cols: ys.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Lower,
    Upper,
}

/// Ratio vector plus block-edge segments for one block of
/// `diag(e^{a/ε}) · exp(-|x_i - y_j|/ε) · diag(e^{b/ε})`.
///
/// Edge entries are stored by column: the lower block's segment for row `i`
/// covers columns `ζ(i-1)..ζ(i)` (with `ζ(-1) = 0`), the upper block's covers
/// `ζ(i)..ζ(i+1)` (with `ζ(N) = M`). Both orders tile a contiguous column
/// range, so a single flat buffer indexed by `col - col_offset` holds them.
#[derive(Debug, Clone)]
pub struct QuasiCollinearRep {
    orientation: Orientation,
    boundaries: DividingIndex,
    epsilon: f64,
    col_offset: usize,
    ratio_exponents: Vec<f64>,
    edge_exponents: Vec<f64>,
    ratios: Vec<f64>,
    edges: Vec<f64>,
}

impl QuasiCollinearRep {
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn boundaries(&self) -> &DividingIndex {
        &self.boundaries
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rows(&self) -> usize {
        self.boundaries.rows()
    }

    pub fn cols(&self) -> usize {
        self.boundaries.cols()
    }

    /// Current ratios (absorption included), length `N - 1`.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// Columns covered by the block edge of `row`.
    pub fn segment(&self, row: usize) -> Range<usize> {
        let z = self.boundaries.as_slice();
        match self.orientation {
            Orientation::Lower => {
                let start = if row == 0 { 0 } else { z[row - 1] };
                start..z[row]
            }
            Orientation::Upper => {
                let end = if row + 1 == z.len() { self.cols() } else { z[row + 1] };
                z[row]..end
            }
        }
    }

    /// Current edge entries of `row` (absorption included).
    pub fn edge(&self, row: usize) -> &[f64] {
        let r = self.segment(row);
        &self.edges[r.start - self.col_offset..r.end - self.col_offset]
    }

    pub fn total_edge_entries(&self) -> usize {
        self.edges.len()
    }

    /// Whether the block row that ratio `i` scales is empty, in which case
    /// the ratio is the placeholder `1` and never influences a product.
    pub fn is_placeholder_ratio(&self, i: usize) -> bool {
        let z = self.boundaries.as_slice();
        match self.orientation {
            Orientation::Lower => z[i] == 0,
            Orientation::Upper => z[i + 1] == self.cols(),
        }
    }

    /// First row of the recursion; rows before it (lower) or after it
    /// (upper) carry an empty block row. `None` when the block is all zero.
    pub(crate) fn seed_row(&self) -> Option<usize> {
        let z = self.boundaries.as_slice();
        match self.orientation {
            Orientation::Lower => z.iter().position(|&v| v > 0),
            Orientation::Upper => z.iter().rposition(|&v| v < self.cols()),
        }
    }

    pub(crate) fn edge_exponent(&self, col: usize) -> f64 {
        self.edge_exponents[col - self.col_offset]
    }

    pub(crate) fn edge_slice(&self, cols: Range<usize>) -> &[f64] {
        &self.edges[cols.start - self.col_offset..cols.end - self.col_offset]
    }

    /// Absorbed ratio `i` for row absorption `left`, computed from exponents.
    pub(crate) fn absorbed_ratio(&self, i: usize, left: &[f64]) -> f64 {
        if self.is_placeholder_ratio(i) {
            return 1.0;
        }
        let shift = match self.orientation {
            Orientation::Lower => left[i + 1] - left[i],
            Orientation::Upper => left[i] - left[i + 1],
        };
        (self.ratio_exponents[i] + shift / self.epsilon).exp()
    }

    /// Recomputes ratios and edges for the total absorption `(left, right)`
    /// from the stored exponents; never patches values multiplicatively.
    pub(crate) fn set_absorption(&mut self, left: &[f64], right: &[f64]) {
        for i in 0..self.ratios.len() {
            self.ratios[i] = self.absorbed_ratio(i, left);
        }
        let eps = self.epsilon;
        for row in 0..self.rows() {
            for col in self.segment(row) {
                let k = col - self.col_offset;
                self.edges[k] = (self.edge_exponents[k] + (left[row] + right[col]) / eps).exp();
            }
        }
    }

    /// Expands the block from its ratios and edges, row by row: each row is
    /// the previous row scaled by the ratio, followed by its own edge.
    pub fn to_dense(&self) -> Array2<f64> {
        let (n, m) = (self.rows(), self.cols());
        let mut dense = Array2::zeros((n, m));
        match self.orientation {
            Orientation::Lower => {
                for i in 0..n {
                    if i > 0 {
                        let r = self.ratios[i - 1];
                        let prefix_end = self.boundaries.get(i - 1);
                        for j in 0..prefix_end {
                            dense[[i, j]] = r * dense[[i - 1, j]];
                        }
                    }
                    for (j, &e) in self.segment(i).zip(self.edge(i)) {
                        dense[[i, j]] = e;
                    }
                }
            }
            Orientation::Upper => {
                for i in (0..n).rev() {
                    if i + 1 < n {
                        let r = self.ratios[i];
                        let suffix_start = self.boundaries.get(i + 1);
                        for j in suffix_start..m {
                            dense[[i, j]] = r * dense[[i + 1, j]];
                        }
                    }
                    for (j, &e) in self.segment(i).zip(self.edge(i)) {
                        dense[[i, j]] = e;
                    }
                }
            }
        }
        dense
    }

    /// Structured dump of the current representation.
    pub fn dump(&self) -> RepDump {
        RepDump {
            orientation: self.orientation,
            epsilon: self.epsilon,
            zeta: self.boundaries.as_slice().to_vec(),
            ratios: self.ratios.clone(),
            edges: (0..self.rows()).map(|i| self.edge(i).to_vec()).collect(),
        }
    }
}

/// Serializable snapshot of a [`QuasiCollinearRep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepDump {
    pub orientation: Orientation,
    pub epsilon: f64,
    pub zeta: Vec<usize>,
    pub ratios: Vec<f64>,
    pub edges: Vec<Vec<f64>>,
}

impl RepDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }
}

/// Builds the unabsorbed representation of one block of the kernel with
/// rows on `x` and columns on `y`.
pub fn build_rep(
    x: &Mesh1D,
    y: &Mesh1D,
    epsilon: f64,
    orientation: Orientation,
) -> Result<QuasiCollinearRep> {
    check_epsilon(epsilon)?;
    let boundaries = dividing_index(x, y);
    let (xs, ys) = (x.nodes(), y.nodes());
    let (n, m) = (xs.len(), ys.len());

    let col_offset = match orientation {
        Orientation::Lower => 0,
        Orientation::Upper => boundaries.get(0),
    };
    let col_end = match orientation {
        Orientation::Lower => boundaries.get(n - 1),
        Orientation::Upper => m,
    };

    let ratio_exponents: Vec<f64> = xs.windows(2).map(|w| -(w[1] - w[0]) / epsilon).collect();
    let mut edge_exponents = vec![0.0; col_end - col_offset];

    let mut rep = QuasiCollinearRep {
        orientation,
        boundaries,
        epsilon,
        col_offset,
        ratio_exponents,
        edge_exponents: Vec::new(),
        ratios: vec![1.0; n.saturating_sub(1)],
        edges: vec![0.0; col_end - col_offset],
    };
    for (i, &xi) in xs.iter().enumerate() {
        for j in rep.segment(i) {
            let c = match orientation {
                Orientation::Lower => xi - ys[j],
                Orientation::Upper => ys[j] - xi,
            };
            edge_exponents[j - col_offset] = -c / epsilon;
        }
    }
    rep.edge_exponents = edge_exponents;
    rep.set_absorption(&vec![0.0; n], &vec![0.0; m]);
    Ok(rep)
}

pub(crate) fn validate_absorption(left: &[f64], right: &[f64], n: usize, m: usize) -> Result<()> {
    check_len(n, left.len())?;
    check_len(m, right.len())?;
    check_finite(left)?;
    check_finite(right)
}
