//! Exact `O(N + M)` products with the 1D kernel `exp(-|x_i - y_j|/ε)`.

mod operator;
mod rep;
mod sweep;

pub use operator::KernelOperator1D;
pub use rep::{build_rep, dividing_index, DividingIndex, Orientation, QuasiCollinearRep, RepDump};
pub use sweep::{OpCount, OpCounter};

use crate::error::Result;
use crate::mesh::Mesh1D;

/// Builds the operator for `K` and `Kᵀ` with zero absorption.
pub fn build_operator(x: &Mesh1D, y: &Mesh1D, epsilon: f64) -> Result<KernelOperator1D> {
    KernelOperator1D::new(x, y, epsilon)
}

#[cfg(test)]
mod golden {
    use super::*;
    use crate::mesh::validate_mesh;

    fn lam(p: i32) -> f64 {
        (-1.0f64).exp().powi(p)
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-15 * v.abs())
    }

    #[test]
    fn worked_example_representations() {
        let x = validate_mesh(&[1.0, 3.0, 7.0, 9.0, 12.0]).unwrap();
        let y = validate_mesh(&[2.0, 5.0, 6.0, 9.0, 10.0]).unwrap();
        let lower = build_rep(&x, &y, 1.0, Orientation::Lower).unwrap();
        let upper = build_rep(&x, &y, 1.0, Orientation::Upper).unwrap();

        assert_eq!(lower.boundaries().as_slice(), &[0, 1, 3, 4, 5]);
        assert!(close(lower.ratios(), &[1.0, lam(4), lam(2), lam(3)]));
        let edges: [&[i32]; 5] = [&[], &[1], &[2, 1], &[0], &[2]];
        for (i, e) in edges.iter().enumerate() {
            let want: Vec<f64> = e.iter().map(|&p| lam(p)).collect();
            assert!(close(lower.edge(i), &want), "lower edge {i}");
        }

        assert!(close(upper.ratios(), &[lam(2), lam(4), lam(2), 1.0]));
        let edges: [&[i32]; 5] = [&[1], &[2, 3], &[2], &[1], &[]];
        for (i, e) in edges.iter().enumerate() {
            let want: Vec<f64> = e.iter().map(|&p| lam(p)).collect();
            assert!(close(upper.edge(i), &want), "upper edge {i}");
        }
    }

    #[test]
    fn placeholder_ratios_only_on_empty_rows() {
        let x = validate_mesh(&[1.0, 3.0, 7.0, 9.0, 12.0]).unwrap();
        let y = validate_mesh(&[2.0, 5.0, 6.0, 9.0, 10.0]).unwrap();
        let lower = build_rep(&x, &y, 1.0, Orientation::Lower).unwrap();
        let upper = build_rep(&x, &y, 1.0, Orientation::Upper).unwrap();
        for i in 0..4 {
            assert_eq!(lower.is_placeholder_ratio(i), i == 0);
            assert_eq!(upper.is_placeholder_ratio(i), i == 3);
            if !lower.is_placeholder_ratio(i) && !upper.is_placeholder_ratio(i) {
                assert_eq!(lower.ratios()[i], upper.ratios()[i]);
            }
        }
    }
}
