//! Entropic Wasserstein-1 transport on non-uniform meshes with linear-time
//! Sinkhorn iterations.
//!
//! The kernel `K_ij = exp(-|x_i - y_j|/ε)` between two sorted 1D meshes is
//! split by a dividing index into a lower and an upper block. Consecutive
//! rows of each block are proportional on their shared columns, so `Kψ` and
//! `Kᵀφ` reduce to one forward and one backward recursion: `O(N + M)` work
//! with no approximation. 2D tensor-product grids factor as `K_y ⊗ K_x` and
//! reuse the 1D recursions along each axis.
//!
//! | module | contents |
//! |--------|----------|
//! | [`mesh`] | meshes, measures, seeded generators |
//! | [`kernel1d`] | dividing index, block representations, fast 1D matvec |
//! | [`kernel2d`] | Kronecker-factored 2D matvec and its absorbed variant |
//! | [`dense`] | brute-force kernels, matvecs and plans used as the oracle |
//! | [`solver`] | the shared Sinkhorn driver, 1D/2D entry points |
//! | [`problem`] | problem files and CSV export |
//! | [`bench`] | timing, exponent fits and reports for the CLI |

pub mod bench;
pub mod dense;
pub mod error;
pub mod kernel1d;
pub mod kernel2d;
pub mod mesh;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use kernel1d::{build_operator, dividing_index, KernelOperator1D};
pub use kernel2d::KernelOperator2D;
pub use mesh::{Grid2D, Measure, Measure2D, Mesh1D};
pub use solver::{sinkhorn_1d, sinkhorn_2d, Solution, SolverConfig};
