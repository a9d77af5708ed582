//! Support meshes, probability measures, and seeded generators.
//!
//! Every generator is a pure function of its size and seed. Randomness comes
//! from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), so a given
//! `(n, seed)` pair yields the same bytes on every platform.

use ndarray::{Array2, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a [`Measure`] or [`Measure2D`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Strictly ascending, finite node coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(index) = nodes.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::DuplicateNode { index: i + 1, value: w[1] });
            }
            if w[0] > w[1] {
                return Err(Error::UnsortedInput { index: i + 1, prev: w[0], next: w[1] });
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false; a mesh holds at least one node.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn into_nodes(self) -> Vec<f64> {
        self.nodes
    }
}

/// Validates a raw coordinate list as a [`Mesh1D`].
pub fn validate_mesh(nodes: &[f64]) -> Result<Mesh1D> {
    Mesh1D::new(nodes.to_vec())
}

/// The `n` Chebyshev nodes `1/2 + 1/2 cos((2k-1)π/(2n))`, `k = 1..n`, in
/// ascending order.
pub fn chebyshev_nodes(n: usize) -> Result<Mesh1D> {
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    // k = n..1 gives ascending values.
    let nodes = (1..=n)
        .rev()
        .map(|k| 0.5 + 0.5 * ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos())
        .collect();
    Mesh1D::new(nodes)
}

/// `n` uniform samples on `[0, 1)`, sorted. Exact duplicates are redrawn.
pub fn random_sorted_nodes(n: usize, seed: u64) -> Result<Mesh1D> {
    if n == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    loop {
        nodes.sort_by(f64::total_cmp);
        let mut redrawn = false;
        for i in 1..nodes.len() {
            if nodes[i] == nodes[i - 1] {
                nodes[i] = rng.random::<f64>();
                redrawn = true;
            }
        }
        if !redrawn {
            break;
        }
    }
    Mesh1D::new(nodes)
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    /// Accepts weights that already sum to one (within [`MASS_TOLERANCE`]).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
        }
        Ok(Self { weights })
    }

    /// Divides nonnegative weights by their sum. A zero sum is an error.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidMeasure("no weights".into()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidMeasure(format!("weight {i} is {w}")));
        }
    }
    Ok(())
}

/// `n` uniform samples on `[0, 1)` normalized to unit mass.
pub fn random_measure(n: usize, seed: u64) -> Result<Measure> {
    if n == 0 {
        return Err(Error::InvalidMeasure("no weights".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..n).map(|_| rng.random::<f64>()).collect();
    Measure::normalized(weights)
}

/// Tensor-product grid `x × y` with column-major point ordering: point
/// `(k, i)` (x index `k`, y index `i`, zero based) has linear index `k + i·N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    x: Mesh1D,
    y: Mesh1D,
}

impl Grid2D {
    pub fn new(x: Mesh1D, y: Mesh1D) -> Self {
        Self { x, y }
    }

    pub fn x(&self) -> &Mesh1D {
        &self.x
    }

    pub fn y(&self) -> &Mesh1D {
        &self.y
    }

    /// `(N, M)`: number of x nodes and number of y nodes.
    pub fn shape(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn num_points(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn linear_index(&self, k: usize, i: usize) -> usize {
        k + i * self.x.len()
    }
}

/// Nonnegative `N × M` weights summing to one, stored column-major so that
/// [`Measure2D::as_vec`] is the column-major vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure2D {
    weights: Array2<f64>,
}

impl Measure2D {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        let m = Self::normalize_layout(weights);
        check_weights(m.as_vec())?;
        let total: f64 = m.as_vec().iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
        }
        Ok(m)
    }

    pub fn normalized(weights: Array2<f64>) -> Result<Self> {
        let mut m = Self::normalize_layout(weights);
        check_weights(m.as_vec())?;
        let total: f64 = m.weights.sum();
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("weights sum to zero".into()));
        }
        m.weights.mapv_inplace(|w| w / total);
        Ok(m)
    }

    /// Builds from a column-major vector of length `n * m`.
    pub fn from_col_major(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        crate::error::check_len(n * m, data.len())?;
        let weights = Array2::from_shape_vec((n, m).f(), data)
            .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Self::new(weights)
    }

    fn normalize_layout(weights: Array2<f64>) -> Self {
        let (n, m) = weights.dim();
        let mut f = Array2::zeros((n, m).f());
        f.assign(&weights);
        Self { weights: f }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn shape(&self) -> (usize, usize) {
        self.weights.dim()
    }

    /// Column-major vectorization.
    pub fn as_vec(&self) -> &[f64] {
        self.weights
            .as_slice_memory_order()
            .expect("measure weights are stored contiguously")
    }
}

/// `N × M` uniform samples normalized to unit mass, drawn in column-major order.
pub fn random_measure_2d(n: usize, m: usize, seed: u64) -> Result<Measure2D> {
    let flat = random_measure(n * m, seed)?;
    let weights = Array2::from_shape_vec((n, m).f(), flat.weights)
        .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    Ok(Measure2D { weights })
}

/// Derives independent generator seeds from one user-facing seed
/// (SplitMix64 finalizer applied to `seed + stream`).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mesh_validates() {
        let m = validate_mesh(&[1.0, 3.0, 7.0, 9.0, 12.0]).unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(validate_mesh(&[0.0]).unwrap().len(), 1);
    }

    #[test]
    fn mesh_errors() {
        assert!(matches!(validate_mesh(&[1.0, 1.0, 2.0]), Err(Error::DuplicateNode { index: 1, .. })));
        assert!(matches!(validate_mesh(&[1.0, 0.5]), Err(Error::UnsortedInput { index: 1, .. })));
        assert!(matches!(
            validate_mesh(&[0.0, f64::NAN]),
            Err(Error::NonFiniteCoordinate { index: 1 })
        ));
        assert!(matches!(
            validate_mesh(&[f64::NEG_INFINITY, 0.0]),
            Err(Error::NonFiniteCoordinate { index: 0 })
        ));
        assert_eq!(validate_mesh(&[]), Err(Error::EmptyMesh));
    }

    #[test]
    fn chebyshev_small() {
        assert_eq!(chebyshev_nodes(1).unwrap().nodes(), &[0.5]);
        let two = chebyshev_nodes(2).unwrap();
        let lo = 0.5 + 0.5 * (3.0 * PI / 4.0).cos();
        let hi = 0.5 + 0.5 * (PI / 4.0).cos();
        assert_eq!(two.nodes(), &[lo, hi]);
        assert!((lo - 0.146_446_609_406_726_24).abs() < 1e-15);
        assert!((hi - 0.853_553_390_593_273_8).abs() < 1e-15);
        assert!(chebyshev_nodes(0).is_err());
    }

    #[test]
    fn chebyshev_symmetric_in_unit_interval() {
        for n in [1, 2, 7, 500, 1001] {
            let m = chebyshev_nodes(n).unwrap();
            let x = m.nodes();
            for k in 0..n {
                assert!(x[k] > 0.0 && x[k] < 1.0);
                assert!((x[k] + x[n - 1 - k] - 1.0).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn random_nodes_deterministic() {
        let a = random_sorted_nodes(5, 42).unwrap();
        let b = random_sorted_nodes(5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_sorted_nodes(5, 43).unwrap());
        let big = random_sorted_nodes(1000, 7).unwrap();
        assert!(big.nodes().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(big.nodes().windows(2).all(|w| w[0] < w[1]));
        let one = random_sorted_nodes(1, 0).unwrap();
        assert!((0.0..=1.0).contains(&one.nodes()[0]));
    }

    #[test]
    fn random_measures() {
        let m = random_measure(3, 1).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        assert_eq!(random_measure(1, 9).unwrap().weights(), &[1.0]);
        let m = random_measure(500, 3).unwrap();
        assert!(m.weights().iter().all(|&w| w > 0.0 && w < 1.0));
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE);
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::new(vec![0.5, 0.5]).is_ok());
        assert!(Measure::new(vec![0.5, 0.6]).is_err());
        assert!(Measure::new(vec![1.5, -0.5]).is_err());
        assert!(Measure::normalized(vec![0.0, 0.0]).is_err());
        assert_eq!(Measure::normalized(vec![1.0, 3.0]).unwrap().weights(), &[0.25, 0.75]);
    }

    #[test]
    fn grid_linear_index_is_column_major() {
        let g = Grid2D::new(chebyshev_nodes(3).unwrap(), chebyshev_nodes(4).unwrap());
        assert_eq!(g.shape(), (3, 4));
        assert_eq!(g.linear_index(0, 0), 0);
        assert_eq!(g.linear_index(2, 0), 2);
        assert_eq!(g.linear_index(0, 1), 3);
        assert_eq!(g.linear_index(2, 3), 11);
    }

    #[test]
    fn measure2d_layout() {
        let w = ndarray::array![[0.1, 0.2], [0.3, 0.4]];
        let m = Measure2D::new(w).unwrap();
        // column-major: (0,0), (1,0), (0,1), (1,1)
        assert_eq!(m.as_vec(), &[0.1, 0.3, 0.2, 0.4]);
        let r = random_measure_2d(4, 3, 11).unwrap();
        assert_eq!(r.shape(), (4, 3));
        assert!((r.as_vec().iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..4).map(|k| derive_seed(1, k)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(s[i], s[j]);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn generated_meshes_strictly_ascending(n in 1usize..400, seed in any::<u64>()) {
                let r = random_sorted_nodes(n, seed).unwrap();
                prop_assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
                let c = chebyshev_nodes(n).unwrap();
                prop_assert!(c.nodes().windows(2).all(|w| w[0] < w[1]));
            }

            #[test]
            fn random_measure_unit_mass(n in 1usize..5000, seed in any::<u64>()) {
                let m = random_measure(n, seed).unwrap();
                prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= MASS_TOLERANCE);
            }
        }
    }
}
