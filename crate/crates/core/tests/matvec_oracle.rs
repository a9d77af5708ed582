use proptest::prelude::*;

use nonuniform_ot::dense::{dense_kernel, dense_kernel_2d};
use nonuniform_ot::mesh::{validate_mesh, Grid2D, Mesh1D};
use nonuniform_ot::{KernelOperator1D, KernelOperator2D};

fn rel_inf(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale.max(f64::MIN_POSITIVE)
}

// Nodes on a coarse lattice so x and y share coordinates often.
fn lattice_mesh(max_len: usize) -> impl Strategy<Value = Mesh1D> {
    prop::collection::btree_set(0u32..64, 1..max_len)
        .prop_map(|s| validate_mesh(&s.into_iter().map(|k| k as f64 / 16.0).collect::<Vec<_>>()).unwrap())
}

fn unit_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fast_1d_matches_dense_with_ties(
        (x, y, psi, phi) in (lattice_mesh(40), lattice_mesh(40))
            .prop_flat_map(|(x, y)| {
                let (n, m) = (x.len(), y.len());
                (Just(x), Just(y), unit_vec(m), unit_vec(n))
            }),
        eps in prop::sample::select(vec![0.01, 0.1, 1.0]),
    ) {
        let op = KernelOperator1D::new(&x, &y, eps).unwrap();
        let dense = dense_kernel(&x, &y, eps).unwrap();
        prop_assert!(rel_inf(&op.apply(&psi).unwrap(), &dense.matvec(&psi).unwrap()) <= 1e-12);
        prop_assert!(rel_inf(&op.apply_transpose(&phi).unwrap(), &dense.matvec_transpose(&phi).unwrap()) <= 1e-12);
    }

    #[test]
    fn fast_2d_matches_dense(
        (xs, ys, xt, yt) in (lattice_mesh(9), lattice_mesh(9)).prop_flat_map(|(a, b)| {
            let (n, m) = (a.len(), b.len());
            let same = |len: usize| prop::collection::btree_set(0u32..64, len..=len)
                .prop_map(|s| validate_mesh(&s.into_iter().map(|k| k as f64 / 16.0).collect::<Vec<_>>()).unwrap());
            (Just(a), Just(b), same(n), same(m))
        }),
        eps in prop::sample::select(vec![0.05, 0.5]),
        seed in any::<u64>(),
    ) {
        let source = Grid2D::new(xs, ys);
        let target = Grid2D::new(xt, yt);
        let total = source.num_points();
        let psi: Vec<f64> = (0..total).map(|i| ((seed.wrapping_add(i as u64) % 97) as f64 + 1.0) / 97.0).collect();
        let op = KernelOperator2D::new(&source, &target, eps).unwrap();
        let dense = dense_kernel_2d(&source, &target, eps, usize::MAX).unwrap();
        let want = dense.matvec(&psi).unwrap();
        prop_assert!(rel_inf(&op.apply_2d(&psi).unwrap(), &want) <= 1e-12);
        prop_assert!(rel_inf(&op.apply_2d_stabilized(&psi).unwrap(), &want) <= 1e-12);
        let want_t = dense.matvec_transpose(&psi).unwrap();
        prop_assert!(rel_inf(&op.apply_transpose_2d(&psi).unwrap(), &want_t) <= 1e-12);
    }
}
