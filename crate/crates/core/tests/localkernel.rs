use fllr_core::localkernel::{knn_bandwidth_from_distances, local_weights_from_distances, KernelSpec};
use fllr_core::rng::stream;
use fllr_core::FllrError;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn box_example() {
    let w = local_weights_from_distances::<f64>(&[0.1, 0.2, 0.5], 2, KernelSpec::BOX).unwrap();
    assert!((w.bandwidth.realized_h - 0.2 * (1.0 + 1e-12)).abs() <= 1e-15);
    assert_eq!(w.bandwidth.k_h, 2);
    for (d, e) in w.deltas.iter().zip([1.5, 1.5, 0.0]) {
        assert!((d - e).abs() <= 1e-12);
    }
    assert_eq!(w.active, vec![0, 1]);
}

#[test]
fn triangle_example() {
    let w = local_weights_from_distances::<f64>(&[0.1, 0.2, 0.5], 2, KernelSpec::TRIANGLE).unwrap();
    // the second neighbor sits at the kernel's zero, up to the inflation
    assert!((w.deltas[0] - 3.0).abs() <= 1e-9);
    assert!(w.deltas[1] >= 0.0 && w.deltas[1] <= 1e-9);
    assert_eq!(w.deltas[2], 0.0);
}

#[test]
fn ties_at_the_kth_distance_are_included() {
    let w = local_weights_from_distances::<f64>(&[0.3, 0.1, 0.3, 0.3, 0.9], 2, KernelSpec::BOX).unwrap();
    assert_eq!(w.active, vec![0, 1, 2, 3]);
    assert!(w.deltas.iter().take(4).all(|&d| (d - 1.25).abs() <= 1e-12));
}

#[test]
fn bandwidth_matches_sorted_distances() {
    let mut r = stream(3, &[]);
    for _ in 0..50 {
        let d: Vec<f64> = (0..20).map(|_| r.random_range(0.0..5.0)).collect();
        let mut sorted = d.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 1..=20 {
            let bw = knn_bandwidth_from_distances(&d, k).unwrap();
            assert!((bw.realized_h - sorted[k - 1] * (1.0 + 1e-12)).abs() <= 1e-15 * sorted[k - 1].max(1.0));
        }
    }
}

#[test]
fn invalid_neighbor_counts() {
    assert!(matches!(
        knn_bandwidth_from_distances(&[0.1, 0.2], 3),
        Err(FllrError::NeighborCount { .. })
    ));
    assert!(knn_bandwidth_from_distances(&[0.1, 0.2], 0).is_err());
    assert!(knn_bandwidth_from_distances(&[0.1, f64::NAN], 1).is_err());
}

fn distances() -> impl Strategy<Value = (Vec<f64>, usize, bool)> {
    prop::collection::vec(0.0f64..10.0, 2..60).prop_flat_map(|d| {
        let n = d.len();
        (Just(d), 1..=n, any::<bool>())
    })
}

fn kernel(tri: bool) -> KernelSpec {
    if tri {
        KernelSpec::TRIANGLE
    } else {
        KernelSpec::BOX
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weights_have_mean_one((d, k, tri) in distances()) {
        match local_weights_from_distances(&d, k, kernel(tri)) {
            Ok(w) => {
                let mean = w.deltas.iter().sum::<f64>() / d.len() as f64;
                prop_assert!((mean - 1.0).abs() <= 1e-12);
                prop_assert!(w.deltas.iter().all(|&x| x >= 0.0));
                prop_assert!((w.normalization() - 1.0).abs() <= 1e-12);
            }
            // a triangle kernel with a single neighbor at distance zero
            // excluded, or all mass on the zero of the kernel
            Err(FllrError::ZeroWeights) => prop_assert!(tri),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn weights_ignore_the_distance_scale((d, k, tri) in distances(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
        let a = local_weights_from_distances(&d, k, kernel(tri));
        let b = local_weights_from_distances(&scaled, k, kernel(tri));
        if let (Ok(a), Ok(b)) = (a, b) {
            for (x, y) in a.deltas.iter().zip(&b.deltas) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn weights_follow_permutations((d, k, tri) in distances(), seed in any::<u64>()) {
        let mut r = stream(seed, &[]);
        let mut perm: Vec<usize> = (0..d.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let shuffled: Vec<f64> = perm.iter().map(|&i| d[i]).collect();
        let a = local_weights_from_distances(&d, k, kernel(tri));
        let b = local_weights_from_distances(&shuffled, k, kernel(tri));
        if let (Ok(a), Ok(b)) = (a, b) {
            for (pos, &i) in perm.iter().enumerate() {
                prop_assert!((a.deltas[i] - b.deltas[pos]).abs() <= 1e-12);
            }
        }
    }
}
