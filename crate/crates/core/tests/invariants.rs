use nbcs::approx::{min_value_on, region_area};
use nbcs::geometry::Polygon2D;
use nbcs::{NestedSystem, WeightVector};
use proptest::prelude::*;

fn combine(sys: &NestedSystem, ids: &[usize], raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    let mut x = vec![0.0; sys.dim()];
    for (&i, r) in ids.iter().zip(raw) {
        for (xj, vj) in x.iter_mut().zip(sys.vertex(i)) {
            *xj += r / s * vj;
        }
    }
    x
}

/// Builds a system by splitting leaves picked from `picks` at interior points from `raws`.
fn build(d: usize, picks: &[usize], raws: &[Vec<f64>]) -> NestedSystem {
    let mut sys = NestedSystem::regular(d).unwrap();
    for (pick, raw) in picks.iter().zip(raws) {
        let leaves: Vec<_> = sys.leaves().collect();
        let leaf = leaves[pick % leaves.len()];
        let ids = sys.simplex(leaf).vertex_ids().to_vec();
        let p = combine(&sys, &ids, &raw[..=d]);
        let _ = sys.split(leaf, &p);
    }
    sys
}

fn system_strategy() -> impl Strategy<Value = (usize, Vec<usize>, Vec<Vec<f64>>)> {
    (2usize..=4).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(0usize..1000, 0..10),
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, d + 1), 10),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embeddings_are_convex_and_sparse((d, picks, raws) in system_strategy(), probe in prop::collection::vec(0.0f64..1.0, 6)) {
        let sys = build(d, &picks, &raws);
        let root_ids = sys.simplex(sys.root()).vertex_ids().to_vec();
        let x = combine(&sys, &root_ids, &probe[..=d].iter().map(|v| v + 1e-3).collect::<Vec<_>>());
        let e = sys.embed(&x).unwrap();
        prop_assert!(e.nnz() <= d + 1);
        prop_assert!((e.sum() - 1.0).abs() < 1e-9);
        prop_assert!(e.entries.iter().all(|&(i, a)| a >= -1e-9 && i < sys.vertex_count()));
        prop_assert!(e.entries.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn lifting_through_all_splits_preserves_decisions(
        (d, picks, raws) in system_strategy(),
        weights in prop::collection::vec(-3.0f64..3.0, 5),
        probe in prop::collection::vec(0.0f64..1.0, 6),
    ) {
        let root = NestedSystem::regular(d).unwrap();
        let sys = build(d, &picks, &raws);
        let w = WeightVector::from_values(weights[..=d].to_vec());
        let lifted = sys.lift_to_current(&w).unwrap();
        let ids = root.simplex(root.root()).vertex_ids().to_vec();
        let x = combine(&root, &ids, &probe[..=d].iter().map(|v| v + 1e-3).collect::<Vec<_>>());
        let a = root.decision_value(&w, &x).unwrap();
        let b = sys.decision_value(&lifted, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn region_of_nonnegative_weights_is_whole_root(w in prop::collection::vec(0.0f64..2.0, 3)) {
        let sys = NestedSystem::regular(2).unwrap();
        let area = region_area(&sys, &WeightVector::from_values(w)).unwrap();
        prop_assert!((area - 3f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_never_grows_a_polygon(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let square = Polygon2D::new(vec![[0.2, 0.1], [0.6, 0.1], [0.6, 0.5], [0.2, 0.5]]).unwrap();
        let clipped = square.clip_halfplane(a, b, c).map_or(0.0, |p| p.area());
        prop_assert!(clipped <= square.area() + 1e-12);
    }

    #[test]
    fn min_value_is_attained_at_polygon_corners(w in prop::collection::vec(-2.0f64..2.0, 3)) {
        let sys = NestedSystem::regular(2).unwrap();
        let target = Polygon2D::new(vec![[0.3, 0.1], [0.6, 0.2], [0.45, 0.5]]).unwrap();
        let weights = WeightVector::from_values(w);
        let min = min_value_on(&sys, &weights, &target).unwrap();
        let corners = target.vertices().iter().map(|p| sys.decision_value(&weights, p).unwrap()).fold(f64::INFINITY, f64::min);
        prop_assert!((min - corners).abs() < 1e-12);
    }
}
