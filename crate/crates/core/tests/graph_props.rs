use proptest::prelude::*;
use relsplit::graph::{canonical, incidence_pinv_closed_form, predecessor_map, scheme_from_graph};
use relsplit::*;

fn random_tree() -> impl Strategy<Value = DiGraph> {
    (2usize..9)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(any::<prop::sample::Index>(), n - 1)))
        .prop_map(|(n, picks)| {
            let arcs = picks.iter().enumerate().map(|(k, ix)| (1 + ix.index(k + 1), k + 2)).collect();
            DiGraph::new(n, arcs).unwrap()
        })
}

#[test]
fn closed_form_pinv_matches_numerical() {
    for kind in CanonicalKind::ALL {
        for n in 2..=8 {
            let m = canonical(kind, n).unwrap().incidence::<f64>();
            let closed = incidence_pinv_closed_form::<f64>(kind, n).unwrap();
            let diff = closed.sub(&pseudoinverse(&m)).unwrap().max_abs();
            assert!(diff <= 1e-12, "{kind} n={n}: {diff}");
            let id = closed.matmul(&m).unwrap().sub(&DenseMatrix::identity(n - 1)).unwrap().max_abs();
            assert!(id <= 1e-12);
        }
    }
}

#[test]
fn canonical_schemes_are_admissible() {
    for kind in CanonicalKind::ALL {
        for n in 2..=8 {
            let g = canonical(kind, n).unwrap();
            let s = scheme_from_graph::<f64>(&g, &PredecessorMap::with_fallback(&g)).unwrap();
            assert!(s.validate(1e-10).unwrap().is_empty(), "{kind} n={n}");
        }
    }
}

#[test]
fn rejects_bad_graphs() {
    assert!(DiGraph::new(3, vec![(2, 1), (2, 3)]).is_err());
    assert!(DiGraph::new(4, vec![(1, 2), (3, 4)]).is_err());
    assert!(DiGraph::new(3, vec![(1, 2), (1, 2)]).is_err());
    assert!(DiGraph::new(1, vec![]).is_err());
    let cyc = DiGraph::new(3, vec![(1, 2), (2, 3), (1, 3)]).unwrap();
    assert!(scheme_from_graph::<f64>(&cyc, &PredecessorMap::with_fallback(&cyc)).is_err());
    assert!(PredecessorMap::new(vec![1, 3]).is_err());
}

proptest! {
    #[test]
    fn laplacian_is_incidence_gram(g in random_tree()) {
        let m = g.incidence::<f64>();
        let l = g.laplacian::<f64>();
        prop_assert!(l.sub(&m.matmul(&m.transpose()).unwrap()).unwrap().max_abs() == 0.0);
        prop_assert!(l.row_sums().iter().all(|s| *s == 0.0));
        let deg = g.degrees();
        for i in 0..g.n() {
            prop_assert_eq!(l[(i, i)], deg.kappa[i] as f64);
        }
    }

    #[test]
    fn tree_schemes_are_admissible(g in random_tree()) {
        let h = predecessor_map(&g).unwrap();
        let s = scheme_from_graph::<f64>(&g, &h).unwrap();
        let v = s.validate(1e-10).unwrap();
        prop_assert!(v.is_empty(), "{:?}", v);
        let split = Splitting::<f64>::from_graph(&g, &h).unwrap();
        prop_assert!(split.mu(1.0) > 0.0);
    }

    #[test]
    fn incidence_columns_sum_to_zero(g in random_tree()) {
        let m = g.incidence::<f64>();
        prop_assert_eq!(m.shape(), (g.n(), g.n() - 1));
        prop_assert!(m.col_sums().iter().all(|s| *s == 0.0));
    }
}
