use proptest::prelude::*;
use relsplit::operators::soft_threshold;
use relsplit::{check_resolvent_identity, CocoerciveOp, DenseMatrix, ResolventOp};

fn resolvent() -> impl Strategy<Value = ResolventOp<f64>> {
    prop_oneof![
        (0.01..5.0f64).prop_map(|w| ResolventOp::l1(w).unwrap()),
        (0.01..5.0f64).prop_map(|u| ResolventOp::boxed(u).unwrap()),
        Just(ResolventOp::NonnegNormalCone),
        Just(ResolventOp::ZeroOp),
    ]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

proptest! {
    #[test]
    fn relocation_identity(op in resolvent(), v in prop::collection::vec(-20.0..20.0f64, 1..8),
                           g in 0.01..10.0f64, d in 0.01..10.0f64) {
        prop_assert!(check_resolvent_identity(&op, g, d, &v, 1e-12));
    }

    #[test]
    fn resolvents_are_firmly_nonexpansive(op in resolvent(), g in 0.01..10.0f64,
                                          uv in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..8)) {
        let (u, v): (Vec<f64>, Vec<f64>) = uv.into_iter().unzip();
        let ju = op.resolve(g, &u).unwrap();
        let jv = op.resolve(g, &v).unwrap();
        let dj = diff(&ju, &jv);
        prop_assert!(dot(&dj, &dj) <= dot(&dj, &diff(&u, &v)) + 1e-12);
    }

    #[test]
    fn soft_threshold_matches_grid(v in -3.0..3.0f64, t in 0.0..2.0f64) {
        // argmin_x t|x| + ½(x - v)² on a fine grid
        let grid = (0..=60_000).map(|i| -3.0 + i as f64 * 1e-4);
        let f = |x: f64| t * x.abs() + 0.5 * (x - v) * (x - v);
        let best = grid.min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap()).unwrap();
        prop_assert!((soft_threshold(v, t) - best).abs() <= 1e-4);
    }

    #[test]
    fn least_squares_is_cocoercive(rows in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 3), 1..5),
                                   b in prop::collection::vec(-1.0..1.0f64, 5),
                                   x in prop::collection::vec(-5.0..5.0f64, 3),
                                   y in prop::collection::vec(-5.0..5.0f64, 3)) {
        let q = rows.len();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let op = CocoerciveOp::least_squares(a, b[..q].to_vec()).unwrap();
        let (bx, by) = (op.apply(&x).unwrap(), op.apply(&y).unwrap());
        let db = diff(&bx, &by);
        // <Bx - By, x - y> ≥ (1/β)‖Bx - By‖²
        prop_assert!(op.beta() * dot(&db, &diff(&x, &y)) + 1e-9 >= dot(&db, &db));
    }
}

#[test]
fn invalid_stepsize_is_rejected() {
    assert!(ResolventOp::l1(1.0).unwrap().resolve(0.0, &[1.0]).is_err());
    assert!(ResolventOp::<f64>::l1(-1.0).is_err());
    assert!(ResolventOp::<f64>::boxed(0.0).is_err());
}
