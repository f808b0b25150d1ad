mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relsplit::driver::{relative_error_f, relative_error_x};
use relsplit::problems::*;
use relsplit::*;

use common::*;

fn lerp(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| (1.0 - t) * a + t * b).collect()
}

fn check_local_optimality(problem: &Problem, reference: &Reference, feasible: impl Fn(&[f64]) -> bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let slack = 1e-9 * (1.0 + reference.phi.abs());
    let mut tried = 0;
    while tried < 100 {
        let scale = 10f64.powi(rng.random_range(-4..0));
        let y: Vec<f64> = reference.x.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect();
        if !feasible(&y) {
            continue;
        }
        tried += 1;
        assert!(problem.objective(&y) >= reference.phi - slack, "perturbation {scale} improves the reference");
    }
}

#[test]
fn lasso_reference_is_feasible_and_locally_optimal() {
    for (half, split) in [(true, LassoSplit::Literal), (false, LassoSplit::Consistent)] {
        let mut p = small_lasso(7);
        p.half_quadratic = half;
        let u = p.u;
        let problem = Problem::Lasso(p.clone());
        let r = reference_solution(&problem, 500, split).unwrap();
        assert!(!r.flagged, "{}", r.fix_res);
        assert!(p.infeasibility(&r.x) <= 1e-12);
        check_local_optimality(&problem, &r, |y| y.iter().all(|v| v.abs() <= u));
    }
}

#[test]
fn literal_split_misses_the_unhalved_minimiser() {
    let problem = Problem::Lasso(small_lasso(7));
    let literal = reference_solution(&problem, 500, LassoSplit::Literal).unwrap();
    let consistent = reference_solution(&problem, 500, LassoSplit::Consistent).unwrap();
    assert!(consistent.phi < literal.phi - 1e-6 * literal.phi.abs());
    assert!(relative_error_x(&literal.x, &consistent.x) > 1e-6);
}

#[test]
fn elastic_reference_is_feasible_and_locally_optimal() {
    let p = small_elastic(7);
    let problem = Problem::ElasticNet(p);
    let r = reference_solution(&problem, 2000, LassoSplit::Literal).unwrap();
    assert!(!r.flagged, "{}", r.fix_res);
    assert!(r.x.iter().all(|v| *v >= -1e-12));
    check_local_optimality(&problem, &r, |y| y.iter().all(|v| *v >= 0.0));
}

#[test]
fn metrics_vanish_at_the_reference() {
    let problem = Problem::Lasso(small_lasso(8));
    let r = reference_solution(&problem, 500, LassoSplit::Literal).unwrap();
    let (ex, ef) = point_metrics(&problem, &r, &r.x);
    assert_eq!(ex, 0.0);
    assert!(ef <= 1e-15);
    assert_eq!(relative_error_x(&[1.0, 0.0], &[0.0, 0.0]), 1.0 / 1e-30);
    assert_eq!(relative_error_f(0.5, 0.0), 0.5 / 1e-30);
    assert_eq!(relative_error_f(-3.0, -2.0), 0.5);
}

#[test]
fn errors_trend_down_along_a_run() {
    let p = small_lasso(9);
    let problem = Problem::Lasso(p.clone());
    let r = reference_solution(&problem, 500, LassoSplit::Literal).unwrap();
    let prob = split_lasso(&p).unwrap();
    let split = Splitting::davis_yin();
    let mut cfg = RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(1.0 / prob.beta).unwrap());
    cfg.max_iters = 400;
    cfg.record_every = 50;
    cfg.keep_iterates = true;
    let mut t = run(&split, &prob, &cfg, &split.zeros(prob.dim), &Monitor::none()).unwrap();
    metrics(&mut t, &problem, &r);
    let errs: Vec<f64> = t.rows.iter().map(|row| row.rel_err_x).collect();
    assert!(errs.iter().all(|e| e.is_finite()));
    assert!(errs.last().unwrap() < &(errs[0] * 1e-3));
    assert!(errs.windows(2).filter(|w| w[1] > w[0]).count() <= 1);
}

#[test]
fn cache_reuses_entries() {
    let cache = ReferenceCache::new();
    let problem = Problem::Lasso(small_lasso(10));
    let a = cache.get(&problem, 100, LassoSplit::Literal).unwrap();
    let b = cache.get(&problem, 100, LassoSplit::Literal).unwrap();
    assert!(std::sync::Arc::ptr_eq(&a, &b));
    cache.get(&problem, 100, LassoSplit::Consistent).unwrap();
    assert_eq!(cache.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lasso_objective_is_convex(seed in 0u64..20, t in 0.0..1.0f64, s in any::<u64>()) {
        let p = small_lasso(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x = random_vec(p.dim(), 3.0, &mut rng);
        let y = random_vec(p.dim(), 3.0, &mut rng);
        let mid = p.objective(&lerp(&x, &y, t));
        let chord = (1.0 - t) * p.objective(&x) + t * p.objective(&y);
        prop_assert!(mid <= chord + 1e-9 * (1.0 + chord.abs()));
    }

    #[test]
    fn elastic_objective_is_convex(seed in 0u64..20, t in 0.0..1.0f64, s in any::<u64>()) {
        let p = small_elastic(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x: Vec<f64> = random_vec(p.dim(), 3.0, &mut rng).into_iter().map(f64::abs).collect();
        let y: Vec<f64> = random_vec(p.dim(), 3.0, &mut rng).into_iter().map(f64::abs).collect();
        let mid = p.objective(&lerp(&x, &y, t));
        let chord = (1.0 - t) * p.objective(&x) + t * p.objective(&y);
        prop_assert!(mid <= chord + 1e-9 * (1.0 + chord.abs()));
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(small_lasso(seed), small_lasso(seed));
        prop_assert_eq!(small_elastic(seed), small_elastic(seed));
    }

    #[test]
    fn spectrum_is_respected(seed in 0u64..50, lo in 0.1..1.0f64, span in 0.0..2.0f64) {
        let p = gen_lasso(12, 8, seed, Spectrum { sigma_min: lo, sigma_max: lo + span }).unwrap();
        let l = p.lipschitz();
        prop_assert!(l >= lo * lo * (1.0 - 1e-12) && l <= (lo + span) * (lo + span) * (1.0 + 1e-12));
    }
}
