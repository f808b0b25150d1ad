use std::fmt;
use std::str::FromStr;

use anyhow::anyhow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relsplit::graph::{canonical, incidence_pinv_closed_form, predecessor_map, scheme_from_graph};
use relsplit::problems::{gen_elastic_net, gen_lasso, split_elastic, split_lasso, ElasticNetParams, Spectrum};
use relsplit::relocator::{check_recycling, lipschitz_constant, relocate_point};
use relsplit::{
    check_resolvent_identity, pseudoinverse, residuals, run, sweep, BlockVector, CanonicalKind, CocoerciveOp,
    DenseMatrix, DiGraph, Monitor, PredecessorMap, RelocatorKind, ResolventOp, RunConfig, RunStatus,
    SplitProblem, Splitting, StepsizeSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ResolventIdentity,
    RelocatorAxioms,
    Lipschitz,
    Recycling,
    SchemeValidity,
    PinvClosedForms,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::ResolventIdentity,
        Suite::RelocatorAxioms,
        Suite::Lipschitz,
        Suite::Recycling,
        Suite::SchemeValidity,
        Suite::PinvClosedForms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ResolventIdentity => "resolvent-identity",
            Suite::RelocatorAxioms => "relocator-axioms",
            Suite::Lipschitz => "lipschitz",
            Suite::Recycling => "recycling",
            Suite::SchemeValidity => "scheme-validity",
            Suite::PinvClosedForms => "pinv-closed-forms",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            anyhow!("unknown suite '{s}'; expected one of {}", names.join(", "))
        })
    }
}

/// `Ok(summary)` when every trial passes, otherwise the first counterexample.
pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::ResolventIdentity => resolvent_identity(trials, &mut rng),
        Suite::RelocatorAxioms => relocator_axioms(trials, &mut rng),
        Suite::Lipschitz => lipschitz(trials, &mut rng),
        Suite::Recycling => recycling(trials, &mut rng),
        Suite::SchemeValidity => scheme_validity(trials, &mut rng),
        Suite::PinvClosedForms => pinv_closed_forms(),
    }
}

fn random_resolvent(rng: &mut ChaCha8Rng) -> ResolventOp<f64> {
    match rng.random_range(0..4) {
        0 => ResolventOp::l1(rng.random_range(0.01..2.0)).unwrap(),
        1 => ResolventOp::boxed(rng.random_range(0.1..3.0)).unwrap(),
        2 => ResolventOp::NonnegNormalCone,
        _ => ResolventOp::ZeroOp,
    }
}

fn random_vec(len: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

fn random_forward(dim: usize, rng: &mut ChaCha8Rng) -> CocoerciveOp<f64> {
    if rng.random_bool(0.5) {
        let q = rng.random_range(1..=dim + 1);
        let data = random_vec(q * dim, 1.0, rng);
        let a = DenseMatrix::from_row_major(q, dim, data).unwrap();
        CocoerciveOp::least_squares(a, random_vec(q, 1.0, rng)).unwrap()
    } else {
        CocoerciveOp::scaled_identity(rng.random_range(0.05..2.0)).unwrap()
    }
}

fn random_problem(split: &Splitting<f64>, dim: usize, rng: &mut ChaCha8Rng) -> SplitProblem<f64> {
    let res = (0..split.n()).map(|_| random_resolvent(rng)).collect();
    let fwd = (0..split.p()).map(|_| random_forward(dim, rng)).collect();
    SplitProblem::new(res, fwd, dim).unwrap()
}

fn random_block(split: &Splitting<f64>, dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> BlockVector<f64> {
    BlockVector::from_flat(random_vec(split.m() * dim, scale, rng), split.m(), dim).unwrap()
}

fn cheap_kind(kind: CanonicalKind) -> RelocatorKind {
    match kind {
        CanonicalKind::InwardStar => RelocatorKind::InwardStar,
        CanonicalKind::OutwardStar => RelocatorKind::OutwardStar,
        CanonicalKind::Sequential => RelocatorKind::Sequential,
    }
}

fn random_cheap_setup(rng: &mut ChaCha8Rng) -> (Splitting<f64>, RelocatorKind) {
    if rng.random_bool(0.25) {
        return (Splitting::davis_yin(), RelocatorKind::DavisYin);
    }
    let kind = CanonicalKind::ALL[rng.random_range(0..3)];
    let n = rng.random_range(2..7);
    (Splitting::canonical(kind, n).unwrap(), cheap_kind(kind))
}

fn resolvent_identity(trials: usize, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for t in 0..trials {
        let op = random_resolvent(rng);
        let v = random_vec(rng.random_range(1..6), 10.0, rng);
        let gamma = rng.random_range(0.01..10.0);
        let delta = rng.random_range(0.01..10.0);
        if !check_resolvent_identity(&op, gamma, delta, &v, 1e-12) {
            return Err(format!("trial {t}: {op:?}, γ = {gamma}, δ = {delta}, v = {v:?}"));
        }
    }
    Ok(format!("{trials} trials"))
}

fn converge(split: &Splitting<f64>, prob: &SplitProblem<f64>, kind: RelocatorKind, gamma: f64) -> Option<BlockVector<f64>> {
    let mut cfg = RunConfig::new(kind, StepsizeSchedule::constant(gamma).ok()?);
    cfg.max_iters = 200_000;
    cfg.fix_res_tol = 1e-11;
    cfg.record_every = usize::MAX;
    let t = run(split, prob, &cfg, &split.zeros(prob.dim), &Monitor::none()).ok()?;
    (t.status == RunStatus::Converged).then_some(t.z_final)
}

/// Strongly convex instances, so every baseline run reaches a fixed point.
fn axiom_instance(rng: &mut ChaCha8Rng) -> (Splitting<f64>, SplitProblem<f64>, RelocatorKind) {
    let seed = rng.random();
    if rng.random_bool(0.4) {
        let lasso = gen_lasso(16, 8, seed, Spectrum { sigma_min: 0.5, sigma_max: 1.0 }).unwrap();
        (Splitting::davis_yin(), split_lasso(&lasso).unwrap(), RelocatorKind::DavisYin)
    } else {
        let params = ElasticNetParams {
            n_corr: 1,
            noise_sd: 0.01,
            lam2: 0.1,
            ..ElasticNetParams::default()
        };
        let net = gen_elastic_net(16, 8, seed, params).unwrap();
        let kind = CanonicalKind::ALL[rng.random_range(0..3)];
        let split = Splitting::canonical(kind, 3).unwrap();
        (split, split_elastic(&net).unwrap(), cheap_kind(kind))
    }
}

fn relocator_axioms(trials: usize, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for t in 0..trials {
        let (split, prob, kind) = axiom_instance(rng);
        let bound = split.gamma_bound(prob.beta);
        let gamma = rng.random_range(0.1..0.6) * bound;
        let delta = rng.random_range(0.1..0.6) * bound;
        let z = converge(&split, &prob, kind, gamma)
            .ok_or_else(|| format!("trial {t}: baseline run at γ = {gamma} did not converge"))?;
        let q = |k, to, from, z: &BlockVector<f64>| relocate_point(k, &split, &prob, to, from, z).unwrap();
        let scale = 1.0 + z.norm();
        let zd = q(kind, delta, gamma, &z);
        let fix = residuals(&split, &sweep(&split, &prob, delta, &zd).unwrap()).fix_res;
        if fix > 1e-8 * scale {
            return Err(format!("trial {t}: {kind} image is not fixed at δ = {delta}: fix_res {fix:e}"));
        }
        let back = q(kind, gamma, delta, &zd).dist(&z);
        if back > 1e-8 * scale {
            return Err(format!("trial {t}: {kind} inverse misses by {back:e}"));
        }
        let general = q(RelocatorKind::General, delta, gamma, &z).dist(&zd);
        if general > 1e-7 * scale {
            return Err(format!("trial {t}: {kind} and general differ by {general:e}"));
        }
        let same = q(kind, gamma, gamma, &z).dist(&z);
        if same > 1e-12 * scale {
            return Err(format!("trial {t}: {kind} at δ = γ moves the point by {same:e}"));
        }
    }
    Ok(format!("{trials} trials"))
}

fn lipschitz(trials: usize, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (split, cheap) = random_cheap_setup(rng);
        let kind = if rng.random_bool(0.25) { RelocatorKind::General } else { cheap };
        let dim = rng.random_range(1..4);
        let prob = random_problem(&split, dim, rng);
        let gamma = rng.random_range(0.05..0.95) * split.gamma_bound(prob.beta);
        let delta = rng.random_range(0.2..3.0) * gamma;
        let l = lipschitz_constant(kind, &split, delta, gamma, prob.beta).map_err(|e| e.to_string())?;
        let z = random_block(&split, dim, 5.0, rng);
        let w = random_block(&split, dim, 5.0, rng);
        let qz = relocate_point(kind, &split, &prob, delta, gamma, &z).unwrap();
        let qw = relocate_point(kind, &split, &prob, delta, gamma, &w).unwrap();
        let (lhs, zw) = (qz.dist(&qw), z.dist(&w));
        if lhs > l * zw + 1e-10 {
            return Err(format!("trial {t}: {kind}, n = {}, ‖Qz - Qw‖ = {lhs:e} > {l} × {zw:e}", split.n()));
        }
        if zw > 0.0 {
            worst = worst.max(lhs / (l * zw));
        }
    }
    Ok(format!("{trials} trials, max ratio {worst:.3}"))
}

fn recycling(trials: usize, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for t in 0..trials {
        let (split, kind) = random_cheap_setup(rng);
        let dim = rng.random_range(1..5);
        let prob = random_problem(&split, dim, rng);
        let bound = split.gamma_bound(prob.beta);
        let gamma = rng.random_range(0.05..0.95) * bound;
        let delta = rng.random_range(0.05..0.95) * bound;
        let z = random_block(&split, dim, 3.0, rng);
        if !check_recycling(kind, &split, &prob, delta, gamma, &z, 1e-10).map_err(|e| e.to_string())? {
            return Err(format!("trial {t}: {kind}, n = {}, γ = {gamma}, δ = {delta}, z = {:?}", split.n(), z.as_slice()));
        }
    }
    Ok(format!("{trials} trials"))
}

fn random_tree(rng: &mut ChaCha8Rng) -> DiGraph {
    let n = rng.random_range(2..9);
    let arcs = (2..=n).map(|j| (rng.random_range(1..j), j)).collect();
    DiGraph::new(n, arcs).unwrap()
}

fn scheme_validity(trials: usize, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for kind in CanonicalKind::ALL {
        for n in 2..=8 {
            let g = canonical(kind, n).unwrap();
            let s = scheme_from_graph::<f64>(&g, &PredecessorMap::with_fallback(&g)).unwrap();
            if let Some(v) = s.validate(1e-10).unwrap().first() {
                return Err(format!("{kind} n = {n}: {v}"));
            }
        }
    }
    for t in 0..trials {
        let g = random_tree(rng);
        let s = scheme_from_graph::<f64>(&g, &predecessor_map(&g).unwrap()).unwrap();
        if let Some(v) = s.validate(1e-10).unwrap().first() {
            return Err(format!("trial {t}: arcs {:?}: {v}", g.arcs()));
        }
    }
    Ok(format!("21 canonical schemes and {trials} random trees"))
}

fn pinv_closed_forms() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for kind in CanonicalKind::ALL {
        for n in 2..=8 {
            let closed = incidence_pinv_closed_form::<f64>(kind, n).unwrap();
            let numeric = pseudoinverse(&canonical(kind, n).unwrap().incidence::<f64>());
            let diff = closed.sub(&numeric).unwrap().max_abs();
            if diff > 1e-10 {
                return Err(format!("{kind} n = {n}: entries differ by {diff:e}"));
            }
            worst = worst.max(diff);
        }
    }
    Ok(format!("21 cases, max difference {worst:e}"))
}
