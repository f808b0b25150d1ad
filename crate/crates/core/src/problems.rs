//! Constrained LASSO and elastic-net test problems.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::driver::{relative_error_f, relative_error_x, run, Monitor, RunConfig, RunStatus, Trace};
use crate::engine::{SplitProblem, Splitting};
use crate::error::{parameter, structural, Result};
use crate::graph::CanonicalKind;
use crate::linalg::{DenseMatrix, MatrixDoc};
use crate::operators::{gram_lambda_max, CocoerciveOp, ResolventOp};
use crate::relocator::RelocatorKind;
use crate::scalar;
use crate::schedule::{RelaxationPlan, StepsizeSchedule};

/// `‖Ax - b‖² + λ‖x‖₁` subject to `x ∈ [-u, u]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem {
    pub a: DenseMatrix<f64>,
    pub b: Vec<f64>,
    pub lam: f64,
    pub u: f64,
    /// Use `½‖Ax - b‖²` in the objective instead.
    pub half_quadratic: bool,
    pub seed: Option<u64>,
    lipschitz: f64,
}

impl LassoProblem {
    pub fn new(a: DenseMatrix<f64>, b: Vec<f64>, lam: f64, u: f64) -> Result<Self> {
        if a.rows() < 1 || a.cols() < 1 {
            return Err(structural("A must have at least one row and column"));
        }
        if b.len() != a.rows() {
            return Err(structural(format!("b has length {}, A has {} rows", b.len(), a.rows())));
        }
        if !(lam > 0.0) || !(u > 0.0) {
            return Err(parameter(format!("λ and u must be positive, got {lam} and {u}")));
        }
        let lipschitz = gram_lambda_max(&a);
        Ok(Self {
            a,
            b,
            lam,
            u,
            half_quadratic: false,
            seed: None,
            lipschitz,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `L = λ_max(AᵀA)`
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let r = residual(&self.a, &self.b, x);
        let q = scalar::dot(&r, &r);
        let q = if self.half_quadratic { 0.5 * q } else { q };
        q + self.lam * l1(x)
    }

    /// `max_i max(|x_i| - u, 0)`
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, &v| m.max(v.abs() - self.u))
    }
}

/// `½‖Ax - b‖² + λ₁‖x‖₁ + (λ₂/2)‖x‖²`
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticNetProblem {
    pub a: DenseMatrix<f64>,
    pub b: Vec<f64>,
    pub lam1: f64,
    pub lam2: f64,
    pub seed: Option<u64>,
    /// Coefficients used to generate `b`, when known.
    pub x_true: Option<Vec<f64>>,
    gram_max: f64,
}

impl ElasticNetProblem {
    pub fn new(a: DenseMatrix<f64>, b: Vec<f64>, lam1: f64, lam2: f64) -> Result<Self> {
        if a.rows() < 1 || a.cols() < 1 {
            return Err(structural("A must have at least one row and column"));
        }
        if b.len() != a.rows() {
            return Err(structural(format!("b has length {}, A has {} rows", b.len(), a.rows())));
        }
        if !(lam1 > 0.0) || !(lam2 > 0.0) {
            return Err(parameter(format!("λ₁ and λ₂ must be positive, got {lam1} and {lam2}")));
        }
        let gram_max = gram_lambda_max(&a);
        Ok(Self {
            a,
            b,
            lam1,
            lam2,
            seed: None,
            x_true: None,
            gram_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// `β = max(λ_max(AᵀA), λ₂)`
    pub fn beta(&self) -> f64 {
        self.gram_max.max(self.lam2)
    }

    pub fn gram_lambda_max(&self) -> f64 {
        self.gram_max
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let r = residual(&self.a, &self.b, x);
        0.5 * scalar::dot(&r, &r) + self.lam1 * l1(x) + 0.5 * self.lam2 * scalar::dot(x, x)
    }
}

fn residual(a: &DenseMatrix<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = a.mul_vec(x).expect("x matches the columns of A");
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    r
}

fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// Range of singular values for [`gen_lasso`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self {
            sigma_min: 0.5,
            sigma_max: 1.0,
        }
    }
}

/// Random LASSO instance: `A = U diag(σ) Vᵀ` with orthonormal `U`, `V` and
/// `σ_i ~ U[σ_min, σ_max]`, `b ~ N(0, I)`, `λ = 1e-3`, `u = 50`.
pub fn gen_lasso(q: usize, d: usize, seed: u64, spectrum: Spectrum) -> Result<LassoProblem> {
    if q < 1 || d < 1 {
        return Err(parameter("q and d must be at least 1"));
    }
    let Spectrum { sigma_min, sigma_max } = spectrum;
    if !(sigma_min > 0.0) || !(sigma_min <= sigma_max) || !sigma_max.is_finite() {
        return Err(parameter(format!(
            "spectrum needs 0 < σ_min ≤ σ_max, got [{sigma_min}, {sigma_max}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = q.min(d);
    let u = random_orthonormal(q, r, &mut rng);
    let v = random_orthonormal(d, r, &mut rng);
    let sigma: Vec<f64> = (0..r)
        .map(|_| {
            if sigma_min == sigma_max {
                sigma_min
            } else {
                rng.random_range(sigma_min..=sigma_max)
            }
        })
        .collect();
    let mut a = DenseMatrix::zeros(q, d);
    for i in 0..q {
        for j in 0..d {
            a[(i, j)] = (0..r).map(|k| u[(i, k)] * sigma[k] * v[(j, k)]).sum();
        }
    }
    let b: Vec<f64> = (0..q).map(|_| rng.sample(StandardNormal)).collect();
    let mut p = LassoProblem::new(a, b, 1e-3, 50.0)?;
    p.seed = Some(seed);
    Ok(p)
}

/// `rows × cols` matrix with orthonormal columns (Gram–Schmidt on a Gaussian draw).
fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while q.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for e in &q {
                let c = scalar::dot(&v, e);
                v.iter_mut().zip(e).for_each(|(vi, ei)| *vi -= c * ei);
            }
        }
        let n = scalar::norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|vi| *vi /= n);
            q.push(v);
        }
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    for (k, col) in q.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            m[(i, k)] = x;
        }
    }
    m
}

/// Parameters of [`gen_elastic_net`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticNetParams {
    /// Number of trailing columns replaced by combinations of earlier ones.
    pub n_corr: usize,
    pub noise_sd: f64,
    /// Rate of the exponential entries of `A`; `None` means `sqrt(q·d)`.
    pub exp_rate: Option<f64>,
    /// Jitter added to correlated columns, relative to the entry scale `1/rate`.
    pub jitter: f64,
    pub lam1: f64,
    pub lam2: f64,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        Self {
            n_corr: 0,
            noise_sd: 0.0,
            exp_rate: None,
            jitter: 1e-3,
            lam1: 1e-2,
            lam2: 1e-2,
        }
    }
}

/// Random elastic-net instance with exponential design and `b = A x_true + noise`.
pub fn gen_elastic_net(q: usize, d: usize, seed: u64, params: ElasticNetParams) -> Result<ElasticNetProblem> {
    if q < 1 || d < 1 {
        return Err(parameter("q and d must be at least 1"));
    }
    if params.n_corr >= d {
        return Err(parameter(format!("n_corr = {} must be below d = {d}", params.n_corr)));
    }
    if !(params.noise_sd >= 0.0) || !(params.jitter >= 0.0) {
        return Err(parameter("noise_sd and jitter must be nonnegative"));
    }
    let rate = params.exp_rate.unwrap_or(((q * d) as f64).sqrt());
    let exp_a = Exp::new(rate).map_err(|e| parameter(format!("exponential rate {rate}: {e}")))?;
    let exp_x = Exp::new(1.0).expect("unit rate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut a = DenseMatrix::zeros(q, d);
    for i in 0..q {
        for j in 0..d {
            a[(i, j)] = exp_a.sample(&mut rng);
        }
    }
    let free = d - params.n_corr;
    for c in free..d {
        let j1 = rng.random_range(0..free);
        let j2 = rng.random_range(0..free);
        let (w1, w2): (f64, f64) = (rng.random(), rng.random());
        for i in 0..q {
            let jit: f64 = rng.sample(StandardNormal);
            a[(i, c)] = w1 * a[(i, j1)] + w2 * a[(i, j2)] + params.jitter / rate * jit;
        }
    }
    let x_true: Vec<f64> = (0..d).map(|_| exp_x.sample(&mut rng)).collect();
    let mut b = a.mul_vec(&x_true)?;
    if params.noise_sd > 0.0 {
        let noise = Normal::new(0.0, params.noise_sd).map_err(|e| parameter(e.to_string()))?;
        b.iter_mut().for_each(|bi| *bi += noise.sample(&mut rng));
    }
    let mut p = ElasticNetProblem::new(a, b, params.lam1, params.lam2)?;
    p.seed = Some(seed);
    p.x_true = Some(x_true);
    Ok(p)
}

/// `(∂(λ‖·‖₁), N_{[-u,u]^d})` with `B = Aᵀ(A· - b)`, `β = L`.
pub fn split_lasso(p: &LassoProblem) -> Result<SplitProblem<f64>> {
    let b = CocoerciveOp::LeastSquaresGrad {
        a: p.a.clone(),
        b: p.b.clone(),
        scale: 1.0,
        beta: p.lipschitz,
    };
    SplitProblem::new(vec![ResolventOp::l1(p.lam)?, ResolventOp::boxed(p.u)?], vec![b], p.dim())
}

/// Like [`split_lasso`], with `B` the gradient of the quadratic term of the objective:
/// `2Aᵀ(A· - b)` (`β = 2L`), or `Aᵀ(A· - b)` with `half_quadratic`.
pub fn split_lasso_consistent(p: &LassoProblem) -> Result<SplitProblem<f64>> {
    let s = if p.half_quadratic { 1.0 } else { 2.0 };
    let b = CocoerciveOp::LeastSquaresGrad {
        a: p.a.clone(),
        b: p.b.clone(),
        scale: s,
        beta: s * p.lipschitz,
    };
    SplitProblem::new(vec![ResolventOp::l1(p.lam)?, ResolventOp::boxed(p.u)?], vec![b], p.dim())
}

/// `(N_{x≥0}, ∂(λ₁/2)‖·‖₁, ∂(λ₁/2)‖·‖₁)` with `B₁ = Aᵀ(A· - b)`, `B₂ = λ₂ I`.
pub fn split_elastic(p: &ElasticNetProblem) -> Result<SplitProblem<f64>> {
    let b1 = CocoerciveOp::LeastSquaresGrad {
        a: p.a.clone(),
        b: p.b.clone(),
        scale: 1.0,
        beta: p.gram_max,
    };
    let half = 0.5 * p.lam1;
    SplitProblem::new(
        vec![ResolventOp::NonnegNormalCone, ResolventOp::l1(half)?, ResolventOp::l1(half)?],
        vec![b1, CocoerciveOp::scaled_identity(p.lam2)?],
        p.dim(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Lasso(LassoProblem),
    ElasticNet(ElasticNetProblem),
}

/// Which forward operator a LASSO run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LassoSplit {
    /// `Aᵀ(A· - b)`, as in [`split_lasso`].
    #[default]
    Literal,
    /// The gradient of the objective's quadratic term, as in [`split_lasso_consistent`].
    Consistent,
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Lasso(p) => p.dim(),
            Problem::ElasticNet(p) => p.dim(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Problem::Lasso(p) => p.seed,
            Problem::ElasticNet(p) => p.seed,
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        match self {
            Problem::Lasso(p) => p.objective(x),
            Problem::ElasticNet(p) => p.objective(x),
        }
    }

    /// Number of resolvent slots of the split.
    pub fn num_resolvents(&self) -> usize {
        match self {
            Problem::Lasso(_) => 2,
            Problem::ElasticNet(_) => 3,
        }
    }

    pub fn split(&self, lasso_split: LassoSplit) -> Result<SplitProblem<f64>> {
        match (self, lasso_split) {
            (Problem::Lasso(p), LassoSplit::Literal) => split_lasso(p),
            (Problem::Lasso(p), LassoSplit::Consistent) => split_lasso_consistent(p),
            (Problem::ElasticNet(p), _) => split_elastic(p),
        }
    }

    pub fn to_doc(&self) -> ProblemDoc {
        match self {
            Problem::Lasso(p) => ProblemDoc::Lasso {
                a: MatrixDoc::from_matrix(&p.a),
                b: p.b.clone(),
                lam: p.lam,
                u: p.u,
                half_quadratic: p.half_quadratic,
            },
            Problem::ElasticNet(p) => ProblemDoc::ElasticNet {
                a: MatrixDoc::from_matrix(&p.a),
                b: p.b.clone(),
                lam1: p.lam1,
                lam2: p.lam2,
            },
        }
    }

    pub fn from_doc(doc: &ProblemDoc) -> Result<Self> {
        Ok(match doc {
            ProblemDoc::Lasso {
                a,
                b,
                lam,
                u,
                half_quadratic,
            } => {
                let mut p = LassoProblem::new(a.to_matrix()?, b.clone(), *lam, *u)?;
                p.half_quadratic = *half_quadratic;
                Problem::Lasso(p)
            }
            ProblemDoc::ElasticNet { a, b, lam1, lam2 } => {
                Problem::ElasticNet(ElasticNetProblem::new(a.to_matrix()?, b.clone(), *lam1, *lam2)?)
            }
        })
    }
}

/// Inline problem data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProblemDoc {
    Lasso {
        a: MatrixDoc,
        b: Vec<f64>,
        lam: f64,
        u: f64,
        #[serde(default)]
        half_quadratic: bool,
    },
    ElasticNet {
        a: MatrixDoc,
        b: Vec<f64>,
        lam1: f64,
        lam2: f64,
    },
}

/// A long constant-stepsize run standing in for the exact minimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Vec<f64>,
    pub phi: f64,
    pub fix_res: f64,
    pub iterations: usize,
    /// Set when the run ended with `fix_res > 1e-10`; metrics against it are approximate.
    pub flagged: bool,
}

/// Fixed-point residual at which a reference is trusted.
pub const REFERENCE_TOL: f64 = 1e-10;

/// Run `γ = 1/β` for `20 × budget` iterations, stopping early at `fix_res ≤ 1e-13`.
/// LASSO uses the two-node chain, elastic net the sequential three-node chain.
pub fn reference_solution(problem: &Problem, budget: usize, lasso_split: LassoSplit) -> Result<Reference> {
    let prob = problem.split(lasso_split)?;
    let (split, kind) = match problem {
        Problem::Lasso(_) => (Splitting::davis_yin(), RelocatorKind::DavisYin),
        Problem::ElasticNet(_) => (
            Splitting::canonical(CanonicalKind::Sequential, 3)?,
            RelocatorKind::Sequential,
        ),
    };
    let mut cfg = RunConfig::new(kind, StepsizeSchedule::constant(1.0 / prob.beta)?);
    cfg.relaxation = RelaxationPlan::constant(1.0, 1.0);
    cfg.max_iters = budget.saturating_mul(20).max(1);
    cfg.fix_res_tol = 1e-13;
    cfg.record_every = usize::MAX;
    let trace = run(&split, &prob, &cfg, &split.zeros(prob.dim), &Monitor::none())?;
    if let RunStatus::Aborted(why) = &trace.status {
        return Err(parameter(format!("reference run aborted: {why}")));
    }
    Ok(Reference {
        phi: problem.objective(&trace.x_final),
        x: trace.x_final,
        fix_res: trace.final_fix_res,
        iterations: trace.iterations,
        flagged: !(trace.final_fix_res <= REFERENCE_TOL),
    })
}

/// References keyed by problem seed, budget and split; each entry is computed once.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    entries: Mutex<HashMap<(u64, usize, LassoSplit), Arc<Reference>>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Problems without a seed are not cached.
    pub fn get(&self, problem: &Problem, budget: usize, lasso_split: LassoSplit) -> Result<Arc<Reference>> {
        let Some(seed) = problem.seed() else {
            return reference_solution(problem, budget, lasso_split).map(Arc::new);
        };
        let mut entries = self.entries.lock().expect("reference cache poisoned");
        if let Some(r) = entries.get(&(seed, budget, lasso_split)) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(reference_solution(problem, budget, lasso_split)?);
        entries.insert((seed, budget, lasso_split), Arc::clone(&r));
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("reference cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fill `objective`, `rel_err_x` and `rel_err_f` of every row that kept its iterate.
pub fn metrics(trace: &mut Trace<f64>, problem: &Problem, reference: &Reference) {
    trace.apply_metrics(&|x| problem.objective(x), &reference.x, reference.phi);
}

/// `(rel_err_x, rel_err_f)` of a single point.
pub fn point_metrics(problem: &Problem, reference: &Reference, x: &[f64]) -> (f64, f64) {
    (
        relative_error_x(x, &reference.x),
        relative_error_f(problem.objective(x), reference.phi),
    )
}
