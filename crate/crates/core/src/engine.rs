//! The resolvent sweep `x^γ(z)`, the operator `T_{θ,γ}`, and residuals.
//!
//! A [`Splitting`] pairs a validated scheme with a coordinate scale `s`.
//! Explicit schemes use `s = 1`. Graph schemes use `s = 2`, so the public
//! `γ`, `θ` and `z` are the graph-form quantities, and the sweep internally
//! runs the matrix form at `γ/s` and `z/s`. The outputs `x` are the same in
//! both coordinate systems, and `T_{θ,γ} z = z - θ Mᵀ x` holds in either.

use crate::error::{parameter, structural, Result};
use crate::graph::{canonical, scheme_from_graph, CanonicalKind, DiGraph, PredecessorMap};
use crate::linalg::{kron_apply, pseudoinverse, BlockVector, DenseMatrix};
use crate::operators::{CocoerciveOp, ResolventOp};
use crate::scalar::Scalar;
use crate::scheme::{feasibility_margin, CoefficientScheme, DEFAULT_TOL};

/// Operators `A_1..A_n` (by resolvent) and `B_1..B_p` on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProblem<T> {
    pub resolvents: Vec<ResolventOp<T>>,
    pub forwards: Vec<CocoerciveOp<T>>,
    /// Common cocoercivity constant of the forward operators.
    pub beta: T,
    pub dim: usize,
}

impl<T: Scalar> SplitProblem<T> {
    /// `β` is taken as the largest constant among the forwards.
    pub fn new(resolvents: Vec<ResolventOp<T>>, forwards: Vec<CocoerciveOp<T>>, dim: usize) -> Result<Self> {
        let beta = forwards.iter().fold(T::zero(), |b, f| b.max(f.beta()));
        Self::with_beta(resolvents, forwards, dim, beta)
    }

    pub fn with_beta(
        resolvents: Vec<ResolventOp<T>>,
        forwards: Vec<CocoerciveOp<T>>,
        dim: usize,
        beta: T,
    ) -> Result<Self> {
        if resolvents.is_empty() {
            return Err(structural("a split problem needs at least one resolvent operator"));
        }
        if let Some(f) = forwards.iter().find(|f| f.dim().is_some_and(|k| k != dim)) {
            return Err(structural(format!(
                "forward operator acts on R^{} but the problem lives in R^{dim}",
                f.dim().unwrap_or(0)
            )));
        }
        if beta < T::zero() || !beta.is_finite() {
            return Err(parameter(format!("β must be finite and nonnegative, got {beta}")));
        }
        if let Some(f) = forwards.iter().find(|f| f.beta() > beta) {
            return Err(parameter(format!(
                "β = {beta} is below a forward operator's constant {}",
                f.beta()
            )));
        }
        Ok(Self {
            resolvents,
            forwards,
            beta,
            dim,
        })
    }
}

/// A validated scheme together with the data the engine and relocators reuse.
#[derive(Debug, Clone)]
pub struct Splitting<T> {
    scheme: CoefficientScheme<T>,
    m_t: DenseMatrix<T>,
    m_pinv: DenseMatrix<T>,
    scale: T,
    graph: Option<DiGraph>,
    mu_unit: T,
}

impl<T: Scalar> Splitting<T> {
    /// Matrix-form splitting; fails with the list of violations if the scheme is not admissible.
    pub fn from_scheme(scheme: CoefficientScheme<T>) -> Result<Self> {
        Self::from_scheme_tol(scheme, T::lit(DEFAULT_TOL))
    }

    pub fn from_scheme_tol(scheme: CoefficientScheme<T>, tol: T) -> Result<Self> {
        let v = scheme.validate(tol)?;
        if !v.is_empty() {
            let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
            return Err(parameter(format!("inadmissible scheme: {}", msg.join("; "))));
        }
        Ok(Self::assemble(scheme, T::one(), None))
    }

    /// Graph-form splitting built from a spanning tree.
    pub fn from_graph(g: &DiGraph, h: &PredecessorMap) -> Result<Self> {
        let scheme = scheme_from_graph(g, h)?;
        let v = scheme.validate(T::lit(DEFAULT_TOL))?;
        if !v.is_empty() {
            return Err(structural(format!("graph scheme failed validation: {}", v[0])));
        }
        Ok(Self::assemble(scheme, T::two(), Some(g.clone())))
    }

    /// Canonical tree with the fallback predecessor rule.
    pub fn canonical(kind: CanonicalKind, n: usize) -> Result<Self> {
        let g = canonical(kind, n)?;
        Self::from_graph(&g, &PredecessorMap::with_fallback(&g))
    }

    /// The two-node chain, i.e. Davis–Yin in graph form.
    pub fn davis_yin() -> Self {
        Self::canonical(CanonicalKind::Sequential, 2).expect("chain is valid")
    }

    fn assemble(scheme: CoefficientScheme<T>, scale: T, graph: Option<DiGraph>) -> Self {
        let m_t = scheme.m_mat().transpose();
        let m_pinv = pseudoinverse(scheme.m_mat());
        let mu_unit = scheme.mu_unit();
        Self {
            scheme,
            m_t,
            m_pinv,
            scale,
            graph,
            mu_unit,
        }
    }

    pub fn scheme(&self) -> &CoefficientScheme<T> {
        &self.scheme
    }

    pub fn graph(&self) -> Option<&DiGraph> {
        self.graph.as_ref()
    }

    /// 1 for matrix form, 2 for graph form.
    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn m_t(&self) -> &DenseMatrix<T> {
        &self.m_t
    }

    pub fn m_pinv(&self) -> &DenseMatrix<T> {
        &self.m_pinv
    }

    pub fn n(&self) -> usize {
        self.scheme.n()
    }

    pub fn m(&self) -> usize {
        self.scheme.m()
    }

    pub fn p(&self) -> usize {
        self.scheme.p()
    }

    pub fn mu(&self, beta: T) -> T {
        beta * self.mu_unit
    }

    /// Supremum of admissible public stepsizes, `2s/μ` (infinite when `μ = 0`).
    pub fn gamma_bound(&self, beta: T) -> T {
        let mu = self.mu(beta);
        if mu == T::zero() {
            T::infinity()
        } else {
            T::two() * self.scale / mu
        }
    }

    /// `2 - (γ/s)μ - 2λ(θ/s)`, the margin of the iterated matrix-form operator.
    pub fn margin(&self, gamma: T, lambda: T, theta: T, beta: T) -> T {
        feasibility_margin(gamma / self.scale, lambda, theta / self.scale, self.mu(beta))
    }

    pub fn zeros(&self, dim: usize) -> BlockVector<T> {
        BlockVector::zeros(self.m(), dim)
    }

    fn check(&self, prob: &SplitProblem<T>, gamma: T, z: &BlockVector<T>) -> Result<()> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(parameter(format!("stepsize must be positive, got {gamma}")));
        }
        if prob.resolvents.len() != self.n() {
            return Err(structural(format!(
                "scheme has {} resolvent slots but the problem supplies {}",
                self.n(),
                prob.resolvents.len()
            )));
        }
        if prob.forwards.len() != self.p() {
            return Err(structural(format!(
                "scheme has {} forward slots but the problem supplies {}",
                self.p(),
                prob.forwards.len()
            )));
        }
        if z.num_blocks() != self.m() || z.dim() != prob.dim {
            return Err(structural(format!(
                "z has {} blocks of dimension {}, expected {} of dimension {}",
                z.num_blocks(),
                z.dim(),
                self.m(),
                prob.dim
            )));
        }
        Ok(())
    }

    /// `(1/d_i)(M z/s)_i`
    fn block_input(&self, i: usize, z: &BlockVector<T>) -> Vec<T> {
        let c = T::one() / self.scale / self.scheme.d()[i];
        let m = self.scheme.m_mat();
        let mut out = vec![T::zero(); z.dim()];
        for j in 0..m.cols() {
            let a = m[(i, j)];
            if a == T::zero() {
                continue;
            }
            for (o, &zj) in out.iter_mut().zip(z.block(j)) {
                *o += a * zj;
            }
        }
        out.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// Outputs of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    /// `x^γ(z)`, `n` blocks.
    pub x: BlockVector<T>,
    /// `B_j(Σ_t R_jt x_t)` for `j = 1..p`.
    pub forward_cache: Vec<Vec<T>>,
    /// Input of the first resolvent, `(1/d_1)(M z/s)_1`.
    pub u1: Vec<T>,
    pub resolvent_evals: usize,
    pub forward_evals: usize,
}

impl<T: Scalar> SweepResult<T> {
    pub fn x1(&self) -> &[T] {
        self.x.block(0)
    }
}

/// `x^γ(z)`: resolvents evaluated in order `i = 1..n`, each `B_j` once.
pub fn sweep<T: Scalar>(
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    gamma: T,
    z: &BlockVector<T>,
) -> Result<SweepResult<T>> {
    sweep_with(split, prob, gamma, z, None)
}

/// Like [`sweep`], but takes `x_1` from `recycled_first` instead of evaluating it.
pub fn sweep_with<T: Scalar>(
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    gamma: T,
    z: &BlockVector<T>,
    recycled_first: Option<&[T]>,
) -> Result<SweepResult<T>> {
    split.check(prob, gamma, z)?;
    let s = split.scheme();
    let (n, p, dim) = (s.n(), s.p(), z.dim());
    let ge = gamma / split.scale;
    let nm = s.n_mat();
    let pm = s.p_mat();
    let rm = s.r_mat();

    let mut x = BlockVector::zeros(n, dim);
    let mut cache: Vec<Vec<T>> = Vec::with_capacity(p);
    let mut resolvent_evals = 0;
    let mut forward_evals = 0;
    let mut u1 = Vec::new();

    let eval_forward = |j: usize, x: &BlockVector<T>| -> Result<Vec<T>> {
        let mut input = vec![T::zero(); dim];
        for t in 0..=j.min(n - 1) {
            let r = rm[(j, t)];
            if r == T::zero() {
                continue;
            }
            for (o, &xt) in input.iter_mut().zip(x.block(t)) {
                *o += r * xt;
            }
        }
        prob.forwards[j].apply(&input)
    };

    for i in 0..n {
        let di = s.d()[i];
        let inv_d = T::one() / di;
        let mut v = split.block_input(i, z);
        if i == 0 {
            u1 = v.clone();
            if let Some(x1) = recycled_first {
                if x1.len() != dim {
                    return Err(structural("recycled first block has the wrong dimension"));
                }
                x.block_mut(0).copy_from_slice(x1);
                continue;
            }
        }
        for j in 0..i {
            let c = nm[(i, j)];
            if c == T::zero() {
                continue;
            }
            let c = inv_d * c;
            for (o, &xj) in v.iter_mut().zip(x.block(j)) {
                *o += c * xj;
            }
        }
        for j in 0..i.min(p) {
            if cache.len() <= j {
                cache.push(eval_forward(j, &x)?);
                forward_evals += 1;
            }
            let c = pm[(i, j)];
            if c == T::zero() {
                continue;
            }
            let c = ge / di * c;
            for (o, &f) in v.iter_mut().zip(&cache[j]) {
                *o -= c * f;
            }
        }
        prob.resolvents[i].resolve_in_place(ge / di, &mut v)?;
        resolvent_evals += 1;
        x.block_mut(i).copy_from_slice(&v);
    }
    while cache.len() < p {
        let j = cache.len();
        cache.push(eval_forward(j, &x)?);
        forward_evals += 1;
    }
    Ok(SweepResult {
        x,
        forward_cache: cache,
        u1,
        resolvent_evals,
        forward_evals,
    })
}

/// `(x_1^γ(z), u_1)`: only the first resolvent, one evaluation.
pub fn first_resolvent<T: Scalar>(
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    gamma: T,
    z: &BlockVector<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    split.check(prob, gamma, z)?;
    let u1 = split.block_input(0, z);
    let mut x1 = u1.clone();
    let ge = gamma / split.scale;
    prob.resolvents[0].resolve_in_place(ge / split.scheme.d()[0], &mut x1)?;
    Ok((x1, u1))
}

/// `Mᵀ x`
pub fn m_star_x<T: Scalar>(split: &Splitting<T>, x: &BlockVector<T>) -> Result<BlockVector<T>> {
    kron_apply(&split.m_t, x)
}

/// `T_{θ,γ} z = z - θ Mᵀ x^γ(z)`, together with the sweep.
pub fn apply_t<T: Scalar>(
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    theta: T,
    gamma: T,
    z: &BlockVector<T>,
) -> Result<(BlockVector<T>, SweepResult<T>)> {
    let sw = sweep(split, prob, gamma, z)?;
    let mtx = m_star_x(split, &sw.x)?;
    let mut out = z.clone();
    out.axpy(-theta, &mtx);
    Ok((out, sw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `‖Mᵀ x‖ = ‖z - T_{1,γ} z‖`
    pub fix_res: T,
    /// `max_{i<j} ‖x_i - x_j‖`
    pub consensus: T,
}

pub fn residuals<T: Scalar>(split: &Splitting<T>, sw: &SweepResult<T>) -> Residuals<T> {
    let mtx = m_star_x(split, &sw.x).expect("x has n blocks");
    Residuals {
        fix_res: mtx.norm(),
        consensus: sw.x.max_pairwise_dist(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::davis_yin_scheme;

    fn zero_problem(n: usize, p: usize, dim: usize) -> SplitProblem<f64> {
        SplitProblem::new(vec![ResolventOp::ZeroOp; n], vec![CocoerciveOp::ZeroForward; p], dim).unwrap()
    }

    #[test]
    fn zero_operators_at_zero() {
        let split = Splitting::canonical(CanonicalKind::Sequential, 4).unwrap();
        let prob = zero_problem(4, 3, 2);
        let sw = sweep(&split, &prob, 1.0, &split.zeros(2)).unwrap();
        assert_eq!(sw.x.norm(), 0.0);
        assert_eq!(sw.forward_cache.len(), 3);
    }

    #[test]
    fn identity_resolvents_on_the_chain() {
        let v = vec![1.5, -2.0];
        let z = BlockVector::from_blocks(vec![v.clone()]).unwrap();
        let prob = zero_problem(2, 1, 2);
        // graph form: x_1 = z, x_2 = 2x_1 - z
        let sw = sweep(&Splitting::davis_yin(), &prob, 0.7, &z).unwrap();
        assert_eq!(sw.x.block(0), &v[..]);
        assert_eq!(sw.x.block(1), &v[..]);
        // matrix form: x_1 = 2z, x_2 = -2z + 2x_1
        let mat = Splitting::from_scheme(davis_yin_scheme()).unwrap();
        let sw = sweep(&mat, &prob, 0.7, &z).unwrap();
        assert_eq!(sw.x.block(0), &[3.0, -4.0]);
        assert_eq!(sw.x.block(1), &[3.0, -4.0]);
    }

    #[test]
    fn apply_t_fixes_consensus_points() {
        let z = BlockVector::from_blocks(vec![vec![1.0]]).unwrap();
        let prob = zero_problem(2, 1, 1);
        let split = Splitting::davis_yin();
        let (zn, _) = apply_t(&split, &prob, 0.9, 1.0, &z).unwrap();
        assert_eq!(zn, z);
        let (zn, _) = apply_t(&split, &prob, 0.0, 1.0, &z).unwrap();
        assert_eq!(zn, z);
    }

    #[test]
    fn residual_example() {
        let split = Splitting::davis_yin();
        let sw = SweepResult {
            x: BlockVector::from_blocks(vec![vec![1.0], vec![0.0]]).unwrap(),
            forward_cache: vec![],
            u1: vec![],
            resolvent_evals: 0,
            forward_evals: 0,
        };
        let r = residuals(&split, &sw);
        assert_eq!((r.fix_res, r.consensus), (1.0, 1.0));
    }

    #[test]
    fn forward_counts_and_graph_form_input() {
        // sequential n=4 with B_j = c_j Id: x_{j+1} sees B_j x_{h(j+1)} only
        let split = Splitting::canonical(CanonicalKind::Sequential, 4).unwrap();
        let forwards = (1..=3)
            .map(|c| CocoerciveOp::scaled_identity(c as f64).unwrap())
            .collect();
        let prob = SplitProblem::new(vec![ResolventOp::ZeroOp; 4], forwards, 1).unwrap();
        let z = BlockVector::from_blocks(vec![vec![1.0], vec![2.0], vec![-1.0]]).unwrap();
        let g = 0.3;
        let sw = sweep(&split, &prob, g, &z).unwrap();
        assert_eq!(sw.forward_evals, 3);
        assert_eq!(sw.resolvent_evals, 4);
        // graph form by hand: x_i = (1/κ_i)((Inc z)_i + 2Σ_{j→i} x_j - γ B_{i-1} x_{h(i)})
        let inc = [1.0, -1.0 + 2.0, -2.0 - 1.0, 1.0];
        let kappa = [1.0, 2.0, 2.0, 1.0];
        let mut x = [0.0; 4];
        x[0] = inc[0] / kappa[0];
        for i in 1..4 {
            x[i] = (inc[i] + 2.0 * x[i - 1] - g * (i as f64) * x[i - 1]) / kappa[i];
        }
        for (i, xi) in x.iter().enumerate() {
            assert!((sw.x.block(i)[0] - xi).abs() < 1e-14, "block {i}");
        }
    }

    #[test]
    fn count_mismatch_is_structural() {
        let split = Splitting::davis_yin();
        let prob = zero_problem(3, 1, 1);
        let r = sweep(&split, &prob, 1.0, &split.zeros(1));
        assert!(matches!(r, Err(crate::Error::Structural(_))));
        let prob = zero_problem(2, 1, 1);
        assert!(matches!(
            sweep(&split, &prob, 0.0, &split.zeros(1)),
            Err(crate::Error::Parameter(_))
        ));
    }

    #[test]
    fn first_resolvent_matches_sweep() {
        let split = Splitting::canonical(CanonicalKind::OutwardStar, 4).unwrap();
        let prob = SplitProblem::new(
            vec![ResolventOp::l1(0.3).unwrap(); 4],
            vec![CocoerciveOp::scaled_identity(0.5).unwrap(); 3],
            2,
        )
        .unwrap();
        let z = BlockVector::from_blocks(vec![vec![1.0, -0.2], vec![0.4, 2.0], vec![-1.0, 0.1]]).unwrap();
        let sw = sweep(&split, &prob, 0.8, &z).unwrap();
        let (x1, u1) = first_resolvent(&split, &prob, 0.8, &z).unwrap();
        assert_eq!(sw.x1(), &x1[..]);
        assert_eq!(sw.u1, u1);
        let re = sweep_with(&split, &prob, 0.8, &z, Some(&x1)).unwrap();
        assert_eq!(re.x, sw.x);
        assert_eq!(re.resolvent_evals, 3);
    }

    #[test]
    fn gamma_bound_and_margin() {
        let split = Splitting::<f64>::davis_yin();
        assert!((split.mu(2.0) - 2.0).abs() < 1e-12);
        assert!((split.gamma_bound(1.0) - 4.0).abs() < 1e-12);
        let mat = Splitting::from_scheme(davis_yin_scheme::<f64>()).unwrap();
        assert!((mat.gamma_bound(1.0) - 2.0).abs() < 1e-12);
        assert!((split.margin(1.0, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
    }
}
