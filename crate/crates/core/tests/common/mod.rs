#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use relsplit::problems::{gen_elastic_net, gen_lasso, ElasticNetParams, ElasticNetProblem, LassoProblem, Spectrum};
use relsplit::{BlockVector, CocoerciveOp, DenseMatrix, ResolventOp, SplitProblem, Splitting};

pub fn random_resolvent(rng: &mut ChaCha8Rng) -> ResolventOp<f64> {
    match rng.random_range(0..4) {
        0 => ResolventOp::l1(rng.random_range(0.01..2.0)).unwrap(),
        1 => ResolventOp::boxed(rng.random_range(0.1..3.0)).unwrap(),
        2 => ResolventOp::NonnegNormalCone,
        _ => ResolventOp::ZeroOp,
    }
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

pub fn random_vec(len: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_forward(dim: usize, rng: &mut ChaCha8Rng) -> CocoerciveOp<f64> {
    if rng.random_bool(0.5) {
        let q = rng.random_range(1..=dim + 1);
        CocoerciveOp::least_squares(random_matrix(q, dim, rng), random_vec(q, 1.0, rng)).unwrap()
    } else {
        CocoerciveOp::scaled_identity(rng.random_range(0.05..2.0)).unwrap()
    }
}

/// `n` random resolvents and `p` random forward operators on `ℝ^dim`.
pub fn random_problem(n: usize, p: usize, dim: usize, rng: &mut ChaCha8Rng) -> SplitProblem<f64> {
    let res = (0..n).map(|_| random_resolvent(rng)).collect();
    let fwd = (0..p).map(|_| random_forward(dim, rng)).collect();
    SplitProblem::new(res, fwd, dim).unwrap()
}

pub fn random_block(split: &Splitting<f64>, dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> BlockVector<f64> {
    BlockVector::from_flat(random_vec(split.m() * dim, scale, rng), split.m(), dim).unwrap()
}

/// Overdetermined instance that converges in a few hundred iterations.
pub fn small_lasso(seed: u64) -> LassoProblem {
    gen_lasso(30, 20, seed, Spectrum { sigma_min: 0.5, sigma_max: 1.0 }).unwrap()
}

pub fn small_elastic(seed: u64) -> ElasticNetProblem {
    let params = ElasticNetParams {
        n_corr: 2,
        noise_sd: 0.01,
        ..ElasticNetParams::default()
    };
    gen_elastic_net(30, 15, seed, params).unwrap()
}
