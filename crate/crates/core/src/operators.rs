//! Monotone operators with cheap resolvents and cocoercive forward operators.
//!
//! Cocoercivity follows the convention `<Tx - Ty, x - y> >= (1/β)‖Tx - Ty‖²`,
//! so `β` is also a Lipschitz constant of `T`. Stepsize bounds such as
//! `γ < 2/μ` are stated in terms of this `β`, not its reciprocal.

use serde::{Deserialize, Serialize};

use crate::error::{parameter, structural, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::scalar::{self, Scalar};

/// Maximally monotone operator whose resolvent `J_{γA} = (Id + γA)^{-1}` is explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResolventOp<T> {
    /// `w ∂‖·‖₁`; the resolvent is soft-thresholding at `γw`.
    L1Subdiff { weight: T },
    /// Normal cone of the box `[-u, u]^d`; the resolvent clamps.
    BoxNormalCone { bound: T },
    /// Normal cone of the nonnegative orthant.
    NonnegNormalCone,
    ZeroOp,
}

impl<T: Scalar> ResolventOp<T> {
    pub fn l1(weight: T) -> Result<Self> {
        if !(weight > T::zero()) || !weight.is_finite() {
            return Err(parameter(format!("l1 weight must be positive, got {weight}")));
        }
        Ok(Self::L1Subdiff { weight })
    }

    pub fn boxed(bound: T) -> Result<Self> {
        if !(bound > T::zero()) {
            return Err(parameter(format!("box bound must be positive, got {bound}")));
        }
        Ok(Self::BoxNormalCone { bound })
    }

    /// `J_{γA}(v)`.
    pub fn resolve(&self, gamma: T, v: &[T]) -> Result<Vec<T>> {
        let mut out = v.to_vec();
        self.resolve_in_place(gamma, &mut out)?;
        Ok(out)
    }

    /// Overwrite `v` with `J_{γA}(v)`.
    pub fn resolve_in_place(&self, gamma: T, v: &mut [T]) -> Result<()> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(parameter(format!("resolvent stepsize must be positive, got {gamma}")));
        }
        match *self {
            ResolventOp::L1Subdiff { weight } => {
                let t = gamma * weight;
                for x in v.iter_mut() {
                    *x = soft_threshold(*x, t);
                }
            }
            ResolventOp::BoxNormalCone { bound } => {
                for x in v.iter_mut() {
                    *x = x.max(-bound).min(bound);
                }
            }
            ResolventOp::NonnegNormalCone => {
                for x in v.iter_mut() {
                    *x = x.max(T::zero());
                }
            }
            ResolventOp::ZeroOp => {}
        }
        Ok(())
    }
}

/// `sign(v) max(|v| - t, 0)`; exact ties map to zero.
pub fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}

/// Whether `J_{δA}((δ/γ)v + (1 - δ/γ)J_{γA}v)` reproduces `J_{γA}v` within `tol`.
pub fn check_resolvent_identity<T: Scalar>(
    op: &ResolventOp<T>,
    gamma: T,
    delta: T,
    v: &[T],
    tol: T,
) -> bool {
    let Ok(jg) = op.resolve(gamma, v) else {
        return false;
    };
    let r = delta / gamma;
    let mixed: Vec<T> = v
        .iter()
        .zip(&jg)
        .map(|(&vi, &ji)| r * vi + (T::one() - r) * ji)
        .collect();
    match op.resolve(delta, &mixed) {
        Ok(jd) => scalar::dist(&jd, &jg) <= tol,
        Err(_) => false,
    }
}

/// Single-valued cocoercive operator.
#[derive(Debug, Clone, PartialEq)]
pub enum CocoerciveOp<T> {
    /// `scale · Aᵀ(Ax - b)` with `beta = scale · λ_max(AᵀA)`.
    LeastSquaresGrad {
        a: DenseMatrix<T>,
        b: Vec<T>,
        scale: T,
        beta: T,
    },
    /// `c x`
    ScaledIdentity { c: T },
    /// The zero map; its cocoercivity constant is 0 (so `1/β = +∞`).
    ZeroForward,
}

impl<T: Scalar> CocoerciveOp<T> {
    /// Gradient of `½‖Ax - b‖²`.
    pub fn least_squares(a: DenseMatrix<T>, b: Vec<T>) -> Result<Self> {
        Self::least_squares_scaled(a, b, T::one())
    }

    /// Gradient of `(scale/2)‖Ax - b‖²`.
    pub fn least_squares_scaled(a: DenseMatrix<T>, b: Vec<T>, scale: T) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(structural(format!(
                "right-hand side has length {} but A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if !(scale > T::zero()) {
            return Err(parameter("least-squares scale must be positive"));
        }
        let beta = scale * gram_lambda_max(&a);
        Ok(Self::LeastSquaresGrad { a, b, scale, beta })
    }

    pub fn scaled_identity(c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(parameter(format!("identity scale must be positive, got {c}")));
        }
        Ok(Self::ScaledIdentity { c })
    }

    pub fn beta(&self) -> T {
        match self {
            CocoerciveOp::LeastSquaresGrad { beta, .. } => *beta,
            CocoerciveOp::ScaledIdentity { c } => *c,
            CocoerciveOp::ZeroForward => T::zero(),
        }
    }

    /// Input dimension, if the operator fixes one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            CocoerciveOp::LeastSquaresGrad { a, .. } => Some(a.cols()),
            _ => None,
        }
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        match self {
            CocoerciveOp::LeastSquaresGrad { a, b, scale, .. } => {
                let mut r = a.mul_vec(x)?;
                for (ri, &bi) in r.iter_mut().zip(b) {
                    *ri = *scale * (*ri - bi);
                }
                a.tr_mul_vec(&r)
            }
            CocoerciveOp::ScaledIdentity { c } => Ok(x.iter().map(|&v| *c * v).collect()),
            CocoerciveOp::ZeroForward => Ok(vec![T::zero(); x.len()]),
        }
    }
}

/// Largest eigenvalue of `AᵀA` by power iteration, falling back to a dense
/// eigen-solve when the iteration has not settled after `10·d` steps.
pub fn gram_lambda_max<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let d = a.cols();
    if d == 0 || a.rows() == 0 {
        return T::zero();
    }
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
    let mut v: Vec<T> = (0..d)
        .map(|i| T::one() + T::from_usize_lossy(i % 7) / T::lit(7.0))
        .collect();
    normalize(&mut v);
    let apply = |v: &[T]| -> Vec<T> {
        let av = a.mul_vec(v).expect("dimension fixed by construction");
        a.tr_mul_vec(&av).expect("dimension fixed by construction")
    };
    let mut lambda = T::zero();
    for _ in 0..(10 * d).max(20) {
        let w = apply(&v);
        let next = scalar::dot(&v, &w);
        let mut wn = w.clone();
        let nrm = normalize(&mut wn);
        if nrm == T::zero() {
            return T::zero();
        }
        let resid = w
            .iter()
            .zip(&v)
            .fold(T::zero(), |s, (&wi, &vi)| s + (wi - next * vi) * (wi - next * vi))
            .sqrt();
        if (next - lambda).abs() <= tol * next && resid <= T::lit(1e-5) * next {
            return next;
        }
        lambda = next;
        v = wn;
    }
    let gram = a.transpose().matmul(a).expect("gram shapes agree");
    let eig = symmetric_eigen(&gram).expect("gram is square");
    eig.values.last().copied().unwrap_or(T::zero()).max(T::zero())
}

fn normalize<T: Scalar>(v: &mut [T]) -> T {
    let n = scalar::norm(v);
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}
