//! Fixed-point relocators `Q_{δ<-γ}`, mapping `Fix T_γ` onto `Fix T_δ`.
//!
//! The general relocator works for any admissible scheme:
//! `Q z = r z + s(1 - r) M† e^γ(z)` with `r = δ/γ` and `s` the splitting's
//! coordinate scale. The graph kinds only need `x_1^γ(z)`:
//! `(Q z)_i = r z_i + (1 - r) c_i x_1^γ(z)` for per-block coefficients `c_i`
//! fixed by the topology. For these, `x_1^δ(Q z) = x_1^γ(z)` for every `z`,
//! which lets the driver skip the first resolvent of the next sweep.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{first_resolvent, sweep, SplitProblem, Splitting, SweepResult};
use crate::error::{parameter, structural, Error, Result};
use crate::graph::CanonicalKind;
use crate::linalg::{kron_apply, project_range_of_m, BlockVector};
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelocatorKind {
    General,
    InwardStar,
    OutwardStar,
    Sequential,
    DavisYin,
}

impl RelocatorKind {
    pub const ALL: [RelocatorKind; 5] = [
        RelocatorKind::General,
        RelocatorKind::InwardStar,
        RelocatorKind::OutwardStar,
        RelocatorKind::Sequential,
        RelocatorKind::DavisYin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelocatorKind::General => "general",
            RelocatorKind::InwardStar => "inward-star",
            RelocatorKind::OutwardStar => "outward-star",
            RelocatorKind::Sequential => "sequential",
            RelocatorKind::DavisYin => "davis-yin",
        }
    }

    /// Kinds that only need `x_1` and support recycling.
    pub fn is_cheap(self) -> bool {
        self != RelocatorKind::General
    }

    /// The cheap kind matching a splitting's topology, if any.
    pub fn cheap_for<T: Scalar>(split: &Splitting<T>) -> Option<Self> {
        let g = split.graph()?;
        if g.n() == 2 {
            return Some(RelocatorKind::DavisYin);
        }
        g.canonical_kind().map(|k| match k {
            CanonicalKind::InwardStar => RelocatorKind::InwardStar,
            CanonicalKind::OutwardStar => RelocatorKind::OutwardStar,
            CanonicalKind::Sequential => RelocatorKind::Sequential,
        })
    }

    /// Kinds applicable to a splitting, `General` first.
    pub fn applicable<T: Scalar>(split: &Splitting<T>) -> Vec<Self> {
        Self::ALL.into_iter().filter(|k| check_kind(*k, split).is_ok()).collect()
    }
}

impl fmt::Display for RelocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelocatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown relocator kind '{s}'")))
    }
}

/// Whether `kind` fits the splitting's topology.
pub fn check_kind<T: Scalar>(kind: RelocatorKind, split: &Splitting<T>) -> Result<()> {
    let topology = |k: CanonicalKind| -> Result<()> {
        match split.graph() {
            Some(g) if g.matches(k) => Ok(()),
            Some(_) => Err(structural(format!(
                "relocator '{kind}' needs the {k} topology"
            ))),
            None => Err(structural(format!(
                "relocator '{kind}' needs a graph-built splitting"
            ))),
        }
    };
    match kind {
        RelocatorKind::General => Ok(()),
        RelocatorKind::InwardStar => topology(CanonicalKind::InwardStar),
        RelocatorKind::OutwardStar => topology(CanonicalKind::OutwardStar),
        RelocatorKind::Sequential => topology(CanonicalKind::Sequential),
        RelocatorKind::DavisYin => match split.graph() {
            Some(g) if g.n() == 2 => Ok(()),
            _ => Err(structural("relocator 'davis-yin' needs the two-node chain")),
        },
    }
}

/// `c_i` for the graph kinds, one per z-block.
pub fn cheap_coefficients<T: Scalar>(kind: RelocatorKind, split: &Splitting<T>) -> Result<Vec<T>> {
    check_kind(kind, split)?;
    if kind == RelocatorKind::General {
        return Err(structural("the general relocator has no per-block coefficients"));
    }
    let g = split.graph().expect("checked above");
    let imb: Vec<T> = g
        .degrees()
        .imbalance()
        .into_iter()
        .map(|v| T::lit(v as f64))
        .collect();
    let n = g.n();
    Ok(match kind {
        RelocatorKind::DavisYin => vec![T::one()],
        RelocatorKind::InwardStar => imb[..n - 1].to_vec(),
        RelocatorKind::OutwardStar => imb[1..].iter().map(|&v| -v).collect(),
        RelocatorKind::Sequential => imb[..n - 1]
            .iter()
            .scan(T::zero(), |acc, &v| {
                *acc += v;
                Some(*acc)
            })
            .collect(),
        RelocatorKind::General => unreachable!(),
    })
}

/// `P_range(M)(d_i x_i - Σ_{j<i} N_ij x_j)` in matrix-form coordinates.
pub fn e_map<T: Scalar>(split: &Splitting<T>, sw: &SweepResult<T>) -> BlockVector<T> {
    let s = split.scheme();
    let n = s.n();
    let nm = s.n_mat();
    let mut y = sw.x.clone();
    for i in 0..n {
        let di = s.d()[i];
        let mut acc: Vec<T> = sw.x.block(i).iter().map(|&v| di * v).collect();
        for j in 0..i {
            let c = nm[(i, j)];
            if c == T::zero() {
                continue;
            }
            for (a, &xj) in acc.iter_mut().zip(sw.x.block(j)) {
                *a -= c * xj;
            }
        }
        y.block_mut(i).copy_from_slice(&acc);
    }
    project_range_of_m(&y)
}

/// `Q_{δ<-γ} z`. `sw` must be the sweep at `(γ, z)`; cheap kinds read only its `x_1`.
pub fn relocate<T: Scalar>(
    kind: RelocatorKind,
    split: &Splitting<T>,
    delta: T,
    gamma: T,
    z: &BlockVector<T>,
    sw: &SweepResult<T>,
) -> Result<BlockVector<T>> {
    check_ratio(delta, gamma)?;
    check_kind(kind, split)?;
    if delta == gamma {
        return Ok(z.clone());
    }
    if kind.is_cheap() {
        return relocate_cheap(kind, split, delta, gamma, z, sw.x1());
    }
    let r = delta / gamma;
    let e = e_map(split, sw);
    let me = kron_apply(split.m_pinv(), &e)?;
    let mut out = z.scaled(r);
    out.axpy(split.scale() * (T::one() - r), &me);
    Ok(out)
}

/// Cheap relocation from `x_1^γ(z)` alone.
pub fn relocate_cheap<T: Scalar>(
    kind: RelocatorKind,
    split: &Splitting<T>,
    delta: T,
    gamma: T,
    z: &BlockVector<T>,
    x1: &[T],
) -> Result<BlockVector<T>> {
    check_ratio(delta, gamma)?;
    let c = cheap_coefficients(kind, split)?;
    if z.num_blocks() != c.len() || x1.len() != z.dim() {
        return Err(structural("z or x_1 does not match the splitting"));
    }
    if delta == gamma {
        return Ok(z.clone());
    }
    let r = delta / gamma;
    let one_r = T::one() - r;
    let mut out = z.clone();
    for (i, &ci) in c.iter().enumerate() {
        let coef = one_r * ci;
        for (o, &x) in out.block_mut(i).iter_mut().zip(x1) {
            *o = r * *o + coef * x;
        }
    }
    Ok(out)
}

fn check_ratio<T: Scalar>(delta: T, gamma: T) -> Result<()> {
    if !(delta > T::zero()) || !(gamma > T::zero()) || !delta.is_finite() || !gamma.is_finite() {
        return Err(parameter(format!(
            "relocation needs positive stepsizes, got δ = {delta}, γ = {gamma}"
        )));
    }
    Ok(())
}

/// A Lipschitz constant of `Q_{δ<-γ}` (at least 1).
pub fn lipschitz_constant<T: Scalar>(
    kind: RelocatorKind,
    split: &Splitting<T>,
    delta: T,
    gamma: T,
    beta: T,
) -> Result<T> {
    check_ratio(delta, gamma)?;
    check_kind(kind, split)?;
    let r = delta / gamma;
    let a = (T::one() - r).abs();
    let value = match kind {
        RelocatorKind::DavisYin => r + a,
        RelocatorKind::General => r + a * general_factor(split, gamma / split.scale(), beta),
        _ => {
            let g = split.graph().expect("checked");
            let k1 = T::from_usize_lossy(g.degrees().kappa[0]);
            let c = cheap_coefficients(kind, split)?;
            let sq = c.iter().fold(T::zero(), |s, &v| s + v * v);
            let factor = match kind {
                RelocatorKind::InwardStar => (k1 * k1 + sq).sqrt() / k1,
                RelocatorKind::OutwardStar => T::from_usize_lossy(g.n() - 1).sqrt() / k1 * sq.sqrt(),
                _ => sq.sqrt() / k1,
            };
            r + a * factor
        }
    };
    Ok(value.max(T::one()))
}

/// `‖M†‖ sqrt(C_1² + Σ_{i≥2}(C_i + ‖N‖ Σ_{j<i} C_j/d_j)²)` at matrix-form stepsize `ge`.
fn general_factor<T: Scalar>(split: &Splitting<T>, ge: T, beta: T) -> T {
    let s = split.scheme();
    let n = s.n();
    let p = s.p();
    let nm_norm = s.n_mat().spectral_norm();
    let m_norm = s.m_mat().spectral_norm();
    let pr = s.p_mat().spectral_norm() * s.r_mat().spectral_norm();
    let base = T::from_usize_lossy(s.m()).sqrt() * m_norm;
    let d = s.d();
    let mut c: Vec<T> = Vec::with_capacity(n);
    for i in 0..n {
        let prev: T = (0..i).fold(T::zero(), |acc, j| acc + c[j] / d[j]);
        let mut fwd = T::zero();
        for j in 0..i.min(p) {
            for t in 0..=j {
                fwd += c[t] / d[t];
            }
        }
        c.push(base + nm_norm * prev + ge * beta * pr * fwd);
    }
    let mut sum = c[0] * c[0];
    for i in 1..n {
        let prev: T = (0..i).fold(T::zero(), |acc, j| acc + c[j] / d[j]);
        let term = c[i] + nm_norm * prev;
        sum += term * term;
    }
    split.m_pinv().spectral_norm() * sum.sqrt()
}

/// Whether `x_1^δ(Q_{δ<-γ} z)` equals `x_1^γ(z)` within `tol` (cheap kinds).
pub fn check_recycling<T: Scalar>(
    kind: RelocatorKind,
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    delta: T,
    gamma: T,
    z: &BlockVector<T>,
    tol: T,
) -> Result<bool> {
    if !kind.is_cheap() {
        return Err(structural("recycling holds only for the graph relocators"));
    }
    let (x1, _) = first_resolvent(split, prob, gamma, z)?;
    let q = relocate_cheap(kind, split, delta, gamma, z, &x1)?;
    let (x1d, _) = first_resolvent(split, prob, delta, &q)?;
    Ok(scalar::dist(&x1d, &x1) <= tol)
}

/// Full-sweep relocation: sweeps at `(γ, z)` then relocates.
pub fn relocate_point<T: Scalar>(
    kind: RelocatorKind,
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    delta: T,
    gamma: T,
    z: &BlockVector<T>,
) -> Result<BlockVector<T>> {
    let sw = sweep(split, prob, gamma, z)?;
    relocate(kind, split, delta, gamma, z, &sw)
}
