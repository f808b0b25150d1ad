//! Directed graphs, their incidence matrices, and the schemes they induce.
//!
//! Nodes are numbered `1..=n` and every arc `(i, j)` has `i < j`. Only
//! spanning trees (`n - 1` arcs) produce schemes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, structural, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use crate::scheme::CoefficientScheme;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiGraph {
    n: usize,
    arcs: Vec<(usize, usize)>,
}

/// The three canonical spanning trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonicalKind {
    /// Arcs `(i, n)` for `i < n`.
    InwardStar,
    /// Arcs `(1, i)` for `i > 1`: hub at node 1.
    OutwardStar,
    /// Arcs `(i, i + 1)`.
    Sequential,
}

impl CanonicalKind {
    pub const ALL: [CanonicalKind; 3] = [
        CanonicalKind::InwardStar,
        CanonicalKind::OutwardStar,
        CanonicalKind::Sequential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CanonicalKind::InwardStar => "inward-star",
            CanonicalKind::OutwardStar => "outward-star",
            CanonicalKind::Sequential => "sequential",
        }
    }
}

impl fmt::Display for CanonicalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CanonicalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inward-star" => Ok(CanonicalKind::InwardStar),
            "outward-star" => Ok(CanonicalKind::OutwardStar),
            "sequential" => Ok(CanonicalKind::Sequential),
            other => Err(Error::Config(format!("unknown graph kind '{other}'"))),
        }
    }
}

/// Degree `κ`, in-degree `κ⁺` and out-degree `κ⁻` per node (0-based vectors).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degrees {
    pub kappa: Vec<usize>,
    pub k_in: Vec<usize>,
    pub k_out: Vec<usize>,
}

impl Degrees {
    /// `κ_i - 2κ_i⁺` per node.
    pub fn imbalance(&self) -> Vec<i64> {
        self.kappa
            .iter()
            .zip(&self.k_in)
            .map(|(&k, &kin)| k as i64 - 2 * kin as i64)
            .collect()
    }
}

impl DiGraph {
    pub fn new(n: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(parameter(format!("graph needs at least 2 nodes, got {n}")));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &arcs {
            if i < 1 || j > n {
                return Err(structural(format!("arc ({i},{j}) leaves the node range 1..={n}")));
            }
            if i >= j {
                return Err(structural(format!("arc ({i},{j}) violates i < j")));
            }
            if !seen.insert((i, j)) {
                return Err(structural(format!("duplicate arc ({i},{j})")));
            }
        }
        if arcs.len() + 1 < n {
            return Err(structural(format!(
                "{} arcs cannot connect {n} nodes",
                arcs.len()
            )));
        }
        let g = Self { n, arcs };
        if !g.is_connected() {
            return Err(structural("underlying undirected graph is not connected"));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn is_tree(&self) -> bool {
        self.arcs.len() + 1 == self.n
    }

    fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..=self.n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let nx = p[c];
                p[c] = r;
                c = nx;
            }
            r
        }
        for &(i, j) in &self.arcs {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a] = b;
        }
        let root = find(&mut parent, 1);
        (2..=self.n).all(|v| find(&mut parent, v) == root)
    }

    pub fn degrees(&self) -> Degrees {
        let mut k_in = vec![0; self.n];
        let mut k_out = vec![0; self.n];
        for &(i, j) in &self.arcs {
            k_out[i - 1] += 1;
            k_in[j - 1] += 1;
        }
        let kappa = k_in.iter().zip(&k_out).map(|(a, b)| a + b).collect();
        Degrees { kappa, k_in, k_out }
    }

    /// `n × |arcs|`: column `e = (i, j)` has `+1` in row `i` and `-1` in row `j`.
    pub fn incidence<T: Scalar>(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n, self.arcs.len());
        for (e, &(i, j)) in self.arcs.iter().enumerate() {
            m[(i - 1, e)] = T::one();
            m[(j - 1, e)] = -T::one();
        }
        m
    }

    /// Graph Laplacian `Inc Incᵀ`.
    pub fn laplacian<T: Scalar>(&self) -> DenseMatrix<T> {
        let inc = self.incidence::<T>();
        inc.matmul(&inc.transpose()).expect("n×e times e×n")
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.arcs.contains(&(i, j))
    }

    /// In-neighbours of node `i`, ascending.
    pub fn in_neighbours(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.arcs.iter().filter(|a| a.1 == i).map(|a| a.0).collect();
        v.sort_unstable();
        v
    }

    /// Which canonical tree this is, if any. For `n = 2` all three coincide
    /// and `Sequential` is reported.
    pub fn canonical_kind(&self) -> Option<CanonicalKind> {
        [CanonicalKind::Sequential, CanonicalKind::InwardStar, CanonicalKind::OutwardStar]
            .into_iter()
            .find(|&k| self.matches(k))
    }

    /// Whether the arc set equals that of `canonical(kind, n)`.
    pub fn matches(&self, kind: CanonicalKind) -> bool {
        let c = canonical(kind, self.n).expect("n ≥ 2 by construction");
        let a: BTreeSet<_> = self.arcs.iter().collect();
        let b: BTreeSet<_> = c.arcs.iter().collect();
        a == b
    }
}

pub fn canonical(kind: CanonicalKind, n: usize) -> Result<DiGraph> {
    if n < 2 {
        return Err(parameter(format!("canonical trees need n ≥ 2, got {n}")));
    }
    let arcs = match kind {
        CanonicalKind::InwardStar => (1..n).map(|i| (i, n)).collect(),
        CanonicalKind::OutwardStar => (2..=n).map(|i| (1, i)).collect(),
        CanonicalKind::Sequential => (1..n).map(|i| (i, i + 1)).collect(),
    };
    DiGraph::new(n, arcs)
}

/// Pseudoinverse of the canonical incidence matrix, `(n-1) × n`, in closed form.
pub fn incidence_pinv_closed_form<T: Scalar>(kind: CanonicalKind, n: usize) -> Result<DenseMatrix<T>> {
    if n < 2 {
        return Err(parameter(format!("canonical trees need n ≥ 2, got {n}")));
    }
    let nn = T::from_usize_lossy(n);
    let inv = T::one() / nn;
    let mut out = DenseMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        for j in 0..n {
            out[(i, j)] = match kind {
                CanonicalKind::InwardStar => {
                    if i == j {
                        T::one() - inv
                    } else {
                        -inv
                    }
                }
                CanonicalKind::OutwardStar => {
                    if j == i + 1 {
                        inv - T::one()
                    } else {
                        inv
                    }
                }
                CanonicalKind::Sequential => {
                    let ii = T::from_usize_lossy(i + 1);
                    if j <= i {
                        T::one() - ii / nn
                    } else {
                        -ii / nn
                    }
                }
            };
        }
    }
    Ok(out)
}

/// A predecessor choice `h(i) < i` for every node `i ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredecessorMap {
    h: Vec<usize>,
}

impl PredecessorMap {
    /// Explicit map; `h[k]` is the predecessor of node `k + 2`.
    pub fn new(h: Vec<usize>) -> Result<Self> {
        for (k, &p) in h.iter().enumerate() {
            let i = k + 2;
            if p < 1 || p >= i {
                return Err(structural(format!("predecessor of node {i} must lie in 1..{i}, got {p}")));
            }
        }
        Ok(Self { h })
    }

    /// Smallest in-neighbour where one exists, otherwise node `i - 1`.
    pub fn with_fallback(g: &DiGraph) -> Self {
        let h = (2..=g.n())
            .map(|i| g.in_neighbours(i).first().copied().unwrap_or(i - 1))
            .collect();
        Self { h }
    }

    /// `h(i)` for `i ≥ 2`.
    pub fn get(&self, i: usize) -> usize {
        self.h[i - 2]
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// `h(i)` = smallest in-neighbour of `i`; fails if some node `i ≥ 2` has none.
pub fn predecessor_map(g: &DiGraph) -> Result<PredecessorMap> {
    let mut h = Vec::with_capacity(g.n() - 1);
    for i in 2..=g.n() {
        match g.in_neighbours(i).first() {
            Some(&p) => h.push(p),
            None => return Err(structural(format!("node {i} has no in-neighbour"))),
        }
    }
    PredecessorMap::new(h)
}

/// `M = Inc(G)`, `D = ½diag(κ)`, `N_ij = 1` iff `j → i`,
/// `P_{j+1,j} = 1`, `R_{j,h(j+1)} = 1`.
pub fn scheme_from_graph<T: Scalar>(g: &DiGraph, h: &PredecessorMap) -> Result<CoefficientScheme<T>> {
    if !g.is_tree() {
        return Err(parameter(format!(
            "only spanning trees are supported: {} arcs on {} nodes",
            g.arcs().len(),
            g.n()
        )));
    }
    let n = g.n();
    if h.len() != n - 1 {
        return Err(structural("predecessor map does not cover nodes 2..=n"));
    }
    let deg = g.degrees();
    let half = T::lit(0.5);
    let d = deg.kappa.iter().map(|&k| half * T::from_usize_lossy(k)).collect();
    let mut nm = DenseMatrix::zeros(n, n);
    for &(j, i) in g.arcs() {
        nm[(i - 1, j - 1)] = T::one();
    }
    let mut p = DenseMatrix::zeros(n, n - 1);
    let mut r = DenseMatrix::zeros(n - 1, n);
    for j in 0..n - 1 {
        p[(j + 1, j)] = T::one();
        r[(j, h.get(j + 2) - 1)] = T::one();
    }
    CoefficientScheme::new(d, g.incidence(), nm, p, r)
}
