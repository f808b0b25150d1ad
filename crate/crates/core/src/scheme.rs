//! Coefficient schemes `(D, M, N, P, R)` and their admissibility conditions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, structural, Result};
use crate::linalg::{min_sym_eigenvalue, pseudoinverse, rank, DenseMatrix, MatrixDoc};
use crate::scalar::Scalar;

/// Default tolerance for [`CoefficientScheme::validate`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// The matrices of a distributed forward-backward method.
///
/// `D` is `n×n` diagonal with entries `d`, `M` is `n×m`, `N` is `n×n`,
/// `P` is `n×p` and `R` is `p×n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientScheme<T> {
    d: Vec<T>,
    m: DenseMatrix<T>,
    n_mat: DenseMatrix<T>,
    p: DenseMatrix<T>,
    r: DenseMatrix<T>,
}

/// One of the six admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `ker Mᵀ = R·1`
    A,
    /// `Pᵀ1 = 1`
    B,
    /// `R1 = 1`
    C,
    /// `2D - N - Nᵀ - MMᵀ ⪰ 0`
    D,
    /// `Σ N_ij = Σ d_i`
    E,
    /// `N`, `P` strictly lower triangular, `R` lower triangular
    F,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::A,
        Condition::B,
        Condition::C,
        Condition::D,
        Condition::E,
        Condition::F,
    ];

    pub fn label(self) -> char {
        match self {
            Condition::A => 'a',
            Condition::B => 'b',
            Condition::C => 'c',
            Condition::D => 'd',
            Condition::E => 'e',
            Condition::F => 'f',
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Condition::A => "ker(M*) = R1",
            Condition::B => "P*1 = 1",
            Condition::C => "R1 = 1",
            Condition::D => "2D - N - N* - MM* is PSD",
            Condition::E => "sum(N) = sum(d)",
            Condition::F => "N, P strictly lower, R lower triangular",
        }
    }
}

/// A failed condition with the offending quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub detail: String,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}: {}", self.condition.label(), self.condition.describe(), self.detail)
    }
}

impl<T: Scalar> CoefficientScheme<T> {
    /// Assemble a scheme, checking only shapes and the sign of `d`.
    pub fn new(
        d: Vec<T>,
        m: DenseMatrix<T>,
        n_mat: DenseMatrix<T>,
        p: DenseMatrix<T>,
        r: DenseMatrix<T>,
    ) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(structural("scheme needs at least one resolvent operator"));
        }
        if m.rows() != n || m.cols() == 0 {
            return Err(structural(format!("M must be {n}×m with m ≥ 1, got {:?}", m.shape())));
        }
        if n_mat.shape() != (n, n) {
            return Err(structural(format!("N must be {n}×{n}, got {:?}", n_mat.shape())));
        }
        if p.rows() != n {
            return Err(structural(format!("P must have {n} rows, got {:?}", p.shape())));
        }
        if r.shape() != (p.cols(), n) {
            return Err(structural(format!(
                "R must be {}×{n}, got {:?}",
                p.cols(),
                r.shape()
            )));
        }
        if let Some(bad) = d.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
            return Err(parameter(format!("diagonal of D must be positive, found {bad}")));
        }
        Ok(Self { d, m, n_mat, p, r })
    }

    /// Build from a full `D` matrix, which must be diagonal.
    pub fn from_matrices(
        d: &DenseMatrix<T>,
        m: DenseMatrix<T>,
        n_mat: DenseMatrix<T>,
        p: DenseMatrix<T>,
        r: DenseMatrix<T>,
    ) -> Result<Self> {
        if !d.is_square() {
            return Err(structural(format!("D must be square, got {:?}", d.shape())));
        }
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if i != j && d[(i, j)] != T::zero() {
                    return Err(structural(format!("D must be diagonal, D[{i}][{j}] = {}", d[(i, j)])));
                }
            }
        }
        let diag = (0..d.rows()).map(|i| d[(i, i)]).collect();
        Self::new(diag, m, n_mat, p, r)
    }

    /// Number of resolvent operators.
    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Number of forward operators.
    pub fn p(&self) -> usize {
        self.p.cols()
    }

    /// Number of z-blocks.
    pub fn m(&self) -> usize {
        self.m.cols()
    }

    pub fn d(&self) -> &[T] {
        &self.d
    }

    pub fn d_matrix(&self) -> DenseMatrix<T> {
        DenseMatrix::diag(&self.d)
    }

    pub fn m_mat(&self) -> &DenseMatrix<T> {
        &self.m
    }

    pub fn n_mat(&self) -> &DenseMatrix<T> {
        &self.n_mat
    }

    pub fn p_mat(&self) -> &DenseMatrix<T> {
        &self.p
    }

    pub fn r_mat(&self) -> &DenseMatrix<T> {
        &self.r
    }

    /// `2D - N - Nᵀ - MMᵀ`
    pub fn psd_matrix(&self) -> DenseMatrix<T> {
        let mmt = self.m.matmul(&self.m.transpose()).expect("M Mᵀ is n×n");
        let two_d = self.d_matrix().scaled(T::two());
        two_d
            .sub(&self.n_mat)
            .and_then(|x| x.sub(&self.n_mat.transpose()))
            .and_then(|x| x.sub(&mmt))
            .expect("all terms are n×n")
    }

    /// Report every violated condition; an empty list means admissible.
    pub fn validate(&self, tol: T) -> Result<Vec<Violation>> {
        if !(tol >= T::zero()) {
            return Err(parameter("validation tolerance must be nonnegative"));
        }
        let n = self.n();
        let mut out = Vec::new();
        let mut push = |condition, detail: String, value: T| {
            out.push(Violation {
                condition,
                detail,
                value: value.to_f64_lossy(),
            })
        };

        let rk = rank(&self.m, tol.max(T::epsilon() * T::lit(8.0)));
        let mt1 = self.m.col_sums();
        let mt1_norm = crate::scalar::norm(&mt1);
        if rk + 1 != n {
            push(
                Condition::A,
                format!("rank(M) = {rk}, expected n - 1 = {}", n as isize - 1),
                T::from_usize_lossy(rk),
            );
        } else if mt1_norm > tol {
            push(Condition::A, format!("‖M*1‖ = {mt1_norm:e}"), mt1_norm);
        }

        for (j, s) in self.p.col_sums().into_iter().enumerate() {
            if (s - T::one()).abs() > tol {
                push(Condition::B, format!("column {} of P sums to {s}", j + 1), s);
                break;
            }
        }

        for (j, s) in self.r.row_sums().into_iter().enumerate() {
            if (s - T::one()).abs() > tol {
                push(Condition::C, format!("row {} of R sums to {s}", j + 1), s);
                break;
            }
        }

        let lmin = min_sym_eigenvalue(&self.psd_matrix())?;
        if lmin < -tol {
            push(
                Condition::D,
                format!("min eigenvalue of 2D - N - N* - MM* is {lmin:e}"),
                lmin,
            );
        }

        let sn = self.n_mat.sum();
        let sd = self.d.iter().fold(T::zero(), |a, &b| a + b);
        if (sn - sd).abs() > tol {
            push(Condition::E, format!("sum(N) = {sn} but sum(d) = {sd}"), sn - sd);
        }

        let upper = |m: &DenseMatrix<T>, strict: bool| -> Option<(usize, usize, T)> {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let above = if strict { j >= i } else { j > i };
                    if above && m[(i, j)].abs() > tol {
                        return Some((i, j, m[(i, j)]));
                    }
                }
            }
            None
        };
        if let Some((i, j, v)) = upper(&self.n_mat, true) {
            push(Condition::F, format!("N not strictly lower triangular: N[{}][{}] = {v}", i + 1, j + 1), v);
        } else if let Some((i, j, v)) = upper(&self.p, true) {
            push(Condition::F, format!("P not strictly lower triangular: P[{}][{}] = {v}", i + 1, j + 1), v);
        } else if let Some((i, j, v)) = upper(&self.r, false) {
            push(Condition::F, format!("R not lower triangular: R[{}][{}] = {v}", i + 1, j + 1), v);
        }
        Ok(out)
    }

    /// `‖(Pᵀ - R)(Mᵀ)†‖²`, the part of `μ` that does not depend on `β`.
    pub fn mu_unit(&self) -> T {
        if self.p() == 0 {
            return T::zero();
        }
        let mt_pinv = pseudoinverse(&self.m).transpose();
        let diff = self.p.transpose().sub(&self.r).expect("Pᵀ and R are p×n");
        let prod = diff.matmul(&mt_pinv).expect("(p×n)(n×m)");
        let s = prod.spectral_norm();
        s * s
    }

    /// `μ = β‖(Pᵀ - R)(Mᵀ)†‖²`
    pub fn mu(&self, beta: T) -> T {
        beta * self.mu_unit()
    }

    pub fn to_doc(&self) -> SchemeDoc {
        SchemeDoc {
            d: MatrixDoc::from_matrix(&self.d_matrix()),
            m: MatrixDoc::from_matrix(&self.m),
            n: MatrixDoc::from_matrix(&self.n_mat),
            p: MatrixDoc::from_matrix(&self.p),
            r: MatrixDoc::from_matrix(&self.r),
        }
    }

    pub fn from_doc(doc: &SchemeDoc) -> Result<Self> {
        let d = doc.d.to_matrix()?;
        let n = d.rows();
        let p = doc.p.to_matrix::<T>()?;
        let p = if p.rows() == 0 { DenseMatrix::zeros(n, 0) } else { p };
        let r = doc.r.to_matrix::<T>()?;
        let r = if r.rows() == 0 { DenseMatrix::zeros(0, n) } else { r };
        Self::from_matrices(&d, doc.m.to_matrix()?, doc.n.to_matrix()?, p, r)
    }
}

/// Serialized scheme: matrices as nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeDoc {
    #[serde(rename = "D")]
    pub d: MatrixDoc,
    #[serde(rename = "M")]
    pub m: MatrixDoc,
    #[serde(rename = "N")]
    pub n: MatrixDoc,
    #[serde(rename = "P")]
    pub p: MatrixDoc,
    #[serde(rename = "R")]
    pub r: MatrixDoc,
}

/// `η(θ, γ) = 2θ/(2 - γμ)`, defined for `0 < γ < 2/μ`.
pub fn eta<T: Scalar>(theta: T, gamma: T, mu: T) -> Result<T> {
    if !(theta > T::zero()) || !(gamma > T::zero()) || mu < T::zero() {
        return Err(parameter("eta needs θ > 0, γ > 0, μ ≥ 0"));
    }
    let denom = T::two() - gamma * mu;
    if !(denom > T::zero()) {
        return Err(parameter(format!("γ = {gamma} is not below 2/μ for μ = {mu}")));
    }
    Ok(T::two() * theta / denom)
}

/// `2 - γμ - 2λθ`
pub fn feasibility_margin<T: Scalar>(gamma: T, lambda: T, theta: T, mu: T) -> T {
    T::two() - gamma * mu - T::two() * lambda * theta
}

/// The two-operator chain scheme: `M = [1; -1]`, `D = ½I`, `N₂₁ = 1`, `P = [0; 1]`, `R = [1, 0]`.
pub fn davis_yin_scheme<T: Scalar>() -> CoefficientScheme<T> {
    let one = T::one();
    let zero = T::zero();
    let half = T::lit(0.5);
    CoefficientScheme::new(
        vec![half, half],
        DenseMatrix::from_rows(&[vec![one], vec![-one]]).expect("literal"),
        DenseMatrix::from_rows(&[vec![zero, zero], vec![one, zero]]).expect("literal"),
        DenseMatrix::from_rows(&[vec![zero], vec![one]]).expect("literal"),
        DenseMatrix::from_rows(&[vec![one, zero]]).expect("literal"),
    )
    .expect("valid shapes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn davis_yin_is_valid_and_tight() {
        let s = davis_yin_scheme::<f64>();
        assert!(s.validate(1e-10).unwrap().is_empty());
        assert_eq!(s.psd_matrix().max_abs(), 0.0);
        assert_eq!((s.n(), s.p(), s.m()), (2, 1, 1));
    }

    #[test]
    fn davis_yin_with_bad_r() {
        let s = davis_yin_scheme::<f64>();
        let bad = CoefficientScheme::new(
            s.d().to_vec(),
            s.m_mat().clone(),
            s.n_mat().clone(),
            s.p_mat().clone(),
            m(&[&[0.0, 1.0]]),
        )
        .unwrap();
        let v = bad.validate(1e-10).unwrap();
        assert!(v.iter().any(|x| x.condition == Condition::F));
    }

    #[test]
    fn davis_yin_with_zero_n() {
        let s = davis_yin_scheme::<f64>();
        let bad = CoefficientScheme::new(
            s.d().to_vec(),
            s.m_mat().clone(),
            DenseMatrix::zeros(2, 2),
            s.p_mat().clone(),
            s.r_mat().clone(),
        )
        .unwrap();
        let v = bad.validate(1e-10).unwrap();
        let e = v.iter().find(|x| x.condition == Condition::E).unwrap();
        assert_eq!(e.value, -1.0);
    }

    #[test]
    fn row_sum_violation_names_c() {
        let s = davis_yin_scheme::<f64>();
        let bad = CoefficientScheme::new(
            s.d().to_vec(),
            s.m_mat().clone(),
            s.n_mat().clone(),
            s.p_mat().clone(),
            m(&[&[0.5, 0.0]]),
        )
        .unwrap();
        let v = bad.validate(1e-10).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].condition, Condition::C);
    }

    #[test]
    fn shape_errors_are_structural() {
        let r = CoefficientScheme::new(
            vec![0.5, 0.5],
            m(&[&[1.0]]),
            DenseMatrix::zeros(2, 2),
            DenseMatrix::zeros(2, 1),
            DenseMatrix::zeros(1, 2),
        );
        assert!(matches!(r, Err(crate::Error::Structural(_))));
    }

    #[test]
    fn mu_of_davis_yin_is_beta() {
        let s = davis_yin_scheme::<f64>();
        assert!((s.mu(1.0) - 1.0).abs() < 1e-12);
        assert!((s.mu(3.5) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn mu_vanishes_when_p_equals_r() {
        let s = davis_yin_scheme::<f64>();
        let same = CoefficientScheme::new(
            s.d().to_vec(),
            s.m_mat().clone(),
            s.n_mat().clone(),
            s.p_mat().clone(),
            s.p_mat().transpose(),
        )
        .unwrap();
        assert_eq!(same.mu(5.0), 0.0);
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(1.0, 3.0, 0.0).unwrap(), 1.0);
        assert_eq!(eta(0.5, 1.0, 1.0).unwrap(), 1.0);
        assert!((eta(1.0f64, 1.99, 1.0).unwrap() - 200.0).abs() < 1e-9);
        assert!(eta(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(feasibility_margin(0.0, 1.0, 1.0, 1.0), 0.0);
        assert!((feasibility_margin(1.0f64, 0.9, 0.5, 1.0) - 0.1).abs() < 1e-15);
        assert!((feasibility_margin(1.99f64, 1.0, 1.0, 1.0) + 1.99).abs() < 1e-15);
    }

    #[test]
    fn doc_round_trip() {
        let s = davis_yin_scheme::<f64>();
        let json = serde_json::to_string(&s.to_doc()).unwrap();
        let back = CoefficientScheme::<f64>::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn non_diagonal_d_rejected() {
        let s = davis_yin_scheme::<f64>();
        let r = CoefficientScheme::from_matrices(
            &m(&[&[0.5, 0.1], &[0.0, 0.5]]),
            s.m_mat().clone(),
            s.n_mat().clone(),
            s.p_mat().clone(),
            s.r_mat().clone(),
        );
        assert!(matches!(r, Err(crate::Error::Structural(_))));
    }
}
