//! Small dense linear algebra over block vectors.
//!
//! Iterates live in `X^m = (R^d)^m`. A coefficient matrix `M` (n x m) acts on
//! them through its Kronecker lift `M ⊗ Id`, which is what [`kron_apply`]
//! evaluates. Matrices here are tiny (n, m <= 64), so the decompositions are
//! plain Jacobi sweeps rather than anything blocked.

use serde::{Deserialize, Serialize};

use crate::error::{parameter, structural, Result};
use crate::scalar::{self, Scalar};

/// An element of `(R^d)^m`, stored contiguously block after block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector<T> {
    data: Vec<T>,
    blocks: usize,
    dim: usize,
}

impl<T: Scalar> BlockVector<T> {
    pub fn zeros(blocks: usize, dim: usize) -> Self {
        assert!(blocks >= 1, "a block vector needs at least one block");
        Self {
            data: vec![T::zero(); blocks * dim],
            blocks,
            dim,
        }
    }

    pub fn from_blocks(blocks: Vec<Vec<T>>) -> Result<Self> {
        let count = blocks.len();
        if count == 0 {
            return Err(structural("block vector needs at least one block"));
        }
        let dim = blocks[0].len();
        if blocks.iter().any(|b| b.len() != dim) {
            return Err(structural("blocks of a block vector must share one dimension"));
        }
        Ok(Self {
            data: blocks.into_iter().flatten().collect(),
            blocks: count,
            dim,
        })
    }

    pub fn from_flat(data: Vec<T>, blocks: usize, dim: usize) -> Result<Self> {
        if blocks == 0 || data.len() != blocks * dim {
            return Err(structural(format!(
                "flat buffer of length {} cannot hold {blocks} blocks of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { data, blocks, dim })
    }

    /// `blocks` copies of `v`.
    pub fn replicate(v: &[T], blocks: usize) -> Self {
        assert!(blocks >= 1);
        let mut data = Vec::with_capacity(blocks * v.len());
        for _ in 0..blocks {
            data.extend_from_slice(v);
        }
        Self {
            data,
            blocks,
            dim: v.len(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_blocks(self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim.max(1)).map(<[T]>::to_vec).collect()
    }

    pub fn iter_blocks(&self) -> impl Iterator<Item = &[T]> {
        (0..self.blocks).map(move |i| self.block(i))
    }

    /// Euclidean norm over all coordinates.
    pub fn norm(&self) -> T {
        scalar::norm(&self.data)
    }

    pub fn dist(&self, other: &Self) -> T {
        scalar::dist(&self.data, &other.data)
    }

    pub fn dot(&self, other: &Self) -> T {
        scalar::dot(&self.data, &other.data)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            data: self.data.iter().map(|&v| v * c).collect(),
            blocks: self.blocks,
            dim: self.dim,
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: T, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.blocks == other.blocks && self.dim == other.dim
    }
}

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(structural("matrix rows have differing lengths"));
        }
        let data: Vec<T> = rows.iter().flatten().copied().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(parameter("matrix entries must be finite"));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(structural(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(parameter("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(structural(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product with a plain vector.
    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(structural(format!(
                "vector of length {} does not fit a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| scalar::dot(self.row(i), v)).collect())
    }

    /// `selfᵀ v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(structural(format!(
                "vector of length {} does not fit the transpose of a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(structural(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        scalar::norm(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |a, &b| a + b))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a;
            }
        }
        out
    }

    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &b| a + b)
    }

    /// Largest singular value, from the top eigenvalue of the Gram matrix.
    pub fn spectral_norm(&self) -> T {
        if self.rows == 0 || self.cols == 0 {
            return T::zero();
        }
        let gram = if self.rows >= self.cols {
            self.transpose().matmul(self)
        } else {
            self.matmul(&self.transpose())
        }
        .expect("gram shapes agree");
        let eig = symmetric_eigen(&gram).expect("gram matrix is square");
        eig.values.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Serializable form: nested arrays of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixDoc(pub Vec<Vec<f64>>);

impl MatrixDoc {
    pub fn to_matrix<T: Scalar>(&self) -> Result<DenseMatrix<T>> {
        let rows: Vec<Vec<T>> = self
            .0
            .iter()
            .map(|r| r.iter().map(|&v| T::lit(v)).collect())
            .collect();
        DenseMatrix::from_rows(&rows)
    }

    pub fn from_matrix<T: Scalar>(m: &DenseMatrix<T>) -> Self {
        MatrixDoc(
            (0..m.rows())
                .map(|i| m.row(i).iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        )
    }
}

/// Apply `M ⊗ Id` to a block vector: output block `i` is `Σ_j M_ij z_j`.
pub fn kron_apply<T: Scalar>(m: &DenseMatrix<T>, z: &BlockVector<T>) -> Result<BlockVector<T>> {
    let mut out = BlockVector::zeros(m.rows().max(1), z.dim());
    kron_apply_into(m, z, T::one(), &mut out)?;
    Ok(out)
}

/// `out = c * (M ⊗ Id) z`, reusing `out`'s storage.
pub fn kron_apply_into<T: Scalar>(
    m: &DenseMatrix<T>,
    z: &BlockVector<T>,
    c: T,
    out: &mut BlockVector<T>,
) -> Result<()> {
    if z.num_blocks() != m.cols() {
        return Err(structural(format!(
            "block vector has {} blocks but the matrix has {} columns",
            z.num_blocks(),
            m.cols()
        )));
    }
    if out.num_blocks() != m.rows() || out.dim() != z.dim() {
        return Err(structural("output block vector has the wrong shape"));
    }
    for i in 0..m.rows() {
        let dst = out.block_mut(i);
        dst.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..m.cols() {
            let a = m[(i, j)];
            if a == T::zero() {
                continue;
            }
            let a = c * a;
            for (o, &zj) in dst.iter_mut().zip(z.block(j)) {
                *o += a * zj;
            }
        }
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DenseMatrix<T>,
}

/// Cyclic Jacobi eigen-solver. Only the symmetric part of `a` is used.
pub fn symmetric_eigen<T: Scalar>(a: &DenseMatrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(structural(format!(
            "eigen-decomposition needs a square matrix, got {:?}",
            a.shape()
        )));
    }
    let n = a.rows();
    let mut s = symmetrize(a);
    let mut v = DenseMatrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += s[(i, j)] * s[(i, j)];
            }
        }
        let scale = s.frobenius_norm();
        if off.sqrt() <= eps * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (T::two() * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(i, i)].partial_cmp(&s[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// rows(A) x k
    pub u: DenseMatrix<T>,
    /// k = min(rows, cols) singular values, not sorted.
    pub sigma: Vec<T>,
    /// cols(A) x k
    pub v: DenseMatrix<T>,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Scalar>(a: &DenseMatrix<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    let (r, c) = a.shape();
    // work on columns: store Aᵀ so each column is a contiguous row
    let mut cols = a.transpose();
    let mut v = DenseMatrix::<T>::identity(c);
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in (p + 1)..c {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..r {
                    let up = cols[(p, k)];
                    let uq = cols[(q, k)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::two() * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                for k in 0..r {
                    let up = cols[(p, k)];
                    let uq = cols[(q, k)];
                    cols[(p, k)] = cs * up - sn * uq;
                    cols[(q, k)] = sn * up + cs * uq;
                }
                for k in 0..c {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = cs * vp - sn * vq;
                    v[(k, q)] = sn * vp + cs * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut u = DenseMatrix::zeros(r, c);
    let mut sigma = Vec::with_capacity(c);
    for j in 0..c {
        let s = scalar::norm(cols.row(j));
        sigma.push(s);
        if s > T::zero() {
            for k in 0..r {
                u[(k, j)] = cols[(j, k)] / s;
            }
        }
    }
    Svd { u, sigma, v }
}

/// Relative cut-off below which singular values count as zero.
pub fn singular_cutoff<T: Scalar>(rows: usize, cols: usize) -> T {
    T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(rows.max(cols)))
}

/// Moore–Penrose pseudoinverse through the SVD; singular values below
/// `1e-12 * σ_max` are dropped.
pub fn pseudoinverse<T: Scalar>(m: &DenseMatrix<T>) -> DenseMatrix<T> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DenseMatrix::zeros(c, r);
    }
    let dec = svd(m);
    let smax = dec.sigma.iter().fold(T::zero(), |a, &b| a.max(b));
    let cut = singular_cutoff::<T>(r, c) * smax;
    let mut out = DenseMatrix::zeros(c, r);
    for (k, &s) in dec.sigma.iter().enumerate() {
        if s <= cut || s == T::zero() {
            continue;
        }
        let inv = T::one() / s;
        for i in 0..c {
            let vi = dec.v[(i, k)] * inv;
            if vi == T::zero() {
                continue;
            }
            for j in 0..r {
                out[(i, j)] += vi * dec.u[(j, k)];
            }
        }
    }
    out
}

/// Numerical rank: number of singular values above `tol * σ_max`.
pub fn rank<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> usize {
    let dec = svd(m);
    let smax = dec.sigma.iter().fold(T::zero(), |a, &b| a.max(b));
    if smax == T::zero() {
        return 0;
    }
    dec.sigma.iter().filter(|&&s| s > tol * smax).count()
}

/// `(M + Mᵀ)/2`
pub fn symmetrize<T: Scalar>(m: &DenseMatrix<T>) -> DenseMatrix<T> {
    let half = T::lit(0.5);
    let mut s = m.clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            s[(i, j)] = half * (m[(i, j)] + m[(j, i)]);
        }
    }
    s
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
pub fn min_sym_eigenvalue<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    let eig = symmetric_eigen(m)?;
    Ok(eig.values.first().copied().unwrap_or(T::zero()))
}

/// Whether the symmetric part of `m` is positive semidefinite up to `tol`.
pub fn is_psd<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<bool> {
    if !m.is_square() {
        return Err(structural(format!("PSD check needs a square matrix, got {:?}", m.shape())));
    }
    if tol < T::zero() {
        return Err(parameter("PSD tolerance must be nonnegative"));
    }
    Ok(min_sym_eigenvalue(m)? >= -tol)
}

/// Projection onto `{y : Σ_i y_i = 0}`: subtract the block mean from every block.
///
/// This is `range(M ⊗ Id)` whenever `ker(Mᵀ) = R·1`.
pub fn project_range_of_m<T: Scalar>(y: &BlockVector<T>) -> BlockVector<T> {
    let n = y.num_blocks();
    let mut mean = vec![T::zero(); y.dim()];
    for b in y.iter_blocks() {
        for (m, &v) in mean.iter_mut().zip(b) {
            *m += v;
        }
    }
    let inv = T::one() / T::from_usize_lossy(n);
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut out = y.clone();
    for i in 0..n {
        for (o, &m) in out.block_mut(i).iter_mut().zip(&mean) {
            *o -= m;
        }
    }
    out
}

/// Orthogonal projection onto `range(M ⊗ Id)` as `(M M†) ⊗ Id`.
pub fn project_range_via_pinv<T: Scalar>(
    m: &DenseMatrix<T>,
    m_pinv: &DenseMatrix<T>,
    y: &BlockVector<T>,
) -> Result<BlockVector<T>> {
    let proj = m.matmul(m_pinv)?;
    kron_apply(&proj, y)
}

impl<T: Scalar> BlockVector<T> {
    /// Block-wise maximum pairwise distance `max_{i<j} ‖y_i − y_j‖`.
    pub fn max_pairwise_dist(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.blocks {
            for j in (i + 1)..self.blocks {
                best = best.max(scalar::dist(self.block(i), self.block(j)));
            }
        }
        best
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(structural("block vectors differ in shape"))
        }
    }
}
