//! Dense real matrices and the few factorizations the scatter-matrix algebra
//! needs: a cyclic Jacobi eigensolver for symmetric matrices and a Cholesky
//! based SPD solver.
//!
//! Dimensions here are tiny (class count minus one, or the feature
//! dimension of a toy dataset), so everything is a straightforward dense
//! loop over a row-major buffer.

use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::error::{DdaError, Result};
use crate::scalar::Scalar;

/// Column of reals. Dereferences to a slice.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn new(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![T::zero(); len],
        }
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.data, other)
    }

    pub fn norm(&self) -> T {
        self.dot(&self.data).sqrt()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.data
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Deref for Vector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.data
    }
}

impl<T> DerefMut for Vector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}

impl<T> AsRef<[T]> for Vector<T> {
    fn as_ref(&self) -> &[T] {
        &self.data
    }
}

impl<T> From<Vec<T>> for Vector<T> {
    fn from(data: Vec<T>) -> Self {
        Self { data }
    }
}

impl<T: Copy, const N: usize> From<[T; N]> for Vector<T> {
    fn from(data: [T; N]) -> Self {
        Self {
            data: data.to_vec(),
        }
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
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

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(DdaError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Column vector `n x 1`.
    pub fn column(values: &[T]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// `a * b^T` for two vectors.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                m[(i, j)] = x * y;
            }
        }
        m
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
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
            return Err(DdaError::DimensionMismatch(format!(
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
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vector<T>> {
        if self.cols != v.len() {
            return Err(DdaError::DimensionMismatch(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect::<Vec<_>>()
            .into())
    }

    /// `v^T A v`.
    pub fn quad_form(&self, v: &[T]) -> Result<T> {
        Ok(dot(&self.mul_vec(v)?, v))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(DdaError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self += s * other`, shapes assumed equal.
    pub(crate) fn axpy(&mut self, s: T, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `self + ridge * I`.
    pub fn add_ridge(&self, ridge: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += ridge;
        }
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, &x| s + x.abs()))
            .fold(T::zero(), T::max)
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> EigenPairs<T> {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            for i in 0..n {
                let vik = self.vectors[(i, k)] * lambda;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

const MAX_JACOBI_SWEEPS: usize = 100;

fn symmetry_tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1e3))
}

pub(crate) fn check_square<T: Scalar>(a: &Matrix<T>, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(DdaError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            a.rows, a.cols
        )))
    }
}

/// Rejects matrices whose transpose differs by more than `1e-9` relative to
/// the largest entry.
pub fn check_symmetric<T: Scalar>(a: &Matrix<T>) -> Result<()> {
    check_square(a, "symmetric matrix")?;
    let scale = a.max_abs();
    let tol = symmetry_tolerance::<T>() * scale;
    for i in 0..a.rows {
        for j in (i + 1)..a.cols {
            let gap = (a[(i, j)] - a[(j, i)]).abs();
            if gap > tol || !gap.is_finite() {
                return Err(DdaError::NonSymmetric {
                    row: i,
                    col: j,
                    gap: gap.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized (average of `a` and `a^T`) after the symmetry
/// check, so tiny asymmetries from accumulated rounding do not leak into the
/// rotations. Each sweep visits every off-diagonal pair once; iteration
/// stops when the off-diagonal Frobenius mass falls below machine epsilon
/// times the total.
pub fn sym_eig<T: Scalar>(a: &Matrix<T>) -> Result<EigenPairs<T>> {
    check_symmetric(a)?;
    let n = a.rows;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = (a[(i, j)] + a[(j, i)]) * T::half();
        }
    }
    let mut v = Matrix::identity(n);
    let total = m.norm_fro();
    let target = T::epsilon() * total;

    let mut converged = n <= 1;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= target || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged {
        if off_diagonal_norm(&m) <= target {
            converged = true;
        } else {
            return Err(DdaError::NoConvergence {
                sweeps: MAX_JACOBI_SWEEPS,
            });
        }
    }
    debug_assert!(converged);

    let mut order: Vec<usize> = (0..n).collect();
    let diag = m.diag();
    order.sort_by(|&i, &j| {
        diag[j]
            .partial_cmp(&diag[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(EigenPairs { values, vectors })
}

fn off_diagonal_norm<T: Scalar>(m: &Matrix<T>) -> T {
    let mut s = T::zero();
    for i in 0..m.rows {
        for j in 0..m.cols {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies the rotation that annihilates `m[p][q]`, accumulating it into `v`.
fn rotate<T: Scalar>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = m.rows;
    let theta = (m[(q, q)] - m[(p, p)]) / (T::two() * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    // theta.signum() is +1 for theta == +0, which keeps t finite
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = T::zero();
    m[(q, p)] = T::zero();

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Lower-triangular Cholesky factor `L` with `a = L L^T`.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    check_square(a, "cholesky input")?;
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) {
            return Err(DdaError::NotPositiveDefinite {
                index: j,
                pivot: d.to_f64_lossy(),
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Cholesky-style factor for positive semidefinite matrices: columns whose
/// pivot falls below `n * eps * max|a|` are zeroed instead of rejected.
/// Returns `L` with `a ≈ L L^T`.
pub fn cholesky_semidefinite<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    check_symmetric(a)?;
    let n = a.rows;
    let tol = T::from_count(n.max(1)) * T::epsilon() * a.max_abs();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return Err(DdaError::NotPositiveDefinite {
                index: j,
                pivot: d.to_f64_lossy(),
            });
        }
        if d <= tol {
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` in place for every column of `b`.
pub(crate) fn forward_substitute<T: Scalar>(l: &Matrix<T>, b: &mut Matrix<T>) {
    let n = l.rows;
    for c in 0..b.cols {
        for i in 0..n {
            let mut s = b[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

/// Solves `L^T x = y` in place for every column.
pub(crate) fn backward_substitute<T: Scalar>(l: &Matrix<T>, b: &mut Matrix<T>) {
    let n = l.rows;
    for c in 0..b.cols {
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * b[(k, c)];
            }
            b[(i, c)] = s / l[(i, i)];
        }
    }
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn solve_spd<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    check_square(a, "solve_spd matrix")?;
    if b.rows != a.rows {
        return Err(DdaError::DimensionMismatch(format!(
            "right-hand side has {} rows, matrix has {}",
            b.rows, a.rows
        )));
    }
    let l = cholesky(a)?;
    let mut x = b.clone();
    forward_substitute(&l, &mut x);
    backward_substitute(&l, &mut x);
    Ok(x)
}

/// Sum of diagonal entries.
pub fn trace<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    check_square(a, "trace argument")?;
    Ok(a.diag().into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = sym_eig(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = sym_eig(&Matrix::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(
            e.vectors
                .col(0)
                .iter()
                .map(|x: &f64| x.abs())
                .collect::<Vec<_>>(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn eig_two_by_two() {
        // roots of l^2 - 4l + 3
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = sym_eig(&a).unwrap();
        assert!(close(e.values[0], 3.0, 1e-14));
        assert!(close(e.values[1], 1.0, 1e-14));
        let v0 = e.vectors.col(0);
        assert!(close(v0[0].abs(), 0.5f64.sqrt(), 1e-14));
        assert!(close(v0[0], v0[1], 1e-14));
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]);
        assert!(matches!(sym_eig(&a), Err(DdaError::NonSymmetric { .. })));
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(sym_eig(&a), Err(DdaError::DimensionMismatch(_))));
    }

    #[test]
    fn eig_works_in_f32() {
        let a = Matrix::<f32>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = sym_eig(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-5);
        assert!((e.values[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn solve_examples() {
        let x = solve_spd(&Matrix::identity(2), &Matrix::column(&[5.0, 7.0])).unwrap();
        assert_eq!(x.as_slice(), &[5.0, 7.0]);
        let x = solve_spd(
            &Matrix::from_diag(&[2.0, 4.0]),
            &Matrix::column(&[2.0, 8.0]),
        )
        .unwrap();
        assert!(close(x[(0, 0)], 1.0, 1e-15) && close(x[(1, 0)], 2.0, 1e-15));
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let x = solve_spd(&a, &Matrix::column(&[3.0, 3.0])).unwrap();
        assert!(close(x[(0, 0)], 1.0, 1e-15) && close(x[(1, 0)], 1.0, 1e-15));
    }

    #[test]
    fn solve_rejects_indefinite() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        let err = solve_spd(&a, &Matrix::column(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(
            err,
            DdaError::NotPositiveDefinite { index: 1, .. }
        ));
        let err = solve_spd(&Matrix::<f64>::zeros(2, 2), &Matrix::column(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(
            err,
            DdaError::NotPositiveDefinite { index: 0, .. }
        ));
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace(&Matrix::<f64>::identity(3)).unwrap(), 3.0);
        assert_eq!(trace(&Matrix::from_diag(&[3.0, 1.0])).unwrap(), 4.0);
        assert_eq!(
            trace(&Matrix::from_rows(&[[2.0, 9.0], [9.0, 5.0]])).unwrap(),
            7.0
        );
        assert!(trace(&Matrix::<f64>::zeros(1, 2)).is_err());
    }

    #[test]
    fn semidefinite_factor_handles_zero_and_rank_one() {
        let l = cholesky_semidefinite(&Matrix::<f64>::zeros(2, 2)).unwrap();
        assert_eq!(l.max_abs(), 0.0);
        let a = Matrix::outer(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        let l = cholesky_semidefinite(&a).unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        assert!(back.sub(&a).unwrap().max_abs() < 1e-12);
        let neg = Matrix::from_diag(&[1.0, -1.0]);
        assert!(cholesky_semidefinite(&neg).is_err());
    }

    fn symmetric(n: usize) -> impl Strategy<Value = Matrix<f64>> {
        prop::collection::vec(-10.0f64..10.0, n * n).prop_map(move |raw| {
            let g = Matrix::from_vec(n, n, raw).unwrap();
            g.add(&g.transpose()).unwrap().scale(0.5)
        })
    }

    proptest! {
        #[test]
        fn eig_reconstructs(a in (1usize..9).prop_flat_map(symmetric)) {
            let e = sym_eig(&a).unwrap();
            let norm = a.norm_fro().max(1e-300);
            let rec = e.reconstruct();
            prop_assert!(rec.sub(&a).unwrap().norm_fro() <= 1e-8 * norm);
            let tr = trace(&a).unwrap();
            let sum: f64 = e.values.iter().sum();
            prop_assert!((tr - sum).abs() <= 1e-9 * norm.max(tr.abs()));
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let vtv = e.vectors.transpose().matmul(&e.vectors).unwrap();
            prop_assert!(vtv.sub(&Matrix::identity(a.rows())).unwrap().max_abs() <= 1e-10);
            for k in 0..a.rows() {
                let v = e.vectors.col(k);
                let av = a.mul_vec(&v).unwrap();
                for i in 0..a.rows() {
                    prop_assert!((av[i] - e.values[k] * v[i]).abs() <= 1e-9 * norm);
                }
            }
        }

        #[test]
        fn spd_solve_recovers_rhs(
            (n, g, b) in (1usize..9).prop_flat_map(|n| (
                Just(n),
                prop::collection::vec(-3.0f64..3.0, n * n),
                prop::collection::vec(-5.0f64..5.0, n * 2),
            ))
        ) {
            let g = Matrix::from_vec(n, n, g).unwrap();
            let a = g.transpose().matmul(&g).unwrap().add_ridge(0.1);
            let b = Matrix::from_vec(n, 2, b).unwrap();
            let x = solve_spd(&a, &b).unwrap();
            let ax = a.matmul(&x).unwrap();
            prop_assert!(ax.sub(&b).unwrap().norm_fro() <= 1e-9 * b.norm_fro().max(1.0));
        }
    }
}
