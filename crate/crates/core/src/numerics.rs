//! Dense small-matrix kernel.
//!
//! Everything here works on a row-major [`Matrix`] of `f64`. The SVD is a
//! one-sided (Hestenes) Jacobi iteration that orthogonalizes the *rows* of the
//! input, so it always produces a complete orthonormal basis of left singular
//! vectors, including directions with zero singular value. That property is
//! what the thin-submatrix conventions of the Lipschitz module rely on.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Dense real matrix, row-major, finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "shape {rows}x{cols} has an empty dimension"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::InvalidMatrix("rows have unequal length".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Single-row matrix holding `v`.
    pub fn row_vector(v: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Submatrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `M x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self.row_iter().map(|r| dot(r, x)).collect())
    }

    /// `Mᵀ y`, accumulated column by column so each entry has a fixed summation order.
    pub fn tmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} rows",
                y.len(),
                self.rows
            )));
        }
        Ok((0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)] * y[i]).sum())
            .collect())
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for (i, r) in self.row_iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{r:?}")?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Numeric tolerances shared by the whole toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Singular values below `rank_tol_factor * max(rows, cols) * σ₁` count as zero.
    pub rank_tol_factor: f64,
    /// Relative residual accepted when checking that data lies in an encoder's range.
    pub consistency_tol: f64,
    /// Relative slack for the extremal-witness equalities.
    pub achievement_tol: f64,
    /// Absolute slack for the empirical Lipschitz sandwich.
    pub sandwich_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_tol_factor: 1e-12,
            consistency_tol: 1e-9,
            achievement_tol: 1e-8,
            sandwich_tol: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rank_tol_factor,
            self.consistency_tol,
            self.achievement_tol,
            self.sandwich_tol,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "all tolerances must be finite and strictly positive".into(),
            ))
        }
    }

    /// Absolute cutoff below which a singular value of an `rows x cols` matrix is treated as zero.
    pub fn rank_cutoff(&self, rows: usize, cols: usize, sigma1: f64) -> f64 {
        self.rank_tol_factor * rows.max(cols) as f64 * sigma1
    }
}

/// Thin SVD `M = U Σ Vᵀ` with `min(rows, cols)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `rows x k` with orthonormal columns.
    pub left_vectors: Matrix,
    /// `cols x k`; columns for zero singular values are zero.
    pub right_vectors: Matrix,
}

impl SvdResult {
    pub fn left(&self, i: usize) -> Vec<f64> {
        self.left_vectors.col(i)
    }

    pub fn right(&self, i: usize) -> Vec<f64> {
        self.right_vectors.col(i)
    }
}

/// Complete left-side decomposition: one singular value per row of `M`
/// (zero-padded past `min(rows, cols)`) and a full orthonormal basis of
/// left singular vectors stored as the *rows* of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftBasis {
    pub singular_values: Vec<f64>,
    pub basis: Matrix,
    right_rows: Matrix,
}

impl LeftBasis {
    #[inline]
    pub fn vector(&self, i: usize) -> &[f64] {
        self.basis.row(i)
    }
}

/// Full left decomposition via row-wise one-sided Jacobi.
pub fn left_basis(m: &Matrix) -> Result<LeftBasis> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
    }
    let (r, c) = m.shape();
    let mut work = m.clone();
    let mut g = Matrix::identity(r);

    let frob2 = dot(m.as_slice(), m.as_slice());
    let abs_floor = f64::EPSILON * f64::EPSILON * frob2;
    let rel_tol = f64::EPSILON * (c.max(1) as f64).sqrt();

    let mut converged = r < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..r {
            for j in (i + 1)..r {
                let (alpha, beta, gamma) = {
                    let ri = work.row(i);
                    let rj = work.row(j);
                    (dot(ri, ri), dot(rj, rj), dot(ri, rj))
                };
                if gamma == 0.0
                    || gamma.abs() <= abs_floor
                    || gamma.abs() <= rel_tol * alpha.sqrt() * beta.sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_rows(&mut work, i, j, cs, sn);
                rotate_rows(&mut g, i, j, cs, sn);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = work.row_iter().map(norm2).collect();
    let mut order: Vec<usize> = (0..r).collect();
    // stable: equal singular values keep their row order
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let k = r.min(c);
    let mut singular_values = Vec::with_capacity(r);
    let mut basis = Matrix::zeros(r, r);
    let mut right_rows = Matrix::zeros(r, c);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = if dst < k { norms[src] } else { 0.0 };
        singular_values.push(sigma);
        basis.row_mut(dst).copy_from_slice(g.row(src));
        if norms[src] > 0.0 {
            for (o, w) in right_rows.row_mut(dst).iter_mut().zip(work.row(src)) {
                *o = w / norms[src];
            }
        }
        // first entry of largest magnitude is made nonnegative
        let lead = leading_index(basis.row(dst));
        if basis[(dst, lead)] < 0.0 {
            basis.row_mut(dst).iter_mut().for_each(|v| *v = -*v);
            right_rows.row_mut(dst).iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(LeftBasis {
        singular_values,
        basis,
        right_rows,
    })
}

fn rotate_rows(m: &mut Matrix, i: usize, j: usize, cs: f64, sn: f64) {
    let cols = m.cols();
    for k in 0..cols {
        let a = m[(i, k)];
        let b = m[(j, k)];
        m[(i, k)] = cs * a - sn * b;
        m[(j, k)] = sn * a + cs * b;
    }
}

/// Index of the first entry with the largest magnitude.
pub(crate) fn leading_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Thin SVD of `m`.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let full = left_basis(m)?;
    let (r, c) = m.shape();
    let k = r.min(c);
    let left_vectors = Matrix::from_fn(r, k, |i, j| full.basis[(j, i)]);
    let right_vectors = Matrix::from_fn(c, k, |i, j| full.right_rows[(j, i)]);
    Ok(SvdResult {
        singular_values: full.singular_values[..k].to_vec(),
        left_vectors,
        right_vectors,
    })
}

/// `k`-th largest singular value (1-based); zero when `k` exceeds the smaller dimension.
pub fn sigma_k(m: &Matrix, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("sigma_k is 1-based".into()));
    }
    if k > m.rows().min(m.cols()) {
        return Ok(0.0);
    }
    Ok(svd(m)?.singular_values[k - 1])
}

/// Minimum-norm least-squares solution of `M z ≈ b` via the pseudoinverse.
pub fn least_squares(m: &Matrix, b: &[f64], tol: &ToleranceConfig) -> Result<Vec<f64>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side of length {} for {} rows",
            b.len(),
            m.rows()
        )));
    }
    let dec = svd(m)?;
    Ok(pinv_apply(&dec, m.shape(), b, tol))
}

pub(crate) fn pinv_apply(
    dec: &SvdResult,
    (rows, cols): (usize, usize),
    b: &[f64],
    tol: &ToleranceConfig,
) -> Vec<f64> {
    let sigma1 = dec.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = tol.rank_cutoff(rows, cols, sigma1);
    let mut z = vec![0.0; cols];
    for (i, &s) in dec.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let coeff = (0..rows)
            .map(|r| dec.left_vectors[(r, i)] * b[r])
            .sum::<f64>()
            / s;
        for (j, zj) in z.iter_mut().enumerate() {
            *zj += coeff * dec.right_vectors[(j, i)];
        }
    }
    z
}

/// Numerical rank with the cutoff `rank_tol_factor * max(rows, cols) * σ₁`.
pub fn rank(m: &Matrix, tol: &ToleranceConfig) -> Result<usize> {
    let s = svd(m)?.singular_values;
    Ok(rank_of(&s, m.rows(), m.cols(), tol))
}

pub(crate) fn rank_of(sv: &[f64], rows: usize, cols: usize, tol: &ToleranceConfig) -> usize {
    let sigma1 = sv.first().copied().unwrap_or(0.0);
    if sigma1 == 0.0 {
        return 0;
    }
    let cutoff = tol.rank_cutoff(rows, cols, sigma1);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(m: &Matrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let mut lu = m.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| {
                    lu[(a, k)]
                        .abs()
                        .total_cmp(&lu[(b, k)].abs())
                        .then(b.cmp(&a))
                })
                .unwrap_or(k);
            if lu[(p, k)] == 0.0 {
                return Err(Error::InvalidMatrix("singular matrix in LU".into()));
            }
            if p != k {
                piv.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = tmp;
                }
            }
            for i in (k + 1)..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Ok(Self { lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn a_ref() -> Matrix {
        Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]).unwrap()
    }

    /// Singular values of a 2xN matrix from the characteristic polynomial of M Mᵀ.
    fn two_row_sigmas(m: &Matrix) -> (f64, f64) {
        let g = m.matmul(&m.transpose()).unwrap();
        let tr = g[(0, 0)] + g[(1, 1)];
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        ((tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).max(0.0).sqrt())
    }

    #[test]
    fn svd_of_diagonal() {
        let m = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(svd(&m).unwrap().singular_values, vec![2.0, 1.0]);
    }

    #[test]
    fn svd_of_zero_matrix() {
        let m = Matrix::zeros(2, 3);
        assert_eq!(svd(&m).unwrap().singular_values, vec![0.0, 0.0]);
        assert_eq!(rank(&m, &ToleranceConfig::default()).unwrap(), 0);
    }

    #[test]
    fn svd_of_reference_key_matches_char_poly() {
        let (s1, s2) = two_row_sigmas(&a_ref());
        assert_relative_eq!(s1, 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s2, 1.0, epsilon = 1e-15);
        let sv = svd(&a_ref()).unwrap().singular_values;
        assert_relative_eq!(sv[0], s1, epsilon = 1e-14);
        assert_relative_eq!(sv[1], s2, epsilon = 1e-14);
    }

    #[test]
    fn sigma_k_conventions() {
        assert_relative_eq!(sigma_k(&a_ref(), 1).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        let col = Matrix::from_rows(&[[1.0], [0.0]]).unwrap();
        assert_eq!(sigma_k(&col, 2).unwrap(), 0.0);
        assert_eq!(sigma_k(&Matrix::identity(2), 2).unwrap(), 1.0);
        assert!(sigma_k(&col, 0).is_err());
    }

    #[test]
    fn least_squares_examples() {
        let tol = ToleranceConfig::default();
        assert_eq!(
            least_squares(&Matrix::identity(2), &[3.0, 4.0], &tol).unwrap(),
            vec![3.0, 4.0]
        );
        // normal equations by hand: AAᵀ z = A b with b = (1,2,3) -> [[2,1],[1,2]] z = (4,5) -> z = (1,2)
        let z = least_squares(&a_ref().transpose(), &[1.0, 2.0, 3.0], &tol).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-13);
        assert_relative_eq!(z[1], 2.0, epsilon = 1e-13);
        let m = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let z = least_squares(&m, &[1.0, 1.0], &tol).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-15);
        assert_eq!(z[1].abs(), 0.0);
        assert!(matches!(
            least_squares(&m, &[1.0], &tol),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rank_examples() {
        let tol = ToleranceConfig::default();
        assert_eq!(rank(&Matrix::identity(3), &tol).unwrap(), 3);
        let rep = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        assert_eq!(rank(&rep, &tol).unwrap(), 1);
    }

    #[test]
    fn thin_matrix_gets_full_left_basis() {
        let col = Matrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let lb = left_basis(&col).unwrap();
        assert_eq!(lb.singular_values, vec![1.0, 0.0]);
        assert_eq!(lb.vector(0), &[1.0, 0.0]);
        assert_eq!(lb.vector(1), &[0.0, 1.0]);
    }

    #[test]
    fn lu_solves_small_system() {
        let m = Matrix::from_rows(&[[0.0, 2.0], [1.0, 1.0]]).unwrap();
        let lu = Lu::factor(&m).unwrap();
        let x = lu.solve(&[4.0, 3.0]);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-15);
        assert!(Lu::factor(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        let bad = ToleranceConfig {
            consistency_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
