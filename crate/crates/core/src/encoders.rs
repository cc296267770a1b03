//! The three encoders and the quotient metrics they are measured against.
//!
//! * `alpha`: `x ↦ |Aᵀx|`, invariant under `x ↦ -x`.
//! * `beta`: `X ↦ ↓(XA)`, every column of `XA` sorted in decreasing order, invariant
//!   under row permutations of `X` (any number of rows).
//! * `beta_tilde`: for two rows, `(½(x₁ + x₂), α(x₁ - x₂))`, a `d + D` dimensional
//!   variant that carries the same information as `beta`.
//!
//! For two rows the sorted columns are `(max, min)` of the two inner products, so
//! `row₁ - row₂ = α(x₁ - x₂)` and `row₁ + row₂ = T(x₁ + x₂)`; [`hadamard_split`]
//! exposes that pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_keys::{analysis, Key};
use crate::numerics::{norm2, Matrix};

/// Largest row count for the brute-force orbit distance.
pub const MAX_ORBIT_ROWS: usize = 8;

/// A permutation of row positions: `self[i]` is where input row `i` ends up.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn from_vec(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &p in &map {
            if p >= map.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!(
                    "{map:?} is not a permutation"
                )));
            }
        }
        Ok(Self(map))
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Moves row `i` of `m` to row `self[i]`.
    pub fn apply_rows(&self, m: &Matrix) -> Result<Matrix> {
        if m.rows() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of {} rows applied to {} rows",
                self.len(),
                m.rows()
            )));
        }
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (i, &p) in self.0.iter().enumerate() {
            out.row_mut(p).copy_from_slice(m.row(i));
        }
        Ok(out)
    }

    /// Steps to the lexicographically next permutation; false after the last one.
    pub fn advance(&mut self) -> bool {
        let v = &mut self.0;
        let n = v.len();
        if n < 2 {
            return false;
        }
        let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
            return false;
        };
        let j = (i + 1..n)
            .rev()
            .find(|&j| v[j] > v[i])
            .expect("successor exists");
        v.swap(i, j);
        v[i + 1..].reverse();
        true
    }

    /// All permutations of `n` elements in lexicographic order, identity first.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        let mut next = Some(Permutation::identity(n));
        std::iter::from_fn(move || {
            let cur = next.take()?;
            let mut succ = cur.clone();
            if succ.advance() {
                next = Some(succ);
            }
            Some(cur)
        })
    }
}

/// Output of the sorting encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaEmbedding {
    /// `n x D`, every column nonincreasing from top to bottom.
    pub values: Matrix,
    /// `Π_k` for each column.
    pub perms: Vec<Permutation>,
}

/// Output of the modified encoder: `d` mean entries followed by `D` magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTildeEmbedding {
    pub mean: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl BetaTildeEmbedding {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.mean.clone();
        v.extend_from_slice(&self.magnitudes);
        v
    }

    pub fn len(&self) -> usize {
        self.mean.len() + self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `α_A(x) = |Aᵀx|` entrywise.
pub fn alpha(key: &Key, x: &[f64]) -> Result<Vec<f64>> {
    Ok(analysis(key, x)?.into_iter().map(f64::abs).collect())
}

/// Sorts every column in decreasing order.
///
/// Ties keep the original row order; comparison uses the IEEE total order, so
/// `+0` sorts above `-0`.
pub fn sort_desc_columns(m: &Matrix) -> (Matrix, Vec<Permutation>) {
    let (n, cols) = m.shape();
    let mut out = Matrix::zeros(n, cols);
    let mut perms = Vec::with_capacity(cols);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for k in 0..cols {
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| m[(b, k)].total_cmp(&m[(a, k)]));
        let mut perm = vec![0; n];
        for (dst, &src) in order.iter().enumerate() {
            out[(dst, k)] = m[(src, k)];
            perm[src] = dst;
        }
        perms.push(Permutation(perm));
    }
    (out, perms)
}

/// `β_A(X) = ↓(XA)` for any number of rows.
pub fn beta(key: &Key, x: &Matrix) -> Result<BetaEmbedding> {
    if x.cols() != key.dim() {
        return Err(Error::Dimension(format!(
            "configuration has {} columns, key has d = {}",
            x.cols(),
            key.dim()
        )));
    }
    let (values, perms) = sort_desc_columns(&x.matmul(key.matrix())?);
    Ok(BetaEmbedding { values, perms })
}

fn two_rows(x: &Matrix) -> Result<(&[f64], &[f64])> {
    if x.rows() != 2 {
        return Err(Error::UnsupportedN(x.rows()));
    }
    Ok((x.row(0), x.row(1)))
}

/// `β̃_A(X) = (½(x₁ + x₂), α_A(x₁ - x₂))`.
pub fn beta_tilde(key: &Key, x: &Matrix) -> Result<BetaTildeEmbedding> {
    let (x1, x2) = two_rows(x)?;
    if x1.len() != key.dim() {
        return Err(Error::Dimension(format!(
            "configuration has {} columns, key has d = {}",
            x1.len(),
            key.dim()
        )));
    }
    let mean = x1.iter().zip(x2).map(|(a, b)| 0.5 * (a + b)).collect();
    let diff: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    Ok(BetaTildeEmbedding {
        mean,
        magnitudes: alpha(key, &diff)?,
    })
}

/// `(row₁ - row₂, row₁ + row₂)` of a two-row embedding.
pub fn hadamard_split(b: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let (r1, r2) = two_rows(b)?;
    let diff = r1.iter().zip(r2).map(|(a, b)| a - b).collect();
    let sum = r1.iter().zip(r2).map(|(a, b)| a + b).collect();
    Ok((diff, sum))
}

/// `min(‖x - y‖, ‖x + y‖)`, the distance between `{x, -x}` and `{y, -y}`.
pub fn dist_hat_h(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "signals of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    Ok(norm2(&minus).min(norm2(&plus)))
}

/// `min_P ‖X - P Y‖_F` over all row permutations, by enumeration.
///
/// The minimizer returned is the first in lexicographic order among exact ties.
/// An assignment solver would scale past [`MAX_ORBIT_ROWS`]; it is not needed here.
pub fn dist_hat_v(x: &Matrix, y: &Matrix) -> Result<(f64, Permutation)> {
    if x.shape() != y.shape() {
        return Err(Error::Dimension(format!(
            "configurations of shape {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let n = x.rows();
    if n > MAX_ORBIT_ROWS {
        return Err(Error::SearchTooLarge(format!(
            "orbit distance over {n}! permutations (cap n = {MAX_ORBIT_ROWS})"
        )));
    }
    let mut best: Option<(f64, Permutation)> = None;
    for p in Permutation::all(n) {
        // (P Y) row p[i] is Y row i
        let sq: f64 = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                x.row(pi)
                    .iter()
                    .zip(y.row(i))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        if best.as_ref().is_none_or(|(b, _)| sq < *b) {
            best = Some((sq, p));
        }
    }
    let (sq, p) = best.expect("at least one permutation");
    Ok((sq.sqrt(), p))
}
