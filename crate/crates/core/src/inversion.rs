//! Decoders: a left inverse of `α_A` and the inverses of `β_A` and `β̃_A` built on it.
//!
//! The phase retrieval solver works at desk scale by exhaustion. It picks `d`
//! linearly independent frame vectors `J` (greedy column pivoting), and for every
//! sign pattern `ε` on `J` with the first sign pinned to `+1` it solves
//! `A[J]ᵀ x = ε ⊙ y[J]`. A candidate is accepted when it reproduces all `D`
//! measurements. On a phase retrievable key all accepted candidates lie in one
//! orbit `{x, -x}`, and anything else is reported as an ambiguity.

use crate::encoders::{alpha, beta, beta_tilde, dist_hat_h};
use crate::error::{Error, Result};
use crate::frame_keys::{is_phase_retrievable, Key, Witness};
use crate::numerics::{norm2, pinv_apply, svd, Lu, Matrix, SvdResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Canonical orbit representative: first significant coordinate positive.
    pub x: Vec<f64>,
    /// `‖α_A(x) - y‖`.
    pub residual: f64,
    /// Signs on the pivot columns for the accepted candidate (before canonicalization).
    pub sign_pattern: Vec<i8>,
    /// 0-based pivot columns.
    pub pivots: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRecovery {
    /// `2 x d`, rows ordered so that `row₁ - row₂` is canonical.
    pub config: Matrix,
    pub residual: f64,
}

/// A certified key with the factorizations the decoders reuse.
#[derive(Debug, Clone)]
pub struct PhaseRetriever {
    key: Key,
    pivots: Vec<usize>,
    pivot_lu: Lu,
    analysis_svd: SvdResult,
}

impl PhaseRetriever {
    /// Certifies `key` as phase retrievable and prepares the solver.
    pub fn new(key: &Key) -> Result<Self> {
        let cert = is_phase_retrievable(key)?;
        if !cert.verdict {
            let witness = match cert.witness {
                Some(Witness::Partition(p)) => p.indices(),
                Some(Witness::Columns(c)) => c,
                None => Vec::new(),
            };
            return Err(Error::NotPhaseRetrievable { witness });
        }
        Self::new_uncertified(key)
    }

    /// Prepares the solver without running the exhaustive certificate.
    ///
    /// Recovery still detects ambiguity at decode time, but only for the
    /// measurements it is given.
    pub fn new_uncertified(key: &Key) -> Result<Self> {
        let pivots = pivot_columns(key)?;
        let pivot_t = key.side_matrix(&pivots).transpose();
        let pivot_lu = Lu::factor(&pivot_t)?;
        let analysis_svd = svd(&key.matrix().transpose())?;
        Ok(Self {
            key: key.clone(),
            pivots,
            pivot_lu,
            analysis_svd,
        })
    }

    pub fn key(&self) -> &Key {
        &self.key
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `T_A† y`, the minimum-norm least-squares solution of `Aᵀ x = y`.
    pub fn synthesis(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.key.frame_size() {
            return Err(Error::Dimension(format!(
                "coefficient vector of length {} for D = {}",
                y.len(),
                self.key.frame_size()
            )));
        }
        let shape = (self.key.frame_size(), self.key.dim());
        Ok(pinv_apply(&self.analysis_svd, shape, y, self.key.tol()))
    }

    /// `ω_A`: recovers the orbit `{x, -x}` from `y = |Aᵀx|`.
    pub fn omega(&self, y: &[f64]) -> Result<RecoveryResult> {
        let (d, n) = (self.key.dim(), self.key.frame_size());
        let tol = self.key.tol();
        if y.len() != n {
            return Err(Error::Dimension(format!(
                "measurement vector of length {} for D = {n}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("measurements must be finite".into()));
        }
        let negative: Vec<f64> = y.iter().map(|v| v.min(0.0)).collect();
        let neg_mass = norm2(&negative);
        if neg_mass > 0.0 {
            return Err(Error::NotInRange { residual: neg_mass });
        }

        let y_norm = norm2(y);
        let accept = tol.consistency_tol * y_norm.max(1.0);
        if y_norm <= tol.consistency_tol {
            return Ok(RecoveryResult {
                x: vec![0.0; d],
                residual: y_norm,
                sign_pattern: vec![1; d],
                pivots: self.pivots.clone(),
            });
        }

        let mut accepted: Option<RecoveryResult> = None;
        let mut best_residual = f64::INFINITY;
        let mut rhs = vec![0.0; d];
        let free = d - 1;
        for step in 0u64..(1u64 << free) {
            let gray = step ^ (step >> 1);
            let signs: Vec<i8> = (0..d)
                .map(|i| {
                    if i > 0 && gray >> (i - 1) & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            for ((r, &j), &s) in rhs.iter_mut().zip(&self.pivots).zip(&signs) {
                *r = f64::from(s) * y[j];
            }
            let x = self.pivot_lu.solve(&rhs);
            let residual = measurement_residual(&self.key, &x, y)?;
            best_residual = best_residual.min(residual);
            if residual > accept {
                continue;
            }
            match &accepted {
                None => {
                    accepted = Some(RecoveryResult {
                        x,
                        residual,
                        sign_pattern: signs,
                        pivots: self.pivots.clone(),
                    })
                }
                Some(first) => {
                    let gap = dist_hat_h(&first.x, &x)?;
                    if gap > tol.consistency_tol.sqrt() * norm2(&first.x).max(1.0) {
                        return Err(Error::AmbiguityDetected);
                    }
                }
            }
        }
        let mut found = accepted.ok_or(Error::NotInRange {
            residual: best_residual,
        })?;
        canonicalize_sign(&mut found.x, &self.key);
        Ok(found)
    }

    /// Inverts `β_A` on a `2 x D` embedding.
    pub fn invert_beta(&self, y: &Matrix) -> Result<ConfigRecovery> {
        let n = self.key.frame_size();
        if y.rows() != 2 {
            return Err(Error::UnsupportedN(y.rows()));
        }
        if y.cols() != n {
            return Err(Error::Dimension(format!(
                "embedding has {} columns, key has D = {n}",
                y.cols()
            )));
        }
        let disorder = (0..n)
            .map(|k| (y[(1, k)] - y[(0, k)]).max(0.0))
            .fold(0.0, f64::max);
        if disorder > 0.0 {
            return Err(Error::NotInRange { residual: disorder });
        }
        let (r1, r2) = (y.row(0), y.row(1));
        let magnitudes: Vec<f64> = r1.iter().zip(r2).map(|(a, b)| a - b).collect();
        let sums: Vec<f64> = r1.iter().zip(r2).map(|(a, b)| a + b).collect();
        let s = self.synthesis(&sums)?;
        let w = self.omega(&magnitudes)?.x;
        let rows = [
            s.iter()
                .zip(&w)
                .map(|(a, b)| 0.5 * (a + b))
                .collect::<Vec<_>>(),
            s.iter()
                .zip(&w)
                .map(|(a, b)| 0.5 * (a - b))
                .collect::<Vec<_>>(),
        ];
        let config = Matrix::from_rows(&rows)?;
        let residual = beta(&self.key, &config)?.values.sub(y)?.frobenius_norm();
        self.check_range(residual, y.frobenius_norm())?;
        Ok(ConfigRecovery { config, residual })
    }

    /// Inverts `β̃_A` on a `(d + D)`-vector.
    pub fn invert_beta_tilde(&self, y: &[f64]) -> Result<ConfigRecovery> {
        let d = self.key.dim();
        if y.len() != d + self.key.frame_size() {
            return Err(Error::Dimension(format!(
                "embedding of length {} but d + D = {}",
                y.len(),
                d + self.key.frame_size()
            )));
        }
        let (mean, magnitudes) = y.split_at(d);
        let w = self.omega(magnitudes)?.x;
        let rows = [
            mean.iter()
                .zip(&w)
                .map(|(m, v)| m + 0.5 * v)
                .collect::<Vec<_>>(),
            mean.iter()
                .zip(&w)
                .map(|(m, v)| m - 0.5 * v)
                .collect::<Vec<_>>(),
        ];
        let config = Matrix::from_rows(&rows)?;
        let back = beta_tilde(&self.key, &config)?.to_vec();
        let diff: Vec<f64> = back.iter().zip(y).map(|(a, b)| a - b).collect();
        let residual = norm2(&diff);
        self.check_range(residual, norm2(y))?;
        Ok(ConfigRecovery { config, residual })
    }

    fn check_range(&self, residual: f64, scale: f64) -> Result<()> {
        if residual > self.key.tol().consistency_tol * scale.max(1.0) {
            Err(Error::NotInRange { residual })
        } else {
            Ok(())
        }
    }
}

/// `ω_A` on a key that is certified on the fly.
pub fn omega(key: &Key, y: &[f64]) -> Result<RecoveryResult> {
    PhaseRetriever::new(key)?.omega(y)
}

pub fn invert_beta(key: &Key, y: &Matrix) -> Result<ConfigRecovery> {
    PhaseRetriever::new(key)?.invert_beta(y)
}

pub fn invert_beta_tilde(key: &Key, y: &[f64]) -> Result<ConfigRecovery> {
    PhaseRetriever::new(key)?.invert_beta_tilde(y)
}

fn measurement_residual(key: &Key, x: &[f64], y: &[f64]) -> Result<f64> {
    let fit = alpha(key, x)?;
    let diff: Vec<f64> = fit.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff))
}

/// Flips `x` so its first coordinate above the rank cutoff is positive.
pub(crate) fn canonicalize_sign(x: &mut [f64], key: &Key) {
    let cutoff = key.tol().rank_cutoff(key.dim(), key.frame_size(), norm2(x));
    if let Some(first) = x.iter().find(|v| v.abs() > cutoff) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Greedy column pivoting: repeatedly take the column with the largest component
/// orthogonal to those already chosen (first index on ties).
fn pivot_columns(key: &Key) -> Result<Vec<usize>> {
    let (d, n) = (key.dim(), key.frame_size());
    let mut residual: Vec<Vec<f64>> = (0..n).map(|k| key.column(k)).collect();
    let scale = residual.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    let cutoff = key.tol().rank_cutoff(d, n, scale);
    let mut chosen = Vec::with_capacity(d);
    for step in 0..d {
        let mut best: Option<(usize, f64)> = None;
        for (k, col) in residual.iter().enumerate() {
            if chosen.contains(&k) {
                continue;
            }
            let nk = norm2(col);
            if best.is_none_or(|(_, b)| nk > b) {
                best = Some((k, nk));
            }
        }
        let Some((k, nk)) = best.filter(|&(_, nk)| nk > cutoff && nk > 0.0) else {
            return Err(Error::NotAFrame { d, rank: step });
        };
        chosen.push(k);
        let q: Vec<f64> = residual[k].iter().map(|v| v / nk).collect();
        for (j, col) in residual.iter_mut().enumerate() {
            if chosen.contains(&j) {
                continue;
            }
            let c: f64 = col.iter().zip(&q).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(&q).for_each(|(a, b)| *a -= c * b);
        }
    }
    Ok(chosen)
}
