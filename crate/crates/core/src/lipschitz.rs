//! Optimal bi-Lipschitz constants shared by `α_A` (on `R^d / {±1}`) and `β_A`
//! (on `R^{2 x d} / S_2`), together with the pairs that attain them.
//!
//! * `B₀ = σ₁(A)`, attained by `x = u, y = 0` where `u` is the principal left
//!   singular vector.
//! * `A₀ = min_I sqrt(σ_d(A[I])² + σ_d(A[Iᶜ])²)`, attained by `u₁ ± u₂` built from
//!   the `d`-th left singular vectors of the two sides of an optimal partition.
//!
//! `σ_d` of a side with fewer than `d` columns is zero; its "singular vector" is
//! then any unit vector orthogonal to that side, chosen deterministically (see
//! [`side_direction`]).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::encoders::{alpha, beta, dist_hat_h, dist_hat_v};
use crate::error::{Error, Result};
use crate::frame_keys::{
    analysis, canonical_partition_count, Key, Partition, MAX_PARTITION_COLUMNS,
};
use crate::numerics::{leading_index, left_basis, norm2, sigma_k, Matrix};

/// `B₀ = σ₁(A)`.
pub fn upper_constant(key: &Key) -> Result<f64> {
    sigma_k(key.matrix(), 1)
}

fn side_sigma(key: &Key, cols: &[usize]) -> Result<f64> {
    if cols.len() < key.dim() {
        return Ok(0.0);
    }
    sigma_k(&key.side_matrix(cols), key.dim())
}

/// `sqrt(σ_d(A[I])² + σ_d(A[Iᶜ])²)`.
pub fn partition_value(key: &Key, p: Partition) -> Result<f64> {
    let a = side_sigma(key, &p.indices())?;
    let b = side_sigma(key, &p.complement().indices())?;
    Ok((a * a + b * b).sqrt())
}

fn check_cap(key: &Key) -> Result<()> {
    let n = key.frame_size();
    if n > MAX_PARTITION_COLUMNS {
        return Err(Error::SearchTooLarge(format!(
            "A0 search over D = {n} columns exceeds the cap of {MAX_PARTITION_COLUMNS}"
        )));
    }
    Ok(())
}

/// Values closer than the rank cutoff of `A` are ties; the smallest mask among them wins.
fn select_partition(key: &Key, values: &[f64]) -> Result<(f64, Partition)> {
    let sigma1 = upper_constant(key)?;
    let tie = key.tol().rank_cutoff(key.dim(), key.frame_size(), sigma1);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mask = values
        .iter()
        .position(|&v| v <= min + tie)
        .expect("nonempty search space");
    Ok((values[mask], Partition::new(mask as u64, key.frame_size())?))
}

/// Exact `A₀` and the canonical optimal partition, scanning partitions in parallel.
pub fn lower_constant(key: &Key) -> Result<(f64, Partition)> {
    check_cap(key)?;
    let n = key.frame_size();
    let values = (0..canonical_partition_count(n))
        .into_par_iter()
        .map(|mask| partition_value(key, Partition::new(mask, n)?))
        .collect::<Result<Vec<f64>>>()?;
    select_partition(key, &values)
}

/// Same result as [`lower_constant`], on one thread.
pub fn lower_constant_serial(key: &Key) -> Result<(f64, Partition)> {
    check_cap(key)?;
    let n = key.frame_size();
    let values = (0..canonical_partition_count(n))
        .map(|mask| partition_value(key, Partition::new(mask, n)?))
        .collect::<Result<Vec<f64>>>()?;
    select_partition(key, &values)
}

/// Unit vector realizing `σ_d` on the given side of a partition.
///
/// With at least `d` columns this is the `d`-th left singular vector. With fewer,
/// it is the normalized projection of the first coordinate vector `e_j` whose
/// projection onto the orthogonal complement of the side's span has squared norm
/// at least `1/(2d)` (one always exists), signed so its leading entry is positive.
/// The flag is true in that second case.
pub fn side_direction(key: &Key, cols: &[usize]) -> Result<(Vec<f64>, bool)> {
    let d = key.dim();
    if cols.len() >= d {
        let lb = left_basis(&key.side_matrix(cols))?;
        return Ok((lb.vector(d - 1).to_vec(), false));
    }
    let span: Vec<Vec<f64>> = if cols.is_empty() {
        Vec::new()
    } else {
        let side = key.side_matrix(cols);
        let lb = left_basis(&side)?;
        let cutoff = key
            .tol()
            .rank_cutoff(side.rows(), side.cols(), lb.singular_values[0]);
        (0..d)
            .filter(|&i| lb.singular_values[i] > cutoff && lb.singular_values[i] > 0.0)
            .map(|i| lb.vector(i).to_vec())
            .collect()
    };
    let threshold = 0.5 / d as f64;
    for j in 0..d {
        let mut p = vec![0.0; d];
        p[j] = 1.0;
        for q in &span {
            let c = q[j];
            p.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let np = norm2(&p);
        if np * np >= threshold {
            p.iter_mut().for_each(|v| *v /= np);
            let lead = leading_index(&p);
            if p[lead] < 0.0 {
                p.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok((p, true));
        }
    }
    Err(Error::InternalInconsistency(
        "no coordinate vector has a sizable component off the side's span".into(),
    ))
}

/// Extremal pairs for `α_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalWitnesses {
    pub x_max: Vec<f64>,
    pub y_max: Vec<f64>,
    pub x_min: Vec<f64>,
    pub y_min: Vec<f64>,
}

/// Extremal pairs for `β_A` (all `2 x d`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigWitnesses {
    pub x_max: Matrix,
    pub y_max: Matrix,
    pub x_min: Matrix,
    pub y_min: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub a0: f64,
    pub b0: f64,
    pub i0: Partition,
    /// Principal left singular vector of `A`.
    pub u: Vec<f64>,
    /// `σ_d` direction of `A[I₀]`.
    pub u1: Vec<f64>,
    /// `σ_d` direction of `A[I₀ᶜ]`.
    pub u2: Vec<f64>,
    /// `I₀` has fewer than `d` columns, so `u1` is a complement direction.
    pub u1_placeholder: bool,
    pub u2_placeholder: bool,
    pub signal: SignalWitnesses,
    pub config: ConfigWitnesses,
}

impl LipschitzReport {
    /// `A₀` is numerically zero (the key is not phase retrievable).
    pub fn is_degenerate(&self, key: &Key) -> bool {
        self.a0 <= key.tol().rank_cutoff(key.dim(), key.frame_size(), self.b0)
    }
}

pub fn build_report(key: &Key) -> Result<LipschitzReport> {
    let d = key.dim();
    let b0 = upper_constant(key)?;
    let u = left_basis(key.matrix())?.vector(0).to_vec();
    let (a0, i0) = lower_constant(key)?;
    let (u1, u1_placeholder) = side_direction(key, &i0.indices())?;
    let (u2, u2_placeholder) = side_direction(key, &i0.complement().indices())?;

    let plus: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
    let zero = vec![0.0; d];
    let stack = |top: &[f64], bottom: &[f64]| Matrix::from_rows(&[top, bottom]);

    Ok(LipschitzReport {
        a0,
        b0,
        i0,
        signal: SignalWitnesses {
            x_max: u.clone(),
            y_max: zero.clone(),
            x_min: plus.clone(),
            y_min: minus,
        },
        config: ConfigWitnesses {
            x_max: stack(&u, &zero)?,
            y_max: Matrix::zeros(2, d),
            x_min: stack(&plus, &zero)?,
            y_min: stack(&u1, &u2)?,
        },
        u,
        u1,
        u2,
        u1_placeholder,
        u2_placeholder,
    })
}

/// One equality checked by [`check_achievement`].
#[derive(Debug, Clone, PartialEq)]
pub struct AchievementClause {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AchievementReport {
    pub clauses: Vec<AchievementClause>,
    /// False when `A₀` is zero and the lower-bound clauses were skipped.
    pub lower_checked: bool,
}

fn alpha_gap(key: &Key, x: &[f64], y: &[f64]) -> Result<f64> {
    let ax = alpha(key, x)?;
    let ay = alpha(key, y)?;
    let diff: Vec<f64> = ax.iter().zip(&ay).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff))
}

fn beta_gap(key: &Key, x: &Matrix, y: &Matrix) -> Result<f64> {
    Ok(beta(key, x)?
        .values
        .sub(&beta(key, y)?.values)?
        .frobenius_norm())
}

/// Verifies that the report's witness pairs attain `B₀` and `A₀` exactly.
pub fn check_achievement(key: &Key, report: &LipschitzReport) -> Result<AchievementReport> {
    let s = &report.signal;
    let c = &report.config;
    let mut clauses = vec![
        AchievementClause {
            name: "alpha attains B0",
            lhs: alpha_gap(key, &s.x_max, &s.y_max)?,
            rhs: report.b0 * dist_hat_h(&s.x_max, &s.y_max)?,
        },
        AchievementClause {
            name: "beta attains B0",
            lhs: beta_gap(key, &c.x_max, &c.y_max)?,
            rhs: report.b0 * dist_hat_v(&c.x_max, &c.y_max)?.0,
        },
        AchievementClause {
            name: "dist(X_max, Y_max) = 1",
            lhs: dist_hat_v(&c.x_max, &c.y_max)?.0,
            rhs: 1.0,
        },
    ];
    let lower_checked = !report.is_degenerate(key);
    if lower_checked {
        let dv = dist_hat_v(&c.x_min, &c.y_min)?.0;
        clauses.extend([
            AchievementClause {
                name: "alpha attains A0",
                lhs: alpha_gap(key, &s.x_min, &s.y_min)?,
                rhs: report.a0 * dist_hat_h(&s.x_min, &s.y_min)?,
            },
            AchievementClause {
                name: "beta attains A0",
                lhs: beta_gap(key, &c.x_min, &c.y_min)?,
                rhs: report.a0 * dv,
            },
            AchievementClause {
                name: "dist(X_min, Y_min)^2 = 2",
                lhs: dv * dv,
                rhs: 2.0,
            },
        ]);
    }
    let tol = key.tol().achievement_tol;
    for cl in &clauses {
        let scale = cl.lhs.abs().max(cl.rhs.abs()).max(f64::MIN_POSITIVE);
        if (cl.lhs - cl.rhs).abs() > tol * scale {
            return Err(Error::AchievementFailure {
                clause: cl.name,
                lhs: cl.lhs,
                rhs: cl.rhs,
            });
        }
    }
    Ok(AchievementReport {
        clauses,
        lower_checked,
    })
}

/// Extreme ratios `‖enc(x) - enc(y)‖ / dist([x], [y])` seen by [`ratio_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioScan {
    pub samples: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

const MIN_PAIR_DISTANCE: f64 = 1e-6;

fn normal_vec(rng: &mut ChaCha20Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Ratios for sample `index`; each sample owns ChaCha20 stream `index` under `seed`.
fn sample_ratios(key: &Key, seed: u64, index: u64) -> Result<(f64, f64)> {
    let d = key.dim();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let beta_ratio = loop {
        let x = Matrix::new(2, d, normal_vec(&mut rng, 2 * d))?;
        let y = Matrix::new(2, d, normal_vec(&mut rng, 2 * d))?;
        let dist = dist_hat_v(&x, &y)?.0;
        if dist > MIN_PAIR_DISTANCE {
            break beta_gap(key, &x, &y)? / dist;
        }
    };
    let alpha_ratio = loop {
        let x = normal_vec(&mut rng, d);
        let y = normal_vec(&mut rng, d);
        let dist = dist_hat_h(&x, &y)?;
        if dist > MIN_PAIR_DISTANCE {
            break alpha_gap(key, &x, &y)? / dist;
        }
    };
    Ok((alpha_ratio, beta_ratio))
}

/// Random-pair scan of both encoders, asserting every ratio lies in `[A₀, B₀]`
/// up to `sandwich_tol`.
pub fn ratio_scan(key: &Key, samples: usize, seed: u64) -> Result<RatioScan> {
    let report = build_report(key)?;
    ratio_scan_with_report(key, &report, samples, seed, false)
}

/// [`ratio_scan`] against precomputed bounds, optionally adding the witness pairs.
pub fn ratio_scan_with_report(
    key: &Key,
    report: &LipschitzReport,
    samples: usize,
    seed: u64,
    include_witnesses: bool,
) -> Result<RatioScan> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "ratio scan needs at least one sample".into(),
        ));
    }
    let mut pairs = (0..samples as u64)
        .into_par_iter()
        .map(|i| sample_ratios(key, seed, i))
        .collect::<Result<Vec<(f64, f64)>>>()?;

    if include_witnesses {
        let s = &report.signal;
        let c = &report.config;
        let witness_pairs = [
            (
                alpha_gap(key, &s.x_max, &s.y_max)? / dist_hat_h(&s.x_max, &s.y_max)?,
                beta_gap(key, &c.x_max, &c.y_max)? / dist_hat_v(&c.x_max, &c.y_max)?.0,
            ),
            (
                alpha_gap(key, &s.x_min, &s.y_min)? / dist_hat_h(&s.x_min, &s.y_min)?,
                beta_gap(key, &c.x_min, &c.y_min)? / dist_hat_v(&c.x_min, &c.y_min)?.0,
            ),
        ];
        pairs.extend(witness_pairs);
    }

    let fold = |sel: fn(&(f64, f64)) -> f64| {
        pairs
            .iter()
            .map(sel)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r), hi.max(r))
            })
    };
    let (alpha_min, alpha_max) = fold(|p| p.0);
    let (beta_min, beta_max) = fold(|p| p.1);

    let slack = key.tol().sandwich_tol;
    for (side, lo, hi) in [
        ("alpha", alpha_min, alpha_max),
        ("beta", beta_min, beta_max),
    ] {
        for ratio in [lo, hi] {
            if ratio < report.a0 - slack || ratio > report.b0 + slack {
                return Err(Error::LipschitzViolation {
                    side,
                    ratio,
                    lower: report.a0,
                    upper: report.b0,
                });
            }
        }
    }
    Ok(RatioScan {
        samples,
        alpha_min,
        alpha_max,
        beta_min,
        beta_max,
    })
}

/// Both sides of the auxiliary-set decomposition of `‖α(x) - α(y)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliarySplit {
    /// `S = {j : |⟨x - y, a_j⟩| ≤ |⟨x + y, a_j⟩|}`, 0-based.
    pub set: Vec<usize>,
    /// `‖α(x) - α(y)‖²` computed directly.
    pub direct: f64,
    /// `Σ_{S} ⟨a_j, x - y⟩² + Σ_{Sᶜ} ⟨a_j, x + y⟩²`.
    pub split: f64,
}

pub fn auxiliary_split(key: &Key, x: &[f64], y: &[f64]) -> Result<AuxiliarySplit> {
    let gap = alpha_gap(key, x, y)?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let td = analysis(key, &diff)?;
    let ts = analysis(key, &sum)?;
    let mut set = Vec::new();
    let mut split = 0.0;
    for (j, (m, p)) in td.iter().zip(&ts).enumerate() {
        if m.abs() <= p.abs() {
            set.push(j);
            split += m * m;
        } else {
            split += p * p;
        }
    }
    Ok(AuxiliarySplit {
        set,
        direct: gap * gap,
        split,
    })
}
