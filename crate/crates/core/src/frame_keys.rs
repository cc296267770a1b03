//! Keys (frames) and their injectivity certificates.
//!
//! A key is a `d x D` matrix whose columns `a_1..a_D` are the frame vectors.
//! Three exhaustive certificates are provided:
//!
//! * full spark: every `d` columns are linearly independent;
//! * complement property: for every split `I ∪ Iᶜ` of the columns, one side spans `R^d`
//!   (the exact criterion for injectivity of `x ↦ |Aᵀx|` on `R^d / {±1}`);
//! * universal key: injectivity of the sorting encoder on `R^{2 x d} / S_2`, which
//!   for two rows coincides with the complement property.
//!
//! Searches are deterministic: witnesses are the smallest violating object in a
//! fixed enumeration order, regardless of how the work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, least_squares, Matrix, ToleranceConfig};

/// Largest frame size for which partition searches run.
pub const MAX_PARTITION_COLUMNS: usize = 24;
/// Largest number of column subsets the full-spark check will enumerate.
pub const MAX_SPARK_SUBSETS: u64 = 5_000_000;

/// A frame for `R^d`, stored as the columns of a `d x D` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Key {
    matrix: Matrix,
    tol: ToleranceConfig,
}

impl Key {
    pub fn new(matrix: Matrix) -> Self {
        Self {
            matrix,
            tol: ToleranceConfig::default(),
        }
    }

    pub fn with_tolerances(matrix: Matrix, tol: ToleranceConfig) -> Result<Self> {
        tol.validate()?;
        Ok(Self { matrix, tol })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    #[inline]
    pub fn tol(&self) -> &ToleranceConfig {
        &self.tol
    }

    /// Ambient dimension `d`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of frame vectors `D`.
    #[inline]
    pub fn frame_size(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.matrix.col(k)
    }

    /// The key with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Key {
        Key {
            matrix: self.matrix.scale(c),
            tol: self.tol,
        }
    }

    pub(crate) fn side_matrix(&self, cols: &[usize]) -> Matrix {
        self.matrix.select_columns(cols)
    }

    /// Whether the listed columns span `R^d`.
    pub(crate) fn side_spans(&self, cols: &[usize]) -> Result<bool> {
        let d = self.dim();
        if cols.len() < d {
            return Ok(false);
        }
        Ok(numerics::rank(&self.side_matrix(cols), &self.tol)? == d)
    }
}

/// Draws a `d x D` key with i.i.d. standard normal entries.
///
/// The generator is ChaCha20 seeded through `seed_from_u64(seed)`; normals come
/// from `rand_distr::StandardNormal` and fill the matrix in row-major order.
pub fn generate_key(d: usize, frame_size: usize, seed: u64) -> Result<Key> {
    if d == 0 || frame_size == 0 {
        return Err(Error::InvalidArgument(format!(
            "key dimensions must be positive, got {d}x{frame_size}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data = (0..d * frame_size)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Ok(Key::new(Matrix::new(d, frame_size, data)?))
}

/// `T_A x = Aᵀ x = (⟨x, a_k⟩)_k`.
pub fn analysis(key: &Key, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != key.dim() {
        return Err(Error::Dimension(format!(
            "signal of length {} for a key with d = {}",
            x.len(),
            key.dim()
        )));
    }
    key.matrix.tmatvec(x)
}

/// Minimum-norm least-squares solution of `Aᵀ x = y`, a left inverse of [`analysis`].
pub fn synthesis_left_inverse(key: &Key, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != key.frame_size() {
        return Err(Error::Dimension(format!(
            "coefficient vector of length {} for D = {}",
            y.len(),
            key.frame_size()
        )));
    }
    let r = numerics::rank(&key.matrix, &key.tol)?;
    if r < key.dim() {
        return Err(Error::NotAFrame {
            d: key.dim(),
            rank: r,
        });
    }
    least_squares(&key.matrix.transpose(), y, &key.tol)
}

/// A subset `I` of the column indices, bit `k` set iff column `k` (0-based) is in `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    mask: u64,
    len: usize,
}

impl Partition {
    pub fn new(mask: u64, len: usize) -> Result<Self> {
        if len > 63 || mask >> len != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {mask:#b} does not fit {len} columns"
            )));
        }
        Ok(Self { mask, len })
    }

    /// Partition from 0-based member indices.
    pub fn from_indices(indices: &[usize], len: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i >= len {
                return Err(Error::InvalidArgument(format!(
                    "index {i} out of range for {len} columns"
                )));
            }
            mask |= 1 << i;
        }
        Self::new(mask, len)
    }

    #[inline]
    pub fn mask(&self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    #[inline]
    pub fn contains(&self, k: usize) -> bool {
        self.mask >> k & 1 == 1
    }

    pub fn complement(&self) -> Self {
        let full = if self.len == 0 {
            0
        } else {
            u64::MAX >> (64 - self.len)
        };
        Self {
            mask: !self.mask & full,
            len: self.len,
        }
    }

    /// Of `{I, Iᶜ}`, the one with the smaller mask.
    pub fn canonical(&self) -> Self {
        let c = self.complement();
        if c.mask < self.mask {
            c
        } else {
            *self
        }
    }

    /// 0-based members, ascending.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.len).filter(|&k| self.contains(k)).collect()
    }

    /// 1-based members, ascending.
    pub fn one_based(&self) -> Vec<usize> {
        self.indices().into_iter().map(|k| k + 1).collect()
    }
}

/// The object that shows a certificate failing.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Partition(Partition),
    /// 0-based column indices.
    Columns(Vec<usize>),
}

impl Witness {
    pub fn one_based(&self) -> Vec<usize> {
        match self {
            Witness::Partition(p) => p.one_based(),
            Witness::Columns(c) => c.iter().map(|k| k + 1).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub verdict: bool,
    /// Present exactly when `verdict` is false.
    pub witness: Option<Witness>,
    pub method: &'static str,
}

impl CertificateReport {
    fn pass(method: &'static str) -> Self {
        Self {
            verdict: true,
            witness: None,
            method,
        }
    }

    fn fail(method: &'static str, witness: Witness) -> Self {
        Self {
            verdict: false,
            witness: Some(witness),
            method,
        }
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Every `d` columns linearly independent; witness is the first deficient subset in lexicographic order.
pub fn is_full_spark(key: &Key) -> Result<CertificateReport> {
    const METHOD: &str = "full-spark-exhaustive";
    let (d, n) = (key.dim(), key.frame_size());
    if n < d {
        // too few vectors to span at all
        return Ok(CertificateReport::fail(
            METHOD,
            Witness::Columns((0..n).collect()),
        ));
    }
    let count = binomial(n, d);
    if count > MAX_SPARK_SUBSETS {
        return Err(Error::SearchTooLarge(format!(
            "full spark check needs C({n},{d}) = {count} subsets (cap {MAX_SPARK_SUBSETS})"
        )));
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        if !key.side_spans(&idx)? {
            return Ok(CertificateReport::fail(METHOD, Witness::Columns(idx)));
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    Ok(CertificateReport::pass(METHOD))
}

fn check_partition_cap(n: usize) -> Result<()> {
    if n > MAX_PARTITION_COLUMNS {
        return Err(Error::SearchTooLarge(format!(
            "partition search over D = {n} columns exceeds the cap of {MAX_PARTITION_COLUMNS}"
        )));
    }
    Ok(())
}

/// Number of unordered partitions `{I, Iᶜ}`; canonical masks are `0..count`.
pub(crate) fn canonical_partition_count(n: usize) -> u64 {
    1u64 << n.saturating_sub(1)
}

fn partition_violates(key: &Key, p: Partition) -> Result<bool> {
    let inside = p.indices();
    let outside = p.complement().indices();
    let (big, small) = if inside.len() >= outside.len() {
        (inside, outside)
    } else {
        (outside, inside)
    };
    Ok(!key.side_spans(&big)? && !key.side_spans(&small)?)
}

/// For every split of the columns one side spans `R^d`.
///
/// Witness is the violating partition with the smallest canonical mask.
pub fn has_complement_property(key: &Key) -> Result<CertificateReport> {
    const METHOD: &str = "complement-property-exhaustive";
    let n = key.frame_size();
    check_partition_cap(n)?;
    let hit = (0..canonical_partition_count(n))
        .into_par_iter()
        .map(|mask| {
            let p = Partition { mask, len: n };
            partition_violates(key, p).map(|v| v.then_some(p))
        })
        .filter(|r| !matches!(r, Ok(None)))
        .find_first(|_| true);
    match hit {
        None => Ok(CertificateReport::pass(METHOD)),
        Some(Ok(Some(p))) => Ok(CertificateReport::fail(METHOD, Witness::Partition(p))),
        Some(Err(e)) => Err(e),
        Some(Ok(None)) => unreachable!("filtered out"),
    }
}

/// Injectivity of `α_A` on `R^d / {±1}`, certified by the complement property.
///
/// When `D = 2d - 1` the verdict must also equal the full-spark verdict; a
/// disagreement is reported as an internal inconsistency.
pub fn is_phase_retrievable(key: &Key) -> Result<CertificateReport> {
    let cp = has_complement_property(key)?;
    if key.frame_size() == 2 * key.dim() - 1 {
        let fs = is_full_spark(key)?;
        if fs.verdict != cp.verdict {
            return Err(Error::InternalInconsistency(format!(
                "D = 2d - 1 but complement property = {} and full spark = {}",
                cp.verdict, fs.verdict
            )));
        }
    }
    Ok(CertificateReport {
        method: "complement-property",
        ..cp
    })
}

/// Injectivity of `β_A` on `R^{2 x d} / S_2`, which for two rows is exactly phase retrievability.
pub fn is_universal_key(key: &Key) -> Result<CertificateReport> {
    Ok(CertificateReport {
        method: "phase-retrievable-equivalence",
        ..is_phase_retrievable(key)?
    })
}
