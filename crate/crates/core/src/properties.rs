//! Invariant battery run against a single key.
//!
//! Every property draws from its own ChaCha20 stream under the caller's seed, so
//! a report is a pure function of `(key, samples, seed)`. Properties that only
//! hold for injective keys are reported as skipped otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::encoders::{
    alpha, beta, beta_tilde, dist_hat_h, dist_hat_v, hadamard_split, Permutation,
};
use crate::error::{Error, Result};
use crate::frame_keys::{
    analysis, has_complement_property, is_full_spark, is_phase_retrievable, is_universal_key, Key,
};
use crate::inversion::PhaseRetriever;
use crate::lipschitz::{auxiliary_split, build_report, check_achievement, ratio_scan_with_report};
use crate::numerics::{norm2, Matrix};

/// Relative slack for identities that hold up to rounding.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Relative slack for decoder roundtrips.
pub const ROUNDTRIP_TOL: f64 = 1e-8;
/// Relative slack for positive homogeneity of the constants.
pub const HOMOGENEITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub status: Status,
    pub checked: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl PropertyOutcome {
    fn tally(name: &'static str, checked: usize, failures: usize, detail: Option<String>) -> Self {
        Self {
            name,
            status: if failures == 0 {
                Status::Pass
            } else {
                Status::Fail
            },
            checked,
            failures,
            detail,
        }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Self {
            name,
            status: Status::Skipped,
            checked: 0,
            failures: 0,
            detail: Some(why.to_string()),
        }
    }

    fn errored(name: &'static str, err: &Error) -> Self {
        Self {
            name,
            status: Status::Fail,
            checked: 1,
            failures: 1,
            detail: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub phase_retrievable: bool,
    pub outcomes: Vec<PropertyOutcome>,
}

impl BatteryReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.outcomes.iter().filter(|o| o.status == Status::Fail)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normals(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, normals(rng, rows * cols)).expect("finite normals")
}

/// A real on the dyadic grid `k / 2^24` with `|k| < 2^28`.
///
/// Sums, differences and halvings of such numbers are exact in `f64`, so the
/// min/max identities can be checked bit for bit.
pub fn dyadic_sample(rng: &mut impl Rng) -> f64 {
    let k: i64 = rng.random_range(-(1i64 << 28) + 1..(1i64 << 28));
    k as f64 / (1u64 << 24) as f64
}

/// Number of the five min/max/abs identities that fail at `(u, v)`.
pub fn min_max_identity_failures(u: f64, v: f64) -> usize {
    let (mx, mn) = (u.max(v), u.min(v));
    let checks = [
        (u - v).abs() == mx - mn,
        u + v == mx + mn,
        mx == 0.5 * (u + v + (u - v).abs()),
        mn == 0.5 * (u + v - (u - v).abs()),
        (u.abs() - v.abs()).abs() == (u - v).abs().min((u + v).abs()),
    ];
    checks.iter().filter(|ok| !**ok).count()
}

fn min_max_identities(samples: usize, seed: u64) -> PropertyOutcome {
    let mut rng = stream(seed, 1);
    let failures = (0..samples)
        .filter(|_| {
            let (u, v) = (dyadic_sample(&mut rng), dyadic_sample(&mut rng));
            min_max_identity_failures(u, v) > 0
        })
        .count();
    PropertyOutcome::tally("min-max identities", samples, failures, None)
}

fn hadamard_split_identity(key: &Key, samples: usize, seed: u64) -> Result<PropertyOutcome> {
    let mut rng = stream(seed, 2);
    let d = key.dim();
    let scale_a = key.matrix().frobenius_norm();
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = normal_matrix(&mut rng, 2, d);
        let (mag, sum) = hadamard_split(&beta(key, &x)?.values)?;
        let diff: Vec<f64> = x.row(0).iter().zip(x.row(1)).map(|(a, b)| a - b).collect();
        let tot: Vec<f64> = x.row(0).iter().zip(x.row(1)).map(|(a, b)| a + b).collect();
        let ref_mag = alpha(key, &diff)?;
        let ref_sum = analysis(key, &tot)?;
        let err: f64 = mag
            .iter()
            .zip(&ref_mag)
            .chain(sum.iter().zip(&ref_sum))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let rel = err / (x.frobenius_norm() * scale_a).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > IDENTITY_TOL {
            failures += 1;
        }
    }
    Ok(PropertyOutcome::tally(
        "hadamard split identity",
        samples,
        failures,
        Some(format!("max relative error {worst:e}")),
    ))
}

fn invariances(key: &Key, samples: usize, seed: u64) -> Result<Vec<PropertyOutcome>> {
    let mut rng = stream(seed, 3);
    let d = key.dim();
    let mut sign_fail = 0;
    let mut perm_fail = 0;
    let mut perm_checked = 0;
    for i in 0..samples {
        let x = normals(&mut rng, d);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        if alpha(key, &x)? != alpha(key, &neg)? {
            sign_fail += 1;
        }
        let n = 2 + i % 3;
        let xm = normal_matrix(&mut rng, n, d);
        let reference = beta(key, &xm)?.values;
        for p in Permutation::all(n) {
            perm_checked += 1;
            let moved = beta(key, &p.apply_rows(&xm)?)?.values;
            if moved
                .as_slice()
                .iter()
                .map(|v| v.to_bits())
                .ne(reference.as_slice().iter().map(|v| v.to_bits()))
            {
                perm_fail += 1;
            }
        }
    }
    Ok(vec![
        PropertyOutcome::tally("alpha sign invariance", samples, sign_fail, None),
        PropertyOutcome::tally("beta permutation invariance", perm_checked, perm_fail, None),
    ])
}

fn metric_cross_check(samples: usize, d: usize, seed: u64) -> Result<PropertyOutcome> {
    let mut rng = stream(seed, 4);
    let mut failures = 0;
    for _ in 0..samples {
        let x = normals(&mut rng, d);
        let y = normals(&mut rng, d);
        let nx: Vec<f64> = x.iter().map(|v| -v).collect();
        let ny: Vec<f64> = y.iter().map(|v| -v).collect();
        let xs = Matrix::from_rows(&[&x, &nx])?;
        let ys = Matrix::from_rows(&[&y, &ny])?;
        let h = dist_hat_h(&x, &y)?;
        let v = dist_hat_v(&xs, &ys)?.0 / std::f64::consts::SQRT_2;
        if (h - v).abs() > IDENTITY_TOL * (norm2(&x) + norm2(&y)).max(f64::MIN_POSITIVE) {
            failures += 1;
        }
    }
    Ok(PropertyOutcome::tally(
        "stacked orbit metric",
        samples,
        failures,
        None,
    ))
}

fn auxiliary_sets(key: &Key, samples: usize, seed: u64) -> Result<PropertyOutcome> {
    let mut rng = stream(seed, 5);
    let d = key.dim();
    let a2 = key.matrix().frobenius_norm().powi(2);
    let mut failures = 0;
    for _ in 0..samples {
        let x = normals(&mut rng, d);
        let y = normals(&mut rng, d);
        let s = auxiliary_split(key, &x, &y)?;
        let scale = (norm2(&x) + norm2(&y)).powi(2) * a2;
        if (s.direct - s.split).abs() > IDENTITY_TOL * scale.max(f64::MIN_POSITIVE) {
            failures += 1;
        }
    }
    Ok(PropertyOutcome::tally(
        "auxiliary-set decomposition",
        samples,
        failures,
        None,
    ))
}

fn certificate_agreement(key: &Key, a0: f64, b0: f64) -> Result<PropertyOutcome> {
    let (d, n) = (key.dim(), key.frame_size());
    let pr = is_phase_retrievable(key)?.verdict;
    let uk = is_universal_key(key)?.verdict;
    let cp = has_complement_property(key)?.verdict;
    let mut notes = Vec::new();
    if pr != uk {
        notes.push("phase retrievable != universal key");
    }
    if n == 2 * d - 1 && is_full_spark(key)?.verdict != uk {
        notes.push("D = 2d-1 but full spark != universal key");
    }
    if uk && n < 2 * d - 1 {
        notes.push("universal key with D < 2d-1");
    }
    let positive = a0 > key.tol().rank_cutoff(d, n, b0);
    if positive != cp {
        notes.push("A0 > 0 disagrees with the complement property");
    }
    Ok(PropertyOutcome::tally(
        "certificate agreement",
        4,
        notes.len(),
        (!notes.is_empty()).then(|| notes.join("; ")),
    ))
}

fn roundtrips(
    retriever: &PhaseRetriever,
    samples: usize,
    seed: u64,
) -> Result<Vec<PropertyOutcome>> {
    let key = retriever.key();
    let d = key.dim();
    let mut rng = stream(seed, 6);
    let (mut f_omega, mut f_beta, mut f_tilde) = (0, 0, 0);
    for _ in 0..samples {
        let x = normals(&mut rng, d);
        let ok = match retriever.omega(&alpha(key, &x)?) {
            Ok(r) => dist_hat_h(&r.x, &x)? <= ROUNDTRIP_TOL * norm2(&x).max(1.0),
            Err(_) => false,
        };
        f_omega += usize::from(!ok);

        let xm = normal_matrix(&mut rng, 2, d);
        let bound = ROUNDTRIP_TOL * xm.frobenius_norm().max(1.0);
        let ok = match retriever.invert_beta(&beta(key, &xm)?.values) {
            Ok(r) => dist_hat_v(&r.config, &xm)?.0 <= bound,
            Err(_) => false,
        };
        f_beta += usize::from(!ok);
        let ok = match retriever.invert_beta_tilde(&beta_tilde(key, &xm)?.to_vec()) {
            Ok(r) => dist_hat_v(&r.config, &xm)?.0 <= bound,
            Err(_) => false,
        };
        f_tilde += usize::from(!ok);
    }
    Ok(vec![
        PropertyOutcome::tally("omega roundtrip", samples, f_omega, None),
        PropertyOutcome::tally("beta roundtrip", samples, f_beta, None),
        PropertyOutcome::tally("beta-tilde roundtrip", samples, f_tilde, None),
    ])
}

fn homogeneity(key: &Key, a0: f64, b0: f64) -> Result<PropertyOutcome> {
    let scaled = build_report(&key.scaled(2.0))?;
    let rel = |got: f64, want: f64| {
        (got - want).abs() <= HOMOGENEITY_TOL * want.abs().max(f64::MIN_POSITIVE)
    };
    let mut failures = 0;
    if !rel(scaled.b0, 2.0 * b0) {
        failures += 1;
    }
    if !(rel(scaled.a0, 2.0 * a0) || (a0 == 0.0 && scaled.a0 == 0.0)) {
        failures += 1;
    }
    Ok(PropertyOutcome::tally(
        "scaling homogeneity",
        2,
        failures,
        None,
    ))
}

/// Runs the full battery. Certificate searches that exceed the desk-scale caps
/// propagate as errors.
pub fn run_battery(key: &Key, samples: usize, seed: u64) -> Result<BatteryReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "battery needs at least one sample".into(),
        ));
    }
    let phase_retrievable = is_phase_retrievable(key)?.verdict;
    let report = build_report(key)?;

    let mut outcomes = vec![min_max_identities(samples, seed)];
    outcomes.push(hadamard_split_identity(key, samples, seed)?);
    outcomes.extend(invariances(key, samples, seed)?);
    outcomes.push(metric_cross_check(samples, key.dim(), seed)?);
    outcomes.push(auxiliary_sets(key, samples, seed)?);
    outcomes.push(certificate_agreement(key, report.a0, report.b0)?);
    outcomes.push(homogeneity(key, report.a0, report.b0)?);

    outcomes.push(
        match ratio_scan_with_report(key, &report, samples, seed, true) {
            Ok(s) => PropertyOutcome::tally(
                "lipschitz sandwich",
                2 * (s.samples + 2),
                0,
                Some(format!(
                    "alpha ratios [{:e}, {:e}], beta ratios [{:e}, {:e}]",
                    s.alpha_min, s.alpha_max, s.beta_min, s.beta_max
                )),
            ),
            Err(e) => PropertyOutcome::errored("lipschitz sandwich", &e),
        },
    );
    outcomes.push(match check_achievement(key, &report) {
        Ok(a) => PropertyOutcome::tally(
            "extremal witnesses",
            a.clauses.len(),
            0,
            (!a.lower_checked).then(|| "lower-bound clauses skipped (A0 = 0)".to_string()),
        ),
        Err(e) => PropertyOutcome::errored("extremal witnesses", &e),
    });

    const NOT_INJECTIVE: &str = "skipped (not injective)";
    if phase_retrievable {
        match PhaseRetriever::new(key) {
            Ok(r) => outcomes.extend(roundtrips(&r, samples, seed)?),
            Err(e) => outcomes.push(PropertyOutcome::errored("decoder setup", &e)),
        }
    } else {
        for name in ["omega roundtrip", "beta roundtrip", "beta-tilde roundtrip"] {
            outcomes.push(PropertyOutcome::skipped(name, NOT_INJECTIVE));
        }
    }
    Ok(BatteryReport {
        phase_retrievable,
        outcomes,
    })
}
