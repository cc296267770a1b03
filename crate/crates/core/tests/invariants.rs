use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use phasekey::lipschitz::{auxiliary_split, lower_constant_serial};
use phasekey::numerics::norm2;
use phasekey::{
    alpha, analysis, beta, beta_tilde, build_report, check_achievement, dist_hat_h, dist_hat_v,
    generate_key, has_complement_property, is_full_spark, is_phase_retrievable, is_universal_key,
    lower_constant, synthesis_left_inverse, upper_constant, Matrix, Permutation, PhaseRetriever,
};

fn normals(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn config(seed: u64, n: usize, d: usize) -> Matrix {
    Matrix::new(n, d, normals(seed, n * d)).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..6).prop_flat_map(|d| (Just(d), d..=2 * d + 2))
}

fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff) <= rel * norm2(a).max(norm2(b)).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analysis_is_linear((d, n) in dims(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let key = generate_key(d, n, seed).unwrap();
        let x = normals(seed ^ 1, d);
        let y = normals(seed ^ 2, d);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = analysis(&key, &combo).unwrap();
        let (ax, ay) = (analysis(&key, &x).unwrap(), analysis(&key, &y).unwrap());
        let rhs: Vec<f64> = ax.iter().zip(&ay).map(|(p, q)| a * p + b * q).collect();
        let scale = (a.abs() * norm2(&x) + b.abs() * norm2(&y)) * key.matrix().frobenius_norm();
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        prop_assert!(norm2(&diff) <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn synthesis_inverts_analysis((d, n) in dims(), seed in any::<u64>()) {
        let key = generate_key(d, n, seed).unwrap();
        let x = normals(seed ^ 3, d);
        let back = synthesis_left_inverse(&key, &analysis(&key, &x).unwrap()).unwrap();
        prop_assert!(close(&back, &x, 1e-9));
    }

    #[test]
    fn certificates_are_consistent((d, n) in dims(), seed in any::<u64>()) {
        let key = generate_key(d, n, seed).unwrap();
        let pr = is_phase_retrievable(&key).unwrap();
        let uk = is_universal_key(&key).unwrap();
        let cp = has_complement_property(&key).unwrap();
        prop_assert_eq!(pr.verdict, uk.verdict);
        prop_assert_eq!(cp.verdict, pr.verdict);
        if uk.verdict {
            prop_assert!(n + 1 >= 2 * d);
        }
        if n + 1 == 2 * d {
            prop_assert_eq!(is_full_spark(&key).unwrap().verdict, uk.verdict);
        }
        let (a0, _) = lower_constant(&key).unwrap();
        let b0 = upper_constant(&key).unwrap();
        let cutoff = key.tol().rank_cutoff(d, n, b0);
        prop_assert!(a0 <= b0);
        prop_assert_eq!(a0 > cutoff, cp.verdict);
        // repeated calls, witnesses included
        prop_assert_eq!(has_complement_property(&key).unwrap(), cp);
    }

    #[test]
    fn alpha_ignores_global_sign((d, n) in dims(), seed in any::<u64>()) {
        let key = generate_key(d, n, seed).unwrap();
        let x = normals(seed ^ 4, d);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (a, b) = (alpha(&key, &x).unwrap(), alpha(&key, &neg).unwrap());
        prop_assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn beta_ignores_row_order(
        (d, n) in dims(),
        rows in 1usize..=8,
        seed in any::<u64>(),
        shuffle in any::<proptest::sample::Index>(),
    ) {
        let key = generate_key(d, n, seed).unwrap();
        let x = config(seed ^ 5, rows, d);
        let perm = Permutation::all(rows).nth(shuffle.index(factorial(rows))).unwrap();
        let base = beta(&key, &x).unwrap();
        let moved = beta(&key, &perm.apply_rows(&x).unwrap()).unwrap();
        prop_assert!(base
            .values
            .as_slice()
            .iter()
            .zip(moved.values.as_slice())
            .all(|(p, q)| p.to_bits() == q.to_bits()));
        for k in 0..n {
            for i in 1..rows {
                prop_assert!(base.values[(i - 1, k)] >= base.values[(i, k)]);
            }
        }
    }

    #[test]
    fn orbit_metric_ignores_row_order(
        rows in 1usize..=5,
        d in 1usize..4,
        seed in any::<u64>(),
        p in any::<proptest::sample::Index>(),
        q in any::<proptest::sample::Index>(),
    ) {
        let x = config(seed ^ 6, rows, d);
        let y = config(seed ^ 7, rows, d);
        let pick = |ix: &proptest::sample::Index| Permutation::all(rows).nth(ix.index(factorial(rows))).unwrap();
        let base = dist_hat_v(&x, &y).unwrap().0;
        let moved = dist_hat_v(&pick(&p).apply_rows(&x).unwrap(), &pick(&q).apply_rows(&y).unwrap()).unwrap().0;
        prop_assert!((base - moved).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn stacked_signal_metric(d in 1usize..6, seed in any::<u64>()) {
        let x = normals(seed ^ 8, d);
        let y = normals(seed ^ 9, d);
        let stack = |v: &[f64]| {
            let neg: Vec<f64> = v.iter().map(|t| -t).collect();
            Matrix::from_rows(&[v.to_vec(), neg]).unwrap()
        };
        let h = dist_hat_h(&x, &y).unwrap();
        let v = dist_hat_v(&stack(&x), &stack(&y)).unwrap().0;
        prop_assert!((h - v / 2f64.sqrt()).abs() <= 1e-12 * h.max(1.0));
    }

    #[test]
    fn auxiliary_set_decomposition((d, n) in dims(), seed in any::<u64>()) {
        let key = generate_key(d, n, seed).unwrap();
        let x = normals(seed ^ 10, d);
        let y = normals(seed ^ 11, d);
        let s = auxiliary_split(&key, &x, &y).unwrap();
        prop_assert!((s.direct - s.split).abs() <= 1e-12 * s.direct.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn homogeneity_of_constants((d, n) in dims(), seed in any::<u64>(), c in 0.01f64..100.0) {
        let key = generate_key(d, n, seed).unwrap();
        let scaled = key.scaled(c);
        let (a0, _) = lower_constant(&key).unwrap();
        let (a0c, _) = lower_constant(&scaled).unwrap();
        let (b0, b0c) = (upper_constant(&key).unwrap(), upper_constant(&scaled).unwrap());
        prop_assert!((b0c - c * b0).abs() <= 1e-10 * c * b0);
        prop_assert!((a0c - c * a0).abs() <= 1e-10 * (c * b0));
    }

    #[test]
    fn serial_and_parallel_partition_scans_agree((d, n) in dims(), seed in any::<u64>()) {
        let key = generate_key(d, n, seed).unwrap();
        prop_assert_eq!(lower_constant(&key).unwrap(), lower_constant_serial(&key).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoders_recover_orbits(d in 1usize..6, extra in 0usize..3, seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let n = 2 * d - 1 + extra;
        let key = generate_key(d, n, seed).unwrap();
        let solver = PhaseRetriever::new(&key).unwrap();

        let x: Vec<f64> = normals(seed ^ 12, d).iter().map(|v| v * scale).collect();
        let rec = solver.omega(&alpha(&key, &x).unwrap()).unwrap();
        prop_assert!(dist_hat_h(&rec.x, &x).unwrap() <= 1e-8 * norm2(&x).max(1.0));
        let first = rec.x.iter().position(|v| v.abs() > 1e-12 * norm2(&rec.x));
        if let Some(i) = first {
            prop_assert!(rec.x[i] > 0.0);
        }

        let xm = config(seed ^ 13, 2, d).scale(scale);
        let y = beta(&key, &xm).unwrap().values;
        let back = solver.invert_beta(&y).unwrap().config;
        prop_assert!(dist_hat_v(&back, &xm).unwrap().0 <= 1e-8 * xm.frobenius_norm().max(1.0));

        let yt = beta_tilde(&key, &xm).unwrap().to_vec();
        prop_assert_eq!(yt.len(), d + n);
        let back = solver.invert_beta_tilde(&yt).unwrap().config;
        prop_assert!(dist_hat_v(&back, &xm).unwrap().0 <= 1e-8 * xm.frobenius_norm().max(1.0));
    }

    #[test]
    fn omega_tolerates_tiny_noise(d in 1usize..5, seed in any::<u64>()) {
        let key = generate_key(d, 2 * d, seed).unwrap();
        let solver = PhaseRetriever::new(&key).unwrap();
        let x = normals(seed ^ 14, d);
        let noise = normals(seed ^ 15, 2 * d);
        let eta = 1e-10 / norm2(&noise);
        let y: Vec<f64> = alpha(&key, &x)
            .unwrap()
            .iter()
            .zip(&noise)
            .map(|(a, e)| (a + eta * e).abs())
            .collect();
        let rec = solver.omega(&y).unwrap();
        prop_assert!(dist_hat_h(&rec.x, &x).unwrap() <= key.tol().consistency_tol * norm2(&x).max(1.0));
    }

    #[test]
    fn certified_keys_attain_both_constants(d in 1usize..5, extra in 0usize..3, seed in any::<u64>()) {
        let key = generate_key(d, 2 * d - 1 + extra, seed).unwrap();
        let report = build_report(&key).unwrap();
        let ach = check_achievement(&key, &report).unwrap();
        prop_assert!(ach.lower_checked);
        prop_assert_eq!(build_report(&key).unwrap(), report);
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}
