mod common;

use graph2ts::dataset::{synth_generate, SynthKind};
use graph2ts::metrics::{
    acf, evaluate, ks_pooled, mean_acf, medoid_index, mdr, periodogram, proto_err, coverage, tail_stats,
    wasserstein1_pooled, EvalOptions, TailStats,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn lag_one(values: &[Vec<f64>]) -> f64 {
    // pooled lag-1 correlation within windows
    let pooled: Vec<f64> = values.iter().flatten().copied().collect();
    let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let var = pooled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / pooled.len() as f64;
    let mut cov = 0.0;
    let mut n = 0usize;
    for w in values {
        for p in w.windows(2) {
            cov += (p[0] - mean) * (p[1] - mean);
            n += 1;
        }
    }
    cov / n as f64 / var
}

#[test]
fn ar1_has_its_coefficient_as_lag_one_correlation() {
    let w = synth_generate(SynthKind::Ar1, 10_000, 32, 0).unwrap();
    let rows: Vec<Vec<f64>> = w.iter().map(|x| x.values().to_vec()).collect();
    let r = lag_one(&rows);
    assert!((0.85..=0.95).contains(&r), "lag-1 correlation {r}");
}

#[test]
fn heavy_tail_differences_are_leptokurtic() {
    let w = synth_generate(SynthKind::HeavyTail, 2000, 32, 1).unwrap();
    let (_, dx) = tail_stats(&w).unwrap();
    assert!(dx.excess_kurtosis > 2.0, "{dx:?}");
}

#[test]
fn sine_mix_is_seeded() {
    let a = synth_generate(SynthKind::SineMix, 1, 32, 9).unwrap();
    assert_eq!(a, synth_generate(SynthKind::SineMix, 1, 32, 9).unwrap());
    assert_ne!(a, synth_generate(SynthKind::SineMix, 1, 32, 10).unwrap());
}

#[test]
fn kurtosis_of_reference_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 1_000_000;
    let normal: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let uniform: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let kn = TailStats::from_values(&normal).unwrap().excess_kurtosis;
    let ku = TailStats::from_values(&uniform).unwrap().excess_kurtosis;
    assert!(kn.abs() < 0.05, "normal {kn}");
    assert!((ku + 1.2).abs() < 0.05, "uniform {ku}");
}

#[test]
fn white_noise_has_flat_acf() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let set = common::random_set(&mut rng, 2000, 32);
    let r = mean_acf(&set, 16).unwrap();
    assert!(r.iter().all(|v| v.abs() <= 0.05), "{r:?}");
}

#[test]
fn acf_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
        let r = acf(&x, 10).unwrap();
        let m = x.iter().sum::<f64>() / 20.0;
        let c0: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
        for (k, rk) in r.iter().enumerate() {
            let lag = k + 1;
            let ck: f64 = (0..20 - lag).map(|t| (x[t] - m) * (x[t + lag] - m)).sum();
            assert!((rk - ck / c0).abs() < 1e-12);
        }
    }
}

#[test]
fn periodogram_preserves_windowed_power() {
    // Parseval: one-sided bins sum to (Σ (w x)²)·n / Σ w²
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [16usize, 17, 32] {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let w = graph2ts::metrics::hann(n);
        let power: f64 = w.iter().map(|v| v * v).sum();
        let energy: f64 = x.iter().zip(&w).map(|(a, b)| (a * b) * (a * b)).sum();
        let total: f64 = periodogram(&x).iter().sum();
        let expected = energy * n as f64 / power;
        assert!((total - expected).abs() < 1e-9 * expected, "n={n}: {total} vs {expected}");
    }
}

#[test]
fn metric_functions_match_oracles_on_larger_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let real = common::random_set(&mut rng, 25, 5);
        let synth = common::random_set(&mut rng, 17, 5);
        assert!((wasserstein1_pooled(&real, &synth).unwrap() - common::w1_by_counting(&real, &synth)).abs() < 1e-12);
        assert_eq!(ks_pooled(&real, &synth).unwrap(), common::ks_by_counting(&real, &synth));
        let (a, m) = proto_err(&real, &synth).unwrap();
        let (ra, rm) = common::proto_err_ref(&real, &synth);
        assert!((a - ra).abs() < 1e-12 && (m - rm).abs() < 1e-12);
        assert_eq!(medoid_index(&real).unwrap(), common::medoid_ref(&real));
        assert!((mdr(&real, &synth).unwrap() - common::mdr_ref(&real, &synth)).abs() < 1e-12);
        for q in [0.1, 0.5, 0.9] {
            assert_eq!(coverage(&real, &synth, q).unwrap(), common::coverage_ref(&real, &synth, q));
        }
    }
}

#[test]
fn evaluate_is_seeded_and_symmetric_in_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let real = common::random_set(&mut rng, 40, 8);
    let synth = common::random_set(&mut rng, 90, 8);
    let opts = EvalOptions::default();
    let a = evaluate(&real, &synth, &opts).unwrap();
    assert_eq!(a, evaluate(&real, &synth, &opts).unwrap());
    assert_eq!(a.n, 40);
    let other = evaluate(&real, &synth, &EvalOptions { seed: 1, ..opts }).unwrap();
    assert_ne!(a.wasserstein, other.wasserstein);
}
