use eegsynth::stats::{ks_two_sample, permanova, shapiro_wilk, spearman};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

mod common;

use common::{hand_spearman, normal_rows, shapiro_reference};

#[test]
fn spearman_matches_hand_ranks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(3..12);
        // small integer support forces ties
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        let expected = hand_spearman(&x, &y);
        if !expected.is_finite() {
            assert!(spearman(&x, &y).is_err());
            continue;
        }
        assert!((spearman(&x, &y).unwrap() - expected).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn shapiro_matches_reference() {
    let r = shapiro_reference();
    let t = shapiro_wilk(&r.one_to_ten.x).unwrap();
    assert!((t.statistic - r.one_to_ten.w).abs() < 1e-4);
    for (i, case) in r.cases.iter().enumerate() {
        let t = shapiro_wilk(&case.x).unwrap();
        assert!(
            (t.statistic - case.w).abs() < 1e-4,
            "case {i} (n={}): W {} vs {}",
            case.x.len(),
            t.statistic,
            case.w
        );
        assert!(
            (t.p_value - case.p).abs() < 1e-3,
            "case {i} (n={}): p {} vs {}",
            case.x.len(),
            t.p_value,
            case.p
        );
    }
}

#[test]
fn shapiro_calibration() {
    let mut normal_pass = 0;
    let mut uniform_reject = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        normal_pass += usize::from(shapiro_wilk(&x).unwrap().p_value > 0.05);
        let u: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        uniform_reject += usize::from(shapiro_wilk(&u).unwrap().p_value < 0.01);
    }
    assert!(normal_pass >= 90, "{normal_pass}");
    assert!(uniform_reject >= 90, "{uniform_reject}");
}

#[test]
fn permanova_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = normal_rows(&mut rng, 50, 5, 0.0);
    let b = normal_rows(&mut rng, 50, 5, 10.0);
    let r = permanova(&a, &b, 999, 5).unwrap();
    assert_eq!(r.p_value, 0.001);
}

#[test]
fn permanova_null_calibration() {
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let a = normal_rows(&mut rng, 30, 5, 0.0);
        let b = normal_rows(&mut rng, 30, 5, 0.0);
        hits += usize::from(permanova(&a, &b, 199, seed).unwrap().p_value > 0.05);
    }
    assert!(hits >= 90, "{hits}");
}

#[test]
fn permanova_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = normal_rows(&mut rng, 20, 5, 0.0);
    let b = normal_rows(&mut rng, 20, 5, 0.3);
    let r1 = permanova(&a, &b, 499, 9).unwrap();
    let r2 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| permanova(&a, &b, 499, 9).unwrap());
    assert_eq!(r1, r2);
    assert!(r1.p_value >= 1.0 / 500.0);
}

#[test]
fn ks_separation_and_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y: Vec<f64> = x.iter().map(|v| v + 5.0).collect();
    let sep: Vec<f64> = (0..200)
        .map(|_| 5.0 + Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    assert!(ks_two_sample(&x, &sep).unwrap().p_value < 1e-6);
    assert!(ks_two_sample(&x, &y).unwrap().p_value < 1e-6);
    let mut pass = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let a: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        pass += usize::from(ks_two_sample(&a, &b).unwrap().p_value > 0.05);
    }
    assert!(pass >= 90, "{pass}");
}
