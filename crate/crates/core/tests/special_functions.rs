mod common;

use std::f64::consts::{E, LN_2};

use common::e1_quadrature;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use swipt_core::secrecy::{eve_rate, secrecy_rate_subcarrier, RateContext};
use swipt_core::{exp_integral_e1, CsiMode};

#[test]
fn quadrature_reference_matches_tabulated_values() {
    // sanity check of the reference itself
    assert!((e1_quadrature(1.0) - 0.219_383_934_395_520_3).abs() < 1e-12);
    assert!((e1_quadrature(0.5) - 0.559_773_594_776_160_8).abs() < 1e-12);
}

#[test]
fn e1_at_one_and_ten() {
    let q1 = e1_quadrature(1.0);
    let q10 = e1_quadrature(10.0);
    assert!((exp_integral_e1(1.0).unwrap() - q1).abs() <= 1e-10);
    assert!((exp_integral_e1(1.0).unwrap() - 0.21938393439552).abs() <= 1e-10);
    assert!((exp_integral_e1(10.0).unwrap() - q10).abs() <= 1e-10);
    assert!((exp_integral_e1(10.0).unwrap() - 4.15697e-6).abs() <= 1e-10);
}

#[test]
fn e1_tracks_quadrature_over_log_grid() {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let x = 10f64.powf(-8.0 + 10.7 * i as f64 / 199.0);
        let err = (exp_integral_e1(x).unwrap() - e1_quadrature(x)).abs();
        if err > worst.1 {
            worst = (x, err);
        }
    }
    assert!(worst.1 <= 1e-10, "worst error {:e} at x = {}", worst.1, worst.0);
}

#[test]
fn e1_beyond_underflow_is_zero() {
    assert_eq!(exp_integral_e1(700.5).unwrap(), 0.0);
    assert!(exp_integral_e1(699.0).unwrap() >= 0.0);
}

#[test]
fn statistical_eve_rate_at_unit_mean_snr() {
    let r = eve_rate(CsiMode::Statistical, 1.0, 1.0, 1.0).unwrap();
    let reference = E * e1_quadrature(1.0) / LN_2;
    assert!((r - reference).abs() < 1e-9);
    assert!((r - 0.86034).abs() < 1e-5);
}

#[test]
fn statistical_eve_rate_is_ergodic_full_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for mean_snr in [0.05, 1.0, 20.0] {
        let draws = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let x: f64 = Exp1.sample(&mut rng);
            let r = eve_rate(CsiMode::Full, 1.0, 1.0, mean_snr * x).unwrap();
            s += r;
            s2 += r * r;
        }
        let mean = s / draws as f64;
        let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        let closed = eve_rate(CsiMode::Statistical, 1.0, 1.0, mean_snr).unwrap();
        assert!((closed - mean).abs() <= 3.0 * se, "snr {mean_snr}: {closed} vs {mean} +- {se}");
    }
}

#[test]
fn secrecy_rate_is_non_increasing_and_continuous_in_split() {
    let ctx = RateContext::new(2.0, 0.1, 0.8, 1.3).unwrap();
    let mut prev = secrecy_rate_subcarrier(&ctx, 0.0);
    for i in 1..=10_000 {
        let r = secrecy_rate_subcarrier(&ctx, i as f64 / 10_000.0);
        assert!(r <= prev);
        assert!(prev - r < 1e-2);
        prev = r;
    }
    assert_eq!(prev, 0.0);
}

#[test]
fn secrecy_rate_matches_definition() {
    for (p, s, h, re, rho) in [(1.0, 0.5, 1.5, 0.0, 0.0), (1.0, 1.0, 3.0, 1.0, 0.0), (4.0, 0.2, 0.3, 0.7, 0.4)] {
        let ctx = RateContext::new(p, s, h, re).unwrap();
        let reference = common::secrecy(p, s, h, re, rho);
        assert!((secrecy_rate_subcarrier(&ctx, rho) - reference).abs() < 1e-14);
    }
}
