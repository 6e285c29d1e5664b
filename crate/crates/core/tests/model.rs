mod common;

use proptest::prelude::*;
use swipt_core::channel::pathloss;
use swipt_core::problem::{check_feasibility, harvested_power_total, info_receiver_power, secrecy_rate_user};
use swipt_core::{
    generate, Assignment, ChannelRealization, CsiMode, GeometryParams, SolverConfig, SplitProfile, SystemParams,
};

fn pair(h: Vec<Vec<f64>>, power: f64, noise: f64) -> (SystemParams, ChannelRealization) {
    let (k, n) = (h.len(), h[0].len());
    let p = SystemParams::uniform(k, n, power * n as f64, noise, 0.4, 0.0, CsiMode::Full).unwrap();
    let ch = ChannelRealization::new(h, vec![0.0; n], vec![1.0; n], 0).unwrap();
    (p, ch)
}

#[test]
fn harvest_two_by_two_against_loop_sum() {
    let (p, ch) = pair(vec![vec![1.0, 2.0], vec![3.0, 4.0]], 0.5, 1.0);
    let rho = vec![0.5, 0.25];
    let e = harvested_power_total(&p, &ch, &SplitProfile::PerUser(rho.clone())).unwrap();
    assert!((e - 0.65).abs() < 1e-12);
    assert!((e - common::harvest_per_user(&p, &ch, &rho)).abs() < 1e-15);
}

#[test]
fn feasibility_with_exact_zero_slack() {
    // p h / noise = 3, p beta / noise = 1
    let p = SystemParams::uniform(1, 1, 1.0, 1.0, 0.4, 1.0, CsiMode::Full).unwrap();
    let ch = ChannelRealization::new(vec![vec![3.0]], vec![1.0], vec![1.0], 0).unwrap();
    let x = Assignment::from_owners(1, vec![Some(0)]).unwrap();
    let (ok, slack) =
        check_feasibility(&p, &ch, &x, &SplitProfile::PerUser(vec![0.0]), &SolverConfig::default()).unwrap();
    assert!(ok);
    assert!(slack[0].abs() < 1e-12);
}

#[test]
fn user_rate_adds_subcarrier_rates() {
    // rates 1.0 and 0.5 on two subcarriers
    let h1 = 1.0;
    let h2 = 2f64.powf(0.5) - 1.0;
    let (p, ch) = pair(vec![vec![h1, h2, 1.0]], 1.0, 1.0);
    let x = Assignment::from_owners(1, vec![Some(0), Some(0), None]).unwrap();
    let r = secrecy_rate_user(&p, &ch, &x, &SplitProfile::PerUser(vec![0.0]), 0).unwrap();
    assert!((r - 1.5).abs() < 1e-12);
}

#[test]
fn fading_has_unit_mean() {
    let p = SystemParams::uniform(1, 100_000, 1.0, 1e-6, 0.4, 0.0, CsiMode::Full).unwrap();
    let geom = GeometryParams::default();
    let ch = generate(&p, &geom, 11).unwrap();
    // recover the path loss from the fading-free mean row
    let eve_pl = ch.eve_mean_gains()[0];
    let fading: Vec<f64> = ch.eve_gains().iter().map(|b| b / eve_pl).collect();
    let n = fading.len() as f64;
    let mean = fading.iter().sum::<f64>() / n;
    let var = fading.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    assert!((mean - 1.0).abs() < 0.01);
    assert!((mean - 1.0).abs() < 3.0 * (var / n).sqrt());
}

#[test]
fn user_fading_has_unit_mean() {
    let p = SystemParams::uniform(3, 100_000, 1.0, 1e-6, 0.4, 0.0, CsiMode::Full).unwrap();
    let ch = generate(&p, &GeometryParams::default(), 5).unwrap();
    for k in 0..3 {
        // the path loss is unknown here, so compare the row mean with the
        // spread of a unit-mean exponential: std == mean
        let row = &ch.user_gains()[k];
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() / mean - 1.0).abs() < 0.02);
    }
}

#[test]
fn pathloss_is_decreasing() {
    let g = GeometryParams::default();
    assert!((pathloss(1.0, &g).unwrap() - 1e-3).abs() < 1e-18);
    assert!((pathloss(10.0, &g).unwrap() - 1e-6).abs() < 1e-20);
    let mut prev = f64::INFINITY;
    for i in 1..100 {
        let v = pathloss(0.25 * i as f64, &g).unwrap();
        assert!(v < prev);
        prev = v;
    }
    assert!(pathloss(0.0, &g).is_err());
}

#[test]
fn generation_is_deterministic_across_threads() {
    let p = SystemParams::uniform(4, 64, 1.0, 1e-6, 0.4, 0.0, CsiMode::Full).unwrap();
    let reference = generate(&p, &GeometryParams::default(), 42).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let p = p.clone();
            std::thread::spawn(move || generate(&p, &GeometryParams::default(), 42).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), reference);
    }
}

fn gains(k: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(1e-3f64..10.0, n), k)
}

proptest! {
    #[test]
    fn received_power_is_conserved(h in gains(3, 5), rho in proptest::collection::vec(0.0f64..=1.0, 3)) {
        let (p, ch) = pair(h.clone(), 0.7, 0.1);
        let s = SplitProfile::PerUser(rho);
        let e = harvested_power_total(&p, &ch, &s).unwrap();
        let info = info_receiver_power(&p, &ch, &s).unwrap();
        let total: f64 = h.iter().flatten().map(|g| 0.7 * g).sum();
        prop_assert!(((info + e / 0.4) - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn harvest_is_monotone_in_each_split(h in gains(2, 4), rho in proptest::collection::vec(0.0f64..=0.9, 2), k in 0usize..2, bump in 0.0f64..0.1) {
        let (p, ch) = pair(h, 1.0, 0.1);
        let before = harvested_power_total(&p, &ch, &SplitProfile::PerUser(rho.clone())).unwrap();
        let mut up = rho;
        up[k] += bump;
        let after = harvested_power_total(&p, &ch, &SplitProfile::PerUser(up)).unwrap();
        prop_assert!(after >= before);
    }

    #[test]
    fn slack_shrinks_as_split_grows(h in gains(2, 4), beta in proptest::collection::vec(0.0f64..2.0, 4), owners in proptest::collection::vec(0usize..3, 4), rho in 0.0f64..0.9, bump in 0.0f64..0.1) {
        let p = SystemParams::uniform(2, 4, 4.0, 0.1, 0.4, 1.0, CsiMode::Full).unwrap();
        let ch = ChannelRealization::new(h, beta, vec![1.0; 4], 0).unwrap();
        let owners = owners.into_iter().map(|o| (o < 2).then_some(o)).collect();
        let x = Assignment::from_owners(2, owners).unwrap();
        let cfg = SolverConfig::default();
        let (_, lo) = check_feasibility(&p, &ch, &x, &SplitProfile::PerUser(vec![rho; 2]), &cfg).unwrap();
        let (_, hi) = check_feasibility(&p, &ch, &x, &SplitProfile::PerUser(vec![rho + bump; 2]), &cfg).unwrap();
        for k in 0..2 {
            prop_assert!(hi[k] <= lo[k]);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(seed in any::<u64>(), k in 1usize..4, n in 1usize..16) {
        let p = SystemParams::uniform(k, n, 1.0, 1e-6, 0.4, 0.0, CsiMode::Full).unwrap();
        let ch = generate(&p, &GeometryParams::default(), seed).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let back = ChannelRealization::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, ch);
    }
}
