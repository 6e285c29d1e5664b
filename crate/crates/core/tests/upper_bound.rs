mod common;

use common::{channels, default_params, eve_rates, golden_max, secrecy};
use proptest::prelude::*;
use swipt_core::{
    assign_subcarriers_ub, brute_force_pub, optimal_split_ub, solve_fps, solve_iterative, solve_stepwise, solve_ub,
    Assignment, ChannelRealization, CsiMode, SolverConfig, SplitProfile, SystemParams,
};

/// Per-subcarrier Lagrangian of owner `k`: own harvest plus weighted rate.
fn owner_lagrangian(p: &SystemParams, ch: &ChannelRealization, eve: &[f64], k: usize, n: usize, lambda: f64, rho: f64) -> f64 {
    let pw = p.per_subcarrier_power();
    let h = ch.user_gain(k, n);
    p.conversion_efficiency() * pw * h * rho + lambda * secrecy(pw, p.noise_power(), h, eve[n], rho)
}

/// Maximizer of the owner Lagrangian: golden section on the region where
/// the rate is positive (concave there), compared with harvesting all.
fn reference_split(p: &SystemParams, ch: &ChannelRealization, k: usize, n: usize, lambda: f64) -> (f64, f64) {
    let eve = eve_rates(p, ch);
    let f = |rho: f64| owner_lagrangian(p, ch, &eve, k, n, lambda, rho);
    let snr = p.per_subcarrier_power() * ch.user_gain(k, n) / p.noise_power();
    // rate hits zero where 1 + (1 - rho) snr = 2^eve
    let edge = (1.0 - (2f64.powf(eve[n]) - 1.0) / snr).clamp(0.0, 1.0);
    let inner = golden_max(f, 0.0, edge);
    if f(inner) > f(1.0) {
        (inner, f(inner))
    } else {
        (1.0, f(1.0))
    }
}

#[test]
fn single_pair_split_matches_numeric_maximizer() {
    let p = SystemParams::uniform(1, 1, 1.0, 0.1, 0.4, 1.0, CsiMode::Full).unwrap();
    let ch = ChannelRealization::new(vec![vec![1.0]], vec![0.0], vec![1.0], 0).unwrap();
    let rho = optimal_split_ub(0, 0, 0.2, &ch, &p).unwrap();
    let (reference, _) = reference_split(&p, &ch, 0, 0, 0.2);
    assert!((rho - reference).abs() < 1e-6, "{rho} vs {reference}");
    assert!((rho - 0.378_66).abs() < 1e-4);
}

#[test]
fn assignment_matches_exhaustive_argmax() {
    let p = SystemParams::uniform(2, 3, 3.0, 0.5, 0.4, 0.5, CsiMode::Full).unwrap();
    let ch = ChannelRealization::new(vec![vec![1.0, 2.5, 0.4], vec![0.6, 1.2, 3.0]], vec![0.3, 0.2, 0.5], vec![1.0; 3], 0)
        .unwrap();
    let eve = eve_rates(&p, &ch);
    let pw = p.per_subcarrier_power();
    for lambda in [[0.0, 0.0], [1.0, 0.2], [0.3, 0.9], [2.0, 2.0], [5.0, 0.01]] {
        let splits: Vec<Vec<f64>> = (0..2)
            .map(|k| (0..3).map(|n| optimal_split_ub(k, n, lambda[k], &ch, &p).unwrap()).collect())
            .collect();
        let got = assign_subcarriers_ub(&lambda, &SplitProfile::PerSubcarrier(splits.clone()), &ch, &p).unwrap();
        // enumerate every full assignment; non-owners harvest everything
        let mut best: Option<(Vec<usize>, f64)> = None;
        for code in 0..8usize {
            let owners: Vec<usize> = (0..3).map(|n| (code >> (2 - n)) & 1).collect();
            let mut value = 0.0;
            for (n, &o) in owners.iter().enumerate() {
                for k in 0..2 {
                    let rho = if k == o { splits[k][n] } else { 1.0 };
                    value += p.conversion_efficiency() * pw * ch.user_gain(k, n) * rho;
                }
                value += lambda[o] * secrecy(pw, p.noise_power(), ch.user_gain(o, n), eve[n], splits[o][n]);
            }
            if best.as_ref().is_none_or(|b| value > b.1 + 1e-15) {
                best = Some((owners, value));
            }
        }
        let want: Vec<Option<usize>> = best.unwrap().0.into_iter().map(Some).collect();
        assert_eq!(got.owners(), want.as_slice(), "lambda {lambda:?}");
    }
}

#[test]
fn zero_multipliers_tie_to_first_user() {
    let p = default_params(3, 8, 0.5);
    let ch = channels(&p, 3);
    let x = assign_subcarriers_ub(&[0.0; 3], &SplitProfile::PerSubcarrier(vec![vec![1.0; 8]; 3]), &ch, &p).unwrap();
    assert!(x.owners().iter().all(|o| *o == Some(0)));
}

#[test]
fn solution_close_to_relaxation_optimum() {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for seed in 0..40 {
        let p = default_params(2, 4, 1.5);
        let ch = channels(&p, seed);
        let Ok(opt) = brute_force_pub(&p, &ch, &cfg) else { continue };
        let ub = solve_ub(&p, &ch, &cfg).unwrap();
        assert!(ub.feasible, "seed {seed}");
        assert!(
            (ub.harvested_total - opt.harvested_total).abs() <= 1e-3 * opt.harvested_total,
            "seed {seed}: {} vs {}",
            ub.harvested_total,
            opt.harvested_total
        );
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn splits_obey_two_case_rule() {
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let p = default_params(3, 16, 0.5);
        let ch = channels(&p, seed);
        let eve = eve_rates(&p, &ch);
        let Ok(sol) = solve_ub(&p, &ch, &cfg) else { continue };
        for k in 0..3 {
            for n in 0..16 {
                let rho = sol.splits.rho(k, n);
                if rho < 1.0 {
                    assert_eq!(sol.assignment.owner(n), Some(k));
                    let snr = p.per_subcarrier_power() * ch.user_gain(k, n) / p.noise_power();
                    assert!((1.0 + (1.0 - rho) * snr).log2() >= eve[n] - 1e-12);
                }
            }
        }
    }
}

#[test]
fn dominates_practical_solvers_on_small_instances() {
    let cfg = SolverConfig::default();
    for seed in 0..30 {
        let p = default_params(2, 4, 1.0);
        let ch = channels(&p, seed);
        let Ok(ub) = solve_ub(&p, &ch, &cfg) else { continue };
        let bound = ub.harvested_total * (1.0 + 1e-6);
        for s in [solve_iterative(&p, &ch, &cfg), solve_stepwise(&p, &ch, &cfg), solve_fps(&p, &ch, &cfg)].into_iter().flatten() {
            if s.feasible {
                assert!(ub.feasible);
                assert!(s.harvested_total <= bound, "seed {seed}: {} > {}", s.harvested_total, bound);
            }
        }
    }
}

#[test]
fn zero_targets_harvest_everything() {
    let p = default_params(3, 6, 0.0);
    let ch = channels(&p, 1);
    let sol = solve_ub(&p, &ch, &SolverConfig::default()).unwrap();
    let all = common::harvest_per_user(&p, &ch, &[1.0; 3]);
    assert!(sol.feasible);
    assert!((sol.harvested_total - all).abs() <= 1e-12 * all);
}

#[test]
fn unreachable_target_is_rejected() {
    let p = default_params(2, 4, 1e3);
    let ch = channels(&p, 1);
    let err = solve_ub(&p, &ch, &SolverConfig::default()).unwrap_err();
    assert!(err.is_infeasible());
}

#[test]
fn iterates_keep_exclusive_assignment() {
    let p = default_params(3, 12, 0.5);
    let ch = channels(&p, 9);
    let sol = solve_ub(&p, &ch, &SolverConfig::default()).unwrap();
    let m = sol.assignment.to_matrix();
    for n in 0..12 {
        assert!(m.iter().map(|row| row[n] as usize).sum::<usize>() <= 1);
    }
    assert!(Assignment::from_matrix(&m).is_ok());
}

proptest! {
    #[test]
    fn split_maximizes_owner_lagrangian(h in 1e-2f64..10.0, other in 1e-2f64..10.0, beta in 0.0f64..3.0, lambda in 0.0f64..5.0) {
        let p = SystemParams::uniform(2, 1, 1.0, 0.1, 0.4, 1.0, CsiMode::Full).unwrap();
        let ch = ChannelRealization::new(vec![vec![h], vec![other]], vec![beta], vec![1.0], 0).unwrap();
        let eve = eve_rates(&p, &ch);
        let rho = optimal_split_ub(0, 0, lambda, &ch, &p).unwrap();
        let (_, best) = reference_split(&p, &ch, 0, 0, lambda);
        let got = owner_lagrangian(&p, &ch, &eve, 0, 0, lambda, rho);
        prop_assert!(got >= best - 1e-9 * best.abs().max(1e-12), "rho {rho}: {got} < {best}");
    }
}
