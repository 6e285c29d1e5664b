//! Comparison schemes: a fixed half split with dual-driven assignment, and
//! a random assignment followed by per-user split bisection.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelRealization;
use crate::dual::{converged, DualState, StepSchedule};
use crate::error::{Error, Result};
use crate::iterative::{assign, scores};
use crate::params::{SolverConfig, SystemParams};
use crate::problem::{Assignment, Instance, Solution, SplitProfile, TraceRow};
use crate::repair::repair_assignment;
use crate::stepwise::splits_for_assignment;

/// Split ratio used by [`solve_fps`].
pub const FIXED_SPLIT: f64 = 0.5;

/// Every user splits at [`FIXED_SPLIT`]; the multipliers only steer the
/// assignment, which is repaired towards feasibility at each iterate. The
/// objective does not depend on the assignment here, so
/// the loop stops at the first feasible iterate.
pub fn solve_fps(params: &SystemParams, channels: &ChannelRealization, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    let all: Vec<usize> = (0..inst.num_subcarriers).collect();
    let short: Vec<usize> = (0..inst.num_users)
        .filter(|&k| all.iter().map(|&n| inst.secrecy(k, n, FIXED_SPLIT)).sum::<f64>() < inst.targets[k])
        .collect();
    if !short.is_empty() {
        return Err(Error::Infeasible {
            reason: format!("fixed split cannot reach the secrecy target for users {short:?}"),
            users: short,
        });
    }

    let rho = vec![FIXED_SPLIT; inst.num_users];
    let cap: Vec<Vec<f64>> = (0..inst.num_users)
        .map(|k| (0..inst.num_subcarriers).map(|n| inst.secrecy(k, n, FIXED_SPLIT)).collect())
        .collect();
    let mut state = DualState::new(inst.num_users, StepSchedule::Diminishing(config.dual_step))
        .with_step_scale(inst.dual_step_scale());
    let mut last;
    loop {
        let mu = state.multipliers().to_vec();
        let raw = assign(&inst, &mu, &rho);
        let x = repair_assignment(&inst, &raw, &scores(&inst, &mu, &rho), &cap).unwrap_or(raw);
        let sol = inst.solution(x, SplitProfile::PerUser(rho.clone()), config.tol_feas, mu.clone());
        let violations: Vec<f64> = inst
            .targets
            .iter()
            .zip(&sol.per_user_secrecy_rate)
            .map(|(c, r)| c - r)
            .collect();
        state.offer(sol.clone());
        state.record(TraceRow {
            iteration: state.iteration(),
            dual_value: crate::upper_bound::dual_bound(&inst, &mu),
            lagrangian: sol.harvested_total
                + mu.iter().zip(&violations).map(|(m, v)| -m * v).sum::<f64>(),
            best_primal: None,
            max_violation: violations.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            bcd_path: Vec::new(),
        });
        let feasible = sol.feasible;
        last = sol;
        if feasible {
            break;
        }
        state.subgradient_step(&violations);
        if converged(&state, &mu, config) {
            break;
        }
    }
    let (multipliers, best, trace, best_dual) = state.into_parts();
    let mut sol = best.unwrap_or(last);
    sol.dual_values = multipliers;
    sol.dual_bound = best_dual;
    sol.trace = trace;
    Ok(sol)
}

/// Draws an owner for every subcarrier uniformly from the users. Uses a
/// separate ChaCha stream so the draws do not repeat the channel generator's
/// when both share a seed.
pub fn random_assignment(num_users: usize, num_subcarriers: usize, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut x = Assignment::empty(num_users, num_subcarriers);
    for n in 0..num_subcarriers {
        x.set(n, Some(rng.gen_range(0..num_users)));
    }
    x
}

/// Random assignment, then the largest common split per user.
pub fn solve_fsa(
    params: &SystemParams,
    channels: &ChannelRealization,
    seed: u64,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    let x = random_assignment(inst.num_users, inst.num_subcarriers, seed);
    let rho = splits_for_assignment(&inst, &x, config)?;
    Ok(inst.solution(x, SplitProfile::PerUser(rho), config.tol_feas, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CsiMode;

    fn small(c: f64) -> (SystemParams, ChannelRealization) {
        let p = SystemParams::uniform(2, 4, 4.0, 0.2, 0.4, c, CsiMode::Full).unwrap();
        let h = vec![vec![1.0, 2.0, 0.7, 1.4], vec![0.9, 0.4, 2.2, 1.1]];
        let ch = ChannelRealization::new(h, vec![0.1, 0.3, 0.2, 0.05], vec![1.0; 4], 0).unwrap();
        (p, ch)
    }

    #[test]
    fn fps_zero_target_harvests_half() {
        let (p, ch) = small(0.0);
        let sol = solve_fps(&p, &ch, &SolverConfig::default()).unwrap();
        let total: f64 = ch.user_gains().iter().flatten().map(|g| 0.4 * g).sum();
        assert!(sol.feasible);
        assert!((sol.harvested_total - 0.5 * total).abs() < 1e-12);
        assert_eq!(sol.splits, SplitProfile::PerUser(vec![0.5, 0.5]));
    }

    #[test]
    fn fps_feasible_for_moderate_target() {
        let (p, ch) = small(1.0);
        let sol = solve_fps(&p, &ch, &SolverConfig::default()).unwrap();
        assert!(sol.feasible, "{:?}", sol.per_user_secrecy_rate);
    }

    #[test]
    fn fsa_assigns_everything_deterministically() {
        let x = random_assignment(3, 50, 9);
        assert!((0..50).all(|n| x.column_sum(n) == 1));
        assert_eq!(x, random_assignment(3, 50, 9));
        assert_ne!(x, random_assignment(3, 50, 10));
    }

    #[test]
    fn fsa_zero_target_splits_one() {
        let (p, ch) = small(0.0);
        let sol = solve_fsa(&p, &ch, 3, &SolverConfig::default()).unwrap();
        assert_eq!(sol.splits, SplitProfile::PerUser(vec![1.0, 1.0]));
    }
}
