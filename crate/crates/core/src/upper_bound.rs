//! Dual solver for the relaxation with one split ratio per user and
//! subcarrier. Its optimum bounds the practical problem from above, and its
//! assignment seeds the step-wise solver.
//!
//! For fixed multipliers the Lagrangian separates over subcarriers. On
//! subcarrier `n`, giving it to user `k` with split `rho` is worth
//!
//! ```text
//! zeta p sum_{j != k} h_j + zeta p rho h_k + lambda_k [log2(1 + (1-rho) snr_k) - r_e]+
//! ```
//!
//! (users that do not own `n` harvest all of it). The best `rho` is the
//! stationary point of the smooth branch, kept only when it beats harvesting
//! everything; the owner is the user with the largest resulting value.

use std::collections::{HashMap, HashSet};
use std::f64::consts::LN_2;

use crate::channel::ChannelRealization;
use crate::dual::{converged, DualState, StepSchedule};
use crate::error::Result;
use crate::params::{SolverConfig, SystemParams};
use crate::problem::{Assignment, Instance, Solution, SplitProfile, TraceRow};
use crate::repair::{capacity_assignment, repair_assignment};
use crate::secrecy::clamp_threshold;
use crate::split::{max_feasible_split, optimal_user_splits, SplitCache, SplitStop, UserSplit, SOLVER_EXACT_LIMIT};

/// Optimal split of user `k` on subcarrier `n` for multiplier `lambda_k`,
/// assuming `k` owns `n`.
pub fn optimal_split_ub(
    k: usize,
    n: usize,
    lambda_k: f64,
    channels: &ChannelRealization,
    params: &SystemParams,
) -> Result<f64> {
    let inst = Instance::new(params, channels)?;
    Ok(split_for(&inst, k, n, lambda_k))
}

pub(crate) fn split_for(inst: &Instance, k: usize, n: usize, lambda: f64) -> f64 {
    if lambda.is_nan() || lambda <= 0.0 {
        return 1.0;
    }
    let w = inst.harvest[k][n];
    let snr = inst.snr[k][n];
    let eve = inst.eve[n];
    let threshold = clamp_threshold(snr, eve);
    if threshold <= 0.0 {
        return 1.0;
    }
    let stationary = (1.0 - lambda / (LN_2 * w) + 1.0 / snr).clamp(0.0, 1.0);
    if stationary > threshold {
        // r(rho) < r_e at the stationary point: secrecy branch is empty
        return 1.0;
    }
    let value = w * stationary + lambda * inst.secrecy(k, n, stationary);
    if value > w {
        stationary
    } else {
        1.0
    }
}

/// Gain of letting `k` own `n` at split `rho` over pure harvesting.
#[inline]
fn ownership_gain(inst: &Instance, k: usize, n: usize, lambda: f64, rho: f64) -> f64 {
    lambda * inst.secrecy(k, n, rho) - inst.harvest[k][n] * (1.0 - rho)
}

/// Per-subcarrier owner: the user with the largest subcarrier Lagrangian
/// given `splits` (ties to the lowest index). Every subcarrier is assigned.
pub fn assign_subcarriers_ub(
    lambda: &[f64],
    splits: &SplitProfile,
    channels: &ChannelRealization,
    params: &SystemParams,
) -> Result<Assignment> {
    let inst = Instance::new(params, channels)?;
    splits.validate(inst.num_users, inst.num_subcarriers)?;
    Ok(assign_with(&inst, lambda, |k, n| splits.rho(k, n)))
}

fn assign_with(inst: &Instance, lambda: &[f64], rho: impl Fn(usize, usize) -> f64) -> Assignment {
    let mut x = Assignment::empty(inst.num_users, inst.num_subcarriers);
    for n in 0..inst.num_subcarriers {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, &lam) in lambda.iter().enumerate() {
            let g = ownership_gain(inst, k, n, lam, rho(k, n));
            if g > best.1 {
                best = (k, g);
            }
        }
        x.set(n, Some(best.0));
    }
    x
}

/// One evaluation of the dual function.
pub(crate) struct DualPoint {
    pub assignment: Assignment,
    pub splits: Vec<Vec<f64>>,
    /// `ownership_gain` of every pair at its own best split.
    pub gains: Vec<Vec<f64>>,
    pub rates: Vec<f64>,
    pub value: f64,
}

/// Exact dual function of the relaxation at `lambda`.
pub(crate) fn evaluate_dual(inst: &Instance, lambda: &[f64]) -> DualPoint {
    let (k_users, n_sc) = (inst.num_users, inst.num_subcarriers);
    let mut splits = vec![vec![1.0; n_sc]; k_users];
    for (k, row) in splits.iter_mut().enumerate() {
        for (n, r) in row.iter_mut().enumerate() {
            *r = split_for(inst, k, n, lambda[k]);
        }
    }
    let gains: Vec<Vec<f64>> = (0..k_users)
        .map(|k| (0..n_sc).map(|n| ownership_gain(inst, k, n, lambda[k], splits[k][n])).collect())
        .collect();
    let assignment = assign_with(inst, lambda, |k, n| splits[k][n]);
    let mut rates = vec![0.0; k_users];
    let mut value = 0.0;
    for n in 0..n_sc {
        let owner = assignment.owner(n).expect("every subcarrier is assigned");
        let col: f64 = (0..k_users).map(|j| inst.harvest[j][n]).sum();
        let rho = splits[owner][n];
        rates[owner] += inst.secrecy(owner, n, rho);
        value += col + ownership_gain(inst, owner, n, lambda[owner], rho);
    }
    value -= lambda.iter().zip(&inst.targets).map(|(l, c)| l * c).sum::<f64>();
    // non-owners harvest everything
    for (n, owner) in assignment.owners().iter().enumerate() {
        for (k, row) in splits.iter_mut().enumerate() {
            if *owner != Some(k) {
                row[n] = 1.0;
            }
        }
    }
    DualPoint {
        assignment,
        splits,
        gains,
        rates,
        value,
    }
}

/// Upper bound on any feasible objective of either problem at `lambda`.
pub(crate) fn dual_bound(inst: &Instance, lambda: &[f64]) -> f64 {
    evaluate_dual(inst, lambda).value
}

/// Best per-subcarrier splits for a fixed assignment, or `None` if some
/// user cannot reach its target on its subcarriers.
fn best_splits_cached(
    inst: &Instance,
    assignment: &Assignment,
    exact_limit: usize,
    cache: &mut SplitCache<UserSplit>,
) -> Option<Vec<Vec<f64>>> {
    let mut splits = vec![vec![1.0; inst.num_subcarriers]; inst.num_users];
    for (k, row) in splits.iter_mut().enumerate() {
        let sc = assignment.subcarriers_of(k);
        let sol = cache
            .entry((k, sc))
            .or_insert_with_key(|(_, sc)| optimal_user_splits(inst, k, sc, inst.targets[k], exact_limit))
            .as_ref()?;
        for (&n, &r) in assignment.subcarriers_of(k).iter().zip(&sol.rho) {
            row[n] = r;
        }
    }
    Some(splits)
}

/// Reassigns every subcarrier that carries no rate (unowned, or owned at
/// split 1). Its split stays 1, so the relaxation's objective and rates do
/// not change, but a common split derived from the assignment gains
/// capacity. Subcarriers are placed
/// strongest first, each with the user whose largest feasible common split
/// rises the most in harvested watts; ties go to the larger
/// `lambda_k r_{k,n}(0)`, then the lower index.
fn give_away_idle(inst: &Instance, x: &mut Assignment, splits: &SplitProfile, lambda: &[f64], config: &SolverConfig) {
    for n in 0..inst.num_subcarriers {
        if x.owner(n).is_some_and(|k| splits.rho(k, n) >= 1.0) {
            x.set(n, None);
        }
    }
    let stop = SplitStop::Relative {
        tol: config.bisect_tol,
        max_iters: config.max_bisect_iters,
    };
    let value = |k: usize, sc: &[usize]| {
        max_feasible_split(inst, k, sc, inst.targets[k], stop).map_or(0.0, |r| r * inst.harvest_user[k])
    };
    let mut owned: Vec<Vec<usize>> = (0..inst.num_users).map(|k| x.subcarriers_of(k)).collect();
    let mut current: Vec<f64> = (0..inst.num_users).map(|k| value(k, &owned[k])).collect();
    let mut idle: Vec<usize> = (0..inst.num_subcarriers).filter(|&n| x.owner(n).is_none()).collect();
    let strength = |n: usize| (0..inst.num_users).map(|k| inst.rate0[k][n]).fold(0.0, f64::max);
    idle.sort_by(|&a, &b| strength(b).total_cmp(&strength(a)).then(a.cmp(&b)));
    for n in idle {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for k in 0..inst.num_users {
            let mut sc = owned[k].clone();
            sc.push(n);
            let v = value(k, &sc);
            let gain = v - current[k];
            let weight = lambda[k] * inst.rate0[k][n];
            let better = best.is_none_or(|(_, g, w, _)| gain > g || (gain == g && weight > w));
            if better {
                best = Some((k, gain, weight, v));
            }
        }
        if let Some((k, _, _, v)) = best {
            owned[k].push(n);
            current[k] = v;
            x.set(n, Some(k));
        }
    }
}

/// Exact subcarrier moves tried per pass before giving up.
const MOVES_PER_PASS: usize = 32;

/// Harvest of user `k` when it owns `subcarriers` with optimal splits and
/// harvests everything elsewhere.
fn user_objective(
    inst: &Instance,
    k: usize,
    subcarriers: Vec<usize>,
    cache: &mut SplitCache<UserSplit>,
) -> Option<f64> {
    let owned: f64 = subcarriers.iter().map(|&n| inst.harvest[k][n]).sum();
    let sol = cache
        .entry((k, subcarriers))
        .or_insert_with_key(|(_, sc)| optimal_user_splits(inst, k, sc, inst.targets[k], SOLVER_EXACT_LIMIT))
        .as_ref()?;
    Some(inst.harvest_user[k] - owned + sol.harvested)
}

/// Moves single subcarriers between users while that raises the harvested
/// power, trying moves in order of their ownership gain at `lambda`.
fn local_moves(
    inst: &Instance,
    start: Solution,
    lambda: &[f64],
    config: &SolverConfig,
    cache: &mut SplitCache<UserSplit>,
) -> Solution {
    let (k_users, n_sc) = (inst.num_users, inst.num_subcarriers);
    let gains = evaluate_dual(inst, lambda).gains;
    let mut x = start.assignment.clone();
    let mut value: Vec<f64> = Vec::with_capacity(k_users);
    for k in 0..k_users {
        match user_objective(inst, k, x.subcarriers_of(k), cache) {
            Some(v) => value.push(v),
            None => return start,
        }
    }
    let mut moved = false;
    for _ in 0..n_sc * k_users {
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for n in 0..n_sc {
            let owner = x.owner(n);
            let lose = owner.map_or(0.0, |j| gains[j][n]);
            for k in 0..k_users {
                if Some(k) != owner && inst.rate0[k][n] > 0.0 {
                    cands.push((gains[k][n] - lose, n, k));
                }
            }
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut applied = false;
        for &(_, n, k) in cands.iter().take(MOVES_PER_PASS) {
            let owner = x.owner(n);
            let mut y = x.clone();
            y.set(n, Some(k));
            let Some(vk) = user_objective(inst, k, y.subcarriers_of(k), cache) else {
                continue;
            };
            let vj = match owner {
                Some(j) => match user_objective(inst, j, y.subcarriers_of(j), cache) {
                    Some(v) => Some((j, v)),
                    None => continue,
                },
                None => None,
            };
            let before = value[k] + owner.map_or(0.0, |j| value[j]);
            let after = vk + vj.map_or(0.0, |(_, v)| v);
            if after > before * (1.0 + config.bcd_tol) {
                x = y;
                value[k] = vk;
                if let Some((j, v)) = vj {
                    value[j] = v;
                }
                applied = true;
                moved = true;
                break;
            }
        }
        if !applied {
            break;
        }
    }
    if !moved {
        return start;
    }
    match best_splits_cached(inst, &x, SOLVER_EXACT_LIMIT, cache) {
        Some(splits) => {
            let cand = inst.solution(x, SplitProfile::PerSubcarrier(splits), config.tol_feas, start.dual_values.clone());
            if cand.feasible && cand.harvested_total >= start.harvested_total {
                cand
            } else {
                start
            }
        }
        None => start,
    }
}

/// Subgradient dual ascent on the relaxation.
///
/// Each iterate's assignment is repaired so every user can reach its target,
/// re-split optimally and offered as a primal candidate; the best feasible candidate is returned. When none is
/// found the last iterate is returned with `feasible = false`.
pub fn solve_ub(params: &SystemParams, channels: &ChannelRealization, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    inst.precheck()?;
    let k_users = inst.num_users;
    let mut state = DualState::new(k_users, StepSchedule::Diminishing(config.dual_step))
        .with_step_scale(inst.dual_step_scale());
    let mut polished_seen = HashSet::new();
    let mut cache = HashMap::new();
    let mut last_raw: Option<Solution>;
    if let Some(x) = capacity_assignment(&inst) {
        if let Some(splits) = best_splits_cached(&inst, &x, SOLVER_EXACT_LIMIT, &mut cache) {
            let seed = SplitProfile::PerSubcarrier(splits);
            state.offer(inst.solution(x.clone(), seed, config.tol_feas, vec![0.0; k_users]));
        }
        polished_seen.insert(x);
    }

    loop {
        let prev = state.multipliers().to_vec();
        let point = evaluate_dual(&inst, &prev);
        let violations: Vec<f64> = inst
            .targets
            .iter()
            .zip(&point.rates)
            .map(|(c, r)| c - r)
            .collect();

        let raw = inst.solution(
            point.assignment.clone(),
            SplitProfile::PerSubcarrier(point.splits.clone()),
            config.tol_feas,
            prev.clone(),
        );
        state.offer(raw.clone());
        // the gains barely depend on the user, so rate-weighted scores give
        // the repair a second, channel-aware starting point
        let weighted: Vec<Vec<f64>> = inst
            .rate0
            .iter()
            .zip(&prev)
            .map(|(row, l)| row.iter().map(|r| l * r).collect())
            .collect();
        let candidates = [
            repair_assignment(&inst, &point.assignment, &point.gains, &inst.rate0),
            repair_assignment(&inst, &point.assignment, &weighted, &inst.rate0),
        ];
        for x in candidates.into_iter().flatten() {
            if polished_seen.contains(&x) {
                continue;
            }
            if let Some(splits) = best_splits_cached(&inst, &x, SOLVER_EXACT_LIMIT, &mut cache) {
                let polished = inst.solution(
                    x.clone(),
                    SplitProfile::PerSubcarrier(splits),
                    config.tol_feas,
                    prev.clone(),
                );
                state.offer(polished);
            }
            polished_seen.insert(x);
        }
        state.record(TraceRow {
            iteration: state.iteration(),
            dual_value: point.value,
            lagrangian: point.value,
            best_primal: None,
            max_violation: violations.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            bcd_path: Vec::new(),
        });
        last_raw = Some(raw);

        state.subgradient_step(&violations);
        if converged(&state, &prev, config) {
            break;
        }
    }

    let (multipliers, best, trace, best_dual) = state.into_parts();
    let mut sol = match best {
        Some(b) => local_moves(&inst, b, &multipliers, config, &mut cache),
        None => last_raw.expect("at least one iteration"),
    };
    give_away_idle(&inst, &mut sol.assignment, &sol.splits, &multipliers, config);
    sol.dual_values = multipliers;
    sol.dual_bound = best_dual;
    sol.trace = trace;
    Ok(sol)
}
