//! Alternating (block coordinate) solver for the practical problem with one
//! split ratio per user, inside a subgradient loop on the multipliers.

use std::collections::{HashMap, HashSet};
use std::f64::consts::LN_2;

use crate::channel::ChannelRealization;
use crate::dual::{converged, DualState, StepSchedule};
use crate::error::Result;
use crate::params::{SolverConfig, SystemParams};
use crate::problem::{Assignment, Instance, Solution, SplitProfile, TraceRow};
use crate::repair::{capacity_assignment, repair_assignment};
use crate::secrecy::clamp_threshold;
use crate::split::{max_feasible_split, max_feasible_splits, max_feasible_splits_cached, SplitStop};
use crate::upper_bound::{evaluate_dual, solve_ub};

/// Owner of each subcarrier for fixed per-user splits: the user maximizing
/// `mu_k r_{k,n}(rho_k)`. The harvest term is the same for every candidate
/// owner, so it drops out. Subcarriers where the best score is zero stay
/// unassigned.
pub fn assign_given_split(
    mu: &[f64],
    rho: &[f64],
    channels: &ChannelRealization,
    params: &SystemParams,
) -> Result<Assignment> {
    let inst = Instance::new(params, channels)?;
    SplitProfile::PerUser(rho.to_vec()).validate(inst.num_users, inst.num_subcarriers)?;
    Ok(assign(&inst, mu, rho))
}

pub(crate) fn assign(inst: &Instance, mu: &[f64], rho: &[f64]) -> Assignment {
    let mut x = Assignment::empty(inst.num_users, inst.num_subcarriers);
    for n in 0..inst.num_subcarriers {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..inst.num_users {
            let score = mu[k] * inst.secrecy(k, n, rho[k]);
            if score > best.map_or(0.0, |b| b.1) {
                best = Some((k, score));
            }
        }
        x.set(n, best.map(|b| b.0));
    }
    x
}

/// `rho W_k + mu_k sum_{n in S} [r_{k,n}(rho)]+`, the user's share of the
/// Lagrangian without the constant `- mu_k C_k`.
fn user_lagrangian(inst: &Instance, k: usize, mu: f64, subcarriers: &[usize], rho: f64) -> f64 {
    rho * inst.harvest_user[k] + mu * subcarriers.iter().map(|&n| inst.secrecy(k, n, rho)).sum::<f64>()
}

/// Best common split of user `k` given its subcarriers and multiplier.
///
/// Without the `[.]+` clamp the user's Lagrangian is concave and its
/// derivative
///
/// ```text
/// sum_n zeta p h_{k,n} - mu_k sum_{n in S} p h_{k,n} / (ln 2 (p h_{k,n} (1-rho) + noise))
/// ```
///
/// decreases in `rho`, so bisection on the derivative finds the maximizer.
/// The clamp switches a subcarrier's term off once its rate drops below the
/// eavesdropper's; between consecutive switch-off points the function is
/// concave again, so each piece is bisected separately and the best piece
/// wins.
pub fn split_given_assignment(
    mu_k: f64,
    k: usize,
    assignment: &Assignment,
    channels: &ChannelRealization,
    params: &SystemParams,
    config: &SolverConfig,
) -> Result<f64> {
    let inst = Instance::new(params, channels)?;
    let sc = assignment.subcarriers_of(k);
    Ok(best_split(&inst, k, mu_k, &sc, config))
}

pub(crate) fn best_split(inst: &Instance, k: usize, mu: f64, subcarriers: &[usize], config: &SolverConfig) -> f64 {
    if mu.is_nan() || mu <= 0.0 || subcarriers.is_empty() {
        return 1.0;
    }
    let scale = inst.harvest_user[k];
    let thresholds: Vec<f64> = subcarriers
        .iter()
        .map(|&n| clamp_threshold(inst.snr[k][n], inst.eve[n]))
        .collect();
    let mut breaks: Vec<f64> = thresholds.iter().copied().filter(|t| *t > 0.0 && *t < 1.0).collect();
    breaks.push(0.0);
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut best = (1.0, user_lagrangian(inst, k, mu, subcarriers, 1.0));
    for piece in breaks.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        if hi <= lo {
            continue;
        }
        // subcarriers still carrying secret bits across this piece
        let active: Vec<f64> = subcarriers
            .iter()
            .zip(&thresholds)
            .filter(|(_, t)| **t >= hi)
            .map(|(&n, _)| inst.snr[k][n])
            .collect();
        let deriv = |rho: f64| -> f64 {
            scale - mu * active.iter().map(|a| a / (LN_2 * (1.0 + (1.0 - rho) * a))).sum::<f64>()
        };
        let rho = bisect_derivative(deriv, lo, hi, config.bisect_tol * scale, config.max_bisect_iters);
        let value = user_lagrangian(inst, k, mu, subcarriers, rho);
        if value > best.1 {
            best = (rho, value);
        }
    }
    best.0
}

fn bisect_derivative(deriv: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, max_iters: usize) -> f64 {
    if deriv(hi) >= 0.0 {
        return hi;
    }
    if deriv(lo) <= 0.0 {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iters {
        mid = 0.5 * (lo + hi);
        let d = deriv(mid);
        if d.abs() < tol {
            break;
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    mid
}

/// Full Lagrangian of the practical problem.
pub(crate) fn lagrangian(inst: &Instance, mu: &[f64], assignment: &Assignment, rho: &[f64]) -> f64 {
    let rates = inst.user_rates(assignment, &SplitProfile::PerUser(rho.to_vec()));
    (0..inst.num_users)
        .map(|k| rho[k] * inst.harvest_user[k] + mu[k] * (rates[k] - inst.targets[k]))
        .sum()
}

/// Result of one inner alternation.
#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub assignment: Assignment,
    pub splits: Vec<f64>,
    pub lagrangian: f64,
    /// Lagrangian after every block update, in order.
    pub path: Vec<f64>,
}

/// Alternates exact assignment and split updates until the Lagrangian stops
/// improving by more than `bcd_tol` (relative) or `max_bcd_iters` passes.
pub fn bcd_inner_loop(
    mu: &[f64],
    init_rho: &[f64],
    channels: &ChannelRealization,
    params: &SystemParams,
    config: &SolverConfig,
) -> Result<BcdOutcome> {
    let inst = Instance::new(params, channels)?;
    SplitProfile::PerUser(init_rho.to_vec()).validate(inst.num_users, inst.num_subcarriers)?;
    Ok(bcd(&inst, mu, init_rho, config))
}

pub(crate) fn bcd(inst: &Instance, mu: &[f64], init_rho: &[f64], config: &SolverConfig) -> BcdOutcome {
    let mut rho = init_rho.to_vec();
    let mut path = Vec::with_capacity(2 * config.max_bcd_iters);
    let mut assignment = Assignment::empty(inst.num_users, inst.num_subcarriers);
    let mut prev: Option<f64> = None;
    let mut current = f64::NEG_INFINITY;
    for _ in 0..config.max_bcd_iters {
        assignment = assign(inst, mu, &rho);
        path.push(lagrangian(inst, mu, &assignment, &rho));

        for k in 0..inst.num_users {
            let sc = assignment.subcarriers_of(k);
            let cand = best_split(inst, k, mu[k], &sc, config);
            if user_lagrangian(inst, k, mu[k], &sc, cand) >= user_lagrangian(inst, k, mu[k], &sc, rho[k]) {
                rho[k] = cand;
            }
        }
        current = lagrangian(inst, mu, &assignment, &rho);
        path.push(current);

        if let Some(p) = prev {
            if (current - p).abs() <= config.bcd_tol * current.abs().max(p.abs()) {
                break;
            }
        }
        prev = Some(current);
    }
    BcdOutcome {
        assignment,
        splits: rho,
        lagrangian: current,
        path,
    }
}

/// `mu_k r_{k,n}(rho_k)` for every pair.
pub(crate) fn scores(inst: &Instance, mu: &[f64], rho: &[f64]) -> Vec<Vec<f64>> {
    (0..inst.num_users)
        .map(|k| (0..inst.num_subcarriers).map(|n| mu[k] * inst.secrecy(k, n, rho[k])).collect())
        .collect()
}

/// Multipliers that make `rho` stationary for each user's share of the
/// Lagrangian on `assignment`: `W_k / |d r_k / d rho_k|`. Zero for users
/// whose rate does not respond to the split.
pub(crate) fn implied_multipliers(inst: &Instance, assignment: &Assignment, rho: &[f64]) -> Vec<f64> {
    (0..inst.num_users)
        .map(|k| {
            let slope: f64 = assignment
                .subcarriers_of(k)
                .iter()
                .filter(|&&n| inst.raw_secrecy(k, n, rho[k]) > 0.0)
                .map(|&n| {
                    let a = inst.snr[k][n];
                    a / (LN_2 * (1.0 + (1.0 - rho[k]) * a))
                })
                .sum();
            if slope > 0.0 {
                inst.harvest_user[k] / slope
            } else {
                0.0
            }
        })
        .collect()
}

/// Improves a feasible point of the practical problem. First alternates
/// reassignment at the implied multipliers, repair and maximal common
/// splits; then moves single subcarriers between users, trying moves in
/// order of their first-order gain at the implied multipliers and keeping
/// each one that raises the harvested power.
pub(crate) fn refine(inst: &Instance, start: Solution, config: &SolverConfig) -> Solution {
    let mut best = start;
    let SplitProfile::PerUser(_) = best.splits else {
        return best;
    };
    for _ in 0..config.max_bcd_iters {
        let rho = per_user(&best);
        let mu = implied_multipliers(inst, &best.assignment, &rho);
        let raw = assign(inst, &mu, &rho);
        let Some(x) = repair_assignment(inst, &raw, &scores(inst, &mu, &rho), &inst.rate0) else {
            break;
        };
        if x == best.assignment {
            break;
        }
        let Ok(splits) = max_feasible_splits(inst, &x, SplitStop::Exact) else {
            break;
        };
        let cand = inst.solution(x, SplitProfile::PerUser(splits), config.tol_feas, best.dual_values.clone());
        if !(cand.feasible && cand.harvested_total > best.harvested_total * (1.0 + config.bcd_tol)) {
            break;
        }
        best = cand;
    }
    local_moves(inst, best, config)
}

fn per_user(sol: &Solution) -> Vec<f64> {
    match &sol.splits {
        SplitProfile::PerUser(r) => r.clone(),
        SplitProfile::PerSubcarrier(_) => unreachable!("practical solutions carry one split per user"),
    }
}

/// Exact moves tried per pass before giving up.
const MOVES_PER_PASS: usize = 32;

fn local_moves(inst: &Instance, start: Solution, config: &SolverConfig) -> Solution {
    let (k_users, n_sc) = (inst.num_users, inst.num_subcarriers);
    let mut x = start.assignment.clone();
    let mut rho = per_user(&start);
    let mut moved = false;
    let split = |x: &Assignment, k: usize| {
        max_feasible_split(inst, k, &x.subcarriers_of(k), inst.targets[k], SplitStop::Exact)
    };

    for _ in 0..n_sc * k_users {
        let mu = implied_multipliers(inst, &x, &rho);
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for n in 0..n_sc {
            let owner = x.owner(n);
            let lose = owner.map_or(0.0, |j| mu[j] * inst.secrecy(j, n, rho[j]));
            for k in 0..k_users {
                if Some(k) == owner || inst.rate0[k][n] <= 0.0 {
                    continue;
                }
                let est = mu[k] * inst.secrecy(k, n, rho[k]) - lose;
                if est > 0.0 || owner.is_none() {
                    cands.push((est, n, k));
                }
            }
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut applied = false;
        for &(_, n, k) in cands.iter().take(MOVES_PER_PASS) {
            let owner = x.owner(n);
            let mut y = x.clone();
            y.set(n, Some(k));
            let Some(rk) = split(&y, k) else { continue };
            let rj = match owner {
                Some(j) => match split(&y, j) {
                    Some(r) => Some((j, r)),
                    None => continue,
                },
                None => None,
            };
            let before = rho[k] * inst.harvest_user[k] + owner.map_or(0.0, |j| rho[j] * inst.harvest_user[j]);
            let after = rk * inst.harvest_user[k] + rj.map_or(0.0, |(j, r)| r * inst.harvest_user[j]);
            if after > before * (1.0 + config.bcd_tol) || (owner.is_none() && after >= before) {
                x = y;
                rho[k] = rk;
                if let Some((j, r)) = rj {
                    rho[j] = r;
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
    let cand = inst.solution(x, SplitProfile::PerUser(rho), config.tol_feas, start.dual_values.clone());
    if cand.feasible && cand.harvested_total >= start.harvested_total {
        cand
    } else {
        start
    }
}

/// Dual loop over the multipliers with the inner alternation as the
/// Lagrangian maximizer. Every inner alternation starts from splits of 0.5;
/// warm starts would get stuck at `rho = 1`, where no user has a secrecy
/// rate and the assignment step leaves everything unassigned. Each
/// iterate's assignment is repaired so every user can reach its target,
/// re-split to the largest feasible common ratios and offered as a primal
/// candidate. The relaxation's assignment is offered the same way before
/// the loop starts.
///
/// The trace's `dual_value` is the relaxation's dual function at the same
/// multipliers, which bounds every feasible objective of this problem.
pub fn solve_iterative(
    params: &SystemParams,
    channels: &ChannelRealization,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    inst.precheck()?;
    let k_users = inst.num_users;
    let mut state = DualState::new(k_users, StepSchedule::Diminishing(config.dual_step))
        .with_step_scale(inst.dual_step_scale());
    let init = vec![0.5; k_users];
    let mut polished_seen = HashSet::new();
    let mut cache = HashMap::new();
    let mut last_raw: Option<Solution>;
    if let Some(x) = capacity_assignment(&inst) {
        if let Ok(splits) = max_feasible_splits_cached(&inst, &x, SplitStop::Exact, &mut cache) {
            state.offer(inst.solution(x.clone(), SplitProfile::PerUser(splits), config.tol_feas, vec![0.0; k_users]));
        }
        polished_seen.insert(x);
    }
    // warm start: the relaxation's assignment with the largest common splits
    if let Ok(ub) = solve_ub(params, channels, config) {
        let x = ub.assignment;
        if let Ok(splits) = max_feasible_splits_cached(&inst, &x, SplitStop::Exact, &mut cache) {
            state.offer(inst.solution(x.clone(), SplitProfile::PerUser(splits), config.tol_feas, vec![0.0; k_users]));
        }
        polished_seen.insert(x);
    }

    loop {
        let mu = state.multipliers().to_vec();
        let out = bcd(&inst, &mu, &init, config);
        let rho = out.splits.clone();
        let raw = inst.solution(
            out.assignment.clone(),
            SplitProfile::PerUser(rho.clone()),
            config.tol_feas,
            mu.clone(),
        );
        let violations: Vec<f64> = inst
            .targets
            .iter()
            .zip(&raw.per_user_secrecy_rate)
            .map(|(c, r)| c - r)
            .collect();
        state.offer(raw.clone());
        // the relaxation's maximizer at the same multipliers is a second
        // starting point for primal recovery
        let relaxed = evaluate_dual(&inst, &mu);
        let candidates = [
            repair_assignment(&inst, &out.assignment, &scores(&inst, &mu, &rho), &inst.rate0),
            repair_assignment(&inst, &relaxed.assignment, &relaxed.gains, &inst.rate0),
        ];
        for x in candidates.into_iter().flatten() {
            if polished_seen.contains(&x) {
                continue;
            }
            if let Ok(splits) = max_feasible_splits_cached(&inst, &x, SplitStop::Exact, &mut cache) {
                let polished = inst.solution(x.clone(), SplitProfile::PerUser(splits), config.tol_feas, mu.clone());
                state.offer(polished);
            }
            polished_seen.insert(x);
        }
        state.record(TraceRow {
            iteration: state.iteration(),
            dual_value: relaxed.value.max(out.lagrangian),
            lagrangian: out.lagrangian,
            best_primal: None,
            max_violation: violations.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            bcd_path: out.path,
        });
        last_raw = Some(raw);

        state.subgradient_step(&violations);
        if converged(&state, &mu, config) {
            break;
        }
    }

    let (multipliers, best, trace, best_dual) = state.into_parts();
    let mut sol = match best {
        Some(b) => refine(&inst, b, config),
        None => last_raw.expect("at least one iteration"),
    };
    sol.dual_values = multipliers;
    sol.dual_bound = best_dual;
    sol.trace = trace;
    Ok(sol)
}
