//! Exhaustive references for small instances.
//!
//! Both oracles enumerate every assignment, each subcarrier going to one of
//! the users or to nobody, in lexicographic order (digit 0 is "nobody",
//! digit `k + 1` is user `k`, subcarrier 0 most significant). The first
//! assignment reaching the best objective wins.
//!
//! For a fixed assignment the practical problem separates per user, and a
//! user's rate is continuous and non-increasing in its common split, so the
//! largest feasible split found by bisection to floating-point resolution is
//! that user's optimum. The relaxation also separates per user; each user
//! problem is solved by enumerating which subcarriers carry secret bits and
//! bisecting on the rate multiplier for each such set.

use std::collections::HashMap;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::params::{SolverConfig, SystemParams};
use crate::problem::{Assignment, Instance, Solution, SplitProfile};
use crate::split::{max_feasible_split, optimal_user_splits, SplitStop, ORACLE_EXACT_LIMIT};

/// Per-subcarrier splits of one user and the watts they cost.
type UserSplits = (Vec<f64>, f64);

/// Largest number of assignments the oracles will enumerate.
pub const MAX_ASSIGNMENTS: f64 = 1e6;

fn guard(inst: &Instance) -> Result<()> {
    let count = ((inst.num_users + 1) as f64).powi(inst.num_subcarriers as i32);
    if count > MAX_ASSIGNMENTS || inst.num_subcarriers > 64 {
        return Err(Error::TooLarge {
            assignments: count,
            limit: MAX_ASSIGNMENTS,
        });
    }
    Ok(())
}

/// Walks all assignments. `score` returns the objective of an assignment
/// given each user's subcarrier mask, or `None` if it is infeasible.
fn enumerate<F>(inst: &Instance, mut score: F) -> Option<(Vec<Option<usize>>, f64)>
where
    F: FnMut(&[u64]) -> Option<f64>,
{
    let (k_users, n_sc) = (inst.num_users, inst.num_subcarriers);
    let mut digits = vec![0usize; n_sc];
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut masks = vec![0u64; k_users];
    loop {
        masks.iter_mut().for_each(|m| *m = 0);
        for (n, &d) in digits.iter().enumerate() {
            if d > 0 {
                masks[d - 1] |= 1 << n;
            }
        }
        if let Some(v) = score(&masks) {
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((digits.clone(), v));
            }
        }
        // increment, last subcarrier least significant
        let mut pos = n_sc;
        loop {
            if pos == 0 {
                let (d, v) = best?;
                return Some((d.iter().map(|&x| x.checked_sub(1)).collect(), v));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] <= k_users {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn mask_to_vec(mask: u64, n_sc: usize) -> Vec<usize> {
    (0..n_sc).filter(|n| mask >> n & 1 == 1).collect()
}

fn no_feasible() -> Error {
    Error::Infeasible {
        users: Vec::new(),
        reason: "no assignment admits feasible splits".into(),
    }
}

/// Optimum of the practical problem (one split per user) by enumeration.
pub fn brute_force_ppa(params: &SystemParams, channels: &ChannelRealization, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    guard(&inst)?;
    let mut cache: HashMap<(usize, u64), Option<f64>> = HashMap::new();
    let mut split = |k: usize, mask: u64| -> Option<f64> {
        *cache.entry((k, mask)).or_insert_with(|| {
            let sc = mask_to_vec(mask, inst.num_subcarriers);
            max_feasible_split(&inst, k, &sc, inst.targets[k], SplitStop::Exact)
        })
    };
    let (owners, _) = enumerate(&inst, |masks| {
        let mut total = 0.0;
        for (k, &m) in masks.iter().enumerate() {
            total += split(k, m)? * inst.harvest_user[k];
        }
        Some(total)
    })
    .ok_or_else(no_feasible)?;
    let x = Assignment::from_owners(inst.num_users, owners)?;
    let rho: Vec<f64> = (0..inst.num_users)
        .map(|k| split(k, mask_of(&x, k)).expect("best assignment is feasible"))
        .collect();
    Ok(inst.solution(x, SplitProfile::PerUser(rho), config.tol_feas, Vec::new()))
}

fn mask_of(x: &Assignment, k: usize) -> u64 {
    x.subcarriers_of(k).iter().fold(0, |m, &n| m | 1 << n)
}

/// Optimum of the relaxation (one split per user and subcarrier) by
/// enumeration. Pairs a user does not own keep `rho = 1`.
pub fn brute_force_pub(params: &SystemParams, channels: &ChannelRealization, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    guard(&inst)?;
    let n_sc = inst.num_subcarriers;
    let mut cache: HashMap<(usize, u64), Option<UserSplits>> = HashMap::new();
    // watts lost to the decoders of user k on `mask`
    let mut user = |k: usize, mask: u64| -> Option<(Vec<f64>, f64)> {
        cache
            .entry((k, mask))
            .or_insert_with(|| {
                let sc = mask_to_vec(mask, n_sc);
                let sol = optimal_user_splits(&inst, k, &sc, inst.targets[k], ORACLE_EXACT_LIMIT)?;
                let full: f64 = sc.iter().map(|&n| inst.harvest[k][n]).sum();
                Some((sol.rho, full - sol.harvested))
            })
            .clone()
    };
    let total: f64 = inst.harvest.iter().flatten().sum();
    let (owners, _) = enumerate(&inst, |masks| {
        let mut loss = 0.0;
        for (k, &m) in masks.iter().enumerate() {
            loss += user(k, m)?.1;
        }
        Some(total - loss)
    })
    .ok_or_else(no_feasible)?;
    let x = Assignment::from_owners(inst.num_users, owners)?;
    let mut splits = vec![vec![1.0; n_sc]; inst.num_users];
    for (k, row) in splits.iter_mut().enumerate() {
        let (rho, _) = user(k, mask_of(&x, k)).expect("best assignment is feasible");
        for (n, r) in x.subcarriers_of(k).into_iter().zip(rho) {
            row[n] = r;
        }
    }
    Ok(inst.solution(x, SplitProfile::PerSubcarrier(splits), config.tol_feas, Vec::new()))
}
