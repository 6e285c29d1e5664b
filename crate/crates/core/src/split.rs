//! Split-ratio searches for a fixed subcarrier assignment.
//!
//! Two problems recur across the solvers and oracles:
//!
//! * common split: the largest `rho_k` in `[0, 1]` with
//!   `sum_{n in S} [log2(1 + (1-rho_k) snr_n) - e_n]+ >= C_k`. The left side
//!   is continuous and non-increasing in `rho_k`, so bisection is exact.
//! * per-subcarrier split: maximize `sum_{n in S} w_n rho_n` under the same
//!   rate constraint with one `rho_n` per subcarrier. The clamp makes this a
//!   fixed-charge problem; for a fixed set of rate-carrying subcarriers it
//!   is convex and solved by bisection on a single multiplier.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use crate::problem::{Assignment, Instance};
use crate::secrecy::{clamp_threshold, log2_1p};

/// Stopping rule for the common-split bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitStop {
    /// Bisect down to floating-point resolution and return the feasible end.
    Exact,
    /// Stop at the first feasible midpoint with `r - C < tol * C`.
    Relative { tol: f64, max_iters: usize },
}

/// Largest common split meeting `target` on `subcarriers`, or `None` when
/// even `rho = 0` falls short. `target <= 0` gives 1.
pub fn max_feasible_split(
    inst: &Instance,
    k: usize,
    subcarriers: &[usize],
    target: f64,
    stop: SplitStop,
) -> Option<f64> {
    if target <= 0.0 {
        return Some(1.0);
    }
    let rate = |rho: f64| -> f64 { subcarriers.iter().map(|&n| inst.secrecy(k, n, rho)).sum() };
    let r0 = rate(0.0);
    if r0 < target {
        return None;
    }
    if r0 == target {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let max_iters = match stop {
        SplitStop::Exact => 200,
        SplitStop::Relative { max_iters, .. } => max_iters,
    };
    for _ in 0..max_iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = rate(mid);
        if r >= target {
            lo = mid;
            if let SplitStop::Relative { tol, .. } = stop {
                if r - target < tol * target {
                    return Some(mid);
                }
            }
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Memo of per-user split searches keyed by user and subcarrier set.
pub(crate) type SplitCache<T> = HashMap<(usize, Vec<usize>), Option<T>>;

/// Largest common split per user on `assignment`. On failure returns the
/// users that fall short even at `rho = 0`.
pub fn max_feasible_splits(
    inst: &Instance,
    assignment: &Assignment,
    stop: SplitStop,
) -> std::result::Result<Vec<f64>, Vec<usize>> {
    max_feasible_splits_cached(inst, assignment, stop, &mut HashMap::new())
}

pub(crate) fn max_feasible_splits_cached(
    inst: &Instance,
    assignment: &Assignment,
    stop: SplitStop,
    cache: &mut SplitCache<f64>,
) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let mut rho = vec![1.0; inst.num_users];
    let mut short = Vec::new();
    for (k, r) in rho.iter_mut().enumerate() {
        let sc = assignment.subcarriers_of(k);
        let found = *cache
            .entry((k, sc))
            .or_insert_with_key(|(_, sc)| max_feasible_split(inst, k, sc, inst.targets[k], stop));
        match found {
            Some(v) => *r = v,
            None => short.push(k),
        }
    }
    if short.is_empty() {
        Ok(rho)
    } else {
        Err(short)
    }
}

/// Optimal per-subcarrier splits of one user over a fixed subcarrier set.
#[derive(Debug, Clone, PartialEq)]
pub struct UserSplit {
    /// `rho_n` for each subcarrier of the input set, same order.
    pub rho: Vec<f64>,
    /// `sum_n w_n rho_n`, watts.
    pub harvested: f64,
}

/// Rate-capable set size up to which the solvers enumerate active subsets.
pub const SOLVER_EXACT_LIMIT: usize = 6;
/// Same limit for the enumeration oracles.
pub const ORACLE_EXACT_LIMIT: usize = 12;

#[derive(Clone, Copy)]
struct Carrier {
    /// `zeta p h`.
    w: f64,
    snr: f64,
    eve: f64,
    /// Largest split that still leaves a non-negative secrecy rate.
    threshold: f64,
}

impl Carrier {
    fn rate(&self, rho: f64) -> f64 {
        log2_1p((1.0 - rho) * self.snr) - self.eve
    }

    /// Stationary split of `w rho + nu (log2(1 + (1-rho) snr) - e)`,
    /// clipped to `[0, threshold]`.
    fn split_at(&self, nu: f64) -> f64 {
        if nu <= 0.0 {
            return self.threshold;
        }
        (1.0 - nu / (LN_2 * self.w) + 1.0 / self.snr).clamp(0.0, self.threshold)
    }

    /// Multiplier beyond which `split_at` is 0.
    fn nu_saturation(&self) -> f64 {
        LN_2 * self.w * (1.0 + 1.0 / self.snr)
    }
}

/// Solves the per-subcarrier split problem for user `k` on `subcarriers`.
/// Returns `None` when the target is out of reach even at `rho = 0`.
///
/// When at most `exact_limit` subcarriers can carry secret bits, every
/// active subset is tried and the result is optimal. Larger sets use the
/// active set chosen by the Lagrangian relaxation, then keep the better of
/// that and the best common split.
pub fn optimal_user_splits(
    inst: &Instance,
    k: usize,
    subcarriers: &[usize],
    target: f64,
    exact_limit: usize,
) -> Option<UserSplit> {
    let all_harvest = || UserSplit {
        rho: vec![1.0; subcarriers.len()],
        harvested: subcarriers.iter().map(|&n| inst.harvest[k][n]).sum(),
    };
    if target <= 0.0 {
        return Some(all_harvest());
    }
    // rate-capable subcarriers, as positions into `subcarriers`
    let mut useful = Vec::new();
    let mut carriers = Vec::new();
    for (pos, &n) in subcarriers.iter().enumerate() {
        let snr = inst.snr[k][n];
        let eve = inst.eve[n];
        let threshold = clamp_threshold(snr, eve);
        if threshold > 0.0 {
            useful.push(pos);
            carriers.push(Carrier {
                w: inst.harvest[k][n],
                snr,
                eve,
                threshold: threshold.min(1.0),
            });
        }
    }
    let max_rate: f64 = carriers.iter().map(|c| c.rate(0.0).max(0.0)).sum();
    if max_rate < target {
        return None;
    }

    let base: f64 = subcarriers.iter().map(|&n| inst.harvest[k][n]).sum();
    let assemble = |active_rho: &[(usize, f64)]| -> UserSplit {
        let mut rho = vec![1.0; subcarriers.len()];
        let mut harvested = base;
        for &(ci, r) in active_rho {
            rho[useful[ci]] = r;
            harvested -= carriers[ci].w * (1.0 - r);
        }
        UserSplit { rho, harvested }
    };

    let mut best: Option<UserSplit> = None;
    let mut consider = |cand: UserSplit| {
        if best.as_ref().is_none_or(|b| cand.harvested > b.harvested) {
            best = Some(cand);
        }
    };

    if carriers.len() <= exact_limit {
        for mask in 1u32..(1u32 << carriers.len()) {
            let active: Vec<usize> = (0..carriers.len()).filter(|i| mask & (1 << i) != 0).collect();
            if let Some(sol) = solve_fixed_active(&carriers, &active, target) {
                consider(assemble(&sol));
            }
        }
    } else {
        let active = lagrangian_active_set(&carriers, target);
        if let Some(sol) = solve_fixed_active(&carriers, &active, target) {
            consider(assemble(&sol));
        }
        // A common split is also feasible here; keep whichever harvests more.
        if let Some(r) = max_feasible_split(inst, k, subcarriers, target, SplitStop::Exact) {
            consider(UserSplit {
                rho: vec![r; subcarriers.len()],
                harvested: r * base,
            });
        }
    }
    best
}

// Water-filling on a fixed active set: find the multiplier where the summed
// rate of the active carriers reaches `target`; returns (carrier, rho) pairs.
fn solve_fixed_active(carriers: &[Carrier], active: &[usize], target: f64) -> Option<Vec<(usize, f64)>> {
    let rate_at = |nu: f64| -> f64 {
        active
            .iter()
            .map(|&i| carriers[i].rate(carriers[i].split_at(nu)))
            .sum()
    };
    let nu_max = active
        .iter()
        .map(|&i| carriers[i].nu_saturation())
        .fold(0.0, f64::max);
    if rate_at(nu_max) < target {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, nu_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate_at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(active.iter().map(|&i| (i, carriers[i].split_at(hi))).collect())
}

// Per-carrier exact choice at multiplier `nu`: carry rate with the
// stationary split, or harvest everything. The summed rate is monotone in
// `nu`; bisect for the smallest multiplier meeting the target.
fn lagrangian_active_set(carriers: &[Carrier], target: f64) -> Vec<usize> {
    let choose = |nu: f64| -> (Vec<usize>, f64) {
        let mut active = Vec::new();
        let mut rate = 0.0;
        for (i, c) in carriers.iter().enumerate() {
            let rho = c.split_at(nu);
            let r = c.rate(rho);
            if r > 0.0 && c.w * rho + nu * r > c.w {
                active.push(i);
                rate += r;
            }
        }
        (active, rate)
    };
    let mut hi = carriers
        .iter()
        .map(|c| c.nu_saturation().max(c.w / c.rate(0.0).max(f64::MIN_POSITIVE)))
        .fold(0.0, f64::max)
        * 2.0;
    let (mut act_hi, rate_hi) = choose(hi);
    if rate_hi < target {
        return (0..carriers.len()).collect();
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (act, r) = choose(mid);
        if r >= target {
            hi = mid;
            act_hi = act;
        } else {
            lo = mid;
        }
    }
    act_hi
}
