//! Primal recovery for dual iterates.
//!
//! A dual iterate's assignment is a Lagrangian maximizer, which usually
//! leaves some users short of their target. The repair moves subcarriers to
//! short users one at a time, each time picking the move that loses the
//! least Lagrangian score per bit of capacity gained, and never leaving the
//! donor short itself.

use crate::problem::{Assignment, Instance};

/// Repairs `assignment` so every user's capacity `sum_n cap[k][n]` over its
/// subcarriers reaches its target. `score[k][n]` is the Lagrangian value of
/// user `k` owning subcarrier `n` (an unassigned subcarrier scores 0).
/// Returns `None` when no sequence of such moves satisfies every user.
pub(crate) fn repair_assignment(
    inst: &Instance,
    assignment: &Assignment,
    score: &[Vec<f64>],
    cap: &[Vec<f64>],
) -> Option<Assignment> {
    let score = |k: usize, n: usize| score[k][n];
    let cap = |k: usize, n: usize| cap[k][n];
    let (k_users, n_sc) = (inst.num_users, inst.num_subcarriers);
    let mut x = assignment.clone();
    let mut capacity = vec![0.0; k_users];
    for (n, owner) in x.owners().iter().enumerate() {
        if let Some(k) = *owner {
            capacity[k] += cap(k, n);
        }
    }
    let shortfall = |capacity: &[f64]| -> f64 {
        (0..k_users)
            .filter(|&k| inst.targets[k] > 0.0)
            .map(|k| (1.0 - capacity[k] / inst.targets[k]).max(0.0))
            .sum()
    };
    let short = |capacity: &[f64], k: usize| inst.targets[k] > 0.0 && capacity[k] < inst.targets[k];

    for _ in 0..=4 * n_sc * k_users {
        // most short user, relative to its target
        let needy = (0..k_users)
            .filter(|&k| short(&capacity, k))
            .max_by(|&a, &b| {
                let da = 1.0 - capacity[a] / inst.targets[a];
                let db = 1.0 - capacity[b] / inst.targets[b];
                da.total_cmp(&db).then(b.cmp(&a))
            });
        let Some(k) = needy else {
            return Some(x);
        };
        let mut best: Option<(usize, f64)> = None;
        for n in 0..n_sc {
            let gain = cap(k, n);
            if gain <= 0.0 {
                continue;
            }
            let loss = match x.owner(n) {
                Some(j) if j == k => continue,
                Some(j) => {
                    let left = capacity[j] - cap(j, n);
                    if inst.targets[j] > 0.0 && left < inst.targets[j] {
                        continue;
                    }
                    score(j, n) - score(k, n)
                }
                None => -score(k, n),
            };
            let cost = loss / gain;
            if best.is_none_or(|b| cost < b.1) {
                best = Some((n, cost));
            }
        }
        // no move keeps every donor satisfied: fall back to the move that
        // most reduces the total relative shortfall, which cannot cycle
        let best = best.or_else(|| {
            let before = shortfall(&capacity);
            let mut fallback: Option<(usize, f64)> = None;
            for n in 0..n_sc {
                let gain = cap(k, n);
                let Some(j) = x.owner(n).filter(|&j| j != k) else {
                    continue;
                };
                if gain <= 0.0 {
                    continue;
                }
                let mut after = capacity.clone();
                after[j] -= cap(j, n);
                after[k] += gain;
                let drop = before - shortfall(&after);
                if drop > 1e-12 && fallback.is_none_or(|b| drop > b.1) {
                    fallback = Some((n, drop));
                }
            }
            fallback
        });
        // last resort: a two-step chain where the donor is compensated with a
        // subcarrier taken from a third user that stays satisfied
        let best = match best {
            Some(b) => Some(b),
            None => {
                let mut chain: Option<(usize, usize, f64)> = None;
                for n in 0..n_sc {
                    let gain = cap(k, n);
                    let Some(j) = x.owner(n).filter(|&j| j != k) else {
                        continue;
                    };
                    if gain <= 0.0 {
                        continue;
                    }
                    let left = capacity[j] - cap(j, n);
                    for m in 0..n_sc {
                        if m == n || cap(j, m) <= 0.0 || left + cap(j, m) < inst.targets[j] {
                            continue;
                        }
                        let loss_m = match x.owner(m) {
                            Some(i) if i == j || i == k => continue,
                            Some(i) => {
                                if inst.targets[i] > 0.0 && capacity[i] - cap(i, m) < inst.targets[i] {
                                    continue;
                                }
                                score(i, m) - score(j, m)
                            }
                            None => -score(j, m),
                        };
                        let cost = (score(j, n) - score(k, n) + loss_m) / gain;
                        if chain.is_none_or(|c| cost < c.2) {
                            chain = Some((n, m, cost));
                        }
                    }
                }
                let (n, m, _) = chain?;
                if let Some(i) = x.owner(m) {
                    capacity[i] -= cap(i, m);
                }
                let j = x.owner(n).expect("chain donor owns n");
                capacity[j] += cap(j, m);
                x.set(m, Some(j));
                Some((n, 0.0))
            }
        };
        let (n, _) = best?;
        if let Some(j) = x.owner(n) {
            capacity[j] -= cap(j, n);
        }
        capacity[k] += cap(k, n);
        x.set(n, Some(k));
    }
    None
}

/// Rounds of target reweighting tried by [`capacity_assignment`].
const REWEIGHT_ROUNDS: usize = 200;

/// Assignment driven only by capacity relative to each target, ignoring the
/// objective. Every subcarrier goes to the user with the largest weighted
/// share `w_k r_{k,n}(0) / C_k` and the result is repaired; users still
/// short after a round get their weight raised. Users without a target are
/// ignored.
pub(crate) fn capacity_assignment(inst: &Instance) -> Option<Assignment> {
    let (k_users, n_sc) = (inst.num_users, inst.num_subcarriers);
    let mut weight = vec![1.0; k_users];
    for _ in 0..REWEIGHT_ROUNDS {
        let share: Vec<Vec<f64>> = (0..k_users)
            .map(|k| {
                let c = inst.targets[k];
                (0..n_sc)
                    .map(|n| if c > 0.0 { weight[k] * inst.rate0[k][n] / c } else { 0.0 })
                    .collect()
            })
            .collect();
        let owners = (0..n_sc)
            .map(|n| {
                (0..k_users)
                    .filter(|&k| share[k][n] > 0.0)
                    .max_by(|&a, &b| share[a][n].total_cmp(&share[b][n]).then(b.cmp(&a)))
            })
            .collect();
        let x = Assignment::from_owners(k_users, owners).ok()?;
        if let Some(fixed) = repair_assignment(inst, &x, &share, &inst.rate0) {
            return Some(fixed);
        }
        let mut progressed = false;
        for (k, w) in weight.iter_mut().enumerate() {
            let c = inst.targets[k];
            if c <= 0.0 {
                continue;
            }
            let have: f64 = x.subcarriers_of(k).iter().map(|&n| inst.rate0[k][n]).sum();
            if have < c {
                *w *= 1.0 + 0.5 * (1.0 - have / c);
                progressed = true;
            }
        }
        if !progressed {
            return None;
        }
    }
    None
}
