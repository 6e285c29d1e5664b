//! Two-step heuristic: take the relaxation's subcarrier assignment, then
//! give each user the largest common split that still meets its target.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::params::{SolverConfig, SystemParams};
use crate::problem::{Assignment, Instance, Solution, SplitProfile};
use crate::split::{max_feasible_splits, SplitStop};
use crate::upper_bound::solve_ub;

/// Largest common splits on a fixed assignment, bisected to a relative
/// rate tolerance of `bisect_tol`. Users whose target is zero get 1.
/// Fails with [`Error::Infeasible`] listing the users that fall short even
/// at `rho = 0`.
pub fn splits_for_assignment(inst: &Instance, assignment: &Assignment, config: &SolverConfig) -> Result<Vec<f64>> {
    let stop = SplitStop::Relative {
        tol: config.bisect_tol,
        max_iters: config.max_bisect_iters,
    };
    max_feasible_splits(inst, assignment, stop).map_err(|short| Error::Infeasible {
        reason: format!("assigned subcarriers cannot carry the secrecy target for users {short:?}"),
        users: short,
    })
}

/// Relaxation solve followed by [`solve_stepwise_from`].
pub fn solve_stepwise(params: &SystemParams, channels: &ChannelRealization, config: &SolverConfig) -> Result<Solution> {
    let ub = solve_ub(params, channels, config)?;
    solve_stepwise_from(params, channels, &ub, config)
}

/// Largest common splits on the assignment of an existing relaxation
/// solution. The trace, multipliers and dual bound are carried over.
pub fn solve_stepwise_from(
    params: &SystemParams,
    channels: &ChannelRealization,
    ub: &Solution,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    let inst = Instance::new(params, channels)?;
    let rho = splits_for_assignment(&inst, &ub.assignment, config)?;
    let mut sol = inst.solution(
        ub.assignment.clone(),
        SplitProfile::PerUser(rho),
        config.tol_feas,
        ub.dual_values.clone(),
    );
    sol.dual_bound = ub.dual_bound;
    sol.trace = ub.trace.clone();
    Ok(sol)
}
