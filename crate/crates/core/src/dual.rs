//! Projected subgradient master loop on the secrecy-constraint multipliers.

use crate::params::SolverConfig;
use crate::problem::{Solution, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `alpha_t = alpha_0 / sqrt(t)`.
    Diminishing(f64),
    Constant(f64),
}

impl StepSchedule {
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Diminishing(a0) => a0 / (t.max(1) as f64).sqrt(),
            StepSchedule::Constant(a0) => a0,
        }
    }
}

/// Multipliers plus bookkeeping for one dual ascent run.
#[derive(Debug, Clone)]
pub struct DualState {
    multipliers: Vec<f64>,
    /// Next step index, starting at 1.
    iteration: usize,
    schedule: StepSchedule,
    /// Per-user factor applied to the step, in watts per bit. Brings the
    /// multipliers to the scale of the harvested-power objective.
    step_scale: Vec<f64>,
    best_feasible: Option<Solution>,
    trace: Vec<TraceRow>,
    best_dual: Option<f64>,
}

impl DualState {
    pub fn new(num_users: usize, schedule: StepSchedule) -> Self {
        DualState {
            multipliers: vec![0.0; num_users],
            iteration: 1,
            schedule,
            step_scale: vec![1.0; num_users],
            best_feasible: None,
            trace: Vec::new(),
            best_dual: None,
        }
    }

    pub fn with_multipliers(mut self, multipliers: Vec<f64>) -> Self {
        assert_eq!(multipliers.len(), self.multipliers.len());
        self.multipliers = multipliers.into_iter().map(|m| m.max(0.0)).collect();
        self
    }

    pub fn with_step_scale(mut self, scale: Vec<f64>) -> Self {
        assert_eq!(scale.len(), self.multipliers.len());
        self.step_scale = scale;
        self
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn best_feasible(&self) -> Option<&Solution> {
        self.best_feasible.as_ref()
    }

    pub fn best_dual(&self) -> Option<f64> {
        self.best_dual
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    /// `mu_k <- max(0, mu_k + alpha_t * scale_k * violation_k)`, then `t += 1`.
    ///
    /// `violations[k]` is `C_k - r_k`, the subgradient of the dual function.
    pub fn subgradient_step(&mut self, violations: &[f64]) {
        assert_eq!(violations.len(), self.multipliers.len());
        let alpha = self.schedule.step(self.iteration);
        for ((mu, v), s) in self.multipliers.iter_mut().zip(violations).zip(&self.step_scale) {
            *mu = (*mu + alpha * s * v).max(0.0);
        }
        self.iteration += 1;
    }

    /// Keeps `candidate` if it is feasible and beats the current best.
    pub fn offer(&mut self, candidate: Solution) {
        if !candidate.feasible {
            return;
        }
        let better = self
            .best_feasible
            .as_ref()
            .is_none_or(|b| candidate.harvested_total > b.harvested_total);
        if better {
            self.best_feasible = Some(candidate);
        }
    }

    pub fn record(&mut self, mut row: TraceRow) {
        row.best_primal = self.best_feasible.as_ref().map(|s| s.harvested_total);
        self.best_dual = Some(self.best_dual.map_or(row.dual_value, |d| d.min(row.dual_value)));
        self.trace.push(row);
    }

    pub fn into_parts(self) -> (Vec<f64>, Option<Solution>, Vec<TraceRow>, Option<f64>) {
        (self.multipliers, self.best_feasible, self.trace, self.best_dual)
    }
}

/// True when the multipliers moved by at most `dual_tol` in relative
/// max-norm, the best feasible objective is within `dual_tol` (relative) of
/// the best dual value, or the iteration cap is reached.
pub fn converged(state: &DualState, prev_multipliers: &[f64], config: &SolverConfig) -> bool {
    assert_eq!(prev_multipliers.len(), state.multipliers.len());
    if state.iteration > config.max_dual_iters {
        return true;
    }
    if let (Some(best), Some(bound)) = (&state.best_feasible, state.best_dual) {
        if bound - best.harvested_total <= config.dual_tol * bound.abs() {
            return true;
        }
    }
    let change = state
        .multipliers
        .iter()
        .zip(prev_multipliers)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = prev_multipliers.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if change == 0.0 {
        return true;
    }
    change <= config.dual_tol * scale
}
