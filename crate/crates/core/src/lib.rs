//! Harvested-power maximization for an OFDMA downlink with power-splitting
//! receivers and per-user secrecy-rate targets against one eavesdropper.
//!
//! The crate provides the system model ([`SystemParams`],
//! [`ChannelRealization`]), secrecy-rate arithmetic, three solvers
//! ([`solve_ub`] for the per-subcarrier relaxation, [`solve_iterative`] and
//! [`solve_stepwise`] for the practical one-split-per-user problem), two
//! baselines, brute-force references for small instances, and an
//! experiment runner writing CSV.

pub mod baselines;
pub mod channel;
pub mod dual;
pub mod error;
pub mod experiment;
pub mod iterative;
pub mod oracle;
pub mod params;
pub mod problem;
mod repair;
pub mod secrecy;
pub mod split;
pub mod stepwise;
pub mod upper_bound;

pub use baselines::{solve_fps, solve_fsa};
pub use channel::{generate, ChannelRealization, GeometryParams, Placement};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ResultTable, Scheme, Sweep};
pub use iterative::{assign_given_split, bcd_inner_loop, solve_iterative, split_given_assignment};
pub use oracle::{brute_force_ppa, brute_force_pub};
pub use params::{dbm_to_watts, watts_to_dbm, CsiMode, SolverConfig, SystemParams};
pub use problem::{Assignment, Instance, Solution, SplitProfile, TraceRow};
pub use secrecy::{exp_integral_e1, secrecy_rate_subcarrier};
pub use stepwise::solve_stepwise;
pub use upper_bound::{assign_subcarriers_ub, optimal_split_ub, solve_ub};
