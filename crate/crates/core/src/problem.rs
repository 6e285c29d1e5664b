//! Problem data model: assignments, split profiles, solutions, and the
//! objective and constraint evaluations every solver shares.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::params::{CsiMode, SolverConfig, SystemParams};
use crate::secrecy::{self, RateContext};

/// Binary subcarrier-to-user map. Each subcarrier has at most one owner;
/// a subcarrier without an owner only carries power.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    num_users: usize,
    owner: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(num_users: usize, num_subcarriers: usize) -> Self {
        Assignment {
            num_users,
            owner: vec![None; num_subcarriers],
        }
    }

    pub fn from_owners(num_users: usize, owner: Vec<Option<usize>>) -> Result<Self> {
        if let Some(k) = owner.iter().flatten().find(|&&k| k >= num_users) {
            return Err(Error::validation(format!(
                "subcarrier owner {k} out of range for {num_users} users"
            )));
        }
        Ok(Assignment { num_users, owner })
    }

    /// Builds from a `K x N` 0/1 matrix; rejects columns with more than one 1.
    pub fn from_matrix(x: &[Vec<u8>]) -> Result<Self> {
        let k = x.len();
        if k == 0 {
            return Err(Error::validation("assignment matrix has no rows"));
        }
        let n = x[0].len();
        let mut owner = vec![None; n];
        for (user, row) in x.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    what: "assignment row",
                    expected: n,
                    got: row.len(),
                });
            }
            for (sc, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 if owner[sc].is_none() => owner[sc] = Some(user),
                    1 => {
                        return Err(Error::validation(format!(
                            "subcarrier {sc} assigned to more than one user"
                        )))
                    }
                    other => {
                        return Err(Error::validation(format!("assignment entries must be 0/1, got {other}")))
                    }
                }
            }
        }
        Ok(Assignment { num_users: k, owner })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, n: usize) -> Option<usize> {
        self.owner[n]
    }

    pub fn owners(&self) -> &[Option<usize>] {
        &self.owner
    }

    pub fn set(&mut self, n: usize, user: Option<usize>) {
        debug_assert!(user.is_none_or(|k| k < self.num_users));
        self.owner[n] = user;
    }

    /// `x[k][n]`.
    pub fn x(&self, k: usize, n: usize) -> bool {
        self.owner[n] == Some(k)
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.num_users)
            .map(|k| self.owner.iter().map(|o| u8::from(*o == Some(k))).collect())
            .collect()
    }

    /// Subcarriers owned by user `k`, ascending.
    pub fn subcarriers_of(&self, k: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter_map(|(n, o)| (*o == Some(k)).then_some(n))
            .collect()
    }

    pub fn column_sum(&self, n: usize) -> usize {
        usize::from(self.owner[n].is_some())
    }
}

/// Power-splitting ratios: one per user (practical receivers) or one per
/// user and subcarrier (the relaxation used for the upper bound).
#[derive(Debug, Clone, PartialEq)]
pub enum SplitProfile {
    PerUser(Vec<f64>),
    PerSubcarrier(Vec<Vec<f64>>),
}

impl SplitProfile {
    pub fn uniform_per_user(num_users: usize, rho: f64) -> Self {
        SplitProfile::PerUser(vec![rho; num_users])
    }

    #[inline]
    pub fn rho(&self, k: usize, n: usize) -> f64 {
        match self {
            SplitProfile::PerUser(r) => r[k],
            SplitProfile::PerSubcarrier(r) => r[k][n],
        }
    }

    pub fn is_per_user(&self) -> bool {
        matches!(self, SplitProfile::PerUser(_))
    }

    pub fn validate(&self, num_users: usize, num_subcarriers: usize) -> Result<()> {
        let check = |v: f64| -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::validation(format!("split ratio must lie in [0, 1], got {v}")))
            }
        };
        match self {
            SplitProfile::PerUser(r) => {
                if r.len() != num_users {
                    return Err(Error::Dimension {
                        what: "per-user splits",
                        expected: num_users,
                        got: r.len(),
                    });
                }
                r.iter().try_for_each(|&v| check(v))
            }
            SplitProfile::PerSubcarrier(r) => {
                if r.len() != num_users {
                    return Err(Error::Dimension {
                        what: "per-subcarrier split rows",
                        expected: num_users,
                        got: r.len(),
                    });
                }
                for row in r {
                    if row.len() != num_subcarriers {
                        return Err(Error::Dimension {
                            what: "per-subcarrier split row",
                            expected: num_subcarriers,
                            got: row.len(),
                        });
                    }
                    row.iter().try_for_each(|&v| check(v))?;
                }
                Ok(())
            }
        }
    }
}

/// One row of a solver's iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Upper bound on every feasible primal objective, from the dual
    /// function at the current multipliers.
    pub dual_value: f64,
    /// Lagrangian at the primal point produced for these multipliers.
    pub lagrangian: f64,
    /// Best feasible primal objective found so far.
    pub best_primal: Option<f64>,
    /// `max_k (C_k - r_k)` at this iterate.
    pub max_violation: f64,
    /// Lagrangian after each block update of the inner alternation
    /// (empty for solvers without one).
    pub bcd_path: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: Assignment,
    pub splits: SplitProfile,
    /// Total harvested power, watts.
    pub harvested_total: f64,
    /// Received power routed to information decoders, watts.
    pub info_power: f64,
    pub per_user_secrecy_rate: Vec<f64>,
    pub feasible: bool,
    pub dual_values: Vec<f64>,
    /// Smallest dual function value seen, when the solver runs a dual loop.
    pub dual_bound: Option<f64>,
    pub trace: Vec<TraceRow>,
}

impl Solution {
    /// `min_k (r_k - C_k)`.
    pub fn min_slack(&self, targets: &[f64]) -> f64 {
        self.per_user_secrecy_rate
            .iter()
            .zip(targets)
            .map(|(r, c)| r - c)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Derived quantities of one (params, channels) pair that every solver
/// reads in its inner loops.
#[derive(Debug, Clone)]
pub struct Instance {
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub power: f64,
    pub noise: f64,
    pub zeta: f64,
    pub targets: Vec<f64>,
    /// `p_n h[k][n] / noise`.
    pub snr: Vec<Vec<f64>>,
    /// Eavesdropper rate per subcarrier for the configured CSI mode.
    pub eve: Vec<f64>,
    /// `zeta p_n h[k][n]`: harvested watts per unit of split.
    pub harvest: Vec<Vec<f64>>,
    /// `sum_n zeta p_n h[k][n]`.
    pub harvest_user: Vec<f64>,
    /// `sum_n p_n h[k][n]`.
    pub received_user: Vec<f64>,
    /// Secrecy rate of each pair with all power to the decoder.
    pub rate0: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(params: &SystemParams, channels: &ChannelRealization) -> Result<Self> {
        channels.check_dims(params)?;
        let k = params.num_users();
        let n = params.num_subcarriers();
        let p = params.per_subcarrier_power();
        let noise = params.noise_power();
        let zeta = params.conversion_efficiency();
        let mode = params.csi_mode();
        let eve_src = match mode {
            CsiMode::Full => channels.eve_gains(),
            CsiMode::Statistical => channels.eve_mean_gains(),
        };
        let eve = eve_src
            .iter()
            .map(|&b| secrecy::eve_rate(mode, p, noise, b))
            .collect::<Result<Vec<_>>>()?;
        let snr: Vec<Vec<f64>> = channels
            .user_gains()
            .iter()
            .map(|row| row.iter().map(|h| p * h / noise).collect())
            .collect();
        let harvest: Vec<Vec<f64>> = channels
            .user_gains()
            .iter()
            .map(|row| row.iter().map(|h| zeta * p * h).collect())
            .collect();
        let harvest_user = harvest.iter().map(|r| r.iter().sum()).collect();
        let received_user = channels
            .user_gains()
            .iter()
            .map(|row| row.iter().map(|h| p * h).sum())
            .collect();
        let rate0 = snr
            .iter()
            .map(|row: &Vec<f64>| row.iter().zip(&eve).map(|(&s, &e)| secrecy::secrecy_rate(s, e, 0.0)).collect())
            .collect();
        Ok(Instance {
            rate0,
            num_users: k,
            num_subcarriers: n,
            power: p,
            noise,
            zeta,
            targets: params.secrecy_targets().to_vec(),
            snr,
            eve,
            harvest,
            harvest_user,
            received_user,
        })
    }

    #[inline]
    pub fn secrecy(&self, k: usize, n: usize, rho: f64) -> f64 {
        secrecy::secrecy_rate(self.snr[k][n], self.eve[n], rho)
    }

    /// Unclamped `log2(1 + (1-rho) snr) - r_e`.
    #[inline]
    pub fn raw_secrecy(&self, k: usize, n: usize, rho: f64) -> f64 {
        secrecy::log2_1p((1.0 - rho) * self.snr[k][n]) - self.eve[n]
    }

    pub fn rate_context(&self, k: usize, n: usize, channels: &ChannelRealization) -> RateContext {
        RateContext {
            power: self.power,
            noise: self.noise,
            user_gain: channels.user_gain(k, n),
            eve_rate: self.eve[n],
        }
    }

    /// Secrecy rate of user `k` summed over its subcarriers.
    pub fn user_rate(&self, assignment: &Assignment, splits: &SplitProfile, k: usize) -> f64 {
        assignment
            .owners()
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(k))
            .map(|(n, _)| self.secrecy(k, n, splits.rho(k, n)))
            .sum()
    }

    pub fn user_rates(&self, assignment: &Assignment, splits: &SplitProfile) -> Vec<f64> {
        let mut rates = vec![0.0; self.num_users];
        for (n, owner) in assignment.owners().iter().enumerate() {
            if let Some(k) = *owner {
                rates[k] += self.secrecy(k, n, splits.rho(k, n));
            }
        }
        rates
    }

    /// Secrecy rate a user set would reach with all power to the decoder.
    pub fn max_rate_on(&self, k: usize, subcarriers: &[usize]) -> f64 {
        subcarriers.iter().map(|&n| self.rate0[k][n]).sum()
    }

    pub fn harvested(&self, splits: &SplitProfile) -> f64 {
        match splits {
            SplitProfile::PerUser(r) => r.iter().zip(&self.harvest_user).map(|(r, w)| r * w).sum(),
            SplitProfile::PerSubcarrier(r) => r
                .iter()
                .zip(&self.harvest)
                .map(|(rr, ww)| rr.iter().zip(ww).map(|(a, b)| a * b).sum::<f64>())
                .sum(),
        }
    }

    pub fn info_power(&self, splits: &SplitProfile) -> f64 {
        let inv_zeta = 1.0 / self.zeta;
        match splits {
            SplitProfile::PerUser(r) => r
                .iter()
                .zip(&self.received_user)
                .map(|(r, w)| (1.0 - r) * w)
                .sum(),
            SplitProfile::PerSubcarrier(r) => r
                .iter()
                .zip(&self.harvest)
                .map(|(rr, ww)| {
                    rr.iter()
                        .zip(ww)
                        .map(|(a, b)| (1.0 - a) * b * inv_zeta)
                        .sum::<f64>()
                })
                .sum(),
        }
    }

    /// Per-user factor for the subgradient step: the user's harvestable
    /// power over its secrecy rate with every subcarrier at `rho = 0`,
    /// divided by its target. A multiplier near the first ratio is where
    /// decoding starts to beat harvesting on the user's subcarriers, so
    /// steps in these units move every user at a comparable relative pace.
    pub fn dual_step_scale(&self) -> Vec<f64> {
        let all: Vec<usize> = (0..self.num_subcarriers).collect();
        (0..self.num_users)
            .map(|k| {
                let rate = self.max_rate_on(k, &all).max(f64::MIN_POSITIVE);
                let target = if self.targets[k] > 0.0 { self.targets[k] } else { 1.0 };
                self.harvest_user[k] / rate / target
            })
            .collect()
    }

    /// Per-user secrecy target is met when the user, with every subcarrier
    /// and all power to the decoder, still reaches it.
    pub fn unreachable_users(&self) -> Vec<usize> {
        let all: Vec<usize> = (0..self.num_subcarriers).collect();
        (0..self.num_users)
            .filter(|&k| self.max_rate_on(k, &all) < self.targets[k])
            .collect()
    }

    pub fn precheck(&self) -> Result<()> {
        let users = self.unreachable_users();
        if users.is_empty() {
            Ok(())
        } else {
            Err(Error::Infeasible {
                reason: format!(
                    "secrecy target exceeds the rate reachable with every subcarrier for users {users:?}"
                ),
                users,
            })
        }
    }

    /// Assembles a [`Solution`], evaluating objective, rates and feasibility.
    pub fn solution(
        &self,
        assignment: Assignment,
        splits: SplitProfile,
        tol_feas: f64,
        dual_values: Vec<f64>,
    ) -> Solution {
        let rates = self.user_rates(&assignment, &splits);
        let feasible = rates
            .iter()
            .zip(&self.targets)
            .all(|(r, c)| *r >= c - tol_feas);
        Solution {
            harvested_total: self.harvested(&splits),
            info_power: self.info_power(&splits),
            per_user_secrecy_rate: rates,
            feasible,
            assignment,
            splits,
            dual_values,
            dual_bound: None,
            trace: Vec::new(),
        }
    }
}

fn check_shapes(
    params: &SystemParams,
    channels: &ChannelRealization,
    splits: &SplitProfile,
) -> Result<()> {
    channels.check_dims(params)?;
    splits.validate(params.num_users(), params.num_subcarriers())
}

/// `zeta * sum_k sum_n rho p_n h[k][n]`, independent of the assignment.
pub fn harvested_power_total(
    params: &SystemParams,
    channels: &ChannelRealization,
    splits: &SplitProfile,
) -> Result<f64> {
    check_shapes(params, channels, splits)?;
    let p = params.per_subcarrier_power();
    let zeta = params.conversion_efficiency();
    let mut total = 0.0;
    for (k, row) in channels.user_gains().iter().enumerate() {
        for (n, h) in row.iter().enumerate() {
            total += splits.rho(k, n) * p * h;
        }
    }
    Ok(zeta * total)
}

/// `sum_k sum_n (1 - rho) p_n h[k][n]`: received power sent to decoders.
pub fn info_receiver_power(
    params: &SystemParams,
    channels: &ChannelRealization,
    splits: &SplitProfile,
) -> Result<f64> {
    check_shapes(params, channels, splits)?;
    let p = params.per_subcarrier_power();
    let mut total = 0.0;
    for (k, row) in channels.user_gains().iter().enumerate() {
        for (n, h) in row.iter().enumerate() {
            total += (1.0 - splits.rho(k, n)) * p * h;
        }
    }
    Ok(total)
}

/// Feasibility of `(assignment, splits)` and per-user slacks `r_k - C_k`.
pub fn check_feasibility(
    params: &SystemParams,
    channels: &ChannelRealization,
    assignment: &Assignment,
    splits: &SplitProfile,
    config: &SolverConfig,
) -> Result<(bool, Vec<f64>)> {
    check_shapes(params, channels, splits)?;
    if assignment.num_users() != params.num_users()
        || assignment.num_subcarriers() != params.num_subcarriers()
    {
        return Err(Error::Dimension {
            what: "assignment",
            expected: params.num_users() * params.num_subcarriers(),
            got: assignment.num_users() * assignment.num_subcarriers(),
        });
    }
    let inst = Instance::new(params, channels)?;
    let slacks: Vec<f64> = inst
        .user_rates(assignment, splits)
        .iter()
        .zip(params.secrecy_targets())
        .map(|(r, c)| r - c)
        .collect();
    let feasible = slacks.iter().all(|s| *s >= -config.tol_feas);
    Ok((feasible, slacks))
}

/// Secrecy rate of user `k` under `assignment` and `splits`.
pub fn secrecy_rate_user(
    params: &SystemParams,
    channels: &ChannelRealization,
    assignment: &Assignment,
    splits: &SplitProfile,
    k: usize,
) -> Result<f64> {
    check_shapes(params, channels, splits)?;
    if k >= params.num_users() {
        return Err(Error::validation(format!("user index {k} out of range")));
    }
    let inst = Instance::new(params, channels)?;
    Ok(inst.user_rate(assignment, splits, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::CsiMode;

    fn setup(
        k: usize,
        n: usize,
        zeta: f64,
        total: f64,
        h: Vec<Vec<f64>>,
        beta: Vec<f64>,
        c: f64,
    ) -> (SystemParams, ChannelRealization) {
        let params = SystemParams::uniform(k, n, total, 1.0, zeta, c, CsiMode::Full).unwrap();
        let mean = vec![1.0; n];
        let ch = ChannelRealization::new(h, beta, mean, 0).unwrap();
        (params, ch)
    }

    #[test]
    fn harvested_examples() {
        let (p, ch) = setup(2, 1, 0.4, 1.0, vec![vec![2.0], vec![3.0]], vec![0.0], 0.0);
        let e = harvested_power_total(&p, &ch, &SplitProfile::PerUser(vec![1.0, 1.0])).unwrap();
        assert!((e - 2.0).abs() < 1e-15);
        let e = harvested_power_total(&p, &ch, &SplitProfile::PerUser(vec![0.0, 0.0])).unwrap();
        assert_eq!(e, 0.0);

        // K=2, N=2, p = 0.5 each
        let (p, ch) = setup(
            2,
            2,
            0.4,
            1.0,
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![0.0, 0.0],
            0.0,
        );
        let splits = SplitProfile::PerUser(vec![0.5, 0.25]);
        let e = harvested_power_total(&p, &ch, &splits).unwrap();
        let mut by_loop = 0.0;
        for (k, row) in ch.user_gains().iter().enumerate() {
            for h in row {
                by_loop += 0.4 * splits.rho(k, 0) * 0.5 * h;
            }
        }
        assert!((e - 0.65).abs() < 1e-15);
        assert!((e - by_loop).abs() < 1e-15);
    }

    #[test]
    fn harvested_rejects_bad_dims() {
        let (p, ch) = setup(2, 1, 0.4, 1.0, vec![vec![2.0], vec![3.0]], vec![0.0], 0.0);
        assert!(harvested_power_total(&p, &ch, &SplitProfile::PerUser(vec![1.0])).is_err());
        assert!(info_receiver_power(&p, &ch, &SplitProfile::PerSubcarrier(vec![vec![1.0, 0.0]; 2])).is_err());
        assert!(harvested_power_total(&p, &ch, &SplitProfile::PerUser(vec![1.5, 0.0])).is_err());
    }

    #[test]
    fn info_power_examples() {
        let (p, ch) = setup(1, 2, 0.4, 2.0, vec![vec![1.0, 3.0]], vec![0.0, 0.0], 0.0);
        let full = info_receiver_power(&p, &ch, &SplitProfile::PerUser(vec![1.0])).unwrap();
        assert_eq!(full, 0.0);
        let none = info_receiver_power(&p, &ch, &SplitProfile::PerUser(vec![0.0])).unwrap();
        assert!((none - 4.0).abs() < 1e-15);
        let q = info_receiver_power(&p, &ch, &SplitProfile::PerUser(vec![0.75])).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn feasibility_examples() {
        let cfg = SolverConfig::default();
        // C = 0: feasible for any split.
        let (p, ch) = setup(2, 2, 0.4, 2.0, vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0, 1.0], 0.0);
        let x = Assignment::from_owners(2, vec![Some(0), Some(1)]).unwrap();
        let (ok, slack) = check_feasibility(&p, &ch, &x, &SplitProfile::PerUser(vec![0.3, 0.9]), &cfg).unwrap();
        assert!(ok);
        assert!(slack.iter().all(|s| *s >= 0.0));

        // eavesdropper-dominated user
        let (p, ch) = setup(1, 2, 0.4, 2.0, vec![vec![1.0, 0.5]], vec![1.0, 2.0], 0.1);
        let x = Assignment::from_owners(1, vec![Some(0), Some(0)]).unwrap();
        let (ok, _) = check_feasibility(&p, &ch, &x, &SplitProfile::PerUser(vec![0.0]), &cfg).unwrap();
        assert!(!ok);

        // p h / noise = 3, p beta / noise = 1, C = 1 -> slack 0
        let (p, ch) = setup(1, 1, 0.4, 1.0, vec![vec![3.0]], vec![1.0], 1.0);
        let x = Assignment::from_owners(1, vec![Some(0)]).unwrap();
        let (ok, slack) = check_feasibility(&p, &ch, &x, &SplitProfile::PerUser(vec![0.0]), &cfg).unwrap();
        assert!(ok);
        assert!(slack[0].abs() < 1e-15);
    }

    #[test]
    fn user_rate_sums_assigned_subcarriers() {
        // rates 1.0 and 0.5 on two subcarriers
        let snr_half = 2f64.powf(0.5) - 1.0;
        let (p, ch) = setup(
            2,
            3,
            0.4,
            3.0,
            vec![vec![1.0, snr_half, 5.0], vec![1.0, 1.0, 1.0]],
            vec![0.0, 0.0, 0.0],
            0.0,
        );
        let split = SplitProfile::PerUser(vec![0.0, 0.0]);
        let none = Assignment::from_owners(2, vec![None, None, Some(1)]).unwrap();
        assert_eq!(secrecy_rate_user(&p, &ch, &none, &split, 0).unwrap(), 0.0);
        let one = Assignment::from_owners(2, vec![Some(0), None, None]).unwrap();
        assert!((secrecy_rate_user(&p, &ch, &one, &split, 0).unwrap() - 1.0).abs() < 1e-15);
        let two = Assignment::from_owners(2, vec![Some(0), Some(0), None]).unwrap();
        assert!((secrecy_rate_user(&p, &ch, &two, &split, 0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn assignment_matrix_checks() {
        assert!(Assignment::from_matrix(&[vec![1, 0], vec![1, 0]]).is_err());
        assert!(Assignment::from_matrix(&[vec![2, 0]]).is_err());
        let a = Assignment::from_matrix(&[vec![1, 0, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(a.owners(), &[Some(0), None, Some(1)]);
        assert_eq!(a.to_matrix(), vec![vec![1, 0, 0], vec![0, 0, 1]]);
        assert!(Assignment::from_owners(2, vec![Some(2)]).is_err());
    }
}
