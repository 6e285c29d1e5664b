//! Scenario and solver parameters.

use crate::error::{Error, Result};

/// What the base station knows about the eavesdropper's channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsiMode {
    /// Instantaneous eavesdropper gains are known.
    Full,
    /// Only the mean eavesdropper gain per subcarrier is known; the
    /// eavesdropper rate is replaced by its Rayleigh-fading average.
    Statistical,
}

impl CsiMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CsiMode::Full => "full",
            CsiMode::Statistical => "stat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "fullcsi" => Some(CsiMode::Full),
            "stat" | "statistical" | "statisticalcsi" => Some(CsiMode::Statistical),
            _ => None,
        }
    }
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Static description of one downlink scenario. All powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    num_users: usize,
    num_subcarriers: usize,
    total_power: f64,
    noise_power: f64,
    conversion_efficiency: f64,
    secrecy_targets: Vec<f64>,
    csi_mode: CsiMode,
}

impl SystemParams {
    pub fn new(
        num_users: usize,
        num_subcarriers: usize,
        total_power: f64,
        noise_power: f64,
        conversion_efficiency: f64,
        secrecy_targets: Vec<f64>,
        csi_mode: CsiMode,
    ) -> Result<Self> {
        if num_users == 0 {
            return Err(Error::validation("number of users must be at least 1"));
        }
        if num_subcarriers == 0 {
            return Err(Error::validation("number of subcarriers must be at least 1"));
        }
        if !(total_power.is_finite() && total_power > 0.0) {
            return Err(Error::validation(format!(
                "total power must be positive and finite, got {total_power}"
            )));
        }
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::validation(format!(
                "noise power must be positive and finite, got {noise_power}"
            )));
        }
        if !(conversion_efficiency > 0.0 && conversion_efficiency < 1.0) {
            return Err(Error::validation(format!(
                "conversion efficiency must lie in (0, 1), got {conversion_efficiency}"
            )));
        }
        if secrecy_targets.len() != num_users {
            return Err(Error::Dimension {
                what: "secrecy targets",
                expected: num_users,
                got: secrecy_targets.len(),
            });
        }
        if let Some(c) = secrecy_targets.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::validation(format!(
                "secrecy targets must be finite and non-negative, got {c}"
            )));
        }
        Ok(SystemParams {
            num_users,
            num_subcarriers,
            total_power,
            noise_power,
            conversion_efficiency,
            secrecy_targets,
            csi_mode,
        })
    }

    /// Same target `c_bar` for every user.
    pub fn uniform(
        num_users: usize,
        num_subcarriers: usize,
        total_power: f64,
        noise_power: f64,
        conversion_efficiency: f64,
        c_bar: f64,
        csi_mode: CsiMode,
    ) -> Result<Self> {
        Self::new(
            num_users,
            num_subcarriers,
            total_power,
            noise_power,
            conversion_efficiency,
            vec![c_bar; num_users],
            csi_mode,
        )
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// Equal power on every subcarrier, `P_t / N`.
    pub fn per_subcarrier_power(&self) -> f64 {
        self.total_power / self.num_subcarriers as f64
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn conversion_efficiency(&self) -> f64 {
        self.conversion_efficiency
    }

    pub fn secrecy_targets(&self) -> &[f64] {
        &self.secrecy_targets
    }

    pub fn csi_mode(&self) -> CsiMode {
        self.csi_mode
    }

    pub fn with_secrecy_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::new(
            self.num_users,
            self.num_subcarriers,
            self.total_power,
            self.noise_power,
            self.conversion_efficiency,
            targets,
            self.csi_mode,
        )
    }

    pub fn with_total_power(&self, total_power: f64) -> Result<Self> {
        Self::new(
            self.num_users,
            self.num_subcarriers,
            total_power,
            self.noise_power,
            self.conversion_efficiency,
            self.secrecy_targets.clone(),
            self.csi_mode,
        )
    }

    pub fn with_noise_power(&self, noise_power: f64) -> Result<Self> {
        Self::new(
            self.num_users,
            self.num_subcarriers,
            self.total_power,
            noise_power,
            self.conversion_efficiency,
            self.secrecy_targets.clone(),
            self.csi_mode,
        )
    }

    pub fn with_csi_mode(&self, csi_mode: CsiMode) -> Self {
        SystemParams {
            csi_mode,
            ..self.clone()
        }
    }
}

/// Tie-breaking rule for argmax steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

/// Tolerances and iteration caps shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative accuracy of the bisection searches.
    pub bisect_tol: f64,
    pub max_bisect_iters: usize,
    /// Initial subgradient step; the step at iteration `t` is `dual_step / sqrt(t)`.
    pub dual_step: f64,
    pub max_dual_iters: usize,
    pub dual_tol: f64,
    pub bcd_tol: f64,
    pub max_bcd_iters: usize,
    /// Absolute slack (bits/OFDM symbol) allowed on secrecy constraints.
    pub tol_feas: f64,
    pub tie_break: TieBreak,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            bisect_tol: 1e-6,
            max_bisect_iters: 100,
            dual_step: 0.1,
            max_dual_iters: 500,
            dual_tol: 1e-5,
            bcd_tol: 1e-6,
            max_bcd_iters: 50,
            tol_feas: 1e-6,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("bisect_tol", self.bisect_tol),
            ("dual_step", self.dual_step),
            ("dual_tol", self.dual_tol),
            ("bcd_tol", self.bcd_tol),
            ("tol_feas", self.tol_feas),
        ];
        for (name, v) in tols {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        let caps = [
            ("max_bisect_iters", self.max_bisect_iters),
            ("max_dual_iters", self.max_dual_iters),
            ("max_bcd_iters", self.max_bcd_iters),
        ];
        for (name, v) in caps {
            if v == 0 {
                return Err(Error::validation(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}
