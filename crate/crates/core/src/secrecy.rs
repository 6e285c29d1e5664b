//! Rate formulas: per-subcarrier secrecy rate with the `[.]+` clamp, per-user
//! aggregation, the eavesdropper rate under full and statistical CSI, and the
//! exponential integral `E1` needed by the latter.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::params::CsiMode;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Above this argument `E1` underflows to zero for reporting purposes.
pub const E1_UNDERFLOW: f64 = 700.0;

/// `log2(1 + x)`, accurate for small `x`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// `e^x * E1(x)` for `x > 0`. Finite for every positive argument, which is
/// what the ergodic eavesdropper rate needs at low SNR.
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("E1 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_scaled_continued_fraction(x))
    }
}

/// Exponential integral `E1(x) = int_x^inf e^{-t}/t dt` for `x > 0`.
///
/// Power series around zero for `x <= 1`, Lentz continued fraction above.
/// Returns 0 for `x > 700`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!("E1 requires x > 0, got {x}")));
    }
    if x > E1_UNDERFLOW {
        return Ok(0.0);
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(e1_scaled_continued_fraction(x) * (-x).exp())
    }
}

// E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact_term = 1.0; // (-x)^k / k!
    for k in 1..200 {
        fact_term *= -x / k as f64;
        let term = fact_term / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))), modified Lentz.
fn e1_scaled_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Eavesdropper rate on one subcarrier, bits/OFDM symbol.
///
/// `gain` is the instantaneous gain under [`CsiMode::Full`] and the mean
/// gain under [`CsiMode::Statistical`].
pub fn eve_rate(mode: CsiMode, power: f64, noise: f64, gain: f64) -> Result<f64> {
    if !(power > 0.0 && noise > 0.0) {
        return Err(Error::Domain(format!(
            "powers must be positive (p = {power}, noise = {noise})"
        )));
    }
    if !(gain >= 0.0 && gain.is_finite()) {
        return Err(Error::Domain(format!("eavesdropper gain must be >= 0, got {gain}")));
    }
    let snr = power * gain / noise;
    match mode {
        CsiMode::Full => Ok(log2_1p(snr)),
        CsiMode::Statistical => {
            if snr == 0.0 {
                return Ok(0.0);
            }
            Ok(exp_scaled_e1(1.0 / snr)? / LN_2)
        }
    }
}

/// Everything needed to evaluate the secrecy rate of one (user, subcarrier)
/// pair as a function of the split ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateContext {
    pub power: f64,
    pub noise: f64,
    pub user_gain: f64,
    /// Precomputed eavesdropper rate for the subcarrier.
    pub eve_rate: f64,
}

impl RateContext {
    pub fn new(power: f64, noise: f64, user_gain: f64, eve_rate: f64) -> Result<Self> {
        if !(power > 0.0 && noise > 0.0 && user_gain > 0.0) {
            return Err(Error::validation("rate context needs positive powers and gain"));
        }
        if eve_rate.is_nan() || eve_rate < 0.0 {
            return Err(Error::validation(format!("eavesdropper rate must be >= 0, got {eve_rate}")));
        }
        Ok(RateContext {
            power,
            noise,
            user_gain,
            eve_rate,
        })
    }

    pub fn snr(&self) -> f64 {
        self.power * self.user_gain / self.noise
    }

    /// Achievable rate of the legitimate user with split `rho`.
    pub fn user_rate(&self, rho: f64) -> f64 {
        log2_1p((1.0 - rho) * self.snr())
    }
}

/// `[log2(1 + (1-rho) p h / noise) - r_e]+`.
#[inline]
pub fn secrecy_rate_subcarrier(ctx: &RateContext, rho: f64) -> f64 {
    secrecy_rate(ctx.snr(), ctx.eve_rate, rho)
}

/// Clamped secrecy rate from the received SNR and the eavesdropper rate.
#[inline]
pub(crate) fn secrecy_rate(snr: f64, eve: f64, rho: f64) -> f64 {
    (log2_1p((1.0 - rho) * snr) - eve).max(0.0)
}

/// Largest split at which the unclamped secrecy rate is still non-negative,
/// i.e. where `log2(1 + (1-rho) snr) = eve`. Values `<= 0` mean the
/// subcarrier never carries secret bits.
#[inline]
pub(crate) fn clamp_threshold(snr: f64, eve: f64) -> f64 {
    1.0 - (eve * LN_2).exp_m1() / snr
}
