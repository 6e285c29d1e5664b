//! Reference computations shared by the integration tests. None of these
//! call into the crate's numerics; they recompute from definitions.

#![allow(dead_code)]

use std::f64::consts::LN_2;

use swipt_core::{dbm_to_watts, generate, ChannelRealization, CsiMode, GeometryParams, SystemParams};

/// Adaptive Simpson on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `E1(x) = int_x^inf e^-t / t dt`. With `t = x e^s` the integrand becomes
/// `exp(-x e^s)` on `s in [0, inf)`, smooth and fast-decaying; the tail is
/// cut where `x e^s > 750`.
pub fn e1_quadrature(x: f64) -> f64 {
    let upper = (750.0 / x).ln().max(1.0);
    let f = |s: f64| (-x * s.exp()).exp();
    // split at the knee so each panel is well resolved
    let knee = (1.0 / x).ln().max(0.0);
    let mut total = 0.0;
    let mut a = 0.0;
    for b in [knee, knee + 2.0, knee + 5.0, upper] {
        if b > a {
            total += simpson(&f, a, b, 1e-14);
            a = b;
        }
    }
    total
}

/// Golden-section maximizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Secrecy rate of one subcarrier from raw quantities.
pub fn secrecy(power: f64, noise: f64, h: f64, eve_rate: f64, rho: f64) -> f64 {
    ((1.0 + (1.0 - rho) * power * h / noise).log2() - eve_rate).max(0.0)
}

/// Full-CSI eavesdropper rate.
pub fn eve_rate_full(power: f64, noise: f64, beta: f64) -> f64 {
    (1.0 + power * beta / noise).log2()
}

/// Eavesdropper rate of every subcarrier under the params' CSI mode,
/// computing the statistical case by quadrature of `E[log2(1 + g X)]`.
pub fn eve_rates(params: &SystemParams, ch: &ChannelRealization) -> Vec<f64> {
    let p = params.per_subcarrier_power();
    let s = params.noise_power();
    match params.csi_mode() {
        CsiMode::Full => ch.eve_gains().iter().map(|b| eve_rate_full(p, s, *b)).collect(),
        CsiMode::Statistical => ch
            .eve_mean_gains()
            .iter()
            .map(|b| {
                let g = p * b / s;
                (1.0 / g).exp() * e1_quadrature(1.0 / g) / LN_2
            })
            .collect(),
    }
}

/// Rate of user `k` on its subcarriers at a common split.
pub fn user_rate(params: &SystemParams, ch: &ChannelRealization, eve: &[f64], k: usize, sc: &[usize], rho: f64) -> f64 {
    let p = params.per_subcarrier_power();
    let s = params.noise_power();
    sc.iter().map(|&n| secrecy(p, s, ch.user_gain(k, n), eve[n], rho)).sum()
}

/// Largest point of the `step` grid on `[0, 1]` where the common split
/// still meets `target`, or `None` if even 0 fails.
pub fn grid_max_split(params: &SystemParams, ch: &ChannelRealization, k: usize, sc: &[usize], target: f64, step: f64) -> Option<f64> {
    let eve = eve_rates(params, ch);
    let steps = (1.0 / step).round() as usize;
    (0..=steps)
        .rev()
        .map(|i| i as f64 * step)
        .find(|&rho| user_rate(params, ch, &eve, k, sc, rho) >= target)
}

/// `zeta sum_k sum_n rho_k p h` by plain loops.
pub fn harvest_per_user(params: &SystemParams, ch: &ChannelRealization, rho: &[f64]) -> f64 {
    let p = params.per_subcarrier_power();
    let mut total = 0.0;
    for (k, r) in rho.iter().enumerate() {
        for n in 0..params.num_subcarriers() {
            total += r * p * ch.user_gain(k, n);
        }
    }
    params.conversion_efficiency() * total
}

/// Default system at `k x n` with common target `c_bar`.
pub fn default_params(k: usize, n: usize, c_bar: f64) -> SystemParams {
    SystemParams::uniform(k, n, dbm_to_watts(30.0), dbm_to_watts(-30.0), 0.4, c_bar, CsiMode::Full).unwrap()
}

/// Seeded realization under the default geometry.
pub fn channels(params: &SystemParams, seed: u64) -> ChannelRealization {
    generate(params, &GeometryParams::default(), seed).unwrap()
}

/// Relative closeness with an absolute floor.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
