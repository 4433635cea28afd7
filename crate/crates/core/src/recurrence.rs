//! Closed-form crossing densities and recurrence times for generic spectra.
//!
//! For a spectrum with rationally independent energies the joint statistics of
//! the survival amplitude become Gaussian at large effective dimension, and the
//! density of solutions of `F(t) = u` is
//!
//! ```text
//! D(u) = (2/√π) ΔE √(u/F̄) e^{-u/F̄},      T_R(u) = 1/D(u).
//! ```
//!
//! The Gaussian form predicts a small but finite density at `u = 1`; the true
//! fidelity reaches 1 only at `t = 0`, so values at that boundary are an
//! artifact of the approximation and should be read as such.

use serde::{Deserialize, Serialize};

use crate::spectrum::SpectralStats;
use crate::{Error, Result};

/// Above this ratio `u/F̄` closed forms are reported through their logarithm.
pub const LOG_SPACE_THRESHOLD: f64 = 700.0;

const HALF_SQRT_PI: f64 = 0.886_226_925_452_758;

/// Outcome of a recurrence-time evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RecurrenceTime {
    Finite(f64),
    /// Natural logarithm of a value too large for `f64`.
    Log(f64),
    /// `u = 0`: orthogonality is never reached at finite density.
    Diverges,
}

impl RecurrenceTime {
    /// `ln T_R`, `+∞` for [`RecurrenceTime::Diverges`].
    pub fn ln(&self) -> f64 {
        match *self {
            RecurrenceTime::Finite(v) => v.ln(),
            RecurrenceTime::Log(l) => l,
            RecurrenceTime::Diverges => f64::INFINITY,
        }
    }

    /// Numeric value, `+∞` when it diverges or overflows.
    pub fn value(&self) -> f64 {
        match *self {
            RecurrenceTime::Finite(v) => v,
            RecurrenceTime::Log(l) => l.exp(),
            RecurrenceTime::Diverges => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            RecurrenceTime::Finite(v) => Some(v),
            _ => None,
        }
    }
}

fn check_level(u: f64, stats: &SpectralStats) -> Result<f64> {
    let hi = stats.total_weight * stats.total_weight;
    if !(0.0..=hi + 1e-12).contains(&u) || u.is_nan() {
        return Err(Error::LevelOutOfRange { level: u, lo: 0.0, hi });
    }
    if !(stats.delta_e > 0.0) {
        return Err(Error::ZeroEnergyWidth);
    }
    if !(stats.mean_fidelity > 0.0) {
        return Err(Error::Domain { value: stats.mean_fidelity, reason: "mean fidelity must be positive" });
    }
    Ok(u / stats.mean_fidelity)
}

/// Crossings of `F(t) = u` per unit time.
pub fn density_generic(u: f64, stats: &SpectralStats) -> Result<f64> {
    let x = check_level(u, stats)?;
    Ok(stats.delta_e * x.sqrt() * (-x).exp() / HALF_SQRT_PI)
}

/// `ln T_R(u)`, valid for any `u/F̄`.
pub fn ln_recurrence_time_generic(u: f64, stats: &SpectralStats) -> Result<f64> {
    let x = check_level(u, stats)?;
    if u == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(HALF_SQRT_PI.ln() - stats.delta_e.ln() - 0.5 * x.ln() + x)
}

/// `T_R(u) = (√π/2)(1/ΔE)√(F̄/u) e^{u/F̄}`.
///
/// `u = 0` yields [`RecurrenceTime::Diverges`]; `u/F̄ >` [`LOG_SPACE_THRESHOLD`]
/// yields [`RecurrenceTime::Log`].
pub fn recurrence_time_generic(u: f64, stats: &SpectralStats) -> Result<RecurrenceTime> {
    let x = check_level(u, stats)?;
    if u == 0.0 {
        return Ok(RecurrenceTime::Diverges);
    }
    if x > LOG_SPACE_THRESHOLD {
        return Ok(RecurrenceTime::Log(ln_recurrence_time_generic(u, stats)?));
    }
    Ok(RecurrenceTime::Finite(HALF_SQRT_PI / stats.delta_e * (1.0 / x).sqrt() * x.exp()))
}

/// Recurrence time clamped at `u = max(u, floor)` so callers always get a number.
pub fn recurrence_time_generic_clamped(u: f64, floor: f64, stats: &SpectralStats) -> Result<RecurrenceTime> {
    recurrence_time_generic(u.max(floor), stats)
}

/// `U(x) = (√π/2) e^x / √x`, the dimensionless recurrence time `ΔE · T_R` as a
/// function of `x = u/F̄`.
pub fn universal_function(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { value: x, reason: "universal function needs x > 0" });
    }
    Ok(HALF_SQRT_PI * x.exp() / x.sqrt())
}

/// Exponential time-sampled density of the fidelity, `e^{-u/F̄}/F̄` for `u ≥ 0`.
pub fn fidelity_pdf(u: f64, mean_fidelity: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    (-u / mean_fidelity).exp() / mean_fidelity
}

/// Cumulative distribution of [`fidelity_pdf`].
pub fn fidelity_cdf(u: f64, mean_fidelity: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        -(-u / mean_fidelity).exp_m1()
    }
}

/// Expected number of solutions of `F(t) = u` on `[0, duration]`.
pub fn crossing_count_estimate(duration: f64, u: f64, stats: &SpectralStats) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::Domain { value: duration, reason: "duration must be positive" });
    }
    Ok(duration * density_generic(u, stats)?)
}

/// Level `u = F̄/2` at which [`density_generic`] peaks.
pub fn density_peak_level(stats: &SpectralStats) -> f64 {
    stats.mean_fidelity / 2.0
}
