//! Quasi-free fermion quenches: product fidelity over momentum modes, per-mode
//! phase-space moments of `z_k = ln[1 - α_k sin²(tε_k/2)]`, their extensive
//! sums and the log-normal crossing density built from them.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quad::integrate;
use crate::recurrence::{RecurrenceTime, LOG_SPACE_THRESHOLD};
use crate::signal::{Signal, TimeGrid};
use crate::sum::NeumaierSum;
use crate::{Error, Result};

/// Modes with `α` above this are rejected by [`quasifree_stats`].
pub const ALPHA_CEILING: f64 = 1.0 - 1e-12;

const VAR_QUAD_TOL: f64 = 1e-12;
const UNDERFLOW_GUARD: f64 = 1e-300;

/// Excitation amplitudes `α_k` and pair energies `ε_k` of a quench, plus the
/// chain length they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub alpha: Vec<f64>,
    pub epsilon: Vec<f64>,
    #[serde(rename = "L")]
    pub length: usize,
}

impl ModeSet {
    pub fn new(alpha: Vec<f64>, epsilon: Vec<f64>, length: usize) -> Result<Self> {
        if alpha.len() != epsilon.len() {
            return Err(Error::LengthMismatch { energies: epsilon.len(), weights: alpha.len() });
        }
        if alpha.is_empty() {
            return Err(Error::InvalidConfig("mode set is empty".into()));
        }
        for (index, (&a, &e)) in alpha.iter().zip(&epsilon).enumerate() {
            if !(0.0..=1.0).contains(&a) || !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidMode { index, alpha: a, epsilon: e });
            }
        }
        Ok(Self { alpha, epsilon, length })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn modes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.alpha.iter().copied().zip(self.epsilon.iter().copied())
    }

    /// Every mode repeated twice, as for a chain of twice the volume.
    pub fn duplicated(&self) -> Self {
        let mut alpha = self.alpha.clone();
        alpha.extend_from_slice(&self.alpha);
        let mut epsilon = self.epsilon.clone();
        epsilon.extend_from_slice(&self.epsilon);
        Self { alpha, epsilon, length: 2 * self.length }
    }

    /// `F(t) = ∏ [1 - α sin²(tε/2)]`, switching to a log-domain sum once the
    /// running product would underflow.
    pub fn fidelity(&self, t: f64) -> f64 {
        let mut prod = 1.0;
        for (k, (a, e)) in self.modes().enumerate() {
            let s = (0.5 * t * e).sin();
            prod *= 1.0 - a * s * s;
            if prod < UNDERFLOW_GUARD {
                if prod <= 0.0 {
                    return 0.0;
                }
                let rest = self.modes().skip(k + 1).map(|(a, e)| factor_ln(a, e, t)).sum::<f64>();
                return (prod.ln() + rest).exp();
            }
        }
        prod
    }

    /// `Z(t) = Σ ln[1 - α sin²(tε/2)]`.
    pub fn log_fidelity(&self, t: f64) -> LogFidelity {
        let mut acc = NeumaierSum::new();
        for (a, e) in self.modes() {
            let z = factor_ln(a, e, t);
            if z == f64::NEG_INFINITY {
                return LogFidelity::LogZero;
            }
            acc.add(z);
        }
        LogFidelity::Finite(acc.value())
    }

    /// Sampling bound for scans of `F` or `Z`. The weighted sum `Σ α ε` sets
    /// the scale of `Z'`, but a mode with small `α` still oscillates at `ε`
    /// and a nearly saturated mode sharpens into spikes of width `~√(1-α)/ε`;
    /// the bound covers all three.
    pub fn frequency_bound(&self) -> f64 {
        let weighted: f64 = self.modes().map(|(a, e)| a * e).sum();
        let sharpest = self
            .modes()
            .map(|(a, e)| e / (1.0 - a).sqrt().max(0.05))
            .fold(0.0, f64::max);
        weighted.max(sharpest)
    }

    pub fn max_epsilon(&self) -> f64 {
        self.epsilon.iter().copied().fold(0.0, f64::max)
    }

    pub fn fidelity_signal(&self) -> ProductFidelity<'_> {
        ProductFidelity(self)
    }

    pub fn log_signal(&self) -> LogFidelitySignal<'_> {
        LogFidelitySignal(self)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::format::to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModeSet = serde_json::from_str(text)?;
        Self::new(raw.alpha, raw.epsilon, raw.length)
    }
}

pub fn read_modes(path: impl AsRef<Path>) -> Result<ModeSet> {
    ModeSet::from_json(&std::fs::read_to_string(path)?)
}

pub fn write_modes(path: impl AsRef<Path>, m: &ModeSet) -> Result<()> {
    std::fs::write(path, m.to_json()?)?;
    Ok(())
}

#[inline]
fn factor_ln(a: f64, e: f64, t: f64) -> f64 {
    let s = (0.5 * t * e).sin();
    let x = a * s * s;
    if x >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (-x).ln_1p()
    }
}

/// Value of `Z(t)`, which is `-∞` exactly when a saturated mode (`α = 1`)
/// sits at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogFidelity {
    Finite(f64),
    LogZero,
}

impl LogFidelity {
    pub fn value(self) -> f64 {
        match self {
            LogFidelity::Finite(z) => z,
            LogFidelity::LogZero => f64::NEG_INFINITY,
        }
    }
}

/// `F(t)` of a mode set as a scannable signal.
#[derive(Debug, Clone, Copy)]
pub struct ProductFidelity<'a>(pub &'a ModeSet);

impl Signal for ProductFidelity<'_> {
    fn value(&self, t: f64) -> f64 {
        self.0.fidelity(t)
    }
    fn frequency_bound(&self) -> f64 {
        self.0.frequency_bound()
    }
    fn level_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// `Z(t) = ln F(t)` of a mode set as a scannable signal.
#[derive(Debug, Clone, Copy)]
pub struct LogFidelitySignal<'a>(pub &'a ModeSet);

impl Signal for LogFidelitySignal<'_> {
    fn value(&self, t: f64) -> f64 {
        self.0.log_fidelity(t).value()
    }
    fn frequency_bound(&self) -> f64 {
        self.0.frequency_bound()
    }
    fn level_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, 0.0)
    }
}

/// `F` on every grid point.
pub fn eval_fidelity_product(m: &ModeSet, grid: &TimeGrid) -> Vec<f64> {
    (0..grid.len()).into_par_iter().map(|i| m.fidelity(grid.time(i))).collect()
}

/// `Z` on every grid point.
pub fn eval_log_fidelity(m: &ModeSet, grid: &TimeGrid) -> Vec<LogFidelity> {
    (0..grid.len()).into_par_iter().map(|i| m.log_fidelity(grid.time(i))).collect()
}

/// Phase-space moments of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub zbar: f64,
    pub var_z: f64,
    pub zprime_sq: f64,
}

fn check_mode(alpha: f64, epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain { value: alpha, reason: "mode moments need 0 <= alpha < 1" });
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain { value: epsilon, reason: "mode energy must be positive" });
    }
    Ok(())
}

/// `z̄ = 2 ln((1+√(1-α))/2)`.
pub fn zbar(alpha: f64) -> f64 {
    let s = (1.0 - alpha).sqrt();
    2.0 * (0.5 * (1.0 + s)).ln()
}

/// `⟨z'²⟩ = ε² (2 - 2s - α)/(2s)` with `s = √(1-α)`, written as
/// `ε² (1-s)²/(2s)` to avoid cancellation at small `α`.
pub fn zprime_sq(alpha: f64, epsilon: f64) -> f64 {
    let s = (1.0 - alpha).sqrt();
    let one_minus_s = alpha / (1.0 + s);
    epsilon * epsilon * one_minus_s * one_minus_s / (2.0 * s)
}

/// `(1/2π) ∫₀^{2π} ln²(1 - α sin²(θ/2)) dθ - z̄²` by adaptive quadrature.
pub fn var_z_quadrature(alpha: f64) -> Result<f64> {
    let f = |th: f64| {
        let s = (0.5 * th).sin();
        let l = (-alpha * s * s).ln_1p();
        l * l
    };
    // integrand is symmetric about π, where it also peaks
    let m2 = 2.0 * integrate(f, 0.0, PI, 0.5 * VAR_QUAD_TOL * TAU, 0.0)? / TAU;
    let z = zbar(alpha);
    Ok((m2 - z * z).max(0.0))
}

/// Moments `(z̄, σ_z², ⟨z'²⟩)` of `z = ln[1 - α sin²(θ/2)]` over a uniform phase.
pub fn mode_moments(alpha: f64, epsilon: f64) -> Result<ModeMoments> {
    check_mode(alpha, epsilon)?;
    Ok(ModeMoments { zbar: zbar(alpha), var_z: var_z_quadrature(alpha)?, zprime_sq: zprime_sq(alpha, epsilon) })
}

/// Real dilogarithm for `x ≤ 1`.
pub fn dilog(x: f64) -> f64 {
    if x == 1.0 {
        return PI * PI / 6.0;
    }
    if x < -1.0 {
        // Li₂(x) = -π²/6 - ½ln²(-x) - Li₂(1/x)
        return -PI * PI / 6.0 - 0.5 * (-x).ln().powi(2) - dilog(1.0 / x);
    }
    if x > 0.5 {
        // Li₂(x) = π²/6 - ln x ln(1-x) - Li₂(1-x)
        return PI * PI / 6.0 - x.ln() * (-x).ln_1p() - dilog(1.0 - x);
    }
    if x < -0.5 {
        // Li₂(x) = -Li₂(x/(x-1)) - ½ln²(1-x), maps into [1/3, 1/2]
        let l = (-x).ln_1p();
        return -dilog(x / (x - 1.0)) - 0.5 * l * l;
    }
    let mut term = x;
    let mut sum = 0.0;
    for k in 1..200 {
        let add = term / (k * k) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        term *= x;
    }
    sum
}

/// Real part of `Li₂(x)` for `x > 1`, where the function sits on its branch cut.
fn dilog_re_above_one(x: f64) -> f64 {
    let l = x.ln();
    PI * PI / 3.0 - 0.5 * l * l - dilog(1.0 / x)
}

/// Closed-form single-mode variance in logarithms and dilogarithms, evaluated
/// with `Li₂` taken just below its cut (`Im Li₂(x - i0) = -π ln x`).
/// Returns `(real part, imaginary part)`; the imaginary part is zero
/// analytically.
pub fn var_z_dilog(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain { value: alpha, reason: "closed form needs 0 < alpha < 1" });
    }
    let s = (1.0 - alpha).sqrt();
    let x1 = 2.0 * (s + 1.0) / alpha;
    let x2 = (2.0 + 2.0 * s - alpha) / alpha;
    let l1s = (1.0 + s).ln();
    let re = -4.0 * l1s * l1s - 4.0 * 2f64.ln() * alpha.ln()
        + 4.0 * (4.0 - 4.0 * s).ln() * l1s
        + 4.0 * dilog_re_above_one(x1)
        - 4.0 * dilog_re_above_one(x2);
    let im = 4.0 * PI * (2.0 / (1.0 + s)).ln() - 4.0 * PI * x1.ln() + 4.0 * PI * x2.ln();
    Ok((re, im))
}

/// Extensive sums over modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiFreeStats {
    #[serde(rename = "mean_logF")]
    pub mean_log_f: f64,
    #[serde(rename = "sigma_Z")]
    pub sigma_z: f64,
    #[serde(rename = "sigma_Zprime")]
    pub sigma_zprime: f64,
}

/// `ln F̄ = Σ z̄_k`, `σ_Z² = Σ σ²_{z_k}`, `σ_Z'² = Σ ⟨z'_k²⟩`, summed in mode order.
pub fn quasifree_stats(m: &ModeSet) -> Result<QuasiFreeStats> {
    for (index, (a, e)) in m.modes().enumerate() {
        if a >= ALPHA_CEILING {
            return Err(Error::InvalidMode { index, alpha: a, epsilon: e });
        }
    }
    let per_mode: Vec<ModeMoments> = m
        .alpha
        .par_iter()
        .zip(m.epsilon.par_iter())
        .map(|(&a, &e)| mode_moments(a, e))
        .collect::<Result<_>>()?;
    let mut logf = NeumaierSum::new();
    let mut var = NeumaierSum::new();
    let mut dvar = NeumaierSum::new();
    for mm in &per_mode {
        logf.add(mm.zbar);
        var.add(mm.var_z);
        dvar.add(mm.zprime_sq);
    }
    Ok(QuasiFreeStats {
        mean_log_f: logf.value(),
        sigma_z: var.value().max(0.0).sqrt(),
        sigma_zprime: dvar.value().max(0.0).sqrt(),
    })
}

fn check_u(u: f64, stats: &QuasiFreeStats) -> Result<()> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain { value: u, reason: "level must lie in (0, 1)" });
    }
    if !(stats.sigma_z > 0.0) {
        return Err(Error::ZeroSpread);
    }
    Ok(())
}

/// `D(u) = (σ_Z'/(π σ_Z)) exp[-(ln u - ln F̄)²/(2σ_Z²)]`, the density of
/// solutions of `ln F(t) = ln u`.
pub fn density_integrable(u: f64, stats: &QuasiFreeStats) -> Result<f64> {
    check_u(u, stats)?;
    let d = (u.ln() - stats.mean_log_f) / stats.sigma_z;
    Ok(stats.sigma_zprime / (PI * stats.sigma_z) * (-0.5 * d * d).exp())
}

/// `ln T_R = ln(π σ_Z/σ_Z') + (ln u - ln F̄)²/(2σ_Z²)`.
pub fn ln_recurrence_time_integrable(u: f64, stats: &QuasiFreeStats) -> Result<f64> {
    check_u(u, stats)?;
    let d = (u.ln() - stats.mean_log_f) / stats.sigma_z;
    Ok((PI * stats.sigma_z / stats.sigma_zprime).ln() + 0.5 * d * d)
}

pub fn recurrence_time_integrable(u: f64, stats: &QuasiFreeStats) -> Result<RecurrenceTime> {
    check_u(u, stats)?;
    if !(stats.sigma_zprime > 0.0) {
        return Ok(RecurrenceTime::Diverges);
    }
    let ln_t = ln_recurrence_time_integrable(u, stats)?;
    if ln_t > LOG_SPACE_THRESHOLD {
        Ok(RecurrenceTime::Log(ln_t))
    } else {
        Ok(RecurrenceTime::Finite(ln_t.exp()))
    }
}
