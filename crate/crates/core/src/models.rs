//! Concrete quench systems: the periodic TAM spin chain
//! `H = -Σᵢ (σˣᵢσˣᵢ₊₁ - κ σˣᵢσˣᵢ₊₂ + h σᶻᵢ)` by exact diagonalization, and the
//! transverse-field Ising chain (`κ = 0`) through its free-fermion modes.
//!
//! Basis states are bit strings with site 0 as the least significant bit and
//! bit value 0 meaning `σᶻ = +1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eig::{symmetric_eigendecomposition, DenseMatrix};
use crate::format::fmt_f64;
use crate::quasifree::{quasifree_stats, recurrence_time_integrable, ModeSet};
use crate::recurrence::{recurrence_time_generic, RecurrenceTime};
use crate::spectrum::{degeneracy_collapse, spectral_stats, validate_spectrum, DiscreteSpectrum};
use crate::{Error, Result};

pub const MIN_TAM_SITES: usize = 4;
pub const MAX_TAM_SITES: usize = 12;
/// Sector diagonalization reaches further than the dense cap.
pub const MAX_SECTOR_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchSpec {
    #[serde(rename = "L")]
    pub length: usize,
    pub kappa1: f64,
    pub h1: f64,
    pub kappa2: f64,
    pub h2: f64,
}

impl QuenchSpec {
    pub fn new(length: usize, kappa1: f64, h1: f64, kappa2: f64, h2: f64) -> Self {
        Self { length, kappa1, h1, kappa2, h2 }
    }

    /// Field quench at fixed `κ`.
    pub fn field(length: usize, kappa: f64, h1: f64, h2: f64) -> Self {
        Self::new(length, kappa, h1, kappa, h2)
    }

    fn validate(&self, max_sites: usize) -> Result<()> {
        if self.length < MIN_TAM_SITES || self.length > max_sites {
            return Err(Error::SizeOutOfRange(self.length));
        }
        for v in [self.kappa1, self.h1, self.kappa2, self.h2] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("coupling {v} is not finite")));
            }
        }
        Ok(())
    }
}

#[inline]
fn pair_mask(l: usize, i: usize, r: usize) -> usize {
    (1 << i) | (1 << ((i + r) % l))
}

/// Off-diagonal moves `(flip mask, amplitude)` of the xx terms. At `L = 4` the
/// next-nearest pairs coincide and appear twice, as in the periodic sum.
fn xx_moves(l: usize, kappa: f64) -> Vec<(usize, f64)> {
    let mut moves = Vec::with_capacity(2 * l);
    for i in 0..l {
        moves.push((pair_mask(l, i, 1), -1.0));
        moves.push((pair_mask(l, i, 2), kappa));
    }
    moves
}

#[inline]
fn field_energy(state: usize, l: usize, h: f64) -> f64 {
    let down = state.count_ones() as f64;
    -h * (l as f64 - 2.0 * down)
}

/// Dense `2^L × 2^L` Hamiltonian, exactly symmetric.
pub fn build_tam(l: usize, kappa: f64, h: f64) -> Result<DenseMatrix> {
    if !(MIN_TAM_SITES..=MAX_TAM_SITES).contains(&l) {
        return Err(Error::SizeOutOfRange(l));
    }
    let dim = 1usize << l;
    let moves = xx_moves(l, kappa);
    let mut m = DenseMatrix::zeros(dim);
    for a in 0..dim {
        m.set(a, a, field_energy(a, l, h));
        for &(mask, amp) in &moves {
            m.add(a ^ mask, a, amp);
        }
    }
    // accumulation order is the same for (a, b) and (b, a); mirror anyway
    for i in 0..dim {
        for j in 0..i {
            let v = m.get(i, j);
            m.set(j, i, v);
        }
    }
    Ok(m)
}

/// `⟨ψ| ∏ σᶻ |ψ⟩` in the full basis.
pub fn parity_expectation(psi: &[f64]) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(s, &c)| if s.count_ones() % 2 == 0 { c * c } else { -c * c })
        .sum()
}

fn rotate(state: usize, l: usize) -> usize {
    ((state << 1) | (state >> (l - 1))) & ((1 << l) - 1)
}

/// Zero-momentum, even-parity sector of the translation-invariant chain.
#[derive(Debug, Clone)]
pub struct Sector {
    length: usize,
    reps: Vec<usize>,
    periods: Vec<usize>,
    index: std::collections::HashMap<usize, usize>,
}

impl Sector {
    pub fn new(l: usize) -> Result<Self> {
        if !(MIN_TAM_SITES..=MAX_SECTOR_SITES).contains(&l) {
            return Err(Error::SizeOutOfRange(l));
        }
        let mut reps = Vec::new();
        let mut periods = Vec::new();
        for s in 0usize..(1 << l) {
            if s.count_ones() % 2 != 0 {
                continue;
            }
            let mut t = s;
            let mut period = 0;
            let mut is_rep = true;
            loop {
                t = rotate(t, l);
                period += 1;
                if t < s {
                    is_rep = false;
                    break;
                }
                if t == s {
                    break;
                }
            }
            if is_rep {
                reps.push(s);
                periods.push(period);
            }
        }
        let index = reps.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        Ok(Self { length: l, reps, periods, index })
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    fn representative(&self, s: usize) -> usize {
        let mut best = s;
        let mut t = s;
        for _ in 1..self.length {
            t = rotate(t, self.length);
            best = best.min(t);
        }
        best
    }

    /// Hamiltonian restricted to the sector in the normalized orbit basis.
    pub fn hamiltonian(&self, kappa: f64, h: f64) -> DenseMatrix {
        let l = self.length;
        let moves = xx_moves(l, kappa);
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n);
        for (a, &ra) in self.reps.iter().enumerate() {
            m.set(a, a, field_energy(ra, l, h));
            for &(mask, amp) in &moves {
                let rb = self.representative(ra ^ mask);
                // k = 0 states with a vanishing norm cannot occur, so rb is present
                let b = self.index[&rb];
                let ratio = (self.periods[a] as f64 / self.periods[b] as f64).sqrt();
                m.add(b, a, amp * ratio);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    /// Embed a sector vector into the full `2^L` basis.
    pub fn embed(&self, coeffs: &[f64]) -> Vec<f64> {
        let l = self.length;
        let mut full = vec![0.0; 1 << l];
        for ((&r, &p), &c) in self.reps.iter().zip(&self.periods).zip(coeffs) {
            let amp = c / (p as f64).sqrt();
            let mut t = r;
            for _ in 0..p {
                full[t] = amp;
                t = rotate(t, l);
            }
        }
        full
    }
}

/// How a quench is diagonalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdMethod {
    /// Full `2^L` Hilbert space.
    #[default]
    Dense,
    /// Zero-momentum, even-parity sector, which contains the ground state
    /// for `h > 0` and is preserved by the post-quench Hamiltonian.
    Sector,
}

fn select_ground(values: &[f64], deg_tol: f64) -> usize {
    if values.len() > 1 {
        let gap = values[1] - values[0];
        if gap <= deg_tol * values[0].abs().max(1.0) {
            log::warn!(
                "ground state is degenerate within {deg_tol} (gap {gap:e}); using the lowest-index eigenvector"
            );
        }
    }
    0
}

fn assemble(energies: Vec<f64>, weights: Vec<f64>, deg_tol: f64, label: String) -> Result<DiscreteSpectrum> {
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        log::warn!("quench weights sum to {total}, off by more than 1e-10");
    }
    let raw = validate_spectrum(&energies, &weights)?;
    Ok(degeneracy_collapse(&raw, deg_tol).with_label(label))
}

/// Spectrum `(Eₙ, pₙ)` of the pre-quench ground state under the post-quench
/// Hamiltonian, diagonalized in the full Hilbert space.
pub fn quench_spectrum(spec: &QuenchSpec, deg_tol: f64) -> Result<DiscreteSpectrum> {
    quench_spectrum_with(spec, deg_tol, EdMethod::Dense)
}

pub fn quench_spectrum_with(spec: &QuenchSpec, deg_tol: f64, method: EdMethod) -> Result<DiscreteSpectrum> {
    if !(deg_tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("degeneracy tolerance {deg_tol} must be >= 0")));
    }
    let label = format!(
        "tam L={} kappa1={} h1={} kappa2={} h2={}",
        spec.length, spec.kappa1, spec.h1, spec.kappa2, spec.h2
    );
    match method {
        EdMethod::Dense => {
            spec.validate(MAX_TAM_SITES)?;
            let pre = symmetric_eigendecomposition(&build_tam(spec.length, spec.kappa1, spec.h1)?)?;
            let g = select_ground(&pre.values, deg_tol);
            let psi = pre.vector(g).to_vec();
            let parity = parity_expectation(&psi);
            if (parity.abs() - 1.0).abs() > 1e-8 {
                log::warn!("pre-quench ground state has mixed parity ({parity})");
            }
            drop(pre);
            let post = symmetric_eigendecomposition(&build_tam(spec.length, spec.kappa2, spec.h2)?)?;
            let weights = post.weights(&psi);
            assemble(post.values, weights, deg_tol, label)
        }
        EdMethod::Sector => {
            spec.validate(MAX_SECTOR_SITES)?;
            let sector = Sector::new(spec.length)?;
            let pre = symmetric_eigendecomposition(&sector.hamiltonian(spec.kappa1, spec.h1))?;
            let g = select_ground(&pre.values, deg_tol);
            let psi = pre.vector(g).to_vec();
            drop(pre);
            let post = symmetric_eigendecomposition(&sector.hamiltonian(spec.kappa2, spec.h2))?;
            let weights = post.weights(&psi);
            assemble(post.values, weights, deg_tol, label)
        }
    }
}

/// One momentum of the Bogoliubov diagonalization of the transverse-field
/// Ising chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovMode {
    pub k: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub alpha: f64,
    /// Single quasiparticle energy `2√(sin²k + (h₂ + cos k)²)`.
    pub lambda: f64,
}

fn bogoliubov(k: f64, h1: f64, h2: f64) -> BogoliubovMode {
    let (s, c) = k.sin_cos();
    let theta1 = (-s).atan2(h1 + c);
    let theta2 = (-s).atan2(h2 + c);
    let alpha = (theta2 - theta1).sin().powi(2);
    let lambda = 2.0 * (s * s + (h2 + c) * (h2 + c)).sqrt();
    BogoliubovMode { k, theta1, theta2, alpha, lambda }
}

fn check_tfim(l: usize, h1: f64, h2: f64) -> Result<()> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::SizeOutOfRange(l));
    }
    if !h1.is_finite() || !h2.is_finite() {
        return Err(Error::InvalidConfig("fields must be finite".into()));
    }
    Ok(())
}

/// All `L` momenta `k = π(2n+1)/L`, ascending over `(0, 2π)`. The upper half is
/// the mirror image `k → 2π - k`, `θ → -θ` of the lower half.
pub fn bogoliubov_table(l: usize, h1: f64, h2: f64) -> Result<Vec<BogoliubovMode>> {
    check_tfim(l, h1, h2)?;
    let lower: Vec<BogoliubovMode> =
        (0..l / 2).map(|n| bogoliubov(PI * (2 * n + 1) as f64 / l as f64, h1, h2)).collect();
    let mut table = lower.clone();
    table.extend(lower.iter().rev().map(|m| BogoliubovMode {
        k: 2.0 * PI - m.k,
        theta1: -m.theta1,
        theta2: -m.theta2,
        ..*m
    }));
    Ok(table)
}

/// Quench mode set of the transverse-field Ising chain. The pre-quench ground
/// state pairs momenta `±k`; each pair contributes one factor with amplitude
/// `α_k` oscillating at the pair energy `ε_k = 2Λ_k`, giving `L/2` modes.
pub fn tfim_modes(l: usize, h1: f64, h2: f64) -> Result<ModeSet> {
    let table = bogoliubov_table(l, h1, h2)?;
    let pairs = &table[..l / 2];
    ModeSet::new(pairs.iter().map(|m| m.alpha).collect(), pairs.iter().map(|m| 2.0 * m.lambda).collect(), l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepModel {
    Tam,
    Tfim,
}

impl FromStr for SweepModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tam" => Ok(SweepModel::Tam),
            "tfim" => Ok(SweepModel::Tfim),
            other => Err(Error::InvalidConfig(format!("unknown model '{other}'"))),
        }
    }
}

impl fmt::Display for SweepModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepModel::Tam => "tam",
            SweepModel::Tfim => "tfim",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: SweepModel,
    #[serde(rename = "L")]
    pub length: usize,
    pub kappa: f64,
    pub delta_h: f64,
    pub u: f64,
    pub deg_tol: f64,
    pub method: EdMethod,
}

impl SweepConfig {
    pub fn new(model: SweepModel, length: usize, kappa: f64, delta_h: f64, u: f64) -> Self {
        let method = if model == SweepModel::Tam { EdMethod::Sector } else { EdMethod::Dense };
        Self { model, length, kappa, delta_h, u, deg_tol: 1e-10, method }
    }
}

/// One grid point of a critical sweep. For the TAM chain `mean_value` is `F̄`
/// and `spread` is `ΔE`; for the Ising modes they are `ln F̄` and `σ_Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h1: f64,
    pub h2: f64,
    pub kappa: f64,
    #[serde(rename = "L")]
    pub length: usize,
    pub u: f64,
    pub mean_value: f64,
    pub spread: f64,
    pub sigma_zprime: Option<f64>,
    pub recurrence: RecurrenceTime,
}

impl SweepRow {
    pub fn recurrence_value(&self) -> f64 {
        self.recurrence.value()
    }
}

pub const SWEEP_CSV_HEADER: &str = "h1,h2,kappa,L,u,mean_fidelity_or_meanlogF,deltaE_or_sigmaZ,sigmaZprime,TR";

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !lo.is_finite() || !hi.is_finite() || (n > 1 && !(hi > lo)) {
        return Err(Error::InvalidConfig(format!("bad grid [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * step }).collect())
}

fn sweep_point(cfg: &SweepConfig, h1: f64) -> Result<SweepRow> {
    let h2 = h1 + cfg.delta_h;
    match cfg.model {
        SweepModel::Tam => {
            let spec = QuenchSpec::field(cfg.length, cfg.kappa, h1, h2);
            let s = quench_spectrum_with(&spec, cfg.deg_tol, cfg.method)?;
            let st = spectral_stats(&s);
            let tr = recurrence_time_generic(cfg.u, &st)?;
            Ok(SweepRow {
                h1,
                h2,
                kappa: cfg.kappa,
                length: cfg.length,
                u: cfg.u,
                mean_value: st.mean_fidelity,
                spread: st.delta_e,
                sigma_zprime: None,
                recurrence: tr,
            })
        }
        SweepModel::Tfim => {
            let m = tfim_modes(cfg.length, h1, h2)?;
            let st = quasifree_stats(&m)?;
            let tr = recurrence_time_integrable(cfg.u, &st)?;
            Ok(SweepRow {
                h1,
                h2,
                kappa: 0.0,
                length: cfg.length,
                u: cfg.u,
                mean_value: st.mean_log_f,
                spread: st.sigma_z,
                sigma_zprime: Some(st.sigma_zprime),
                recurrence: tr,
            })
        }
    }
}

/// Recurrence time at level `u` for quenches `h₁ → h₁ + δh` over a grid of
/// `h₁`, one row per grid point in grid order.
pub fn critical_sweep(cfg: &SweepConfig, h1_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if cfg.model == SweepModel::Tfim && cfg.kappa != 0.0 {
        log::warn!("kappa={} ignored: the free-fermion path is exact only at kappa=0", cfg.kappa);
    }
    if !cfg.delta_h.is_finite() {
        return Err(Error::InvalidConfig("delta_h must be finite".into()));
    }
    h1_grid.par_iter().map(|&h1| sweep_point(cfg, h1)).collect()
}

/// Grid index of the smallest recurrence time.
pub fn sweep_minimum(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| !matches!(r.recurrence, RecurrenceTime::Diverges))
        .min_by(|a, b| a.1.recurrence.ln().total_cmp(&b.1.recurrence.ln()))
        .map(|(i, _)| i)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let zp = r.sigma_zprime.map(fmt_f64).unwrap_or_default();
        let tr = match r.recurrence {
            RecurrenceTime::Diverges => String::new(),
            other => fmt_f64(other.value()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.h1),
            fmt_f64(r.h2),
            fmt_f64(r.kappa),
            r.length,
            fmt_f64(r.u),
            fmt_f64(r.mean_value),
            fmt_f64(r.spread),
            zp,
            tr
        ));
    }
    out
}
