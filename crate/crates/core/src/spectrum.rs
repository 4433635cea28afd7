//! Discrete spectra with occupation weights, their moments, and fidelity
//! time series `F(t) = |Σ p_n e^{-i E_n t}|²`.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::signal::{Signal, TimeGrid};
use crate::sum::NeumaierSum;
use crate::{Error, Result};

/// Weights below this are dropped at validation.
pub const WEIGHT_FLOOR: f64 = 1e-16;
/// Slack allowed on `Σ p_n ≤ 1`.
pub const NORMALIZATION_SLACK: f64 = 1e-12;
/// Default merge tolerance for [`degeneracy_collapse`], relative to the spectral width.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;
/// Default number of phasor rotations between direct re-evaluations.
pub const DEFAULT_RESYNC: usize = 1024;

/// Energies `E_n` with occupation weights `p_n = ‖Π_n ψ‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum {
    energies: Vec<f64>,
    weights: Vec<f64>,
    label: Option<String>,
}

impl DiscreteSpectrum {
    /// Validate raw lists; see [`validate_spectrum`].
    pub fn new(energies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_spectrum(&energies, &weights)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Number of populated levels `d`.
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().copied().collect::<NeumaierSum>().value()
    }

    /// `max E_n - min E_n` over populated levels.
    pub fn spectral_width(&self) -> f64 {
        let (lo, hi) = self
            .energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        hi - lo
    }

    /// `F(0) = (Σ p_n)²`.
    pub fn initial_fidelity(&self) -> f64 {
        let m = self.total_weight();
        m * m
    }

    /// Same levels with energies sorted ascending.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.dimension()).collect();
        idx.sort_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]));
        Self {
            energies: idx.iter().map(|&i| self.energies[i]).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
            label: self.label.clone(),
        }
    }

    /// Direct evaluation of the survival amplitude `χ(t) = Σ p_n e^{-i E_n t}`.
    pub fn amplitude(&self, t: f64) -> (f64, f64) {
        let mut re = NeumaierSum::new();
        let mut im = NeumaierSum::new();
        for (&e, &p) in self.energies.iter().zip(&self.weights) {
            let (s, c) = (e * t).sin_cos();
            re.add(p * c);
            im.add(-p * s);
        }
        (re.value(), im.value())
    }

    /// Direct evaluation of `F(t)`.
    pub fn fidelity(&self, t: f64) -> f64 {
        let (re, im) = self.amplitude(t);
        re * re + im * im
    }

    /// Fast evaluator with the default resync interval.
    pub fn evaluator(&self) -> FidelityEvaluator<'_> {
        FidelityEvaluator::new(self, DEFAULT_RESYNC)
    }
}

/// Check raw energy/weight lists and build a spectrum.
///
/// Entries with weight below [`WEIGHT_FLOOR`] are dropped; the surviving
/// weights are kept bit-for-bit.
pub fn validate_spectrum(energies: &[f64], weights: &[f64]) -> Result<DiscreteSpectrum> {
    if energies.is_empty() && weights.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if energies.len() != weights.len() {
        return Err(Error::LengthMismatch { energies: energies.len(), weights: weights.len() });
    }
    if let Some(index) = energies.iter().position(|e| !e.is_finite()) {
        return Err(Error::NonFinite { what: "energy", index });
    }
    if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite { what: "weight", index });
    }
    if let Some(index) = weights.iter().position(|&w| w < 0.0) {
        return Err(Error::NegativeWeight { index, value: weights[index] });
    }
    let total = weights.iter().copied().collect::<NeumaierSum>().value();
    if total > 1.0 + NORMALIZATION_SLACK {
        return Err(Error::WeightOverflow { total });
    }
    let (energies, weights): (Vec<f64>, Vec<f64>) = energies
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w >= WEIGHT_FLOOR)
        .map(|(&e, &w)| (e, w))
        .unzip();
    if energies.is_empty() {
        return Err(Error::NoPopulatedLevel);
    }
    Ok(DiscreteSpectrum { energies, weights, label: None })
}

/// Moments of the squared-weight ensemble `ν_n = p_n² / Σ p²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    /// `D = Σ p²`.
    pub moment_d: f64,
    /// `E = Σ p² E_n`.
    pub moment_e: f64,
    /// `F = Σ p² E_n²`.
    pub moment_f: f64,
    /// `Δ = DF - E²`.
    pub delta: f64,
    /// Infinite-time average of the fidelity, equal to `D`.
    pub mean_fidelity: f64,
    /// Energy spread under `ν`, `√(F/D - (E/D)²)`.
    #[serde(rename = "delta_E")]
    pub delta_e: f64,
    pub total_weight: f64,
    pub spectral_width: f64,
}

impl SpectralStats {
    /// Effective number of populated levels, `1/F̄`.
    pub fn effective_dimension(&self) -> f64 {
        1.0 / self.mean_fidelity
    }
}

/// Moments `D, E, F`, `Δ`, `F̄` and `ΔE`.
///
/// `ΔE` and `Δ` are computed from the centred second moment, which equals
/// `F/D - (E/D)²` but does not cancel catastrophically for spectra with a
/// large common offset.
pub fn spectral_stats(s: &DiscreteSpectrum) -> SpectralStats {
    let mut d = NeumaierSum::new();
    let mut e = NeumaierSum::new();
    let mut f = NeumaierSum::new();
    for (&en, &p) in s.energies.iter().zip(&s.weights) {
        let q = p * p;
        d.add(q);
        e.add(q * en);
        f.add(q * en * en);
    }
    let (d, e, f) = (d.value(), e.value(), f.value());
    let mean = e / d;
    let var = s
        .energies
        .iter()
        .zip(&s.weights)
        .map(|(&en, &p)| p * p * (en - mean) * (en - mean))
        .collect::<NeumaierSum>()
        .value()
        / d;
    let var = var.max(0.0);
    SpectralStats {
        moment_d: d,
        moment_e: e,
        moment_f: f,
        delta: d * d * var,
        mean_fidelity: d,
        delta_e: var.sqrt(),
        total_weight: s.total_weight(),
        spectral_width: s.spectral_width(),
    }
}

/// Merge levels closer than `tol · spectral_width` (transitively, along the
/// sorted energy list). Merged weight is the sum, merged energy the
/// weight-averaged energy. Output is sorted by energy.
pub fn degeneracy_collapse(s: &DiscreteSpectrum, tol: f64) -> DiscreteSpectrum {
    let sorted = s.sorted();
    let gap = tol.max(0.0) * sorted.spectral_width();
    let mut energies = Vec::with_capacity(sorted.dimension());
    let mut weights = Vec::with_capacity(sorted.dimension());
    let mut group_w = NeumaierSum::new();
    let mut group_we = NeumaierSum::new();
    let mut last = f64::NAN;
    let mut members = 0usize;
    let mut first_e = 0.0;
    for (&e, &p) in sorted.energies.iter().zip(&sorted.weights) {
        if members > 0 && e - last > gap {
            flush(&mut energies, &mut weights, &group_w, &group_we, members, first_e);
            group_w = NeumaierSum::new();
            group_we = NeumaierSum::new();
            members = 0;
        }
        if members == 0 {
            first_e = e;
        }
        group_w.add(p);
        group_we.add(p * e);
        members += 1;
        last = e;
    }
    flush(&mut energies, &mut weights, &group_w, &group_we, members, first_e);
    DiscreteSpectrum { energies, weights, label: s.label.clone() }
}

fn flush(
    energies: &mut Vec<f64>,
    weights: &mut Vec<f64>,
    w: &NeumaierSum,
    we: &NeumaierSum,
    members: usize,
    first_e: f64,
) {
    if members == 0 {
        return;
    }
    let total = w.value();
    // single members keep their energy bit-for-bit
    let e = if members == 1 { first_e } else { we.value() / total };
    energies.push(e);
    weights.push(total);
}

/// Fidelity sampler using per-level phasor rotation.
///
/// Every `resync` samples (counted in global grid indices) the phasors are
/// recomputed directly, which bounds rotation drift and makes the output for a
/// given index independent of how the grid is partitioned.
#[derive(Debug, Clone, Copy)]
pub struct FidelityEvaluator<'a> {
    spectrum: &'a DiscreteSpectrum,
    resync: usize,
}

impl<'a> FidelityEvaluator<'a> {
    pub fn new(spectrum: &'a DiscreteSpectrum, resync: usize) -> Self {
        Self { spectrum, resync: resync.max(1) }
    }

    pub fn spectrum(&self) -> &DiscreteSpectrum {
        self.spectrum
    }

    pub fn resync(&self) -> usize {
        self.resync
    }
}

impl Signal for FidelityEvaluator<'_> {
    fn value(&self, t: f64) -> f64 {
        self.spectrum.fidelity(t)
    }

    fn frequency_bound(&self) -> f64 {
        self.spectrum.spectral_width()
    }

    fn level_range(&self) -> (f64, f64) {
        (0.0, self.spectrum.initial_fidelity())
    }

    fn fill(&self, grid: &TimeGrid, first: usize, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let s = self.spectrum;
        let d = s.dimension();
        let (step_re, step_im): (Vec<f64>, Vec<f64>) = s
            .energies
            .iter()
            .map(|&e| {
                let (sn, cs) = (e * grid.step()).sin_cos();
                (cs, -sn)
            })
            .unzip();
        let mut z_re = vec![0.0; d];
        let mut z_im = vec![0.0; d];
        let sync_at = |index: usize, z_re: &mut [f64], z_im: &mut [f64]| {
            let t = grid.time(index);
            for n in 0..d {
                let (sn, cs) = (s.energies[n] * t).sin_cos();
                z_re[n] = cs;
                z_im[n] = -sn;
            }
        };
        let rotate = |z_re: &mut [f64], z_im: &mut [f64]| {
            for n in 0..d {
                let (a, b) = (z_re[n], z_im[n]);
                z_re[n] = a * step_re[n] - b * step_im[n];
                z_im[n] = a * step_im[n] + b * step_re[n];
            }
        };
        let anchor = first - first % self.resync;
        sync_at(anchor, &mut z_re, &mut z_im);
        for _ in anchor..first {
            rotate(&mut z_re, &mut z_im);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let g = first + i;
            if i > 0 {
                if g.is_multiple_of(self.resync) {
                    sync_at(g, &mut z_re, &mut z_im);
                } else {
                    rotate(&mut z_re, &mut z_im);
                }
            }
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for n in 0..d {
                re.add(s.weights[n] * z_re[n]);
                im.add(s.weights[n] * z_im[n]);
            }
            let (re, im) = (re.value(), im.value());
            *o = re * re + im * im;
        }
    }
}

/// Direct evaluation of `F` at every grid point.
pub fn eval_fidelity_reference(s: &DiscreteSpectrum, grid: &TimeGrid) -> Vec<f64> {
    (0..grid.len()).map(|i| s.fidelity(grid.time(i))).collect()
}

/// Fast-path evaluation of `F` on a grid, chunked across the rayon pool.
/// Output is bit-identical to a serial fill for any chunking.
pub fn eval_fidelity(s: &DiscreteSpectrum, grid: &TimeGrid, resync: usize) -> Vec<f64> {
    let ev = FidelityEvaluator::new(s, resync);
    let mut out = vec![0.0; grid.len()];
    let chunk = ev.resync() * 16;
    out.par_chunks_mut(chunk).enumerate().for_each(|(c, slice)| ev.fill(grid, c * chunk, slice));
    out
}

/// On-disk spectrum document: `{"energies": [...], "weights": [...], "label": "..."}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDocument {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl From<&DiscreteSpectrum> for SpectrumDocument {
    fn from(s: &DiscreteSpectrum) -> Self {
        Self { energies: s.energies.clone(), weights: s.weights.clone(), label: s.label.clone() }
    }
}

impl SpectrumDocument {
    /// Parse a document. Unknown top-level keys are reported with a warning
    /// and otherwise ignored.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)?;
        for key in map.keys() {
            if !matches!(key.as_str(), "energies" | "weights" | "label") {
                log::warn!("spectrum document: ignoring unknown key {key:?}");
            }
        }
        map.retain(|k, _| matches!(k.as_str(), "energies" | "weights" | "label"));
        Ok(serde_json::from_value(serde_json::Value::Object(map.into_iter().collect()))?)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::format::to_json_string(self)
    }

    pub fn into_spectrum(self) -> Result<DiscreteSpectrum> {
        let s = validate_spectrum(&self.energies, &self.weights)?;
        Ok(match self.label {
            Some(l) => s.with_label(l),
            None => s,
        })
    }
}

pub fn read_spectrum(path: impl AsRef<Path>) -> Result<DiscreteSpectrum> {
    SpectrumDocument::from_json(&std::fs::read_to_string(path)?)?.into_spectrum()
}

pub fn write_spectrum(path: impl AsRef<Path>, s: &DiscreteSpectrum) -> Result<()> {
    std::fs::write(path, SpectrumDocument::from(s).to_json()?)?;
    Ok(())
}
