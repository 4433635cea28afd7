//! Recurrences of a linear flow on the N-torus, `φⱼ(t) = ωⱼ t mod 2π`, into the
//! box `∏[0, Δφⱼ]`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Simulation steps must resolve the fastest box crossing by this factor.
pub const STEP_FRACTION: f64 = 0.05;
const SEGMENT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub omegas: Vec<f64>,
    pub windows: Vec<f64>,
}

impl TorusSpec {
    pub fn new(omegas: Vec<f64>, windows: Vec<f64>) -> Result<Self> {
        if omegas.len() != windows.len() {
            return Err(Error::LengthMismatch { energies: omegas.len(), weights: windows.len() });
        }
        if omegas.is_empty() {
            return Err(Error::InvalidConfig("torus needs at least one degree of freedom".into()));
        }
        for (i, &w) in omegas.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Domain { value: w, reason: "frequencies must be positive" });
            }
            let dphi = windows[i];
            if !(dphi > 0.0 && dphi < TAU) {
                return Err(Error::Domain { value: dphi, reason: "box sides must lie in (0, 2π)" });
            }
        }
        Ok(Self { omegas, windows })
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.omegas.len()
    }

    /// Largest step accepted by [`torus_flow_simulate`].
    pub fn max_step(&self) -> f64 {
        STEP_FRACTION
            * self.omegas.iter().zip(&self.windows).map(|(w, d)| d / w).fold(f64::INFINITY, f64::min)
    }
}

/// `T_R = (∏ 2π/Δφⱼ - 1) / Σ ωⱼ/Δφⱼ`.
pub fn torus_recurrence_time(spec: &TorusSpec) -> f64 {
    let volume_ratio: f64 = spec.windows.iter().map(|d| TAU / d).product();
    let flux: f64 = spec.omegas.iter().zip(&spec.windows).map(|(w, d)| w / d).sum();
    (volume_ratio - 1.0) / flux
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSimulation {
    pub entries: u64,
    /// Mean time spent outside the box between consecutive entries.
    pub empirical_tr: f64,
    /// `horizon / entries`, the full mean cycle including time inside.
    pub mean_cycle: f64,
    pub time_outside: f64,
    pub horizon: f64,
    pub step: f64,
}

fn inside(spec: &TorusSpec, t: f64) -> bool {
    spec.omegas.iter().zip(&spec.windows).all(|(w, d)| (w * t).rem_euclid(TAU) < *d)
}

/// Fixed-step flow from `φ = 0`, counting outside→inside transitions. Each
/// sample stands for one step of time.
pub fn torus_flow_simulate(spec: &TorusSpec, horizon: f64, step: f64) -> Result<TorusSimulation> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::NonPositiveStep(step));
    }
    let bound = spec.max_step();
    if step > bound {
        return Err(Error::InvalidConfig(format!("step {step} exceeds {bound} = 0.05 min(Δφ/ω)")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidConfig(format!("horizon {horizon} must be positive")));
    }
    let analytic = torus_recurrence_time(spec);
    if horizon < 10.0 * analytic {
        log::warn!("horizon {horizon} is shorter than 10 analytic recurrence times ({analytic}); statistics will be poor");
    }
    let n = (horizon / step).floor() as usize;
    let segments = n.div_ceil(SEGMENT);
    let (entries, outside) = (0..segments)
        .into_par_iter()
        .map(|s| {
            let (a, b) = (s * SEGMENT, ((s + 1) * SEGMENT).min(n));
            let mut prev = if a == 0 { true } else { inside(spec, (a - 1) as f64 * step) };
            let (mut entries, mut outside) = (0u64, 0u64);
            for i in a..b {
                let now = inside(spec, i as f64 * step);
                if now && !prev {
                    entries += 1;
                }
                if !now {
                    outside += 1;
                }
                prev = now;
            }
            (entries, outside)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let time_outside = outside as f64 * step;
    let span = n as f64 * step;
    let (empirical_tr, mean_cycle) = if entries > 0 {
        (time_outside / entries as f64, span / entries as f64)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(TorusSimulation { entries, empirical_tr, mean_cycle, time_outside, horizon: span, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_examples() {
        let one = TorusSpec::new(vec![1.0], vec![PI]).unwrap();
        assert!((torus_recurrence_time(&one) - PI).abs() < 1e-15);
        let two = TorusSpec::new(vec![1.0, 2f64.sqrt()], vec![0.5, 0.5]).unwrap();
        let t = torus_recurrence_time(&two);
        assert!((t - (TAU * TAU / 0.25 - 1.0) / (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((t - 32.50).abs() < 0.01);
        let nearly_full = TorusSpec::new(vec![1.0, 1.5], vec![TAU - 1e-9, TAU - 1e-9]).unwrap();
        assert!(torus_recurrence_time(&nearly_full) < 1e-8);
    }

    #[test]
    fn small_box_asymptotics() {
        let eps = 1e-3;
        let n = 4;
        let spec = TorusSpec::new(vec![1.0, 2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt()], vec![eps; n]).unwrap();
        let sum: f64 = spec.omegas.iter().sum();
        let approx = eps * ((TAU / eps).ln() * n as f64).exp() / sum;
        assert!((torus_recurrence_time(&spec) / approx - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(TorusSpec::new(vec![1.0], vec![TAU]).is_err());
        assert!(TorusSpec::new(vec![-1.0], vec![1.0]).is_err());
        assert!(TorusSpec::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(TorusSpec::new(vec![], vec![]).is_err());
        let one = TorusSpec::new(vec![1.0], vec![PI]).unwrap();
        assert!(torus_flow_simulate(&one, 100.0, 1.0).is_err());
        assert!(torus_flow_simulate(&one, 100.0, 0.0).is_err());
    }

    #[test]
    fn single_rotation() {
        let one = TorusSpec::new(vec![1.0], vec![PI]).unwrap();
        let sim = torus_flow_simulate(&one, 1000.0 * TAU, 1e-3).unwrap();
        assert!((sim.empirical_tr / PI - 1.0).abs() < 0.01, "{}", sim.empirical_tr);
        assert!((sim.entries as i64 - 999).abs() <= 1);
    }

    #[test]
    fn permutation_symmetry() {
        let a = TorusSpec::new(vec![1.0, 3f64.sqrt(), 0.7], vec![0.4, 1.1, 0.9]).unwrap();
        let b = TorusSpec::new(vec![0.7, 1.0, 3f64.sqrt()], vec![0.9, 0.4, 1.1]).unwrap();
        let (x, y) = (torus_recurrence_time(&a), torus_recurrence_time(&b));
        assert!((x - y).abs() <= 1e-13 * x);
    }
}
