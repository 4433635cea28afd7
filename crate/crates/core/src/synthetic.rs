//! Seeded random spectra standing in for generic, rationally independent ones.
//!
//! The generator is ChaCha8 from `rand_chacha` 0.9 keyed by
//! `SeedableRng::seed_from_u64(seed)`, with uniform doubles drawn through
//! `rand` 0.9's standard 53-bit conversion. Energies are i.i.d. uniform on
//! `[0, energy_scale]`; a draw containing an exact repeat is discarded and
//! redrawn from the continuing stream.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spectrum::{validate_spectrum, DiscreteSpectrum};
use crate::sum::compensated_sum;
use crate::{Error, Result};

/// Ratio between consecutive weights of the exponential profile.
pub const EXPONENTIAL_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `pₙ = 1/d`.
    Flat,
    /// `pₙ ∝ 0.9ⁿ` in draw order.
    Exponential,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Profile::Flat),
            "exponential" | "exp" => Ok(Profile::Exponential),
            other => Err(Error::InvalidConfig(format!("unknown profile '{other}'"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Flat => "flat",
            Profile::Exponential => "exponential",
        })
    }
}

fn draw_energies(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    loop {
        let energies: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * scale).collect();
        let mut sorted = energies.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[0] < w[1]) {
            return energies;
        }
    }
}

/// `d` levels with seeded uniform energies and the requested weight profile,
/// sorted by energy.
pub fn random_spectrum(d: usize, seed: u64, profile: Profile, energy_scale: f64) -> Result<DiscreteSpectrum> {
    if d < 1 {
        return Err(Error::EmptySpectrum);
    }
    if !(energy_scale > 0.0) || !energy_scale.is_finite() {
        return Err(Error::InvalidConfig(format!("energy scale {energy_scale} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let energies = draw_energies(&mut rng, d, energy_scale);
    let weights: Vec<f64> = match profile {
        Profile::Flat => vec![1.0 / d as f64; d],
        Profile::Exponential => {
            let raw: Vec<f64> = (0..d).map(|n| EXPONENTIAL_RATIO.powi(n as i32)).collect();
            let total = compensated_sum(raw.iter().copied());
            raw.into_iter().map(|w| w / total).collect()
        }
    };
    let mut pairs: Vec<(f64, f64)> = energies.into_iter().zip(weights).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (e, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(validate_spectrum(&e, &w)?.with_label(format!("synthetic d={d} seed={seed} profile={profile}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectral_stats;

    #[test]
    fn single_level() {
        let s = random_spectrum(1, 3, Profile::Flat, 1.0).unwrap();
        assert_eq!(s.dimension(), 1);
        assert_eq!(spectral_stats(&s).mean_fidelity, 1.0);
    }

    #[test]
    fn flat_mean_fidelity() {
        for d in [2, 7, 32, 100] {
            let st = spectral_stats(&random_spectrum(d, 1, Profile::Flat, 1.0).unwrap());
            assert!((st.mean_fidelity * d as f64 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let a = random_spectrum(16, 42, Profile::Exponential, 2.0).unwrap();
        let b = random_spectrum(16, 42, Profile::Exponential, 2.0).unwrap();
        let c = random_spectrum(16, 43, Profile::Exponential, 2.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.energies(), c.energies());
        assert!(a.energies().windows(2).all(|w| w[0] < w[1]));
        assert!(a.energies().iter().all(|&e| (0.0..=2.0).contains(&e)));
        assert!((a.total_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_arguments() {
        assert!(random_spectrum(0, 1, Profile::Flat, 1.0).is_err());
        assert!(random_spectrum(4, 1, Profile::Flat, 0.0).is_err());
        assert!("gaussian".parse::<Profile>().is_err());
        assert_eq!("exponential".parse::<Profile>().unwrap(), Profile::Exponential);
    }
}
