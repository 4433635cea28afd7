//! Recurrence-time toolkit for quantum fidelity signals.
//!
//! A pure state `|ψ⟩ = Σ cₙ|n⟩` evolving under `H|n⟩ = Eₙ|n⟩` has fidelity
//! `F(t) = |Σ pₙ e^{-iEₙt}|²` with `pₙ = |cₙ|²`. The crate computes the moments
//! of such spectra, closed-form densities of the solutions of `F(t) = u`, and
//! counts those solutions directly on long time windows. Spectra come from
//! user files, random ensembles, exact diagonalization of small spin chains or
//! free-fermion mode tables.

// NaN must fail these checks, hence `!(x > 0.0)` over `x <= 0.0`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod crossings;
pub mod eig;
pub mod error;
pub mod format;
pub mod models;
pub mod quad;
pub mod quasifree;
pub mod recurrence;
pub mod signal;
pub mod spectrum;
pub mod sum;
pub mod synthetic;

pub use crossings::{scan_crossings, CrossingReport, ScanConfig};
pub use error::{Error, ErrorKind, Result};
pub use quasifree::{ModeSet, QuasiFreeStats};
pub use recurrence::RecurrenceTime;
pub use signal::{Signal, TimeGrid};
pub use spectrum::{spectral_stats, validate_spectrum, DiscreteSpectrum, SpectralStats};
