//! Uniform time grids and the sampled-signal abstraction consumed by the
//! crossing scanner.

use crate::{Error, Result};

/// Uniform grid `t_i = start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::NonPositiveStep(step));
        }
        if !start.is_finite() {
            return Err(Error::InvalidConfig(format!("grid start {start} is not finite")));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering `[start, end]` with both endpoints included and a step no
    /// larger than `max_step`.
    pub fn covering(start: f64, end: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) || !max_step.is_finite() {
            return Err(Error::NonPositiveStep(max_step));
        }
        let span = end - start;
        if !(span > 0.0) {
            return Err(Error::InvalidConfig(format!("empty time window [{start}, {end}]")));
        }
        let intervals = (span / max_step).ceil().max(1.0);
        if intervals > 1e12 {
            return Err(Error::InvalidConfig(format!("window needs {intervals} samples")));
        }
        let intervals = intervals as usize;
        Self::new(start, span / intervals as f64, intervals + 1)
    }

    #[inline]
    pub fn time(&self, index: usize) -> f64 {
        self.start + index as f64 * self.step
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> f64 {
        self.time(self.len.saturating_sub(1))
    }
}

/// A real signal that can be sampled on a grid and evaluated pointwise.
///
/// `fill` must be index-pure: the value written for global index `i` may depend
/// on the grid and `i` only, never on where the requested slice starts. The
/// scanner relies on this to make chunked and serial scans bit-identical.
pub trait Signal: Sync {
    /// Reference (direct) evaluation.
    fn value(&self, t: f64) -> f64;

    /// Bound on the fastest angular frequency present in the signal.
    fn frequency_bound(&self) -> f64;

    /// Closed range of levels the signal can attain.
    fn level_range(&self) -> (f64, f64);

    /// Write samples for global indices `first..first + out.len()`.
    fn fill(&self, grid: &TimeGrid, first: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.value(grid.time(first + i));
        }
    }
}

impl<S: Signal + ?Sized> Signal for &S {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn frequency_bound(&self) -> f64 {
        (**self).frequency_bound()
    }
    fn level_range(&self) -> (f64, f64) {
        (**self).level_range()
    }
    fn fill(&self, grid: &TimeGrid, first: usize, out: &mut [f64]) {
        (**self).fill(grid, first, out)
    }
}
