//! Brute-force counting of the solutions of `s(t) = u` for a sampled signal.
//!
//! The window `[burn_in, T]` is sampled at `Δt = 2π/(W · oversample)` where `W`
//! bounds the fastest angular frequency of the signal. Every sign change of
//! `g = s - u` between neighbouring samples brackets one root, refined by
//! bisection. Same-sign triples whose parabolic extremum comes within
//! `tangency_threshold` of the level (or beyond it) are subdivided 16× and
//! either yield a root pair or are reported as suspected tangencies.
//!
//! The window is processed in fixed-size chunks, possibly in parallel. A chunk
//! owns the sample intervals starting inside it and reads one sample on either
//! side, so reports do not depend on the chunk size or the worker count.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::signal::{Signal, TimeGrid};
use crate::{Error, Result};

const SUBDIVISIONS: usize = 16;
const MAX_BISECTIONS: usize = 200;
const GOLDEN_ITERATIONS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// End of the scanned window `T`.
    pub horizon: f64,
    /// Samples per period of the fastest frequency, at least 4.
    pub oversample: usize,
    /// Extrema closer than this to the level are examined for root pairs.
    pub tangency_threshold: f64,
    /// Bisection stops once the bracket is below this fraction of `Δt`.
    pub root_tolerance: f64,
    /// Number of equal sub-windows for the density error bar.
    pub blocks: usize,
    /// Start of the scanned window.
    pub burn_in: f64,
    /// Samples per work unit.
    pub chunk_samples: usize,
    /// Worker count; `None` uses the ambient rayon pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ScanConfig {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            oversample: 16,
            tangency_threshold: 1e-9,
            root_tolerance: 1e-10,
            blocks: 16,
            burn_in: 0.0,
            chunk_samples: 1 << 16,
            workers: None,
        }
    }

    pub fn with_oversample(mut self, oversample: usize) -> Self {
        self.oversample = oversample;
        self
    }

    pub fn with_blocks(mut self, blocks: usize) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_chunk_samples(mut self, chunk: usize) -> Self {
        self.chunk_samples = chunk;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.burn_in >= 0.0) || !self.burn_in.is_finite() {
            return Err(Error::InvalidConfig(format!("burn-in {} must be finite and >= 0", self.burn_in)));
        }
        if !(self.horizon > self.burn_in) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon {} must exceed burn-in {}",
                self.horizon, self.burn_in
            )));
        }
        if self.oversample < 4 {
            return Err(Error::InvalidConfig(format!("oversample {} < 4", self.oversample)));
        }
        if self.blocks < 1 {
            return Err(Error::InvalidConfig("blocks must be >= 1".into()));
        }
        if !(self.root_tolerance > 0.0) {
            return Err(Error::InvalidConfig("root tolerance must be positive".into()));
        }
        if !(self.tangency_threshold >= 0.0) {
            return Err(Error::InvalidConfig("tangency threshold must be >= 0".into()));
        }
        if self.chunk_samples < 2 {
            return Err(Error::InvalidConfig("chunk size must be >= 2".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("worker count must be >= 1".into()));
        }
        Ok(())
    }

    /// Sampling grid for a signal with frequency bound `w`.
    pub fn grid(&self, w: f64) -> Result<TimeGrid> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidConfig(format!("frequency bound {w} must be positive")));
        }
        TimeGrid::covering(self.burn_in, self.horizon, TAU / (w * self.oversample as f64))
    }

    fn window(&self) -> f64 {
        self.horizon - self.burn_in
    }
}

/// Solutions of `s(t) = u` found on `[burn_in, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub level_u: f64,
    pub count: usize,
    pub root_times: Vec<f64>,
    pub density_estimate: f64,
    /// Block standard error; absent with a single block.
    pub density_stderr: Option<f64>,
    pub suspected_tangencies: usize,
    #[serde(rename = "supremum_F")]
    pub supremum: f64,
    pub supremum_time: f64,
    pub samples_evaluated: usize,
    pub horizon: f64,
    pub burn_in: f64,
    pub blocks: usize,
    pub sample_step: f64,
}

impl CrossingReport {
    /// `(T - burn_in) / count`, the empirical mean spacing of roots.
    pub fn mean_spacing(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.horizon - self.burn_in) / self.count as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::format::to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One root per row under the header `index,t_root`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(24 * (self.count + 1));
        out.push_str("index,t_root\n");
        for (i, t) in self.root_times.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", crate::format::fmt_f64(*t)));
        }
        out
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[inline]
fn above(g: f64) -> bool {
    g >= 0.0
}

/// Bisection on a bracket whose endpoint signs are already known.
fn bisect<S: Signal + ?Sized>(signal: &S, level: f64, mut lo: f64, mut hi: f64, lo_above: bool, tol: f64) -> f64 {
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(signal.value(mid) - level) == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Refine a root of `s(t) = u` inside `bracket` by bisection to width `tol`.
pub fn refine_root<S: Signal + ?Sized>(signal: &S, bracket: (f64, f64), u: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    let (g_lo, g_hi) = (signal.value(lo) - u, signal.value(hi) - u);
    if !(g_lo * g_hi < 0.0) {
        return Err(Error::InvalidBracket { lo, hi, g_lo, g_hi });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("bisection tolerance must be positive".into()));
    }
    Ok(bisect(signal, u, lo, hi, above(g_lo), tol))
}

/// Golden-section search for the extremum of `sign · g` on `[a, b]`
/// (minimum of `g` when `sign > 0`). Returns `(t, g(t))`.
fn golden_extremum(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, sign: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let f = |t: f64| sign * g(t);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, sign * f(t))
}

#[derive(Default)]
struct ChunkResult {
    roots: Vec<f64>,
    tangencies: usize,
    sup: f64,
    sup_time: f64,
}

struct Scanner<'a, S: Signal + ?Sized> {
    signal: &'a S,
    level: f64,
    grid: TimeGrid,
    tol: f64,
    tangency: f64,
}

impl<S: Signal + ?Sized> Scanner<'_, S> {
    /// Scan the intervals starting at sample indices `a..b`.
    fn chunk(&self, a: usize, b: usize) -> ChunkResult {
        let last = self.grid.len() - 1;
        let lo = a.saturating_sub(1);
        let hi = b.min(last);
        let mut samples = vec![0.0; hi - lo + 1];
        self.signal.fill(&self.grid, lo, &mut samples);
        let g = |i: usize| samples[i - lo] - self.level;
        let mut out = ChunkResult { sup: f64::NEG_INFINITY, ..Default::default() };
        let owned_end = if b > last { last + 1 } else { b };
        for i in a..owned_end {
            let v = samples[i - lo];
            if v > out.sup {
                out.sup = v;
                out.sup_time = self.grid.time(i);
            }
        }
        for i in a..b.min(last) {
            let gi = g(i);
            if i > 0 && i < last {
                self.examine_extremum(g(i - 1), gi, g(i + 1), i, &mut out);
            }
            let gn = g(i + 1);
            if above(gi) != above(gn) {
                let root = bisect(self.signal, self.level, self.grid.time(i), self.grid.time(i + 1), above(gi), self.tol);
                out.roots.push(root);
            }
        }
        out
    }

    fn examine_extremum(&self, gp: f64, g0: f64, gn: f64, i: usize, out: &mut ChunkResult) {
        let side = above(g0);
        if above(gp) != side || above(gn) != side {
            return;
        }
        // local approach towards the level, ties broken to the left
        if !(g0.abs() < gp.abs() && g0.abs() <= gn.abs()) {
            return;
        }
        let sign = if side { 1.0 } else { -1.0 };
        let curv = 0.5 * (gp + gn - 2.0 * g0);
        let slope = 0.5 * (gn - gp);
        let vertex = if curv * sign > 0.0 { g0 - slope * slope / (4.0 * curv) } else { g0 };
        // a three-point parabola misjudges the depth of a sharp dip by up to
        // its own curvature, so anything that close is examined
        if sign * vertex >= self.tangency + curv.abs() {
            return;
        }
        self.resolve_near_miss(i, sign, out);
    }

    fn resolve_near_miss(&self, i: usize, sign: f64, out: &mut ChunkResult) {
        let t0 = self.grid.time(i - 1);
        let h = 2.0 * self.grid.step() / SUBDIVISIONS as f64;
        let value = |t: f64| self.signal.value(t) - self.level;
        let ts: Vec<f64> = (0..=SUBDIVISIONS).map(|j| t0 + j as f64 * h).collect();
        let gs: Vec<f64> = ts.iter().map(|&t| value(t)).collect();
        let mut found = Vec::new();
        for j in 0..SUBDIVISIONS {
            if above(gs[j]) != above(gs[j + 1]) {
                found.push(bisect(self.signal, self.level, ts[j], ts[j + 1], above(gs[j]), self.tol));
            }
        }
        // sign changes must come in pairs: the triple endpoints share a sign
        if !found.is_empty() && found.len() % 2 == 0 {
            out.roots.extend(found);
            return;
        }
        if !found.is_empty() {
            // odd count means sub-samples disagree with the fast-path ends; trust the pairs we can
            found.pop();
            out.roots.extend(found);
            out.tangencies += 1;
            return;
        }
        let jmin = (1..SUBDIVISIONS).min_by(|&x, &y| (sign * gs[x]).total_cmp(&(sign * gs[y]))).unwrap_or(1);
        let (tm, gm) = golden_extremum(value, ts[jmin - 1], ts[jmin + 1], sign);
        if above(gm) != above(sign) {
            let side = sign > 0.0;
            let r1 = bisect(self.signal, self.level, ts[jmin - 1], tm, side, self.tol);
            let r2 = bisect(self.signal, self.level, tm, ts[jmin + 1], !side, self.tol);
            out.roots.push(r1);
            out.roots.push(r2);
        } else if gm.abs() < self.tangency || sign * gs[jmin] < 0.0 {
            out.tangencies += 1;
        } else {
            // predicted approach did not materialize
            let _ = gm;
        }
    }
}

fn chunk_bounds(intervals: usize, chunk: usize) -> Vec<(usize, usize)> {
    (0..intervals.div_ceil(chunk)).map(|c| (c * chunk, ((c + 1) * chunk).min(intervals))).collect()
}

/// Count and locate all solutions of `s(t) = u` on `[burn_in, horizon]`.
pub fn scan_crossings<S: Signal + ?Sized>(signal: &S, u: f64, config: &ScanConfig) -> Result<CrossingReport> {
    config.validate()?;
    let w = signal.frequency_bound();
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidConfig(format!("frequency bound {w} must be positive")));
    }
    let (lo, hi) = signal.level_range();
    if !(u >= lo && u <= hi) {
        return Err(Error::LevelOutOfRange { level: u, lo, hi });
    }
    let grid = config.grid(w)?;
    if grid.len() < 2 {
        return Err(Error::InvalidConfig("horizon too short to contain a sample interval".into()));
    }
    let scanner = Scanner {
        signal,
        level: u,
        grid,
        tol: config.root_tolerance * grid.step(),
        tangency: config.tangency_threshold,
    };
    let intervals = grid.len() - 1;
    // the final chunk also owns the last sample for the supremum
    let mut bounds = chunk_bounds(intervals, config.chunk_samples);
    if let Some(last) = bounds.last_mut() {
        last.1 = intervals + 1;
    }
    let parts: Vec<ChunkResult> =
        with_workers(config.workers, || bounds.par_iter().map(|&(a, b)| scanner.chunk(a, b)).collect());

    let mut roots = Vec::new();
    let mut tangencies = 0;
    let (mut sup, mut sup_time) = (f64::NEG_INFINITY, grid.start());
    for mut p in parts {
        p.roots.sort_by(f64::total_cmp);
        roots.extend(p.roots);
        tangencies += p.tangencies;
        if p.sup > sup {
            sup = p.sup;
            sup_time = p.sup_time;
        }
    }
    roots.dedup_by(|a, b| *a <= *b);

    let mut report = CrossingReport {
        level_u: u,
        count: roots.len(),
        root_times: roots,
        density_estimate: 0.0,
        density_stderr: None,
        suspected_tangencies: tangencies,
        supremum: sup,
        supremum_time: sup_time,
        samples_evaluated: grid.len(),
        horizon: config.horizon,
        burn_in: config.burn_in,
        blocks: config.blocks,
        sample_step: grid.step(),
    };
    let (density, stderr) = estimate_density(&report, config)?;
    report.density_estimate = density;
    report.density_stderr = stderr;
    Ok(report)
}

/// Mean and block standard error of the root density over `config.blocks`
/// equal sub-windows of `[burn_in, horizon]`.
pub fn estimate_density(report: &CrossingReport, config: &ScanConfig) -> Result<(f64, Option<f64>)> {
    if config.blocks < 1 {
        return Err(Error::InvalidConfig("blocks must be >= 1".into()));
    }
    let window = config.window();
    if !(window > 0.0) {
        return Err(Error::InvalidConfig("empty window".into()));
    }
    let density = report.root_times.len() as f64 / window;
    let b = config.blocks;
    if b == 1 {
        return Ok((density, None));
    }
    let width = window / b as f64;
    let mut counts = vec![0usize; b];
    for &t in &report.root_times {
        let k = (((t - config.burn_in) / width).floor().max(0.0) as usize).min(b - 1);
        counts[k] += 1;
    }
    let dens: Vec<f64> = counts.iter().map(|&c| c as f64 / width).collect();
    let mean = dens.iter().sum::<f64>() / b as f64;
    let var = dens.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (b - 1) as f64;
    Ok((density, Some((var / b as f64).sqrt())))
}

/// Largest value of the signal on `(exclude_until, horizon]`, located on the scan
/// grid and refined by golden-section search around the best sample.
pub fn track_supremum<S: Signal + ?Sized>(signal: &S, config: &ScanConfig, exclude_until: f64) -> Result<(f64, f64)> {
    if !(exclude_until > 0.0) {
        return Err(Error::InvalidConfig(format!("exclusion time {exclude_until} must be positive")));
    }
    if exclude_until >= config.horizon {
        return Err(Error::InvalidConfig(format!(
            "exclusion time {exclude_until} must be below the horizon {}",
            config.horizon
        )));
    }
    let cfg = ScanConfig { burn_in: exclude_until, ..config.clone() };
    cfg.validate()?;
    let grid = cfg.grid(signal.frequency_bound())?;
    let bounds = chunk_bounds(grid.len(), cfg.chunk_samples);
    let best = with_workers(cfg.workers, || {
        bounds
            .par_iter()
            .map(|&(a, b)| {
                let mut buf = vec![0.0; b - a];
                signal.fill(&grid, a, &mut buf);
                let (k, v) = buf.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (k, &v)| {
                    if v > acc.1 {
                        (k, v)
                    } else {
                        acc
                    }
                });
                (a + k, v)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .fold((0usize, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let (k, _) = best;
    let a = grid.time(k.saturating_sub(1)).max(exclude_until);
    let b = grid.time((k + 1).min(grid.len() - 1)).min(config.horizon);
    let (t, v) = golden_extremum(|t| signal.value(t), a, b, -1.0);
    let direct = signal.value(grid.time(k));
    if direct > v {
        Ok((direct, grid.time(k)))
    } else {
        Ok((v, t))
    }
}

/// All grid samples of the signal over the scan window.
pub fn sample_signal<S: Signal + ?Sized>(signal: &S, config: &ScanConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let grid = config.grid(signal.frequency_bound())?;
    let mut out = vec![0.0; grid.len()];
    let chunk = config.chunk_samples;
    with_workers(config.workers, || {
        out.par_chunks_mut(chunk).enumerate().for_each(|(c, s)| signal.fill(&grid, c * chunk, s))
    });
    Ok(out)
}

/// Normalized histogram on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub total: u64,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidConfig(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let k = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let total = samples.len() as u64;
        let density = counts.iter().map(|&c| c as f64 / (total.max(1) as f64 * width)).collect();
        Ok(Self { lo, hi, counts, density, total })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.bin_width()
    }

    /// Largest gap between the histogram CDF and `cdf` at the bin edges.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0u64;
        let mut worst = (cdf(self.lo)).abs();
        for (k, &c) in self.counts.iter().enumerate() {
            acc += c;
            let edge = self.lo + (k + 1) as f64 * self.bin_width();
            worst = worst.max((acc as f64 / self.total.max(1) as f64 - cdf(edge)).abs());
        }
        worst
    }
}

/// Histogram of the signal samples over the scan window, on the signal's
/// level range.
pub fn empirical_pdf<S: Signal + ?Sized>(signal: &S, config: &ScanConfig, bins: usize) -> Result<Histogram> {
    if bins < 10 {
        return Err(Error::InvalidConfig(format!("need at least 10 bins, got {bins}")));
    }
    let samples = sample_signal(signal, config)?;
    let (lo, hi) = signal.level_range();
    let (lo, hi) = if lo.is_finite() {
        (lo, hi)
    } else {
        (samples.iter().copied().fold(f64::INFINITY, f64::min), hi)
    };
    // a constant signal still gets a non-degenerate range
    let hi = if hi > lo { hi } else { lo + 1.0 };
    Histogram::from_samples(&samples, lo, hi, bins)
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max((((i + 1) as f64) / n - c).abs())
        })
        .fold(0.0, f64::max)
}
