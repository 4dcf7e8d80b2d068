//! Histograms, distances and time-series estimators.
//!
//! Histograms keep integer counts, so merging is exact and independent of
//! order. Samples outside the grid are counted, never dropped, and are part
//! of the normalisation.

use std::io::{self, Write};

use crate::analytic::AnalyticProfile;
use crate::error::{Error, Result};
use crate::grid::{BinIndex, GridSpec};
use crate::io::{write_table, Cell};
use crate::scalar::Real;

/// Binned samples of the relative price.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate<T> {
    grid: GridSpec<T>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl<T: Real> DensityEstimate<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        Self {
            counts: vec![0; grid.n_bins()],
            grid,
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// All samples, including those outside the grid.
    pub fn n_samples(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    #[inline]
    pub fn accumulate(&mut self, r: T) -> Result<()> {
        if r.is_nan() {
            return Err(Error::NonFinite("histogram sample is NaN".into()));
        }
        match self.grid.bin_of(r) {
            BinIndex::Underflow => self.underflow += 1,
            BinIndex::Overflow => self.overflow += 1,
            BinIndex::Bin(k) => self.counts[k] += 1,
        }
        Ok(())
    }

    /// [`accumulate`](Self::accumulate) for samples known not to be NaN.
    #[inline(always)]
    pub(crate) fn accumulate_finite(&mut self, r: T) {
        match self.grid.bin_of(r) {
            BinIndex::Underflow => self.underflow += 1,
            BinIndex::Overflow => self.overflow += 1,
            BinIndex::Bin(k) => self.counts[k] += 1,
        }
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.grid.ensure_compatible(&other.grid)?;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    /// `count_k / (n·Δr)`.
    pub fn density(&self) -> Result<Vec<T>> {
        let n = self.n_samples();
        if n == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let norm = T::lit(n as f64) * self.grid.dr();
        Ok(self
            .counts
            .iter()
            .map(|&c| T::lit(c as f64) / norm)
            .collect())
    }

    pub fn sampled(&self) -> Result<SampledDensity<T>> {
        Ok(SampledDensity {
            grid: self.grid,
            values: self.density()?,
        })
    }

    /// CSV with columns `r, phi_hat` at the bin centres.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        self.sampled()
            .map_err(io::Error::other)?
            .write_csv(out, "phi_hat")
    }
}

/// Density values at the bin centres of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDensity<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
}

impl<T: Real> SampledDensity<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_bins() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} bins",
                values.len(),
                grid.n_bins()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_profile(profile: &AnalyticProfile<T>, grid: &GridSpec<T>) -> Result<Self> {
        Self::new(*grid, profile.on_grid(grid)?)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.dr()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, column: &str) -> io::Result<()> {
        let rows = self.values.iter().enumerate().map(|(k, &v)| {
            [
                Cell::Float(self.grid.center(k).as_f64()),
                Cell::Float(v.as_f64()),
            ]
        });
        write_table(out, &["r", column], rows)
    }
}

/// `Σ|a_k − b_k|·Δr`.
pub fn l1_distance<T: Real>(a: &SampledDensity<T>, b: &SampledDensity<T>) -> Result<T> {
    l1_distance_where(a, b, |_| true)
}

/// L1 distance restricted to bins whose centre satisfies `keep`.
pub fn l1_distance_where<T: Real, F: Fn(T) -> bool>(
    a: &SampledDensity<T>,
    b: &SampledDensity<T>,
    keep: F,
) -> Result<T> {
    a.grid.ensure_compatible(&b.grid)?;
    let sum: T = a
        .values
        .iter()
        .zip(&b.values)
        .enumerate()
        .filter(|(k, _)| keep(a.grid.center(*k)))
        .map(|(_, (&x, &y))| (x - y).abs())
        .sum();
    Ok(sum * a.grid.dr())
}

/// `Σ density·Δr` over the bins in `[r_lo, r_hi)`.
pub fn tail_mass<T: Real>(estimate: &SampledDensity<T>, r_lo: T, r_hi: T) -> Result<T> {
    let g = &estimate.grid;
    let slack = T::lit(1e-9) * g.dr();
    if !(r_lo < r_hi) || r_lo < g.r_min() - slack || r_hi > g.r_max() + slack {
        return Err(Error::Precondition(format!(
            "window [{r_lo}, {r_hi}) is empty or outside the grid [{}, {})",
            g.r_min(),
            g.r_max()
        )));
    }
    let lo = g.edge_at_or_above(r_lo);
    let hi = g.edge_at_or_above(r_hi);
    Ok(estimate.values[lo..hi].iter().copied().sum::<T>() * g.dr())
}

/// Mass with `|r| ≥ threshold`, both sides, clipped to the grid.
pub fn two_sided_tail_mass<T: Real>(estimate: &SampledDensity<T>, threshold: T) -> Result<T> {
    let g = &estimate.grid;
    let mut total = T::zero();
    if threshold < g.r_max() {
        total = total + tail_mass(estimate, threshold.max(g.r_min()), g.r_max())?;
    }
    if -threshold > g.r_min() {
        total = total + tail_mass(estimate, g.r_min(), (-threshold).min(g.r_max()))?;
    }
    Ok(total)
}

/// Mass in `lo ≤ |r| < hi`, both sides, with the window clipped to the grid.
pub fn two_sided_window_mass<T: Real>(estimate: &SampledDensity<T>, lo: T, hi: T) -> Result<T> {
    let g = &estimate.grid;
    let mut total = T::zero();
    let (a, b) = (lo.max(g.r_min()), hi.min(g.r_max()));
    if a < b {
        total = total + tail_mass(estimate, a, b)?;
    }
    let (a, b) = ((-hi).max(g.r_min()), (-lo).min(g.r_max()));
    if a < b {
        total = total + tail_mass(estimate, a, b)?;
    }
    Ok(total)
}

/// Statistics of the waiting times between consecutive events.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats<T> {
    pub mean: T,
    pub count: usize,
    sorted: Vec<T>,
}

impl<T: Real> IntervalStats<T> {
    pub fn intervals(&self) -> &[T] {
        &self.sorted
    }

    /// Standard error of the mean, treating intervals as independent.
    pub fn std_error(&self) -> T {
        let n = T::from_count(self.count);
        let var = self
            .sorted
            .iter()
            .map(|&x| (x - self.mean) * (x - self.mean))
            .sum::<T>()
            / (n - T::one()).max(T::one());
        (var / n).sqrt()
    }

    /// Empirical CDF `F(τ_(k)) = k/n` at the sorted intervals.
    pub fn cdf(&self) -> Vec<(T, T)> {
        let n = T::from_count(self.count);
        self.sorted
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, T::from_count(k + 1) / n))
            .collect()
    }

    pub fn write_cdf_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let rows = self
            .cdf()
            .into_iter()
            .map(|(t, f)| [Cell::Float(t.as_f64()), Cell::Float(f.as_f64())]);
        write_table(out, &["interval", "cdf"], rows)
    }
}

/// Intervals between successive event times (assumed sorted).
pub fn interval_stats<T: Real>(times: &[T]) -> Result<IntervalStats<T>> {
    pooled_interval_stats(&[times])
}

/// Intervals pooled over independent event sequences; intervals never span
/// two sequences.
pub fn pooled_interval_stats<T: Real, S: AsRef<[T]>>(runs: &[S]) -> Result<IntervalStats<T>> {
    let mut sorted = Vec::new();
    let mut span = T::zero();
    for times in runs {
        let times = times.as_ref();
        if times.len() < 2 {
            continue;
        }
        sorted.extend(times.windows(2).map(|w| w[1] - w[0]));
        span = span + (times[times.len() - 1] - times[0]);
    }
    if sorted.is_empty() {
        let got = runs.iter().map(|t| t.as_ref().len()).max().unwrap_or(0);
        return Err(Error::TooFewSamples { needed: 2, got });
    }
    if let Some(d) = sorted.iter().find(|d| !(**d >= T::zero())) {
        return Err(Error::Precondition(format!(
            "event times not sorted (interval {d})"
        )));
    }
    let mean = span / T::from_count(sorted.len());
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite intervals"));
    Ok(IntervalStats {
        mean,
        count: sorted.len(),
        sorted,
    })
}

/// Mean squared displacement at `lag` samples.
pub fn msd<T: Real>(series: &[T], lag: usize) -> T {
    let n = series.len() - lag;
    series
        .windows(lag + 1)
        .map(|w| {
            let d = w[lag] - w[0];
            d * d
        })
        .sum::<T>()
        / T::from_count(n)
}

/// Least-squares slope of MSD against time lag, over lags in
/// `[max_lag/10, max_lag]` samples of spacing `sample_dt`.
pub fn msd_slope<T: Real>(series: &[T], sample_dt: T, max_lag: usize) -> Result<T> {
    if max_lag < 10 {
        return Err(Error::Precondition(format!(
            "max_lag must be at least 10, got {max_lag}"
        )));
    }
    if series.len() < 10 * max_lag {
        return Err(Error::TooFewSamples {
            needed: 10 * max_lag,
            got: series.len(),
        });
    }
    if !(sample_dt > T::zero()) {
        return Err(Error::Precondition(format!(
            "sample spacing must be positive, got {sample_dt}"
        )));
    }
    if let Some(v) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("series value {v}")));
    }
    let lags: Vec<usize> = (max_lag / 10..=max_lag).collect();
    let xs: Vec<T> = lags.iter().map(|&l| T::from_count(l) * sample_dt).collect();
    let ys: Vec<T> = lags.iter().map(|&l| msd(series, l)).collect();
    let n = T::from_count(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Two-dimensional histogram of `(z₁ − z_cm, z₂ − z_cm)` for two traders.
///
/// Pairs with only one coordinate inside the grid are kept in per-axis
/// counters so that both marginals are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram<T> {
    grid: GridSpec<T>,
    counts: Vec<u64>,
    first_only: Vec<u64>,
    second_only: Vec<u64>,
    outside: u64,
}

impl<T: Real> JointHistogram<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let n = grid.n_bins();
        Self {
            grid,
            counts: vec![0; n * n],
            first_only: vec![0; n],
            second_only: vec![0; n],
            outside: 0,
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.grid.n_bins() + j]
    }

    pub fn n_samples(&self) -> u64 {
        self.counts.iter().sum::<u64>()
            + self.first_only.iter().sum::<u64>()
            + self.second_only.iter().sum::<u64>()
            + self.outside
    }

    #[inline]
    pub fn accumulate(&mut self, x1: T, x2: T) -> Result<()> {
        if x1.is_nan() || x2.is_nan() {
            return Err(Error::NonFinite("joint histogram sample is NaN".into()));
        }
        match (self.grid.bin_of(x1), self.grid.bin_of(x2)) {
            (BinIndex::Bin(i), BinIndex::Bin(j)) => self.counts[i * self.grid.n_bins() + j] += 1,
            (BinIndex::Bin(i), _) => self.first_only[i] += 1,
            (_, BinIndex::Bin(j)) => self.second_only[j] += 1,
            _ => self.outside += 1,
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.grid.ensure_compatible(&other.grid)?;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.first_only.iter_mut().zip(&other.first_only) {
            *a += b;
        }
        for (a, b) in self.second_only.iter_mut().zip(&other.second_only) {
            *a += b;
        }
        self.outside += other.outside;
        Ok(())
    }

    /// Density of a single trader's relative price obtained by summing the
    /// joint histogram over the other coordinate, pooled over both traders.
    pub fn relative_marginal(&self) -> Result<SampledDensity<T>> {
        let n = self.grid.n_bins();
        let samples = self.n_samples();
        if samples == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let mut pooled = vec![0u64; n];
        for i in 0..n {
            let row = &self.counts[i * n..(i + 1) * n];
            pooled[i] += row.iter().sum::<u64>() + self.first_only[i];
            for (j, &c) in row.iter().enumerate() {
                pooled[j] += c;
            }
        }
        for (p, &s) in pooled.iter_mut().zip(&self.second_only) {
            *p += s;
        }
        let norm = T::lit(2.0 * samples as f64) * self.grid.dr();
        SampledDensity::new(
            self.grid,
            pooled.iter().map(|&c| T::lit(c as f64) / norm).collect(),
        )
    }
}
