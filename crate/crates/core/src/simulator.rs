//! Monte Carlo simulation of `N` dealers.
//!
//! Every step each midprice moves by `−u²(z_i − z_cm)Δt + σ√Δt·ξ_i` with
//! independent standard normals `ξ_i`. If afterwards the highest bid meets
//! the lowest ask (`z_max − z_min ≥ L`) that single pair trades and both
//! traders requote around the midpoint of their midprices.
//!
//! A run covers `[−t_init, t_end)`: the warm-up part is discarded, and in
//! the sampling part every trader's `z_i − z_cm` is histogrammed at every
//! step.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::model::{MarketState, ModelParams, SimSchedule, TransactionEvent};
use crate::rng::stream;
use crate::scalar::Real;
use crate::stats::{DensityEstimate, JointHistogram};

/// Everything needed to reproduce a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig<T> {
    pub params: ModelParams<T>,
    pub schedule: SimSchedule<T>,
    pub grid: GridSpec<T>,
    /// Also histogram `(z₁ − z_cm, z₂ − z_cm)`; two traders only.
    pub record_joint: bool,
    /// Keep every transaction; otherwise only counts and interval totals.
    pub record_events: bool,
    /// Record `z_cm` every this many sampling steps (0 disables).
    pub com_sample_every: u64,
}

impl<T: Real> RunConfig<T> {
    pub fn new(
        params: ModelParams<T>,
        schedule: SimSchedule<T>,
        grid: GridSpec<T>,
    ) -> Result<Self> {
        let cfg = Self {
            params,
            schedule,
            grid,
            record_joint: false,
            record_events: false,
            com_sample_every: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.check_stability(&self.params)?;
        let l = self.params.spread();
        if self.grid.r_min() > -l || self.grid.r_max() < l {
            return Err(invalid(
                "grid",
                format!(
                    "[{}, {}) must cover [-L, L] = [{}, {}]",
                    self.grid.r_min(),
                    self.grid.r_max(),
                    -l,
                    l
                ),
            ));
        }
        if self.record_joint && self.params.n_traders() != 2 {
            return Err(invalid(
                "record_joint",
                format!(
                    "joint histogram needs 2 traders, got {}",
                    self.params.n_traders()
                ),
            ));
        }
        Ok(())
    }
}

/// Per-run record kept in a [`RunResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub n_steps: u64,
    pub n_events: u64,
    pub first_event_time: Option<T>,
    pub last_event_time: Option<T>,
    /// How often each trader was the taker.
    pub taker_counts: Vec<u64>,
    pub events: Vec<TransactionEvent<T>>,
    /// `z_cm` at times `k·com_dt`, `k = 0, 1, …`.
    pub com_series: Vec<T>,
    pub com_dt: T,
    pub final_state: MarketState<T>,
}

/// Output of a run or a merged ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<T> {
    pub pdf_r: DensityEstimate<T>,
    pub joint: Option<JointHistogram<T>>,
    pub runs: BTreeMap<usize, RunTrace<T>>,
}

impl<T: Real> RunResult<T> {
    pub fn n_steps(&self) -> u64 {
        self.runs.values().map(|r| r.n_steps).sum()
    }

    pub fn n_events(&self) -> u64 {
        self.runs.values().map(|r| r.n_events).sum()
    }

    /// Pooled mean waiting time between consecutive events of the same run.
    pub fn mean_interval(&self) -> Result<T> {
        let mut span = T::zero();
        let mut count = 0u64;
        for r in self.runs.values() {
            if let (Some(a), Some(b)) = (r.first_event_time, r.last_event_time) {
                if r.n_events >= 2 {
                    span = span + (b - a);
                    count += r.n_events - 1;
                }
            }
        }
        if count == 0 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.n_events() as usize,
            });
        }
        Ok(span / T::lit(count as f64))
    }

    /// Taker counts summed over runs.
    pub fn taker_counts(&self) -> Vec<u64> {
        let mut total: Vec<u64> = Vec::new();
        for r in self.runs.values() {
            if total.len() < r.taker_counts.len() {
                total.resize(r.taker_counts.len(), 0);
            }
            for (a, b) in total.iter_mut().zip(&r.taker_counts) {
                *a += b;
            }
        }
        total
    }

    /// Combines two results; fails if they share a run id.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if let Some(id) = other.runs.keys().find(|id| self.runs.contains_key(id)) {
            return Err(Error::Precondition(format!(
                "run {id} present in both results"
            )));
        }
        self.pdf_r.merge(&other.pdf_r)?;
        match (&mut self.joint, &other.joint) {
            (Some(a), Some(b)) => a.merge(b)?,
            (None, None) => {}
            _ => {
                return Err(Error::Precondition(
                    "cannot merge results with and without joint histograms".into(),
                ))
            }
        }
        self.runs
            .extend(other.runs.iter().map(|(k, v)| (*k, v.clone())));
        Ok(())
    }
}

#[inline]
fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::lit(x)
}

/// Centre of mass, or an error if the state has left the finite range.
#[inline]
fn centre_of_mass<T: Real>(z: &[T]) -> Result<T> {
    let sum: T = z.iter().copied().sum();
    if !sum.is_finite() {
        return Err(Error::NonFinite(format!(
            "midprices became non-finite: {:?}",
            &z[..z.len().min(8)]
        )));
    }
    Ok(sum / T::from_count(z.len()))
}

/// The pair resolved in a step: `(buyer, seller, price, taker)`.
type Crossing<T> = (usize, usize, T, usize);

/// Source of the per-trader noise increments and of tie-breaking coins.
trait NoiseSource<T> {
    fn increment(&mut self, trader: usize) -> T;
    /// Taker on equal displacements: `true` means the buyer.
    fn tie(&mut self) -> bool;
}

struct Gaussian<'a, R: ?Sized, T> {
    rng: &'a mut R,
    scale: T,
}

impl<T: Real, R: Rng + ?Sized> NoiseSource<T> for Gaussian<'_, R, T> {
    #[inline(always)]
    fn increment(&mut self, _: usize) -> T {
        self.scale * standard_normal::<T, R>(self.rng)
    }

    fn tie(&mut self) -> bool {
        self.rng.random()
    }
}

struct Given<'a, T> {
    increments: &'a [T],
    tie: bool,
}

impl<T: Real> NoiseSource<T> for Given<'_, T> {
    fn increment(&mut self, trader: usize) -> T {
        self.increments[trader]
    }

    fn tie(&mut self) -> bool {
        self.tie
    }
}

/// Moves every midprice by its drift plus a noise increment and resolves
/// the highest-bid / lowest-ask pair if it crosses.
///
/// `observe` sees each `z_i − cm` before the update, which lets the sampling
/// loop share this pass. Returns the crossing and the new sum of midprices.
#[inline(always)]
fn advance<T: Real, S: NoiseSource<T>>(
    z: &mut [T],
    params: &ModelParams<T>,
    dt: T,
    cm: T,
    noise: &mut S,
    mut observe: impl FnMut(T),
) -> (Option<Crossing<T>>, T) {
    let drift = params.u2() * dt;
    let mut hi = 0;
    let mut lo = 0;
    let (mut d_hi, mut d_lo) = (T::zero(), T::zero());
    // Extremes kept in registers; reloading z[hi] each pass is a serial dependency.
    let (mut z_hi, mut z_lo) = (T::neg_infinity(), T::infinity());
    let mut sum = T::zero();
    for (i, zi) in z.iter_mut().enumerate() {
        let r = *zi - cm;
        observe(r);
        let mut d = noise.increment(i);
        if drift > T::zero() {
            d = d - drift * r;
        }
        let next = *zi + d;
        *zi = next;
        sum = sum + next;
        if next > z_hi {
            hi = i;
            z_hi = next;
            d_hi = d;
        }
        if next < z_lo {
            lo = i;
            z_lo = next;
            d_lo = d;
        }
    }
    if z_hi - z_lo >= params.spread() {
        let mid = (z_hi + z_lo) / T::lit(2.0);
        z[hi] = mid;
        z[lo] = mid;
        let taker = match d_hi.abs().partial_cmp(&d_lo.abs()) {
            Some(std::cmp::Ordering::Greater) => hi,
            Some(std::cmp::Ordering::Less) => lo,
            _ => {
                if noise.tie() {
                    hi
                } else {
                    lo
                }
            }
        };
        // Recomputed rather than patched so that it equals a fresh sum.
        let sum = z.iter().copied().sum();
        (Some((hi, lo, mid, taker)), sum)
    } else {
        (None, sum)
    }
}

fn check_state<T: Real>(state: &MarketState<T>, params: &ModelParams<T>, dt: T) -> Result<()> {
    if state.n_traders() != params.n_traders() {
        return Err(Error::Precondition(format!(
            "state has {} traders, parameters {}",
            state.n_traders(),
            params.n_traders()
        )));
    }
    if !(dt > T::zero()) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    Ok(())
}

/// One Monte Carlo step; returns the transaction it produced, if any.
pub fn step<T: Real, R: Rng + ?Sized>(
    state: &mut MarketState<T>,
    params: &ModelParams<T>,
    dt: T,
    rng: &mut R,
) -> Result<Option<TransactionEvent<T>>> {
    check_state(state, params, dt)?;
    let cm = centre_of_mass(&state.midprices)?;
    let mut noise = Gaussian {
        rng,
        scale: params.sigma() * dt.sqrt(),
    };
    let (crossing, _) = advance(&mut state.midprices, params, dt, cm, &mut noise, |_| {});
    finish_step(state, dt, crossing)
}

/// [`step`] with the noise increments `σ√Δt·ξ_i` given explicitly.
pub fn step_with_increments<T: Real>(
    state: &mut MarketState<T>,
    params: &ModelParams<T>,
    dt: T,
    increments: &[T],
    tie_goes_to_buyer: bool,
) -> Result<Option<TransactionEvent<T>>> {
    check_state(state, params, dt)?;
    if increments.len() != state.n_traders() {
        return Err(Error::Precondition(format!(
            "{} increments for {} traders",
            increments.len(),
            state.n_traders()
        )));
    }
    let cm = centre_of_mass(&state.midprices)?;
    let mut noise = Given {
        increments,
        tie: tie_goes_to_buyer,
    };
    let (crossing, _) = advance(&mut state.midprices, params, dt, cm, &mut noise, |_| {});
    finish_step(state, dt, crossing)
}

fn finish_step<T: Real>(
    state: &mut MarketState<T>,
    dt: T,
    crossing: Option<Crossing<T>>,
) -> Result<Option<TransactionEvent<T>>> {
    state.time = state.time + dt;
    centre_of_mass(&state.midprices)?;
    crossing
        .map(|(buyer, seller, price, taker)| {
            TransactionEvent::new(state.time, buyer, seller, price, taker)
        })
        .transpose()
}

/// Runs member `run_index` of the ensemble described by `config`.
pub fn run<T: Real>(config: &RunConfig<T>, run_index: usize) -> Result<RunResult<T>> {
    config.validate()?;
    let params = &config.params;
    let sched = &config.schedule;
    let n = params.n_traders();
    let dt = sched.dt;
    let scale = params.sigma() * dt.sqrt();
    let warmup = sched.warmup_steps();
    let total = warmup + sched.sampling_steps();
    let mut rng = stream(sched.seed, run_index as u64);
    let mut noise = Gaussian {
        rng: &mut rng,
        scale,
    };

    let mut z = vec![T::zero(); n];
    let mut pdf_r = DensityEstimate::new(config.grid);
    let mut joint = config
        .record_joint
        .then(|| JointHistogram::new(config.grid));
    let mut trace = RunTrace {
        n_steps: total - warmup,
        n_events: 0,
        first_event_time: None,
        last_event_time: None,
        taker_counts: vec![0; n],
        events: Vec::new(),
        com_series: Vec::new(),
        com_dt: T::lit(config.com_sample_every as f64) * dt,
        final_state: MarketState::at_origin(n),
    };

    let n_t = T::from_count(n);
    let mut cm = T::zero();
    for k in 0..total {
        let sampling = k >= warmup;
        let (crossing, sum) = if sampling {
            if let Some(j) = joint.as_mut() {
                j.accumulate(z[0] - cm, z[1] - cm)?;
            }
            let s = k - warmup;
            if config.com_sample_every > 0 && s.is_multiple_of(config.com_sample_every) {
                trace.com_series.push(cm);
            }
            advance(&mut z, params, dt, cm, &mut noise, |r| {
                pdf_r.accumulate_finite(r)
            })
        } else {
            advance(&mut z, params, dt, cm, &mut noise, |_| {})
        };
        if !sum.is_finite() {
            centre_of_mass(&z)?;
        }
        cm = sum / n_t;
        if let (true, Some((buyer, seller, price, taker))) = (sampling, crossing) {
            let time = T::lit((k + 1 - warmup) as f64) * dt;
            trace.n_events += 1;
            trace.taker_counts[taker] += 1;
            trace.first_event_time.get_or_insert(time);
            trace.last_event_time = Some(time);
            if config.record_events {
                trace
                    .events
                    .push(TransactionEvent::new(time, buyer, seller, price, taker)?);
            }
        }
    }
    trace.final_state = MarketState::new(z, T::lit((total - warmup) as f64) * dt)?;
    Ok(RunResult {
        pdf_r,
        joint,
        runs: BTreeMap::from([(run_index, trace)]),
    })
}

/// Runs `schedule.n_runs` independent members in parallel and merges them.
///
/// Run `i` draws from stream `i` of the seed, so the result does not depend
/// on the thread count or scheduling.
pub fn run_ensemble<T: Real>(config: &RunConfig<T>) -> Result<RunResult<T>> {
    config.validate()?;
    let results: Vec<RunResult<T>> = (0..config.schedule.n_runs)
        .into_par_iter()
        .map(|i| run(config, i))
        .collect::<Result<_>>()?;
    let mut iter = results.into_iter();
    let mut merged = iter.next().expect("at least one run");
    for r in iter {
        merged.merge(&r)?;
    }
    Ok(merged)
}

/// Minimum number of events for [`taker_fractions`].
pub const MIN_TAKER_EVENTS: usize = 100;

/// Fraction of events in which each trader was the taker.
pub fn taker_fractions<T: Real>(
    events: &[TransactionEvent<T>],
    n_traders: usize,
) -> Result<Vec<f64>> {
    if events.len() < MIN_TAKER_EVENTS {
        return Err(Error::TooFewSamples {
            needed: MIN_TAKER_EVENTS,
            got: events.len(),
        });
    }
    let mut counts = vec![0u64; n_traders];
    for e in events {
        if e.taker >= n_traders {
            return Err(Error::Precondition(format!(
                "taker {} out of range",
                e.taker
            )));
        }
        counts[e.taker] += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / events.len() as f64)
        .collect())
}
