//! Random walk on a lattice with return-to-origin barriers.
//!
//! Sites are `k·l` for `k ∈ {−(n̄−1), …, n̄−1}`. A walker hops to each
//! neighbour at rate `λ/2`; a hop from a boundary site `±(n̄−1)` outward
//! would reach the barrier at `±n̄·l = ±L/2` and instead sends the walker
//! back to the origin. Every site therefore has total exit rate `λ`.
//!
//! In the diffusive limit `l → 0`, `λl² = σ_cm²`, `l·n̄ = L/2` the master
//! equation becomes the reduced two-body equation whose steady state is the
//! tent. For finite `n̄` the steady state is `P_k = (n̄ − |k|)/n̄²`.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::analytic::tent_pdf;
use crate::error::{invalid, Error, Result};
use crate::io::{write_table, Cell};
use crate::linalg::{stationary_distribution, DenseMatrix};
use crate::rng::stream;
use crate::scalar::Real;

/// Largest `λ·dt` accepted by the fixed-step walker.
pub const MAX_STEP_PROBABILITY: f64 = 0.1;
/// Largest `λ·dt` accepted by the RK4 integrator.
pub const MAX_RK4_STEP: f64 = 0.5;

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams<T> {
    l: T,
    lambda: T,
    n_bar: usize,
}

impl<T: Real> LatticeParams<T> {
    pub fn new(l: T, lambda: T, n_bar: usize) -> Result<Self> {
        if !(l.is_finite() && l > T::zero()) {
            return Err(invalid("l", format!("must be positive, got {l}")));
        }
        if !(lambda.is_finite() && lambda > T::zero()) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if n_bar < 2 {
            return Err(invalid("n_bar", format!("must be at least 2, got {n_bar}")));
        }
        Ok(Self { l, lambda, n_bar })
    }

    /// Lattice matched to the continuum: `l = L/(2n̄)`, `λ = σ_cm²/l²`.
    pub fn diffusive(sigma_cm2: T, spread: T, n_bar: usize) -> Result<Self> {
        if !(spread.is_finite() && spread > T::zero()) {
            return Err(invalid("L", format!("must be positive, got {spread}")));
        }
        if !(sigma_cm2.is_finite() && sigma_cm2 > T::zero()) {
            return Err(invalid(
                "sigma_cm2",
                format!("must be positive, got {sigma_cm2}"),
            ));
        }
        if n_bar < 2 {
            return Err(invalid("n_bar", format!("must be at least 2, got {n_bar}")));
        }
        let l = spread / (T::lit(2.0) * T::from_count(n_bar));
        Self::new(l, sigma_cm2 / (l * l), n_bar)
    }

    pub fn l(&self) -> T {
        self.l
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    /// Largest site index `n̄ − 1`.
    pub fn max_site(&self) -> i64 {
        self.n_bar as i64 - 1
    }

    pub fn n_sites(&self) -> usize {
        2 * self.n_bar - 1
    }

    /// Vector slot of site `k`.
    pub fn slot(&self, site: i64) -> Result<usize> {
        self.check_site(site)?;
        Ok((site + self.max_site()) as usize)
    }

    pub fn site(&self, slot: usize) -> i64 {
        slot as i64 - self.max_site()
    }

    pub fn position(&self, site: i64) -> T {
        T::lit(site as f64) * self.l
    }

    pub fn check_site(&self, site: i64) -> Result<()> {
        if site.abs() > self.max_site() {
            Err(Error::Precondition(format!(
                "site {site} outside the state space ±{}",
                self.max_site()
            )))
        } else {
            Ok(())
        }
    }
}

/// Probabilities over the `2n̄ − 1` sites, ordered from `−(n̄−1)` upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution<T> {
    probs: Vec<T>,
}

impl<T: Real> LatticeDistribution<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.len() < 3 || probs.len().is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "need an odd number ≥ 3 of sites, got {}",
                probs.len()
            )));
        }
        if let Some((k, &p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= T::zero())) {
            return Err(Error::NegativeDensity {
                node: k,
                value: p.as_f64(),
            });
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(MASS_TOL).max(T::lit(64.0) * T::epsilon()) {
            return Err(Error::MassDrift((total - T::one()).as_f64()));
        }
        Ok(Self { probs })
    }

    pub fn point_mass(params: &LatticeParams<T>, site: i64) -> Result<Self> {
        let mut probs = vec![T::zero(); params.n_sites()];
        probs[params.slot(site)?] = T::one();
        Ok(Self { probs })
    }

    pub fn uniform(params: &LatticeParams<T>) -> Self {
        let n = params.n_sites();
        Self {
            probs: vec![T::one() / T::from_count(n); n],
        }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn n_bar(&self) -> usize {
        self.probs.len().div_ceil(2)
    }

    fn check_params(&self, params: &LatticeParams<T>) -> Result<()> {
        if self.probs.len() != params.n_sites() {
            return Err(Error::Precondition(format!(
                "distribution has {} sites, lattice has {}",
                self.probs.len(),
                params.n_sites()
            )));
        }
        Ok(())
    }

    /// Probability per unit length, `P_k/l`.
    pub fn density(&self, params: &LatticeParams<T>) -> Vec<T> {
        self.probs.iter().map(|&p| p / params.l()).collect()
    }

    pub fn mean(&self, params: &LatticeParams<T>) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * params.position(params.site(i)))
            .sum()
    }

    pub fn variance(&self, params: &LatticeParams<T>) -> T {
        let m = self.mean(params);
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let d = params.position(params.site(i)) - m;
                p * d * d
            })
            .sum()
    }

    pub fn l1_distance(&self, other: &Self) -> Result<T> {
        if self.probs.len() != other.probs.len() {
            return Err(Error::GridMismatch(format!(
                "{} vs {} sites",
                self.probs.len(),
                other.probs.len()
            )));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(&a, &b)| (a - b).abs())
            .sum())
    }

    /// CSV with columns `site_index, r, probability, density`.
    pub fn write_csv<W: Write>(&self, params: &LatticeParams<T>, out: &mut W) -> io::Result<()> {
        let rows = self.probs.iter().enumerate().map(|(i, &p)| {
            let k = params.site(i);
            [
                Cell::Int(k),
                Cell::Float(params.position(k).as_f64()),
                Cell::Float(p.as_f64()),
                Cell::Float((p / params.l()).as_f64()),
            ]
        });
        write_table(out, &["site_index", "r", "probability", "density"], rows)
    }
}

/// Outcome of one lattice update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeMove {
    Right,
    Left,
    Stay,
}

/// Destination of `mv` from `site`; outward moves from a boundary site hit
/// the barrier and return to the origin.
pub fn apply_move<T: Real>(site: i64, mv: LatticeMove, params: &LatticeParams<T>) -> Result<i64> {
    params.check_site(site)?;
    let edge = params.max_site();
    Ok(match mv {
        LatticeMove::Stay => site,
        LatticeMove::Right if site == edge => 0,
        LatticeMove::Left if site == -edge => 0,
        LatticeMove::Right => site + 1,
        LatticeMove::Left => site - 1,
    })
}

/// Generator `Q` with `Q[j][i]` the rate from slot `i` to slot `j`.
pub fn generator<T: Real>(params: &LatticeParams<T>) -> DenseMatrix<T> {
    let n = params.n_sites();
    let half = params.lambda() / T::lit(2.0);
    let mut q = DenseMatrix::zeros(n);
    for i in 0..n {
        let k = params.site(i);
        for mv in [LatticeMove::Right, LatticeMove::Left] {
            let dest = apply_move(k, mv, params).expect("site in range");
            let j = params.slot(dest).expect("destination in range");
            q.add(j, i, half);
        }
        q.add(i, i, -params.lambda());
    }
    q
}

/// `dP/dt = Q P` without forming `Q`.
fn apply_generator<T: Real>(params: &LatticeParams<T>, p: &[T], out: &mut [T]) {
    let half = params.lambda() / T::lit(2.0);
    let n = p.len();
    let origin = params.n_bar - 1;
    for i in 0..n {
        let mut inflow = T::zero();
        if i > 0 {
            inflow = inflow + p[i - 1];
        }
        if i + 1 < n {
            inflow = inflow + p[i + 1];
        }
        out[i] = half * inflow - params.lambda() * p[i];
    }
    out[origin] = out[origin] + half * (p[0] + p[n - 1]);
}

/// Steady state by null-space solve of the generator.
pub fn lattice_steady_state<T: Real>(params: &LatticeParams<T>) -> Result<LatticeDistribution<T>> {
    let probs = stationary_distribution(&generator(params))?;
    // Rounding can leave entries at −ulp level.
    let probs = probs.into_iter().map(|p| p.max(T::zero())).collect();
    LatticeDistribution::new(probs)
}

/// Fixed-step update: right with probability `λdt/2`, left with `λdt/2`.
pub fn lattice_step<T: Real, R: Rng + ?Sized>(
    site: i64,
    params: &LatticeParams<T>,
    rng: &mut R,
    dt: T,
) -> Result<i64> {
    let p = params.lambda() * dt;
    if !(dt > T::zero()) || p.as_f64() > MAX_STEP_PROBABILITY {
        return Err(Error::Stability(format!(
            "lattice step needs 0 < λ·dt ≤ {MAX_STEP_PROBABILITY}, got dt = {dt} (λ·dt = {p})"
        )));
    }
    params.check_site(site)?;
    let u: f64 = rng.random();
    let half = p.as_f64() / 2.0;
    let mv = if u < half {
        LatticeMove::Right
    } else if u < 2.0 * half {
        LatticeMove::Left
    } else {
        LatticeMove::Stay
    };
    apply_move(site, mv, params)
}

/// Event-driven update: waits `Exp(λ)` and then hops left or right.
/// Returns the new site and the waiting time.
pub fn lattice_jump<T: Real, R: Rng + ?Sized>(
    site: i64,
    params: &LatticeParams<T>,
    rng: &mut R,
) -> Result<(i64, T)> {
    params.check_site(site)?;
    let wait = Exp::new(params.lambda().as_f64())
        .map_err(|e| invalid("lambda", e.to_string()))?
        .sample(rng);
    let mv = if rng.random::<bool>() {
        LatticeMove::Right
    } else {
        LatticeMove::Left
    };
    Ok((apply_move(site, mv, params)?, T::lit(wait)))
}

/// How the Monte Carlo walker advances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatticeMode<T> {
    /// Bernoulli updates of length `dt`.
    FixedStep { dt: T },
    /// Exponential waiting times; one update per hop.
    EventDriven,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeMcConfig<T> {
    pub mode: LatticeMode<T>,
    /// Updates discarded before the first sample; for the event-driven
    /// walker, the same number of mean waiting times `1/λ`.
    pub burn_in: u64,
    /// Updates between consecutive samples, or mean waiting times for the
    /// event-driven walker.
    pub thin: u64,
    /// Samples per run.
    pub samples_per_run: u64,
    pub seed: u64,
    pub n_runs: usize,
}

/// Site occupation counts from sampling a walker at regular intervals.
///
/// Every site has exit rate `λ`, so the walker's law is the same in both
/// modes. The hop chain alone has period 2 when `n̄` is even, which is why the
/// event-driven walker is observed at fixed times rather than hop counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationCounts {
    pub counts: Vec<u64>,
    pub n_samples: u64,
}

impl OccupationCounts {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n_samples as f64)
            .collect()
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.counts.len() != other.counts.len() {
            return Err(Error::GridMismatch(format!(
                "{} vs {} sites",
                self.counts.len(),
                other.counts.len()
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_samples += other.n_samples;
        Ok(())
    }

    /// Largest `|f_k − p_k|/σ_k` with `σ_k² = p_k(1−p_k)/n`.
    pub fn max_z_score<T: Real>(&self, reference: &LatticeDistribution<T>) -> f64 {
        let n = self.n_samples as f64;
        self.frequencies()
            .iter()
            .zip(reference.probs())
            .map(|(&f, &p)| {
                let p = p.as_f64();
                let sd = (p * (1.0 - p) / n).sqrt();
                if sd > 0.0 {
                    (f - p).abs() / sd
                } else if f == p {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Walker observed at fixed time intervals.
struct TimedWalker<'a, T> {
    params: &'a LatticeParams<T>,
    site: i64,
    /// Time still to wait before the next hop.
    pending: f64,
}

impl<'a, T: Real> TimedWalker<'a, T> {
    fn new<R: Rng + ?Sized>(params: &'a LatticeParams<T>, rng: &mut R) -> Result<Self> {
        let (_, wait) = lattice_jump(0, params, rng)?;
        Ok(Self {
            params,
            site: 0,
            pending: wait.as_f64(),
        })
    }

    fn advance<R: Rng + ?Sized>(&mut self, mut span: f64, rng: &mut R) -> Result<()> {
        while self.pending <= span {
            span -= self.pending;
            let (site, wait) = lattice_jump(self.site, self.params, rng)?;
            self.site = site;
            self.pending = wait.as_f64();
        }
        self.pending -= span;
        Ok(())
    }
}

fn occupation_run<T: Real>(
    params: &LatticeParams<T>,
    cfg: &LatticeMcConfig<T>,
    run: usize,
) -> Result<OccupationCounts> {
    let mut rng = stream(cfg.seed, run as u64);
    let mut counts = vec![0u64; params.n_sites()];
    match cfg.mode {
        LatticeMode::FixedStep { dt } => {
            let mut site = 0i64;
            for _ in 0..cfg.burn_in {
                site = lattice_step(site, params, &mut rng, dt)?;
            }
            for _ in 0..cfg.samples_per_run {
                for _ in 0..cfg.thin {
                    site = lattice_step(site, params, &mut rng, dt)?;
                }
                counts[params.slot(site)?] += 1;
            }
        }
        LatticeMode::EventDriven => {
            let hop_time = 1.0 / params.lambda().as_f64();
            let mut walker = TimedWalker::new(params, &mut rng)?;
            walker.advance(cfg.burn_in as f64 * hop_time, &mut rng)?;
            let interval = cfg.thin as f64 * hop_time;
            for _ in 0..cfg.samples_per_run {
                walker.advance(interval, &mut rng)?;
                counts[params.slot(walker.site)?] += 1;
            }
        }
    }
    Ok(OccupationCounts {
        counts,
        n_samples: cfg.samples_per_run,
    })
}

/// Runs `n_runs` independent walkers in parallel and pools their counts.
pub fn lattice_monte_carlo<T: Real>(
    params: &LatticeParams<T>,
    cfg: &LatticeMcConfig<T>,
) -> Result<OccupationCounts> {
    if cfg.n_runs == 0 || cfg.samples_per_run == 0 || cfg.thin == 0 {
        return Err(Error::Precondition(
            "need at least one run, one sample and thin ≥ 1".into(),
        ));
    }
    if let LatticeMode::FixedStep { dt } = cfg.mode {
        if !(dt > T::zero()) || (params.lambda() * dt).as_f64() > MAX_STEP_PROBABILITY {
            return Err(Error::Stability(format!(
                "lattice step needs 0 < λ·dt ≤ {MAX_STEP_PROBABILITY}, got dt = {dt}"
            )));
        }
    }
    let runs: Vec<OccupationCounts> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|run| occupation_run(params, cfg, run))
        .collect::<Result<_>>()?;
    let mut total = OccupationCounts {
        counts: vec![0; params.n_sites()],
        n_samples: 0,
    };
    for r in &runs {
        total.merge(r)?;
    }
    Ok(total)
}

/// Integrates the master equation with classical RK4.
pub fn lattice_transient<T: Real>(
    initial: &LatticeDistribution<T>,
    params: &LatticeParams<T>,
    t_final: T,
    dt_ode: T,
) -> Result<LatticeDistribution<T>> {
    initial.check_params(params)?;
    if !(t_final >= T::zero()) {
        return Err(invalid(
            "t_final",
            format!("must be non-negative, got {t_final}"),
        ));
    }
    if !(dt_ode > T::zero()) || (dt_ode * params.lambda()).as_f64() > MAX_RK4_STEP {
        return Err(Error::Stability(format!(
            "RK4 needs 0 < λ·dt ≤ {MAX_RK4_STEP}, got dt = {dt_ode}"
        )));
    }
    let steps = (t_final / dt_ode).ceil().to_usize().unwrap_or(0);
    if steps == 0 {
        return Ok(initial.clone());
    }
    let h = t_final / T::from_count(steps);
    let n = params.n_sites();
    let mut p = initial.probs.clone();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
        vec![T::zero(); n],
    );
    let two = T::lit(2.0);
    let tol = T::lit(MASS_TOL).max(T::lit(64.0) * T::epsilon());
    for _ in 0..steps {
        let before: T = p.iter().copied().sum();
        apply_generator(params, &p, &mut k1);
        for i in 0..n {
            tmp[i] = p[i] + h / two * k1[i];
        }
        apply_generator(params, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = p[i] + h / two * k2[i];
        }
        apply_generator(params, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = p[i] + h * k3[i];
        }
        apply_generator(params, &tmp, &mut k4);
        for i in 0..n {
            p[i] = p[i] + h / T::lit(6.0) * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let after: T = p.iter().copied().sum();
        if (after - before).abs() > tol {
            return Err(Error::MassDrift((after - before).as_f64()));
        }
    }
    // RK4 is not positivity-preserving at the ulp level.
    let floor = -T::lit(MASS_TOL);
    if let Some((k, &v)) = p.iter().enumerate().find(|(_, v)| **v < floor) {
        return Err(Error::NegativeDensity {
            node: k,
            value: v.as_f64(),
        });
    }
    for v in &mut p {
        *v = v.max(T::zero());
    }
    let total: T = p.iter().copied().sum();
    for v in &mut p {
        *v = *v / total;
    }
    LatticeDistribution::new(p)
}

/// One refinement level of the diffusive-limit check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusiveLimitRow<T> {
    pub n_bar: usize,
    pub l: T,
    pub lambda: T,
    /// `max_k |P_k/l − φ(k·l)|` over the sites.
    pub site_error: T,
    /// Sup-norm error of the histogram reading of `P_k/l` (constant on
    /// `[kl − l/2, kl + l/2)`) against the tent.
    pub histogram_error: T,
}

impl<T: Real> DiffusiveLimitRow<T> {
    /// `histogram_error · n̄`, bounded under first-order convergence.
    pub fn scaled_error(&self) -> T {
        self.histogram_error * T::from_count(self.n_bar)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveLimitTable<T> {
    pub spread: T,
    pub sigma_cm2: T,
    pub rows: Vec<DiffusiveLimitRow<T>>,
}

impl<T: Real> DiffusiveLimitTable<T> {
    /// Histogram errors strictly decrease with refinement.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].histogram_error < w[0].histogram_error)
    }

    pub fn max_scaled_error(&self) -> T {
        self.rows
            .iter()
            .map(DiffusiveLimitRow::scaled_error)
            .fold(T::zero(), T::max)
    }

    pub fn max_site_error(&self) -> T {
        self.rows
            .iter()
            .map(|r| r.site_error)
            .fold(T::zero(), T::max)
    }
}

/// Steady lattice densities against the tent for increasing `n̄`.
pub fn diffusive_limit_check<T: Real>(
    sigma_cm2: T,
    spread: T,
    levels: &[usize],
) -> Result<DiffusiveLimitTable<T>> {
    if levels.len() < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 refinement levels, got {}",
            levels.len()
        )));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &n_bar in levels {
        let params = LatticeParams::diffusive(sigma_cm2, spread, n_bar)?;
        let steady = lattice_steady_state(&params)?;
        let density = steady.density(&params);
        let l = params.l();
        let half_cell = l / T::lit(2.0);
        let mut site_error = T::zero();
        let mut histogram_error = T::zero();
        for (i, &d) in density.iter().enumerate() {
            let r = params.position(params.site(i));
            site_error = site_error.max((d - tent_pdf(r, spread)?).abs());
            // The tent is linear on each cell apart from the origin (a cell
            // centre), so the sup over the cell is attained at a vertex.
            for x in [r - half_cell, r, r + half_cell] {
                histogram_error = histogram_error.max((d - tent_pdf(x, spread)?).abs());
            }
        }
        // Cells beyond the outermost sites carry zero density.
        let outer = params.position(params.max_site()) + half_cell;
        histogram_error = histogram_error.max(tent_pdf(outer, spread)?);
        rows.push(DiffusiveLimitRow {
            n_bar,
            l,
            lambda: params.lambda(),
            site_error,
            histogram_error,
        });
    }
    Ok(DiffusiveLimitTable {
        spread,
        sigma_cm2,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn params(n_bar: usize) -> LatticeParams<f64> {
        LatticeParams::new(0.5, 2.0, n_bar).unwrap()
    }

    #[test]
    fn moves_follow_the_four_cases() {
        let p = params(3);
        assert_eq!(apply_move(0, LatticeMove::Right, &p).unwrap(), 1);
        assert_eq!(apply_move(0, LatticeMove::Left, &p).unwrap(), -1);
        assert_eq!(apply_move(2, LatticeMove::Right, &p).unwrap(), 0);
        assert_eq!(apply_move(2, LatticeMove::Left, &p).unwrap(), 1);
        assert_eq!(apply_move(-2, LatticeMove::Left, &p).unwrap(), 0);
        assert_eq!(apply_move(1, LatticeMove::Stay, &p).unwrap(), 1);
        assert!(apply_move(3, LatticeMove::Stay, &p).is_err());
    }

    #[test]
    fn step_rejects_bad_input() {
        let p = params(3);
        let mut rng = stream(1, 0);
        assert!(lattice_step(5, &p, &mut rng, 0.01).is_err());
        assert!(matches!(
            lattice_step(0, &p, &mut rng, 0.1),
            Err(Error::Stability(_))
        ));
        assert!(lattice_step(0, &p, &mut rng, 0.05).is_ok());
    }

    #[test]
    fn step_stays_with_probability_one_minus_lambda_dt() {
        let p = params(3);
        let mut rng = stream(2, 0);
        let n = 200_000;
        let dt = 0.04; // λ·dt = 0.08
        let moved = (0..n)
            .filter(|_| lattice_step(0, &p, &mut rng, dt).unwrap() != 0)
            .count();
        let f = moved as f64 / n as f64;
        let sd = (0.08f64 * 0.92 / n as f64).sqrt();
        assert!((f - 0.08).abs() < 4.0 * sd, "{f}");
    }

    #[test]
    fn generator_columns_sum_to_zero() {
        for n_bar in 2..12 {
            let q = generator(&params(n_bar));
            for j in 0..q.size() {
                let s: f64 = (0..q.size()).map(|i| q.get(i, j)).sum();
                assert_eq!(s, 0.0);
            }
        }
    }

    #[test]
    fn two_level_steady_state_is_exact() {
        let s = lattice_steady_state(&params(2)).unwrap();
        for (p, e) in s.probs().iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - e).abs() < 1e-12);
        }
        let p = LatticeParams::<f64>::diffusive(0.5, 2.0, 2).unwrap();
        assert_eq!(p.l(), 0.5);
        let d = lattice_steady_state(&p).unwrap().density(&p);
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_level_matches_hand_balance() {
        // Balance for n̄ = 3 (sites −2..2) gives (1, 2, 3, 2, 1)/9.
        let s = lattice_steady_state(&params(3)).unwrap();
        for (p, e) in s.probs().iter().zip([1.0, 2.0, 3.0, 2.0, 1.0]) {
            assert!((p - e / 9.0).abs() < 1e-13);
        }
    }

    #[test]
    fn steady_state_is_discrete_tent() {
        for n_bar in [4usize, 7, 20] {
            let p = params(n_bar);
            let s = lattice_steady_state(&p).unwrap();
            let nb = n_bar as f64;
            for (i, &v) in s.probs().iter().enumerate() {
                let k = p.site(i).abs() as f64;
                assert!((v - (nb - k) / (nb * nb)).abs() < 1e-13);
                assert!((v - s.probs()[s.probs().len() - 1 - i]).abs() < 1e-15);
            }
            let m = s.probs()[n_bar - 1];
            assert!(s.probs().iter().all(|&v| v <= m));
        }
    }

    #[test]
    fn transient_fixed_point_and_relaxation() {
        let p = LatticeParams::new(0.25, 4.0, 4).unwrap();
        let steady = lattice_steady_state(&p).unwrap();
        let after = lattice_transient(&steady, &p, 10.0 / p.lambda(), 0.1 / p.lambda()).unwrap();
        assert!(after.l1_distance(&steady).unwrap() < 1e-10);

        let start = LatticeDistribution::point_mass(&p, 3).unwrap();
        let n = p.n_bar() as f64;
        let t = 100.0 * n * n / p.lambda();
        let relaxed = lattice_transient(&start, &p, t, 0.25 / p.lambda()).unwrap();
        assert!(relaxed.l1_distance(&steady).unwrap() < 1e-6);
    }

    #[test]
    fn transient_variance_grows_linearly_before_walls() {
        let p = LatticeParams::<f64>::new(0.01, 100.0, 200).unwrap();
        let start = LatticeDistribution::point_mass(&p, 0).unwrap();
        let t = 1.0;
        let out = lattice_transient(&start, &p, t, 0.2 / p.lambda()).unwrap();
        let expect = p.lambda() * p.l() * p.l() * t;
        assert!((out.variance(&p) - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn transient_guards() {
        let p = params(3);
        let s = LatticeDistribution::uniform(&p);
        assert!(matches!(
            lattice_transient(&s, &p, 1.0, 0.3),
            Err(Error::Stability(_))
        ));
        let other = LatticeDistribution::uniform(&params(4));
        assert!(lattice_transient(&other, &p, 1.0, 0.1).is_err());
        assert!(LatticeDistribution::new(vec![0.5, 0.5, 0.1]).is_err());
        assert!(LatticeDistribution::new(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn diffusive_limit_is_first_order() {
        let t = diffusive_limit_check(0.5, 2.0, &[4, 8, 16, 32]).unwrap();
        assert!(t.is_monotone());
        assert!(t.max_site_error() < 1e-12);
        for row in &t.rows {
            // sup error of the histogram reading is exactly 1/(n̄L)
            assert!((row.histogram_error - 1.0 / (row.n_bar as f64 * 2.0)).abs() < 1e-12);
            assert!((row.scaled_error() - 0.5).abs() < 1e-10);
        }
        assert!(diffusive_limit_check(0.5, 2.0, &[4, 8]).is_err());
    }

    #[test]
    fn csv_columns() {
        let p = params(2);
        let s = lattice_steady_state(&p).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "site_index,r,probability,density");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0,0.0000000000000000e0,"));
    }

    proptest! {
        #[test]
        fn steady_state_is_even(n_bar in 2usize..40, l in 0.01f64..2.0, lambda in 0.1f64..100.0) {
            let p = LatticeParams::new(l, lambda, n_bar).unwrap();
            let s = lattice_steady_state(&p).unwrap();
            let v = s.probs();
            for i in 0..v.len() {
                prop_assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-13);
            }
        }
    }
}
