//! Domain types of the dealer model and the two-body coordinate change.
//!
//! Each trader `i` quotes a bid `z_i − L/2` and an ask `z_i + L/2` around a
//! midprice `z_i`. For two traders the natural coordinates are the centre of
//! mass `z_cm = (z₁ + z₂)/2` and the relative price `r = (z₁ − z₂)/2`; a
//! transaction happens when `|z₁ − z₂|` reaches the spread `L`.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Physical parameters of the dealer model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    n_traders: usize,
    spread: T,
    sigma2: T,
    u2: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(n_traders: usize, spread: T, sigma2: T, u2: T) -> Result<Self> {
        if n_traders < 2 {
            return Err(invalid(
                "N",
                format!("need at least 2 traders, got {n_traders}"),
            ));
        }
        if !(spread.is_finite() && spread > T::zero()) {
            return Err(invalid(
                "L",
                format!("must be positive and finite, got {spread}"),
            ));
        }
        if !(sigma2.is_finite() && sigma2 > T::zero()) {
            return Err(invalid(
                "sigma2",
                format!("must be positive and finite, got {sigma2}"),
            ));
        }
        if !(u2.is_finite() && u2 >= T::zero()) {
            return Err(invalid(
                "u2",
                format!("must be non-negative and finite, got {u2}"),
            ));
        }
        Ok(Self {
            n_traders,
            spread,
            sigma2,
            u2,
        })
    }

    /// `L = 2`, `σ² = 1` with the given trader count and potential strength.
    pub fn table1(n_traders: usize, u2: T) -> Result<Self> {
        Self::new(n_traders, T::lit(2.0), T::one(), u2)
    }

    pub fn n_traders(&self) -> usize {
        self.n_traders
    }

    /// Spread `L`, identical for all traders.
    pub fn spread(&self) -> T {
        self.spread
    }

    pub fn half_spread(&self) -> T {
        self.spread / T::lit(2.0)
    }

    /// Noise variance per unit time of a single midprice.
    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    /// Strength of the harmonic attraction to the market midprice.
    pub fn u2(&self) -> T {
        self.u2
    }

    /// Noise variance of the relative coordinate for two traders, `σ²/2`.
    pub fn sigma_cm2(&self) -> T {
        self.sigma2 / T::lit(2.0)
    }

    pub fn with_n_traders(self, n_traders: usize) -> Result<Self> {
        Self::new(n_traders, self.spread, self.sigma2, self.u2)
    }
}

/// Midprices of all traders at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState<T> {
    pub midprices: Vec<T>,
    pub time: T,
}

impl<T: Real> MarketState<T> {
    pub fn new(midprices: Vec<T>, time: T) -> Result<Self> {
        if midprices.len() < 2 {
            return Err(invalid("midprices", "need at least 2 traders"));
        }
        let state = Self { midprices, time };
        state.check_finite()?;
        Ok(state)
    }

    /// All traders quoting around the origin at `t = 0`.
    pub fn at_origin(n_traders: usize) -> Self {
        Self {
            midprices: vec![T::zero(); n_traders],
            time: T::zero(),
        }
    }

    pub fn n_traders(&self) -> usize {
        self.midprices.len()
    }

    /// Centre of mass (equal-weight mean of the midprices).
    pub fn com(&self) -> T {
        self.midprices.iter().copied().sum::<T>() / T::from_count(self.midprices.len())
    }

    pub fn bid(&self, i: usize, spread: T) -> T {
        self.midprices[i] - spread / T::lit(2.0)
    }

    pub fn ask(&self, i: usize, spread: T) -> T {
        self.midprices[i] + spread / T::lit(2.0)
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if !self.time.is_finite() {
            return Err(Error::NonFinite(format!("state time {}", self.time)));
        }
        if let Some((i, z)) = self
            .midprices
            .iter()
            .enumerate()
            .find(|(_, z)| !z.is_finite())
        {
            return Err(Error::NonFinite(format!(
                "midprice of trader {i} is {z} at t = {}",
                self.time
            )));
        }
        Ok(())
    }
}

/// A completed transaction between the holder of the highest bid (buyer)
/// and the holder of the lowest ask (seller).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransactionEvent<T> {
    pub time: T,
    pub buyer: usize,
    pub seller: usize,
    pub price: T,
    /// The trader whose move triggered the crossing; always the buyer or the seller.
    pub taker: usize,
}

impl<T: Real> TransactionEvent<T> {
    pub fn new(time: T, buyer: usize, seller: usize, price: T, taker: usize) -> Result<Self> {
        if buyer == seller {
            return Err(invalid("seller", "buyer and seller must differ"));
        }
        if taker != buyer && taker != seller {
            return Err(invalid(
                "taker",
                format!("taker {taker} is neither buyer {buyer} nor seller {seller}"),
            ));
        }
        Ok(Self {
            time,
            buyer,
            seller,
            price,
            taker,
        })
    }

    pub fn maker(&self) -> usize {
        if self.taker == self.buyer {
            self.seller
        } else {
            self.buyer
        }
    }
}

/// Time discretisation and seeding of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSchedule<T> {
    pub dt: T,
    /// Warm-up duration; samples from `[-t_init, 0)` are discarded.
    pub t_init: T,
    pub t_end: T,
    pub seed: u64,
    pub n_runs: usize,
}

impl<T: Real> SimSchedule<T> {
    pub fn new(dt: T, t_init: T, t_end: T, seed: u64, n_runs: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_init.is_finite() && t_init >= T::zero()) {
            return Err(invalid(
                "t_init",
                format!("must be non-negative, got {t_init}"),
            ));
        }
        if !(t_end.is_finite() && t_end > T::zero()) {
            return Err(invalid("t_end", format!("must be positive, got {t_end}")));
        }
        if n_runs == 0 {
            return Err(invalid("runs", "need at least one run"));
        }
        Ok(Self {
            dt,
            t_init,
            t_end,
            seed,
            n_runs,
        })
    }

    /// Default step `Δt = 10⁻⁴/√(N/2)`: the boundary layer `L/(2√N)` narrows with `N`.
    pub fn default_dt(n_traders: usize) -> T {
        T::lit(1e-4 / (n_traders as f64 / 2.0).sqrt())
    }

    /// Published schedule: `T_ini = 20`, `T_end = 10⁴`, one run.
    pub fn table1(n_traders: usize, seed: u64) -> Self {
        Self::new(
            Self::default_dt(n_traders),
            T::lit(20.0),
            T::lit(1e4),
            seed,
            1,
        )
        .expect("table schedule is valid")
    }

    /// Largest step allowed for the given model: `10⁻²·min(1, L²/σ²)`.
    pub fn max_dt(params: &ModelParams<T>) -> T {
        let scale = params.spread() * params.spread() / params.sigma2();
        T::lit(1e-2) * scale.min(T::one())
    }

    pub fn check_stability(&self, params: &ModelParams<T>) -> Result<()> {
        let max = Self::max_dt(params);
        if self.dt > max {
            return Err(Error::Stability(format!(
                "dt = {} exceeds the limit {} = 1e-2·min(1, L²/σ²)",
                self.dt, max
            )));
        }
        Ok(())
    }

    pub fn warmup_steps(&self) -> u64 {
        (self.t_init / self.dt).round().to_u64().unwrap_or(0)
    }

    pub fn sampling_steps(&self) -> u64 {
        (self.t_end / self.dt).round().to_u64().unwrap_or(0).max(1)
    }
}

/// Two-body centre of mass and relative price `(z_cm, r)`.
pub fn to_cm_relative<T: Real>(state: &MarketState<T>) -> Result<(T, T)> {
    match state.midprices.as_slice() {
        &[z1, z2] => {
            let two = T::lit(2.0);
            Ok(((z1 + z2) / two, (z1 - z2) / two))
        }
        other => Err(invalid(
            "midprices",
            format!(
                "centre-of-mass transform needs exactly 2 traders, got {}",
                other.len()
            ),
        )),
    }
}

/// Inverse of [`to_cm_relative`]: `(z₁, z₂) = (z_cm + r, z_cm − r)`.
pub fn from_cm_relative<T: Real>(z_cm: T, r: T) -> (T, T) {
    (z_cm + r, z_cm - r)
}

/// Both traders requote around the midpoint of the crossing pair.
///
/// Returns `(z_i', z_j', price)`, all equal to `(z_i + z_j)/2`, which keeps
/// the pair's centre of mass unchanged bit-for-bit.
pub fn resolve_transaction<T: Real>(zi: T, zj: T, spread: T) -> Result<(T, T, T)> {
    if (zi - zj).abs() < spread {
        return Err(Error::Precondition(format!(
            "no crossing: |{zi} - {zj}| < L = {spread}"
        )));
    }
    let mid = (zi + zj) / T::lit(2.0);
    Ok((mid, mid, mid))
}
