//! Closed-form steady states and scalar predictions of the dealer model.
//!
//! These are the reference answers every numerical method in the crate is
//! checked against:
//!
//! * the tent density `φ(r) = max{0, (L/2 − |r|)/(L²/4)}` of the two-body
//!   relative price and the order-book profile `f_A(r) = φ(r − L/2)`;
//! * the steady state under a symmetric confining potential `U`, in general
//!   form (by quadrature) and for `U = u²r²/2` in closed form;
//! * the next-to-leading-order mean-field profile for `N ≫ 1` traders;
//! * the mean transaction interval `L²/(2σ²)` and the centre-of-mass
//!   diffusion constant `σ²/4`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::quadrature::{adaptive_simpson, integrate_pieces};
use crate::scalar::Real;
use crate::specfun::{erf, erfc, erfi, hyp2f2_1_1_32_2, SeriesTolerance};

fn check_spread<T: Real>(spread: T) -> Result<()> {
    if spread.is_finite() && spread > T::zero() {
        Ok(())
    } else {
        Err(invalid("L", format!("must be positive, got {spread}")))
    }
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {v}")))
    }
}

fn tent_unchecked<T: Real>(r: T, spread: T) -> T {
    let half = spread / T::lit(2.0);
    ((half - r.abs()) / (half * half)).max(T::zero())
}

/// Steady density of the two-body relative price.
pub fn tent_pdf<T: Real>(r: T, spread: T) -> Result<T> {
    check_spread(spread)?;
    Ok(tent_unchecked(r, spread))
}

/// Average ask-side order-book depth profile measured from the centre of mass.
pub fn orderbook_profile<T: Real>(r: T, spread: T) -> Result<T> {
    check_spread(spread)?;
    Ok(tent_unchecked(r - spread / T::lit(2.0), spread))
}

/// Mean time between transactions, `⟨τ⟩ = L²/(2σ²)`.
///
/// Equal to `L²/(4σ_cm²)` with `σ_cm² = σ²/2`, i.e. the inverse of the
/// total steady boundary flux of the tent density.
pub fn mean_transaction_interval<T: Real>(spread: T, sigma2: T) -> Result<T> {
    check_spread(spread)?;
    check_positive("sigma2", sigma2)?;
    Ok(spread * spread / (T::lit(2.0) * sigma2))
}

/// Two-body centre-of-mass diffusion constant `D = σ_cm²/2 = σ²/4`.
pub fn com_diffusion_constant_n2<T: Real>(sigma2: T) -> Result<T> {
    check_positive("sigma2", sigma2)?;
    Ok(sigma2 / T::lit(4.0))
}

/// Mean-field tail function `𝔉(x) = e^{−x²/2}/√(2π) − (x/2)·erfc(x/√2)`.
pub fn nlo_tail_function<T: Real>(x: T) -> T {
    let gauss = (-x * x / T::lit(2.0)).exp() / (T::lit(2.0) * T::PI()).sqrt();
    gauss - x / T::lit(2.0) * erfc(x * T::FRAC_1_SQRT_2())
}

/// Boundary-layer thickness `ε = L/(2√N)`.
pub fn boundary_layer_width<T: Real>(spread: T, n_traders: usize) -> T {
    spread / (T::lit(2.0) * T::from_count(n_traders).sqrt())
}

fn nlo_unchecked<T: Real>(r: T, spread: T, eps: T) -> T {
    let a = r.abs();
    let half = spread / T::lit(2.0);
    T::lit(4.0) * eps / (spread * spread)
        * (nlo_tail_function((a - half) / eps) - T::lit(2.0) * nlo_tail_function(a / eps))
}

/// Next-to-leading-order mean-field steady density for `N` traders.
pub fn nlo_meanfield_pdf<T: Real>(r: T, spread: T, n_traders: usize) -> Result<T> {
    check_spread(spread)?;
    if n_traders < 2 {
        return Err(invalid(
            "N",
            format!("need at least 2 traders, got {n_traders}"),
        ));
    }
    Ok(nlo_unchecked(
        r,
        spread,
        boundary_layer_width(spread, n_traders),
    ))
}

/// Steady density under the harmonic potential `U(r) = u²r²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicProfile<T> {
    spread: T,
    sigma_cm: T,
    u: T,
    erfi_edge: T,
    normalization: T,
}

impl<T: Real> HarmonicProfile<T> {
    pub fn new(spread: T, sigma_cm: T, u: T) -> Result<Self> {
        check_spread(spread)?;
        check_positive("sigma_cm", sigma_cm)?;
        check_positive("u", u)?;
        let edge = u * spread / (T::lit(2.0) * sigma_cm);
        let mut profile = Self {
            spread,
            sigma_cm,
            u,
            erfi_edge: erfi(edge)?,
            normalization: T::one(),
        };
        profile.normalization = profile.closed_form_normalization()?;
        #[cfg(debug_assertions)]
        {
            let quad = profile.quadrature_normalization()?;
            let rel = ((quad - profile.normalization) / quad).abs();
            let tol = T::lit(1e-8).max(T::lit(1e3) * T::epsilon());
            debug_assert!(
                rel <= tol,
                "closed-form Z = {} disagrees with quadrature Z = {} (rel {})",
                profile.normalization,
                quad,
                rel
            );
        }
        Ok(profile)
    }

    pub fn spread(&self) -> T {
        self.spread
    }

    /// Normalisation constant `Z` (from the closed form).
    pub fn normalization(&self) -> T {
        self.normalization
    }

    /// `Z = [2πσ² erf(a) erfi(a) − u²L² ₂F₂(1,1;3/2,2;−a²)] / (2uσ√π)`
    /// with `a = uL/(2σ)`.
    pub fn closed_form_normalization(&self) -> Result<T> {
        let (s, u, l) = (self.sigma_cm, self.u, self.spread);
        let a = u * l / (T::lit(2.0) * s);
        let f22 = hyp2f2_1_1_32_2(-a * a, SeriesTolerance::default())?;
        let bracket = T::lit(2.0) * T::PI() * s * s * erf(a) * self.erfi_edge - u * u * l * l * f22;
        Ok(bracket / (T::lit(2.0) * u * s * T::PI().sqrt()))
    }

    /// `Z` by adaptive quadrature of the unnormalised density over `[−L/2, L/2]`.
    pub fn quadrature_normalization(&self) -> Result<T> {
        let half = self.spread / T::lit(2.0);
        let integral = adaptive_simpson(
            |r: T| self.unnormalized(r).unwrap_or_else(|_| T::nan()),
            T::zero(),
            half,
            T::lit(1e-12).max(T::lit(16.0) * T::epsilon()),
        )?;
        Ok(T::lit(2.0) * integral)
    }

    fn unnormalized(&self, r: T) -> Result<T> {
        let x = self.u * r.abs() / self.sigma_cm;
        Ok((-x * x).exp() * (self.erfi_edge - erfi(x)?))
    }

    pub fn pdf(&self, r: T) -> T {
        if r.abs() > self.spread / T::lit(2.0) {
            return T::zero();
        }
        // |r| ≤ L/2 keeps the argument below the edge value already evaluated.
        let value =
            self.unnormalized(r).expect("argument bounded by the edge") / self.normalization;
        value.max(T::zero())
    }

    /// `φ'(0⁺) = −2u/(σ√π Z)`, equal to the one-sided slope at `L/2`.
    pub fn slope_at_origin(&self) -> T {
        -T::FRAC_2_SQRT_PI() * self.u / (self.sigma_cm * self.normalization)
    }
}

/// Harmonic-potential steady density evaluated at a single point.
pub fn steady_pdf_harmonic<T: Real>(r: T, spread: T, sigma_cm: T, u: T) -> Result<T> {
    Ok(HarmonicProfile::new(spread, sigma_cm, u)?.pdf(r))
}

type PotentialFn<T> = dyn Fn(T) -> T + Send + Sync;

/// Steady density under an arbitrary even potential, built by quadrature:
/// `φ(r) = e^{−2U(r)/σ²}(𝒢(L/2) − 𝒢(|r|))/Z`, `𝒢(r) = ∫₀ʳ e^{2U/σ²}`.
#[derive(Clone)]
pub struct GeneralPotentialProfile<T> {
    spread: T,
    sigma_cm2: T,
    potential: Arc<PotentialFn<T>>,
    g_edge: T,
    normalization: T,
}

impl<T: std::fmt::Debug> std::fmt::Debug for GeneralPotentialProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralPotentialProfile")
            .field("spread", &self.spread)
            .field("sigma_cm2", &self.sigma_cm2)
            .field("normalization", &self.normalization)
            .finish_non_exhaustive()
    }
}

impl<T: Real> GeneralPotentialProfile<T> {
    const REL_TOL: f64 = 1e-12;
    const OUTER_REL_TOL: f64 = 1e-10;
    const SYMMETRY_SAMPLES: usize = 16;

    pub fn new<F>(spread: T, sigma_cm2: T, potential: F) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        check_spread(spread)?;
        check_positive("sigma_cm2", sigma_cm2)?;
        let half = spread / T::lit(2.0);
        let u0 = potential(T::zero());
        if u0 != T::zero() {
            return Err(invalid(
                "U",
                format!("must vanish at the origin, U(0) = {u0}"),
            ));
        }
        for k in 1..=Self::SYMMETRY_SAMPLES {
            let x = half * T::from_count(k) / T::from_count(Self::SYMMETRY_SAMPLES);
            let (up, um) = (potential(x), potential(-x));
            if !(up.is_finite() && um.is_finite()) {
                return Err(invalid("U", format!("not finite at ±{x}")));
            }
            let scale = T::one().max(up.abs());
            if (up - um).abs() > T::lit(1e-12).max(T::lit(8.0) * T::epsilon()) * scale {
                return Err(invalid(
                    "U",
                    format!("not even: U({x}) = {up}, U(-{x}) = {um}"),
                ));
            }
        }
        let mut profile = Self {
            spread,
            sigma_cm2,
            potential: Arc::new(potential),
            g_edge: T::zero(),
            normalization: T::one(),
        };
        profile.g_edge = profile.g(half)?;
        let outer_tol = T::lit(Self::OUTER_REL_TOL).max(T::lit(64.0) * T::epsilon());
        let half_z = adaptive_simpson(
            |r: T| profile.unnormalized(r).unwrap_or_else(|_| T::nan()),
            T::zero(),
            half,
            outer_tol,
        )?;
        profile.normalization = T::lit(2.0) * half_z;
        Ok(profile)
    }

    fn tol() -> T {
        T::lit(Self::REL_TOL).max(T::lit(16.0) * T::epsilon())
    }

    fn g(&self, r: T) -> Result<T> {
        let scale = T::lit(2.0) / self.sigma_cm2;
        adaptive_simpson(
            |x: T| (scale * (self.potential)(x)).exp(),
            T::zero(),
            r,
            Self::tol(),
        )
    }

    fn unnormalized(&self, r: T) -> Result<T> {
        let a = r.abs();
        let weight = (-T::lit(2.0) * (self.potential)(a) / self.sigma_cm2).exp();
        Ok(weight * (self.g_edge - self.g(a)?))
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub fn pdf(&self, r: T) -> Result<T> {
        if r.abs() > self.spread / T::lit(2.0) {
            return Ok(T::zero());
        }
        Ok((self.unnormalized(r)? / self.normalization).max(T::zero()))
    }
}

/// General-potential steady density at a single point.
pub fn steady_pdf_general_potential<T, F>(r: T, spread: T, sigma_cm2: T, potential: F) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T + Send + Sync + 'static,
{
    GeneralPotentialProfile::new(spread, sigma_cm2, potential)?.pdf(r)
}

/// Which closed form a profile represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Tent,
    OrderBook,
    GeneralPotential,
    HarmonicPotential,
    MeanFieldNlo,
}

/// An evaluable closed-form steady density.
#[derive(Debug, Clone)]
pub enum AnalyticProfile<T> {
    Tent {
        spread: T,
    },
    OrderBook {
        spread: T,
    },
    GeneralPotential(GeneralPotentialProfile<T>),
    HarmonicPotential(HarmonicProfile<T>),
    MeanFieldNlo {
        spread: T,
        n_traders: usize,
        epsilon: T,
    },
}

impl<T: Real> AnalyticProfile<T> {
    pub fn tent(spread: T) -> Result<Self> {
        check_spread(spread)?;
        Ok(Self::Tent { spread })
    }

    pub fn order_book(spread: T) -> Result<Self> {
        check_spread(spread)?;
        Ok(Self::OrderBook { spread })
    }

    /// Harmonic profile from the model's `σ_cm² = σ²/2` and `u²`.
    pub fn harmonic(spread: T, sigma_cm2: T, u2: T) -> Result<Self> {
        check_positive("sigma_cm2", sigma_cm2)?;
        check_positive("u2", u2)?;
        Ok(Self::HarmonicPotential(HarmonicProfile::new(
            spread,
            sigma_cm2.sqrt(),
            u2.sqrt(),
        )?))
    }

    pub fn mean_field_nlo(spread: T, n_traders: usize) -> Result<Self> {
        nlo_meanfield_pdf(T::zero(), spread, n_traders)?;
        Ok(Self::MeanFieldNlo {
            spread,
            n_traders,
            epsilon: boundary_layer_width(spread, n_traders),
        })
    }

    /// The two-body steady state for given model parameters: the tent
    /// without a potential, the harmonic profile otherwise.
    pub fn two_body(spread: T, sigma2: T, u2: T) -> Result<Self> {
        if u2 > T::zero() {
            Self::harmonic(spread, sigma2 / T::lit(2.0), u2)
        } else {
            Self::tent(spread)
        }
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            Self::Tent { .. } => ProfileKind::Tent,
            Self::OrderBook { .. } => ProfileKind::OrderBook,
            Self::GeneralPotential(_) => ProfileKind::GeneralPotential,
            Self::HarmonicPotential(_) => ProfileKind::HarmonicPotential,
            Self::MeanFieldNlo { .. } => ProfileKind::MeanFieldNlo,
        }
    }

    pub fn pdf(&self, r: T) -> Result<T> {
        Ok(match self {
            Self::Tent { spread } => tent_unchecked(r, *spread),
            Self::OrderBook { spread } => tent_unchecked(r - *spread / T::lit(2.0), *spread),
            Self::GeneralPotential(p) => p.pdf(r)?,
            Self::HarmonicPotential(p) => p.pdf(r),
            Self::MeanFieldNlo {
                spread, epsilon, ..
            } => nlo_unchecked(r, *spread, *epsilon),
        })
    }

    /// Profile evaluated at the bin centres of `grid`.
    pub fn on_grid(&self, grid: &GridSpec<T>) -> Result<Vec<T>> {
        (0..grid.n_bins())
            .map(|k| self.pdf(grid.center(k)))
            .collect()
    }

    /// Points where the profile is not smooth, for piecewise quadrature.
    pub fn kinks(&self) -> Vec<T> {
        let half = |s: T| s / T::lit(2.0);
        match self {
            Self::Tent { spread } => vec![-half(*spread), T::zero(), half(*spread)],
            Self::OrderBook { spread } => vec![T::zero(), half(*spread), *spread],
            Self::GeneralPotential(p) => vec![-half(p.spread), T::zero(), half(p.spread)],
            Self::HarmonicPotential(p) => vec![-half(p.spread), T::zero(), half(p.spread)],
            Self::MeanFieldNlo { spread, .. } => {
                vec![-half(*spread), T::zero(), half(*spread)]
            }
        }
    }

    /// `∫ φ` over `[lo, hi]`, split at the kinks.
    pub fn integrate(&self, lo: T, hi: T, rel_tol: T) -> Result<T> {
        let mut pts = vec![lo];
        pts.extend(self.kinks().into_iter().filter(|&k| k > lo && k < hi));
        pts.push(hi);
        let value = integrate_pieces(|r| self.pdf(r).unwrap_or_else(|_| T::nan()), &pts, rel_tol)?;
        if value.is_nan() {
            return Err(Error::NonFinite("profile integral".into()));
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const L: f64 = 2.0;

    #[test]
    fn tent_examples() {
        assert_eq!(tent_pdf(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(tent_pdf(1.0, 2.0).unwrap(), 0.0);
        assert_eq!(tent_pdf(-1.0, 2.0).unwrap(), 0.0);
        assert_eq!(tent_pdf(0.5, 2.0).unwrap(), 0.5);
        assert!(tent_pdf(0.0, 0.0).is_err());
        assert!(tent_pdf(0.0, -1.0).is_err());
    }

    #[test]
    fn orderbook_examples() {
        assert_eq!(orderbook_profile(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(orderbook_profile(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(orderbook_profile(2.0, 2.0).unwrap(), 0.0);
        assert!(orderbook_profile(1.0, 0.0).is_err());
    }

    #[test]
    fn scalar_predictions() {
        assert_eq!(mean_transaction_interval(2.0, 1.0).unwrap(), 2.0);
        assert_eq!(mean_transaction_interval(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(mean_transaction_interval(2.0, 2.0).unwrap(), 1.0);
        assert!(mean_transaction_interval(0.0, 1.0).is_err());
        assert!(mean_transaction_interval(1.0, 0.0).is_err());
        // L²/(2σ²) = L²/(4σ_cm²)
        let (l, s2) = (1.7f64, 0.6);
        let via_cm = l * l / (4.0 * (s2 / 2.0));
        assert!((mean_transaction_interval(l, s2).unwrap() - via_cm).abs() < 1e-15);

        assert_eq!(com_diffusion_constant_n2(1.0).unwrap(), 0.25);
        assert_eq!(com_diffusion_constant_n2(2.0).unwrap(), 0.5);
        assert_eq!(com_diffusion_constant_n2(4.0).unwrap(), 1.0);
        assert!(com_diffusion_constant_n2(-1.0).is_err());
    }

    #[test]
    fn tent_kink_conditions() {
        let h = 1e-7;
        let right_at_zero = (tent_pdf(h, L).unwrap() - tent_pdf(0.0, L).unwrap()) / h;
        let left_at_edge = (tent_pdf(1.0, L).unwrap() - tent_pdf(1.0 - h, L).unwrap()) / h;
        let right_at_edge = (tent_pdf(1.0 + h, L).unwrap() - tent_pdf(1.0, L).unwrap()) / h;
        assert!((right_at_zero + 1.0).abs() < 1e-6);
        assert!((left_at_edge + 1.0).abs() < 1e-6);
        assert_eq!(right_at_edge, 0.0);
    }

    fn all_profiles() -> Vec<AnalyticProfile<f64>> {
        vec![
            AnalyticProfile::tent(L).unwrap(),
            AnalyticProfile::harmonic(L, 0.5, 1.0).unwrap(),
            AnalyticProfile::harmonic(1.3, 0.8, 4.0).unwrap(),
            AnalyticProfile::GeneralPotential(
                GeneralPotentialProfile::new(L, 0.5, |r: f64| r.powi(4)).unwrap(),
            ),
            AnalyticProfile::mean_field_nlo(L, 100).unwrap(),
            AnalyticProfile::mean_field_nlo(L, 1000).unwrap(),
        ]
    }

    #[test]
    fn profiles_are_normalized() {
        for p in all_profiles() {
            let mass = p.integrate(-10.0, 10.0, 1e-12).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "{:?}: {mass}", p.kind());
        }
        let ob = AnalyticProfile::order_book(L).unwrap();
        assert!((ob.integrate(-5.0, 5.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profiles_are_normalized_on_fine_grid() {
        let grid = GridSpec::symmetric(4.0, L / 2000.0).unwrap();
        for p in all_profiles() {
            let mass: f64 = p.on_grid(&grid).unwrap().iter().sum::<f64>() * grid.dr();
            assert!((mass - 1.0).abs() < 1e-5, "{:?}: {mass}", p.kind());
        }
    }

    #[test]
    fn profiles_are_even_and_nonnegative() {
        for p in all_profiles() {
            for k in 0..=100 {
                let r = -1.5 + 3.0 * k as f64 / 100.0;
                let (a, b) = (p.pdf(r).unwrap(), p.pdf(-r).unwrap());
                assert!((a - b).abs() < 1e-12, "{:?} at {r}", p.kind());
                assert!(a >= 0.0);
            }
        }
    }

    #[test]
    fn nlo_tail_function_values() {
        let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((nlo_tail_function(0.0) - inv_sqrt_2pi).abs() < 1e-16);
        assert!(nlo_tail_function(8.0) < 1e-12);
        assert!(nlo_tail_function(8.0) >= 0.0);
        // 𝔉(−x) ≈ x for large x
        assert!((nlo_tail_function(-12.0f64) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn nlo_peak_matches_expansion() {
        // 2/L − 4/(L√(2πN)) with L = 2, N = 100
        let expected = 1.0 - 2.0 / (2.0 * std::f64::consts::PI).sqrt() / 10.0;
        let v = nlo_meanfield_pdf(0.0, 2.0, 100).unwrap();
        assert!((v - expected).abs() < 1e-6);
        assert!((v - 0.920_21).abs() < 1e-5);
        assert!(nlo_meanfield_pdf(0.0, 2.0, 1).is_err());
    }

    #[test]
    fn nlo_approaches_tent() {
        let n = 1_000_000;
        let eps = boundary_layer_width(L, n);
        for k in 0..=400 {
            let r = -1.5 + 3.0 * k as f64 / 400.0;
            if r.abs() < 10.0 * eps || (r.abs() - 1.0).abs() < 10.0 * eps {
                continue;
            }
            let d = (nlo_meanfield_pdf(r, L, n).unwrap() - tent_pdf(r, L).unwrap()).abs();
            assert!(d < 1e-2, "r = {r}: {d}");
        }
    }

    #[test]
    fn zero_potential_recovers_tent() {
        assert!(
            (steady_pdf_general_potential(0.0f64, 2.0, 0.5, |_| 0.0).unwrap() - 1.0).abs() < 1e-10
        );
        let p = GeneralPotentialProfile::new(L, 0.5, |_| 0.0).unwrap();
        let grid = GridSpec::symmetric(1.5, 0.01).unwrap();
        for k in 0..grid.n_bins() {
            let r = grid.center(k);
            assert!((p.pdf(r).unwrap() - tent_pdf(r, L).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn general_potential_matches_harmonic_closed_form() {
        let u2 = 1.0;
        let general = GeneralPotentialProfile::new(L, 0.5, move |r: f64| u2 * r * r / 2.0).unwrap();
        let harmonic = HarmonicProfile::new(L, 0.5f64.sqrt(), 1.0).unwrap();
        assert!((general.pdf(0.0).unwrap() - harmonic.pdf(0.0)).abs() < 1e-8);
        assert!(general.pdf(1.0).unwrap().abs() < 1e-12);
        for &r in &[0.1, 0.37, -0.8, 0.99] {
            assert!((general.pdf(r).unwrap() - harmonic.pdf(r)).abs() < 1e-8);
        }
    }

    #[test]
    fn general_potential_rejects_bad_potentials() {
        assert!(GeneralPotentialProfile::new(L, 0.5, |r: f64| r).is_err());
        assert!(GeneralPotentialProfile::new(L, 0.5, |r: f64| r * r + 1.0).is_err());
        assert!(
            GeneralPotentialProfile::new(L, 0.5, |r: f64| 1.0 / r.abs() - 1.0 / r.abs()).is_err()
        );
    }

    #[test]
    fn harmonic_examples() {
        let p = HarmonicProfile::new(L, 0.5f64.sqrt(), 1.0).unwrap();
        assert!(p.pdf(1.0).abs() < 1e-15);
        assert!(p.pdf(-1.0).abs() < 1e-15);
        assert_eq!(p.pdf(1.5), 0.0);
        // closed-form Z against the 30-digit value 3.591759066782052706...
        assert!((p.normalization() - 3.591_759_066_782_053).abs() < 1e-13);
        let quad = p.quadrature_normalization().unwrap();
        assert!(((quad - p.normalization()) / quad).abs() < 1e-8);
        // kink condition φ'(0⁺) = φ'(L/2⁻)
        let h = 1e-6;
        let s0 = (p.pdf(h) - p.pdf(0.0)) / h;
        let s1 = (p.pdf(1.0) - p.pdf(1.0 - h)) / h;
        assert!((s0 - p.slope_at_origin()).abs() < 1e-4);
        assert!((s1 - p.slope_at_origin()).abs() < 1e-4);
    }

    #[test]
    fn harmonic_weak_potential_is_tent() {
        let p = HarmonicProfile::new(L, 0.5f64.sqrt(), 1e-4).unwrap();
        for k in 0..=200 {
            let r = -1.0 + 2.0 * k as f64 / 200.0;
            assert!((p.pdf(r) - tent_pdf(r, L).unwrap()).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn harmonic_z_other_parameters() {
        // 30-digit references for (u, L, σ_cm²)
        for &(u, l, s2, z) in &[
            (0.5, 2.0, 0.5, 0.950_678_366_700_316),
            (2.0, 1.0, 1.0, 0.815_392_520_741_793_2),
        ] {
            let p = HarmonicProfile::new(l, f64::sqrt(s2), u).unwrap();
            assert!(((p.normalization() - z) / z).abs() < 1e-12);
        }
    }

    #[test]
    fn hyp2f2_at_minus_four_matches_quadrature_identity() {
        // u = 1, σ_cm = 1, L = 4 gives a = 2 and ₂F₂(−4) through Z.
        let p = HarmonicProfile::new(4.0, 1.0, 1.0).unwrap();
        let z = p.quadrature_normalization().unwrap();
        let a: f64 = 2.0;
        let pi = std::f64::consts::PI;
        let from_quad = (2.0 * pi * erf(a) * erfi(a).unwrap() - 2.0 * pi.sqrt() * z) / 16.0;
        let series = hyp2f2_1_1_32_2(-4.0, SeriesTolerance::default()).unwrap();
        assert!((series - from_quad).abs() < 1e-8);
    }

    #[test]
    fn single_precision_profiles() {
        assert_eq!(tent_pdf(0.5f32, 2.0).unwrap(), 0.5);
        let p = HarmonicProfile::<f32>::new(2.0, 0.5f32.sqrt(), 1.0).unwrap();
        assert!((p.normalization() - 3.591_759).abs() < 1e-4);
        let v = nlo_meanfield_pdf(0.0f32, 2.0, 100).unwrap();
        assert!((v - 0.920_21).abs() < 1e-4);
    }
}
