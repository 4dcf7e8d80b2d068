//! Error functions and the `₂F₂(1, 1; 3/2, 2; z)` series needed by the
//! harmonic-potential steady state.
//!
//! | function | method |
//! |----------|--------|
//! | [`erf`], [`erfc`] | positive-term Maclaurin series below 3, Lentz continued fraction for `erfc` above |
//! | [`erfi`] | positive-term Maclaurin series up to 6, Dawson asymptotic expansion above |
//! | [`hyp2f2_1_1_32_2`] | direct term recursion with a rigorous truncation bound |

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Above this, `erfc` comes from the continued fraction.
const ERFC_CF_THRESHOLD: f64 = 3.0;
/// Above this, the Dawson asymptotic series is accurate to double precision.
const ERFI_ASYMPTOTIC_THRESHOLD: f64 = 6.0;
/// Arguments of `erfi` beyond this magnitude are rejected.
pub const ERFI_MAX_ARGUMENT: f64 = 30.0;

const MAX_ITER: usize = 5000;

/// Convergence controls for the hypergeometric series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance<T> {
    pub rel_tol: T,
    pub max_terms: usize,
}

impl<T: Real> SeriesTolerance<T> {
    pub fn new(rel_tol: T, max_terms: usize) -> Result<Self> {
        if !(rel_tol > T::zero() && rel_tol.is_finite()) {
            return Err(invalid(
                "rel_tol",
                format!("must be positive, got {rel_tol}"),
            ));
        }
        if max_terms < 10 {
            return Err(invalid(
                "max_terms",
                format!("must be at least 10, got {max_terms}"),
            ));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl<T: Real> Default for SeriesTolerance<T> {
    /// Two ulps relative, 500 terms.
    fn default() -> Self {
        Self {
            rel_tol: T::epsilon() * T::lit(2.0),
            max_terms: 500,
        }
    }
}

/// `(2/√π) e^{−a²} Σ 2ⁿ a^{2n+1} / (2n+1)!!` for `a ≥ 0`; every term is positive.
fn erf_series<T: Real>(a: T) -> T {
    let two_a2 = T::lit(2.0) * a * a;
    let mut term = a;
    let mut sum = a;
    for n in 0..MAX_ITER {
        term = term * two_a2 / T::from_count(2 * n + 3);
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-a * a).exp() * sum
}

/// `erfc(a)` for large `a` by modified Lentz evaluation of
/// `e^{−a²}/√π · 1/(a + ½/(a + 1/(a + 3/2/(a + …))))`.
fn erfc_continued_fraction<T: Real>(a: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut f = a;
    let mut c = a;
    let mut d = T::zero();
    for n in 1..MAX_ITER {
        let an = T::from_count(n) / T::lit(2.0);
        d = a + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = d.recip();
        c = a + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-a * a).exp() / (f * T::PI().sqrt())
}

/// Error function `(2/√π)∫₀ˣ e^{−t²} dt`. Odd by construction.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let a = x.abs();
    let value = if a < T::lit(ERFC_CF_THRESHOLD) {
        erf_series(a)
    } else if a.is_infinite() {
        T::one()
    } else {
        T::one() - erfc_continued_fraction(a)
    };
    if x < T::zero() {
        -value
    } else {
        value
    }
}

/// Complementary error function `1 − erf(x)`, accurate in the right tail.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let a = x.abs();
    let upper = if a < T::lit(ERFC_CF_THRESHOLD) {
        T::one() - erf_series(a)
    } else if a.is_infinite() {
        T::zero()
    } else {
        erfc_continued_fraction(a)
    };
    if x < T::zero() {
        T::lit(2.0) - upper
    } else {
        upper
    }
}

/// Imaginary error function `erfi(x) = −i erf(ix) = (2/√π)∫₀ˣ e^{t²} dt`.
///
/// Rejects `|x| > 30` and reports overflow where the result exceeds the
/// floating-point range (around `|x| ≈ 26.6` in double precision).
pub fn erfi<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return Err(Error::NonFinite("erfi argument".into()));
    }
    let a = x.abs();
    if a > T::lit(ERFI_MAX_ARGUMENT) {
        return Err(Error::Overflow {
            what: "erfi",
            argument: x.as_f64(),
        });
    }
    let value = if a <= T::lit(ERFI_ASYMPTOTIC_THRESHOLD) {
        // (2/√π) Σ a^{2n+1} / (n! (2n+1))
        let a2 = a * a;
        let mut power = a;
        let mut sum = a;
        for n in 1..MAX_ITER {
            power = power * a2 / T::from_count(n);
            let term = power / T::from_count(2 * n + 1);
            sum = sum + term;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        T::FRAC_2_SQRT_PI() * sum
    } else {
        // e^{a²}/(a√π) Σ (2n−1)!!/(2a²)ⁿ, truncated at the smallest term.
        let inv = T::one() / (T::lit(2.0) * a * a);
        let mut term = T::one();
        let mut sum = T::one();
        for n in 1..MAX_ITER {
            let next = term * T::from_count(2 * n - 1) * inv;
            if next >= term {
                break;
            }
            term = next;
            sum = sum + term;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        (a * a).exp() / (a * T::PI().sqrt()) * sum
    };
    if !value.is_finite() {
        return Err(Error::Overflow {
            what: "erfi",
            argument: x.as_f64(),
        });
    }
    Ok(if x < T::zero() { -value } else { value })
}

/// `₂F₂(1, 1; 3/2, 2; z) = Σₙ n! zⁿ / ((3/2)ₙ (2)ₙ)`.
///
/// Terms follow `tₙ₊₁ = tₙ · (n+1) z / ((n + 3/2)(n + 2))`. Summation stops
/// once the remaining tail is provably below `rel_tol·|sum|`: for `z < 0`
/// the series alternates with shrinking terms, so the tail is bounded by the
/// next term; for `z > 0` the term ratios decrease, giving a geometric bound.
pub fn hyp2f2_1_1_32_2<T: Real>(z: T, tol: SeriesTolerance<T>) -> Result<T> {
    if !z.is_finite() {
        return Err(Error::NonFinite("2F2 argument".into()));
    }
    let ratio = |n: usize| {
        let k = T::from_count(n);
        (k + T::one()) * z / ((k + T::lit(1.5)) * (k + T::lit(2.0)))
    };
    let mut term = T::one();
    let mut sum = T::one();
    for n in 0..tol.max_terms {
        term = term * ratio(n);
        sum = sum + term;
        let rho = ratio(n + 1).abs();
        if rho < T::one() {
            let tail = if z < T::zero() {
                term.abs() * rho
            } else {
                term.abs() * rho / (T::one() - rho)
            };
            if tail <= tol.rel_tol * sum.abs() {
                return Ok(sum);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "2F2(1,1;3/2,2;z) series",
        iterations: tol.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    const ERF_1: f64 = 0.842_700_792_949_714_9;
    const ERFI_1: f64 = 1.650_425_758_797_542_9;

    fn quad_erf(x: f64) -> f64 {
        2.0 / std::f64::consts::PI.sqrt()
            * adaptive_simpson(|t: f64| (-t * t).exp(), 0.0, x, 1e-13).unwrap()
    }

    fn quad_erfi(x: f64) -> f64 {
        2.0 / std::f64::consts::PI.sqrt()
            * adaptive_simpson(|t: f64| (t * t).exp(), 0.0, x, 1e-13).unwrap()
    }

    #[test]
    fn erf_examples() {
        assert_eq!(erf(0.0f64), 0.0);
        assert!((erf(1.0f64) - ERF_1).abs() < 1e-15);
        assert!((erf(1.0f64) - quad_erf(1.0)).abs() < 1e-12);
        for &x in &[0.3, 1.7, 2.9, 3.1, 4.5] {
            assert_eq!(erf(-x), -erf(x));
            assert!((erf(x) - quad_erf(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn erf_plus_erfc_is_one() {
        let mut x = -6.0f64;
        while x <= 6.0 {
            assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-14, "x = {x}");
            x += 0.037;
        }
    }

    #[test]
    fn erfc_right_tail_is_relative_accurate() {
        // erfc(5) = 1.5374597944280348e-12, erfc(10) = 2.0884875837625447e-45
        assert!((erfc(5.0f64) / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-13);
        assert!((erfc(10.0f64) / 2.088_487_583_762_544_7e-45 - 1.0).abs() < 1e-13);
        assert_eq!(erfc(f64::INFINITY), 0.0);
        assert_eq!(erfc(f64::NEG_INFINITY), 2.0);
    }

    #[test]
    fn erfi_examples() {
        assert_eq!(erfi(0.0f64).unwrap(), 0.0);
        let tiny = 1e-8f64;
        let lead = 2.0 * tiny / std::f64::consts::PI.sqrt();
        assert!((erfi(tiny).unwrap() - lead).abs() < 1e-22);
        assert!((erfi(1.0f64).unwrap() - ERFI_1).abs() < 1e-15);
        assert!((erfi(1.0f64).unwrap() - quad_erfi(1.0)).abs() < 1e-12);
    }

    #[test]
    fn erfi_branches_agree_with_quadrature() {
        for &x in &[0.5, 2.0, 3.5, 5.9, 6.1, 8.0] {
            let q = quad_erfi(x);
            let v = erfi(x).unwrap();
            assert!(((v - q) / q).abs() < 1e-11, "x = {x}: {v} vs {q}");
            assert_eq!(erfi(-x).unwrap(), -v);
        }
    }

    #[test]
    fn erfi_is_monotone_across_branch_switch() {
        let mut prev = erfi(5.5f64).unwrap();
        let mut x = 5.5;
        while x < 7.0 {
            x += 1e-3;
            let v = erfi(x).unwrap();
            assert!(v > prev, "not increasing at {x}");
            prev = v;
        }
    }

    #[test]
    fn erfi_derivative_matches_integrand() {
        let h = 1e-5;
        for &x in &[0.1f64, 0.5, 1.0] {
            let fd = (erfi(x + h).unwrap() - erfi(x - h).unwrap()) / (2.0 * h);
            let exact = 2.0 / std::f64::consts::PI.sqrt() * (x * x).exp();
            assert!((fd - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn erfi_overflow_guard() {
        assert!(matches!(erfi(30.5f64), Err(Error::Overflow { .. })));
        assert!(matches!(erfi(-31.0f64), Err(Error::Overflow { .. })));
        // representable at 26, overflows f64 before the guard
        assert!(erfi(26.0f64).unwrap().is_finite());
        assert!(matches!(erfi(28.0f64), Err(Error::Overflow { .. })));
        assert!(matches!(erfi(10.0f32), Err(Error::Overflow { .. })));
    }

    /// Independent oracle: explicit Pochhammer products, fixed number of terms.
    fn pochhammer_series(z: f64, terms: usize) -> f64 {
        let poch = |a: f64, n: usize| (0..n).map(|k| a + k as f64).product::<f64>();
        (0..terms)
            .map(|n| {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                poch(1.0, n) * poch(1.0, n) / (poch(1.5, n) * poch(2.0, n)) * z.powi(n as i32)
                    / fact
            })
            .sum()
    }

    #[test]
    fn hyp2f2_examples() {
        let tol = SeriesTolerance::default();
        assert_eq!(hyp2f2_1_1_32_2(0.0f64, tol).unwrap(), 1.0);
        let v = hyp2f2_1_1_32_2(-0.25f64, tol).unwrap();
        assert!((v - pochhammer_series(-0.25, 10)).abs() < 1e-9);
        assert!((v - 0.921_937_345_694_068_7).abs() < 1e-13);
        // positive side, checked against a long explicit series
        let w = hyp2f2_1_1_32_2(3.0f64, tol).unwrap();
        assert!(((w - pochhammer_series(3.0, 60)) / w).abs() < 1e-12);
    }

    #[test]
    fn hyp2f2_stopping_rule() {
        let tol = SeriesTolerance::default();
        for &z in &[-4.0f64, -1.0, 0.5, 2.0] {
            let v = hyp2f2_1_1_32_2(z, tol).unwrap();
            // one more term than the oracle needs changes nothing at tolerance
            let long = pochhammer_series(z, 80);
            assert!(((v - long) / long).abs() < 1e-11, "z = {z}");
        }
    }

    #[test]
    fn hyp2f2_reports_nonconvergence() {
        let tol = SeriesTolerance::new(1e-12, 10).unwrap();
        assert!(matches!(
            hyp2f2_1_1_32_2(-40.0f64, tol),
            Err(Error::NonConvergence { .. })
        ));
        assert!(SeriesTolerance::<f64>::new(0.0, 100).is_err());
        assert!(SeriesTolerance::<f64>::new(1e-10, 5).is_err());
    }

    #[test]
    fn single_precision() {
        assert!((erf(1.0f32) - ERF_1 as f32).abs() < 1e-6);
        assert!((erfi(1.0f32).unwrap() - ERFI_1 as f32).abs() < 1e-6);
        let v = hyp2f2_1_1_32_2(-0.25f32, SeriesTolerance::default()).unwrap();
        assert!((v - 0.921_937_35).abs() < 1e-6);
    }
}
