//! Adaptive Simpson quadrature.
//!
//! The integrands in this crate are smooth on compact intervals once kinks
//! (`|r|`, support edges) are split out with [`integrate_pieces`].

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_DEPTH: u32 = 50;
const ABS_FLOOR: f64 = 1e-14;
const COARSE_PANELS: usize = 32;

fn simpson<T: Real>(fa: T, fm: T, fb: T, h: T) -> T {
    h / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

struct Adaptive<'f, T, F> {
    f: &'f F,
    evaluations: usize,
    failed: bool,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real, F: Fn(T) -> T> Adaptive<'_, T, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
        let two = T::lit(2.0);
        let m = (a + b) / two;
        let lm = (a + m) / two;
        let rm = (m + b) / two;
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evaluations += 2;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let diff = left + right - whole;
        if depth >= MAX_DEPTH || !diff.is_finite() {
            self.failed = true;
            return left + right;
        }
        if diff.abs() <= T::lit(15.0) * tol || (m - a) <= T::epsilon() * m.abs() {
            return left + right + diff / T::lit(15.0);
        }
        self.refine(a, m, fa, flm, fm, left, tol / two, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, tol / two, depth + 1)
    }
}

/// `∫ₐᵇ f` to relative tolerance `rel_tol` with an absolute floor of `1e-14`.
///
/// The relative target is measured against a coarse composite-Simpson
/// estimate of `∫|f|`. Fails when the recursion cannot meet the target.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rel_tol: T) -> Result<T> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("integration bounds".into()));
    }
    if a == b {
        return Ok(T::zero());
    }
    let h = (b - a) / T::from_count(COARSE_PANELS);
    let mut coarse = T::zero();
    for k in 0..COARSE_PANELS {
        let x0 = a + T::from_count(k) * h;
        let x1 = x0 + h;
        coarse = coarse
            + simpson(
                f(x0).abs(),
                f((x0 + x1) / T::lit(2.0)).abs(),
                f(x1).abs(),
                h,
            );
    }
    let floor = T::lit(ABS_FLOOR).max(T::lit(16.0) * T::epsilon() * coarse.abs());
    let tol = (rel_tol * coarse.abs()).max(floor);

    let fa = f(a);
    let fb = f(b);
    let fm = f((a + b) / T::lit(2.0));
    let whole = simpson(fa, fm, fb, b - a);
    let mut state = Adaptive {
        f: &f,
        evaluations: 3,
        failed: false,
        _marker: std::marker::PhantomData,
    };
    let value = state.refine(a, b, fa, fm, fb, whole, tol, 0);
    if state.failed || !value.is_finite() {
        return Err(Error::NonConvergence {
            what: "adaptive Simpson quadrature",
            iterations: state.evaluations,
        });
    }
    Ok(value)
}

/// Integrates over consecutive intervals between sorted `breakpoints`.
pub fn integrate_pieces<T: Real, F: Fn(T) -> T>(f: F, breakpoints: &[T], rel_tol: T) -> Result<T> {
    breakpoints
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], rel_tol))
        .sum()
}
