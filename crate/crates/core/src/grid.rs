//! Uniform grids over the relative price.
//!
//! A [`GridSpec`] describes `n_bins` bins `[r_k, r_{k+1})` with
//! `r_k = r_min + k·Δr`. The same object doubles as a node grid for the
//! finite-difference solver, whose nodes are the bin edges `r_0 … r_n`.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Relative tolerance on `(r_max − r_min)/Δr` being an integer.
const INTEGRALITY_TOL: f64 = 1e-9;

/// Minimum number of bins a grid may have.
pub const MIN_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    r_min: T,
    r_max: T,
    dr: T,
    n_bins: usize,
    inv_dr: T,
}

/// Where a sample falls relative to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinIndex {
    Underflow,
    Bin(usize),
    Overflow,
}

impl<T: Real> GridSpec<T> {
    pub fn new(r_min: T, r_max: T, dr: T) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && dr.is_finite()) {
            return Err(invalid("grid", "bounds and spacing must be finite"));
        }
        if dr <= T::zero() {
            return Err(invalid("dr", format!("must be positive, got {dr}")));
        }
        if r_max <= r_min {
            return Err(invalid(
                "r_max",
                format!("must exceed r_min ({r_min}), got {r_max}"),
            ));
        }
        let span = ((r_max - r_min) / dr).as_f64();
        let n = span.round();
        if (span - n).abs() > INTEGRALITY_TOL * n.max(1.0) {
            return Err(invalid(
                "dr",
                format!("(r_max - r_min)/dr = {span} is not an integer"),
            ));
        }
        let n_bins = n as usize;
        if n_bins < MIN_BINS {
            return Err(invalid(
                "dr",
                format!("grid has {n_bins} bins, need at least {MIN_BINS}"),
            ));
        }
        Ok(Self {
            r_min,
            r_max,
            dr,
            n_bins,
            inv_dr: T::one() / dr,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: T, dr: T) -> Result<Self> {
        Self::new(-half_width, half_width, dr)
    }

    /// The binning used for the published simulations: `[-3, 3)` with `Δr = 0.01`.
    pub fn table1() -> Self {
        Self::new(T::lit(-3.0), T::lit(3.0), T::lit(1e-2)).expect("table grid is valid")
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn dr(&self) -> T {
        self.dr
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Number of nodes (bin edges), `n_bins + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_bins + 1
    }

    /// Left edge of bin `k`, equivalently node `k`.
    #[inline]
    pub fn edge(&self, k: usize) -> T {
        self.r_min + T::from_count(k) * self.dr
    }

    #[inline]
    pub fn center(&self, k: usize) -> T {
        self.r_min + (T::from_count(k) + T::lit(0.5)) * self.dr
    }

    /// Bin centres, in order.
    pub fn centers(&self) -> Vec<T> {
        (0..self.n_bins).map(|k| self.center(k)).collect()
    }

    /// Left-closed, right-open bin lookup.
    #[inline(always)]
    pub fn bin_of(&self, r: T) -> BinIndex {
        // `as` saturates, so negative and NaN inputs land on 0 and are
        // rejected by the range tests below.
        let k = ((r - self.r_min) * self.inv_dr).as_f64() as usize;
        if (k < self.n_bins) & (r >= self.r_min) & (r < self.r_max) {
            return BinIndex::Bin(k);
        }
        self.bin_of_slow(r)
    }

    #[cold]
    fn bin_of_slow(&self, r: T) -> BinIndex {
        if r < self.r_min {
            BinIndex::Underflow
        } else if r >= self.r_max {
            BinIndex::Overflow
        } else {
            // Non-negative here, so truncation is the floor.
            let k = ((r - self.r_min) * self.inv_dr).to_usize().unwrap_or(0);
            BinIndex::Bin(k.min(self.n_bins - 1))
        }
    }

    /// Index of the node at `r`, if `r` lies on a node (within `1e-9·Δr`).
    pub fn node_index(&self, r: T) -> Option<usize> {
        let x = ((r - self.r_min) * self.inv_dr).as_f64();
        let k = x.round();
        if k < 0.0 || k > self.n_bins as f64 || (x - k).abs() > INTEGRALITY_TOL {
            return None;
        }
        Some(k as usize)
    }

    /// Like [`node_index`](Self::node_index) but reports which coordinate is
    /// missing.
    pub fn require_node(&self, r: T, what: &str) -> Result<usize> {
        self.node_index(r)
            .ok_or_else(|| Error::GridMismatch(format!("{what} (r = {r}) is not a grid node")))
    }

    /// Grids are compatible when they agree to `1e-9·Δr` in every field.
    pub fn compatible(&self, other: &Self) -> bool {
        let tol = T::lit(INTEGRALITY_TOL) * self.dr;
        self.n_bins == other.n_bins
            && (self.r_min - other.r_min).abs() <= tol
            && (self.r_max - other.r_max).abs() <= tol
            && (self.dr - other.dr).abs() <= tol
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}) / {} bins vs [{}, {}) / {} bins",
                self.r_min, self.r_max, self.n_bins, other.r_min, other.r_max, other.n_bins
            )))
        }
    }

    /// Edge index for a window boundary: snaps to the nearest edge when `r`
    /// sits on one, else takes the first edge at or above `r`.
    pub(crate) fn edge_at_or_above(&self, r: T) -> usize {
        let x = ((r - self.r_min) * self.inv_dr).as_f64();
        let k = x.round();
        let idx = if (x - k).abs() <= INTEGRALITY_TOL {
            k
        } else {
            x.ceil()
        };
        idx.clamp(0.0, self.n_bins as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_grid_shape() {
        let g = GridSpec::<f64>::table1();
        assert_eq!(g.n_bins(), 600);
        assert_eq!(g.n_nodes(), 601);
        assert_eq!(g.node_index(0.0), Some(300));
        assert_eq!(g.node_index(1.0), Some(400));
        assert_eq!(g.node_index(-1.0), Some(200));
        assert_eq!(g.node_index(0.005), None);
    }

    #[test]
    fn bin_convention() {
        let g = GridSpec::<f64>::table1();
        assert_eq!(g.bin_of(-3.0), BinIndex::Bin(0));
        assert_eq!(g.bin_of(-3.0 + 1.5 * 0.01), BinIndex::Bin(1));
        assert_eq!(g.bin_of(3.0), BinIndex::Overflow);
        assert_eq!(g.bin_of(-3.0000001), BinIndex::Underflow);
        assert_eq!(g.bin_of(2.9999999), BinIndex::Bin(599));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::<f64>::new(0.0, 1.0, 0.0).is_err());
        assert!(GridSpec::<f64>::new(1.0, 0.0, 0.1).is_err());
        assert!(GridSpec::<f64>::new(0.0, 1.0, 0.3).is_err());
        assert!(GridSpec::<f64>::new(0.0, 1.0, 0.25).is_err()); // only 4 bins
        assert!(GridSpec::<f64>::new(0.0, 1.0, 0.125).is_ok());
    }

    #[test]
    fn window_edges_snap() {
        let g = GridSpec::<f64>::table1();
        assert_eq!(g.edge_at_or_above(1.0), 400);
        assert_eq!(g.edge_at_or_above(1.004), 401);
        assert_eq!(g.edge_at_or_above(10.0), 600);
        assert_eq!(g.edge_at_or_above(-10.0), 0);
    }

    #[test]
    fn single_precision_grid() {
        let g = GridSpec::<f32>::symmetric(1.0, 0.125).unwrap();
        assert_eq!(g.n_bins(), 16);
        assert_eq!(g.node_index(0.0), Some(8));
    }
}
