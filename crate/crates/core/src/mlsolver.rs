//! Finite-difference solver for the reduced two-body master equation.
//!
//! The relative-price density `P(r, t)` on `(−L/2, L/2)` obeys
//!
//! ```text
//! ∂ₜP = −∂ᵣ j + (J₊ + J₋) δ(r),   j = −(σ_cm²/2) ∂ᵣP − U'(r) P,
//! ```
//!
//! with `P(±L/2) = 0` and `J±` the outflow through the walls at `±L/2`,
//! which reappears at the origin (a transaction resets the relative price).
//!
//! The scheme is finite-volume on the grid nodes: currents live on the faces
//! between nodes, the wall nodes are held at zero, and the current through
//! the two wall faces is added to the node at `r = 0` as `(J₊ + J₋)/Δr`.
//! Total mass is then conserved up to rounding. Without a potential the
//! discrete operator coincides with the lattice generator at `l = Δr`,
//! `λ = σ_cm²/Δr²`, so the steady state equals the tent at every node.

use std::io::{self, Write};

use crate::analytic::AnalyticProfile;
use crate::error::{invalid, Error, Result};
use crate::grid::GridSpec;
use crate::io::{write_table, Cell};
use crate::linalg::DenseMatrix;
use crate::model::ModelParams;
use crate::scalar::Real;

/// Explicit steps must satisfy `dt ≤ STABILITY_FACTOR·Δr²/σ_cm²`.
pub const STABILITY_FACTOR: f64 = 0.25;
const MASS_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-12;

/// Density on the nodes of a grid at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlField<T> {
    grid: GridSpec<T>,
    density: Vec<T>,
    time: T,
}

impl<T: Real> MlField<T> {
    pub fn new(grid: GridSpec<T>, density: Vec<T>, time: T) -> Result<Self> {
        if density.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                density.len(),
                grid.n_nodes()
            )));
        }
        if let Some(v) = density.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("density value {v}")));
        }
        Ok(Self {
            grid,
            density,
            time,
        })
    }

    /// Uniform density on the open interval `(−L/2, L/2)`.
    pub fn uniform(params: &ModelParams<T>, grid: GridSpec<T>) -> Result<Self> {
        let layout = Layout::new(params, &grid)?;
        let mut density = vec![T::zero(); grid.n_nodes()];
        let value = T::one() / (T::from_count(layout.active()) * grid.dr());
        for v in &mut density[layout.lo + 1..layout.hi] {
            *v = value;
        }
        Self::new(grid, density, T::zero())
    }

    /// A profile sampled at the nodes, zero at and beyond the walls.
    pub fn sampled(
        params: &ModelParams<T>,
        grid: GridSpec<T>,
        profile: &AnalyticProfile<T>,
    ) -> Result<Self> {
        let layout = Layout::new(params, &grid)?;
        let mut density = vec![T::zero(); grid.n_nodes()];
        for (k, v) in density
            .iter_mut()
            .enumerate()
            .take(layout.hi)
            .skip(layout.lo + 1)
        {
            *v = profile.pdf(layout.coordinate(&grid, k))?;
        }
        Self::new(grid, density, T::zero())
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// `Σ P·Δr`.
    pub fn mass(&self) -> T {
        self.density.iter().copied().sum::<T>() * self.grid.dr()
    }

    /// Bin-centre densities, each the mean of the two bounding nodes.
    pub fn to_bins(&self) -> Vec<T> {
        self.density
            .windows(2)
            .map(|w| (w[0] + w[1]) / T::lit(2.0))
            .collect()
    }
}

/// Positions of the origin and the walls on a node grid.
#[derive(Debug, Clone, Copy)]
struct Layout {
    lo: usize,
    origin: usize,
    hi: usize,
}

impl Layout {
    fn new<T: Real>(params: &ModelParams<T>, grid: &GridSpec<T>) -> Result<Self> {
        let half = params.half_spread();
        let lo = grid.require_node(-half, "wall -L/2")?;
        let origin = grid.require_node(T::zero(), "origin")?;
        let hi = grid.require_node(half, "wall L/2")?;
        if hi - origin < 2 || origin - lo < 2 {
            return Err(Error::GridMismatch(format!(
                "need at least two cells between the origin and each wall, got {}",
                hi - origin
            )));
        }
        Ok(Self { lo, origin, hi })
    }

    /// Number of free nodes strictly between the walls.
    fn active(&self) -> usize {
        self.hi - self.lo - 1
    }

    /// `r` of node `k`, measured from the origin node so that mirrored
    /// nodes get coordinates of exactly opposite sign.
    fn coordinate<T: Real>(&self, grid: &GridSpec<T>, k: usize) -> T {
        T::lit(k as f64 - self.origin as f64) * grid.dr()
    }

    fn face_coordinate<T: Real>(&self, grid: &GridSpec<T>, k: usize) -> T {
        (T::lit(k as f64 - self.origin as f64) + T::lit(0.5)) * grid.dr()
    }
}

/// The discrete right-hand side for fixed parameters and grid.
#[derive(Debug, Clone)]
struct Operator<T> {
    layout: Layout,
    dr: T,
    diffusivity: T,
    /// `U'` at the face between node `k` and `k+1`, for `k ∈ [lo, hi)`.
    face_drift: Vec<T>,
}

impl<T: Real> Operator<T> {
    fn new(params: &ModelParams<T>, grid: &GridSpec<T>) -> Result<Self> {
        let layout = Layout::new(params, grid)?;
        let face_drift = (layout.lo..layout.hi)
            .map(|k| params.u2() * layout.face_coordinate(grid, k))
            .collect();
        Ok(Self {
            layout,
            dr: grid.dr(),
            diffusivity: params.sigma_cm2() / T::lit(2.0),
            face_drift,
        })
    }

    /// Current through the face between node `k` and `k+1`.
    #[inline]
    fn face_current(&self, p: &[T], k: usize) -> T {
        let drift = self.face_drift[k - self.layout.lo];
        -self.diffusivity * (p[k + 1] - p[k]) / self.dr - drift * (p[k] + p[k + 1]) / T::lit(2.0)
    }

    /// Outflow through the walls `(J₊, J₋)`.
    fn wall_outflow(&self, p: &[T]) -> (T, T) {
        let plus = self.face_current(p, self.layout.hi - 1);
        let minus = -self.face_current(p, self.layout.lo);
        (plus, minus)
    }

    /// `dP/dt` at every node; zero at the walls and outside.
    fn rate(&self, p: &[T], out: &mut [T]) {
        for v in out.iter_mut() {
            *v = T::zero();
        }
        let Layout { lo, origin, hi } = self.layout;
        let mut left = self.face_current(p, lo);
        for (k, o) in out.iter_mut().enumerate().take(hi).skip(lo + 1) {
            let right = self.face_current(p, k);
            *o = -(right - left) / self.dr;
            left = right;
        }
        let (plus, minus) = self.wall_outflow(p);
        out[origin] = out[origin] + (plus + minus) / self.dr;
    }

    fn max_dt(&self) -> T {
        T::lit(STABILITY_FACTOR) * self.dr * self.dr / (T::lit(2.0) * self.diffusivity)
    }

    fn check_dt(&self, dt: T) -> Result<()> {
        let max = self.max_dt();
        if !(dt > T::zero()) || dt > max * (T::one() + T::lit(1e-12)) {
            return Err(Error::Stability(format!(
                "explicit step needs 0 < dt ≤ {STABILITY_FACTOR}·dr²/sigma_cm2 = {max}, got dt = {dt}"
            )));
        }
        Ok(())
    }

    fn check_field(&self, p: &[T]) -> Result<()> {
        let Layout { lo, hi, .. } = self.layout;
        let outside = p[..=lo].iter().chain(&p[hi..]).find(|v| **v != T::zero());
        if let Some(v) = outside {
            return Err(Error::Precondition(format!(
                "density must vanish at and beyond the walls, found {v:e}"
            )));
        }
        Ok(())
    }
}

/// Advances `field` in place by explicit Euler steps of `dt`.
struct Stepper<T> {
    op: Operator<T>,
    dt: T,
    rate: Vec<T>,
}

impl<T: Real> Stepper<T> {
    fn new(params: &ModelParams<T>, grid: &GridSpec<T>, dt: T) -> Result<Self> {
        let op = Operator::new(params, grid)?;
        op.check_dt(dt)?;
        Ok(Self {
            op,
            dt,
            rate: vec![T::zero(); grid.n_nodes()],
        })
    }

    /// One step; returns `Σ|dP/dt|·Δr` evaluated before the update.
    fn step(&mut self, field: &mut MlField<T>) -> Result<T> {
        let before = field.mass();
        self.op.rate(&field.density, &mut self.rate);
        let mut change = T::zero();
        for (p, r) in field.density.iter_mut().zip(&self.rate) {
            *p = *p + self.dt * *r;
            change = change + r.abs();
        }
        field.time = field.time + self.dt;
        let after = field.mass();
        let tol = T::lit(MASS_TOL).max(T::lit(64.0) * T::epsilon());
        if ((after - before) / before).abs() > tol {
            return Err(Error::MassDrift((after - before).as_f64()));
        }
        if let Some((k, &v)) = field
            .density
            .iter()
            .enumerate()
            .find(|(_, v)| **v < -T::lit(POSITIVITY_TOL))
        {
            return Err(Error::NegativeDensity {
                node: k,
                value: v.as_f64(),
            });
        }
        Ok(change * self.op.dr)
    }
}

/// One explicit step of length `dt`.
pub fn ml_step<T: Real>(field: &MlField<T>, params: &ModelParams<T>, dt: T) -> Result<MlField<T>> {
    let mut stepper = Stepper::new(params, &field.grid, dt)?;
    stepper.op.check_field(&field.density)?;
    let mut next = field.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// `n_steps` explicit steps of length `dt`.
pub fn ml_evolve<T: Real>(
    field: &MlField<T>,
    params: &ModelParams<T>,
    dt: T,
    n_steps: usize,
) -> Result<MlField<T>> {
    let mut stepper = Stepper::new(params, &field.grid, dt)?;
    stepper.op.check_field(&field.density)?;
    let mut next = field.clone();
    for _ in 0..n_steps {
        stepper.step(&mut next)?;
    }
    Ok(next)
}

/// Largest stable explicit step for `params` on `grid`.
pub fn max_stable_dt<T: Real>(params: &ModelParams<T>, grid: &GridSpec<T>) -> Result<T> {
    Ok(Operator::new(params, grid)?.max_dt())
}

/// `dP/dt` of `field`, with the wall outflow already redistributed.
pub fn ml_rate<T: Real>(field: &MlField<T>, params: &ModelParams<T>) -> Result<Vec<T>> {
    let op = Operator::new(params, &field.grid)?;
    let mut out = vec![T::zero(); field.density.len()];
    op.rate(&field.density, &mut out);
    Ok(out)
}

/// Currents and boundary fluxes of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentDiagnostics<T> {
    /// `−(σ_cm²/2)∂P/∂r` at the nodes (centred inside, one-sided at the walls).
    pub j_diffusive: Vec<T>,
    /// `−U'(r)P` at the nodes.
    pub j_potential: Vec<T>,
    pub boundary_flux_plus: T,
    pub boundary_flux_minus: T,
    /// Transactions per unit time, `J₊ + J₋`.
    pub implied_rate: T,
}

impl<T: Real> CurrentDiagnostics<T> {
    /// One header line and one data line with the boundary fluxes.
    pub fn write_summary<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write_table(
            out,
            &["boundary_flux_plus", "boundary_flux_minus", "implied_rate"],
            [[
                Cell::Float(self.boundary_flux_plus.as_f64()),
                Cell::Float(self.boundary_flux_minus.as_f64()),
                Cell::Float(self.implied_rate.as_f64()),
            ]],
        )
    }
}

pub fn current_diagnostics<T: Real>(
    field: &MlField<T>,
    params: &ModelParams<T>,
) -> Result<CurrentDiagnostics<T>> {
    let op = Operator::new(params, &field.grid)?;
    let p = &field.density;
    let Layout { lo, hi, .. } = op.layout;
    let n = p.len();
    let dr = op.dr;
    let two = T::lit(2.0);
    let mut j_diffusive = vec![T::zero(); n];
    let mut j_potential = vec![T::zero(); n];
    for k in lo..=hi {
        let slope = if k == lo {
            (p[k + 1] - p[k]) / dr
        } else if k == hi {
            (p[k] - p[k - 1]) / dr
        } else {
            (p[k + 1] - p[k - 1]) / (two * dr)
        };
        j_diffusive[k] = -op.diffusivity * slope;
        j_potential[k] = -params.u2() * op.layout.coordinate(&field.grid, k) * p[k];
    }
    let (plus, minus) = op.wall_outflow(p);
    Ok(CurrentDiagnostics {
        j_diffusive,
        j_potential,
        boundary_flux_plus: plus,
        boundary_flux_minus: minus,
        implied_rate: plus + minus,
    })
}

/// Controls for [`ml_steady`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions<T> {
    /// Stop once `Σ|dP/dt|·Δr` falls below this.
    pub tol: T,
    pub max_steps: usize,
    /// Pseudo-time step; the stability limit when `None`.
    pub dt: Option<T>,
}

impl<T: Real> SteadyOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl<T: Real> Default for SteadyOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_steps: 100_000_000,
            dt: None,
        }
    }
}

/// Steady state by explicit pseudo-time iteration from a uniform density.
pub fn ml_steady<T: Real>(
    params: &ModelParams<T>,
    grid: &GridSpec<T>,
    options: SteadyOptions<T>,
) -> Result<(MlField<T>, CurrentDiagnostics<T>)> {
    if !(options.tol > T::zero()) {
        return Err(invalid(
            "tol",
            format!("must be positive, got {}", options.tol),
        ));
    }
    let dt = match options.dt {
        Some(dt) => dt,
        None => max_stable_dt(params, grid)?,
    };
    let mut stepper = Stepper::new(params, grid, dt)?;
    let mut field = MlField::uniform(params, *grid)?;
    for _ in 0..options.max_steps {
        let residual = stepper.step(&mut field)?;
        if residual < options.tol {
            let diag = current_diagnostics(&field, params)?;
            return Ok((field, diag));
        }
    }
    Err(Error::NonConvergence {
        what: "steady master-equation iteration",
        iterations: options.max_steps,
    })
}

/// Steady state by a direct linear solve of the discrete operator, with
/// one balance row replaced by the normalisation `Σ P·Δr = 1`.
pub fn ml_steady_direct<T: Real>(
    params: &ModelParams<T>,
    grid: &GridSpec<T>,
) -> Result<(MlField<T>, CurrentDiagnostics<T>)> {
    let op = Operator::new(params, grid)?;
    let Layout { lo, hi, .. } = op.layout;
    let m = op.layout.active();
    let n = grid.n_nodes();
    let mut a = DenseMatrix::zeros(m);
    let mut basis = vec![T::zero(); n];
    let mut column = vec![T::zero(); n];
    for j in 0..m {
        basis[lo + 1 + j] = T::one();
        op.rate(&basis, &mut column);
        for i in 0..m {
            a.set(i, j, column[lo + 1 + i]);
        }
        basis[lo + 1 + j] = T::zero();
    }
    for j in 0..m {
        a.set(m - 1, j, grid.dr());
    }
    let mut b = vec![T::zero(); m];
    b[m - 1] = T::one();
    let x = a.solve(&b)?;
    let mut density = vec![T::zero(); n];
    density[lo + 1..hi].copy_from_slice(&x);
    let field = MlField::new(*grid, density, T::zero())?;
    let diag = current_diagnostics(&field, params)?;
    Ok((field, diag))
}

/// One-sided derivative residuals of the steady boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResiduals<T> {
    /// `|∂₊P(0) − ∂₋P(L/2)|`.
    pub kink: T,
    /// `|∂₊P(L/2)|`.
    pub outer: T,
}

pub fn boundary_condition_check<T: Real>(
    field: &MlField<T>,
    params: &ModelParams<T>,
) -> Result<BoundaryResiduals<T>> {
    let layout = Layout::new(params, &field.grid)?;
    let p = &field.density;
    let dr = field.grid.dr();
    let right_at_origin = (p[layout.origin + 1] - p[layout.origin]) / dr;
    let left_at_wall = (p[layout.hi] - p[layout.hi - 1]) / dr;
    let right_at_wall = if layout.hi + 1 < p.len() {
        (p[layout.hi + 1] - p[layout.hi]) / dr
    } else {
        T::zero()
    };
    Ok(BoundaryResiduals {
        kink: (right_at_origin - left_at_wall).abs(),
        outer: right_at_wall.abs(),
    })
}

/// `max_k |P_k − ⟨φ⟩_k|` over the nodes, with `⟨φ⟩_k` the exact mean of
/// `φ` over the control cell `[r_k − Δr/2, r_k + Δr/2]`.
///
/// This is the natural error measure for the finite-volume reading of the
/// nodal values and is first order at the kinks of `φ`.
pub fn cell_average_error<T: Real>(field: &MlField<T>, profile: &AnalyticProfile<T>) -> Result<T> {
    let grid = field.grid;
    let half = grid.dr() / T::lit(2.0);
    let tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon());
    let mut worst = T::zero();
    for (k, &p) in field.density.iter().enumerate() {
        let r = grid.edge(k);
        let mean = profile.integrate(r - half, r + half, tol)? / grid.dr();
        worst = worst.max((p - mean).abs());
    }
    Ok(worst)
}

/// `max_k |P_k − φ(r_k)|` over the nodes.
pub fn nodal_error<T: Real>(field: &MlField<T>, profile: &AnalyticProfile<T>) -> Result<T> {
    let grid = field.grid;
    let mut worst = T::zero();
    for (k, &p) in field.density.iter().enumerate() {
        worst = worst.max((p - profile.pdf(grid.edge(k))?).abs());
    }
    Ok(worst)
}

/// CSV with columns `r, P, j_diffusive, j_potential`.
pub fn write_field_csv<T: Real, W: Write>(
    field: &MlField<T>,
    diag: &CurrentDiagnostics<T>,
    out: &mut W,
) -> io::Result<()> {
    let rows = (0..field.density.len()).map(|k| {
        [
            Cell::Float(field.grid.edge(k).as_f64()),
            Cell::Float(field.density[k].as_f64()),
            Cell::Float(diag.j_diffusive[k].as_f64()),
            Cell::Float(diag.j_potential[k].as_f64()),
        ]
    });
    write_table(out, &["r", "P", "j_diffusive", "j_potential"], rows)
}
