//! Simulation and analysis of a stochastic dealer market.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod mlsolver;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod simulator;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params = model::ModelParams<f64>;
pub type Params32 = model::ModelParams<f32>;
pub type State = model::MarketState<f64>;
pub type Schedule = model::SimSchedule<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type Grid32 = grid::GridSpec<f32>;
