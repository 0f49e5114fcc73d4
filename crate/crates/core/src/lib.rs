//! Two-layer Green-Naghdi internal-wave model in the Camassa-Holm regime,
//! a decoupled pair of BBM-type approximations, and the verification harness
//! that compares them.
//!
//! Numerical kernels are generic over [`Real`]; coefficient formulas only
//! need [`Coefficient`], so they can also be evaluated in exact rational
//! arithmetic. The `*64` aliases fix the scalar to `f64`.

// `!(x > 0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cl_model;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod gn_model;
pub mod grid;
pub mod harness;
pub mod integrator;
pub mod params;
pub mod scalar;

pub use error::{Error, Result};
pub use grid::{Field, Grid, State};
pub use scalar::{Coefficient, Real};

pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type State64 = State<f64>;
pub type RegimeParams64 = params::RegimeParams<f64>;
pub type ModelConstants64 = params::ModelConstants<f64>;
pub type GnModel64 = gn_model::GnModel<f64>;
pub type ClModel64 = cl_model::ClModel<f64>;

pub type Field32 = Field<f32>;
pub type State32 = State<f32>;
