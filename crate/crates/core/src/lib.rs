//! Time-adaptive sparse-grid stochastic collocation for parametric,
//! time-dependent advection–diffusion problems.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. Everything here is pure computation; configuration parsing,
//! CSV output and the command line live in the `adaptsc` companion crate.
//!
//! Layout:
//!
//! - [`multi_index`]: admissible multi-index sets, margins and enhancement.
//! - [`sparse_grid`]: nested Clenshaw–Curtis rules, combination-technique
//!   interpolation and exact `L²_ρ` norms of sparse-grid polynomials.
//! - [`fem`]: Q1 finite elements on `(-1,1)²` with parametric wind fields.
//! - [`timestepper`]: trapezoidal rule and adaptive TR-AB2.
//! - [`estimator`]: hierarchical interpolation, correction and timestepping
//!   error estimates.
//! - [`driver`]: the solve–estimate–mark–refine loop in time.
//! - [`analytic_ode`]: the scalar complex test ODE with exact statistics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytic_ode;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod linalg;
pub mod multi_index;
pub mod problem;
pub mod sparse_grid;
pub mod timestepper;

pub use error::{Error, Result};
pub use multi_index::{MultiIndex, MultiIndexSet};
