//! Simulation toolkit for the N-particle branching-selection system (N-BMP),
//! the boundary-killed branching Markov process (γ-BMP), the moving
//! boundary γ and the order-preserving couplings between them.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod boundary;
pub mod coupling;
pub mod drivers;
pub mod error;
pub mod gbmp;
pub mod nbmp;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::Scalar;

/// `f64` instantiations.
pub type Boundary = boundary::Boundary<f64>;
pub type DriverSpec = drivers::DriverSpec<f64>;
pub type InitialLaw = drivers::InitialLaw<f64>;
