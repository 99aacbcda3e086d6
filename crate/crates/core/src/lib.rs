//! Exponential stability certificates for scalar linear delay and
//! integro-differential equations whose coefficients change sign, with a
//! delay-equation simulator to check them against.
//!
//! Everything is generic over [`Real`]; the aliases at the crate root fix
//! the scalar to `f64`.
//!
//! ```
//! use oscidelay::{catalog, certify, Criterion, Options};
//!
//! let spec = catalog::oscillating_kernel(0.4).unwrap();
//! let cert = certify::run(&spec, Criterion::ExplicitA, &Options::default()).unwrap();
//! assert!(cert.certified());
//! ```

// Parameter checks are written `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod certify;
pub mod error;
pub mod kernelfunc;
pub mod models;
pub mod numerics;
pub mod reproduce;
pub mod scalar;
pub mod simulate;
pub mod timefunc;

pub use certify::{Criterion, Verdict};
pub use error::{Error, Result};
pub use scalar::Real;

pub type TimeFunction = timefunc::TimeFunction<f64>;
pub type KernelFunction = kernelfunc::KernelFunction<f64>;
pub type EquationSpec = certify::EquationSpec<f64>;
pub type Certificate = certify::Certificate<f64>;
pub type Options = certify::Options<f64>;
pub type Model = models::Model<f64>;
pub type Trajectory = simulate::Trajectory<f64>;
pub type DecayEstimate = simulate::DecayEstimate<f64>;
pub type InitialHistory = simulate::InitialHistory<f64>;
