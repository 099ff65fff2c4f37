//! Resilient state estimation for linear plants under sparse false-data-injection
//! attacks.
//!
//! The crate covers the whole pipeline: stacking a moving window of
//! measurements into `y_T = H x + e_T`, synthesising stealthy attacks against
//! the plain l1 decoder, simulating an uncertain machine-learning support prior
//! and pruning it to a high-confidence safe set, and decoding with a weighted l1
//! observer. Restricted-isometry diagnostics and the associated recovery bound
//! live in [`analysis`]; Monte Carlo sweeps and trajectory scenarios in
//! [`experiments`].

pub mod analysis;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod fdia;
pub mod linalg;
pub mod lp;
pub mod lti;
pub mod observer;
pub mod pruning;
pub mod seeding;
pub mod system_file;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use lti::{build_horizon, HorizonModel, LtiSystem, Trajectory};
