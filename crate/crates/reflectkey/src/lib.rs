//! Secret-key rate bounds for wireless key generation when receive antennas
//! re-radiate part of the training signal toward an eavesdropper.
//!
//! The crate combines three ingredients:
//!
//! * a seeded Monte Carlo sampler of the joint observations at Alice, Bob
//!   and Eve ([`model`]),
//! * closed-form Gaussian entropy/mutual-information machinery for the
//!   conditionally Gaussian cases ([`gauss`]), and
//! * nonparametric differential-entropy estimators (k-nearest-neighbor and
//!   kernel-density) for the non-Gaussian joints produced by the reflection
//!   products ([`estimators`]),
//!
//! which [`bounds`] assembles into upper/lower bounds on the secret-key rate
//! with and without channel knowledge at the eavesdropper. [`antenna`]
//! carries the Thevenin power budget that motivates the reflection
//! coefficient, and [`config`]/[`records`]/[`cli`] provide the sweep
//! front end.

pub mod antenna;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod gauss;
pub mod model;
pub mod records;

pub use error::{Error, Result};
pub use model::{ModelParams, Observation, SampleBatch};
