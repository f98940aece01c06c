//! Goodness-of-fit testing under local differential privacy.
//!
//! Each individual releases a privatized view of one observation; the tester
//! only ever sees those views. The crate provides the privatization channels,
//! test statistics, tuning rules and a Monte-Carlo harness that estimates
//! risks, separation radii and their rates.

pub mod densities;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod mechanisms;
pub mod numeric;
pub mod parallel;
pub mod rng;
pub mod statistics;
pub mod tuning;

pub use densities::{make_alternative, AlternativeDensity, Density, NullDensity};
pub use error::{Error, Result};
pub use kernels::{boxcar, sine_wave, triangular, SmoothingKernel, WaveKernel};
pub use mechanisms::{BatchKind, PrivacyParams, PrivatizedBatch};
pub use statistics::{decide, MomentReport, TestOutcome};
pub use tuning::{partition, BulkPartition, Interval, Mechanism, TestConfig};
