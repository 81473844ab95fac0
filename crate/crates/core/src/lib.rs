//! Desk-scale reproduction of a sensor-driven skateboard controller.
//!
//! The pipeline runs synthetic sensor traces through a threshold gesture
//! engine, optionally over a simulated lossy telemetry link, and into a
//! fixed-timestep skating game. The [`stats`] module holds the survey
//! analysis used to compare controllers (Likert item statistics and the
//! Kolmogorov-Smirnov test).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gesture;
pub mod sensor;
pub mod sim;
pub mod stats;
pub mod wire;

pub use error::{Error, Result};
