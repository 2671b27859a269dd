//! Particle-filter calibration of physics-based virtual flow meters.

pub mod choke;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod rng;
pub mod run;
pub mod smc;
pub mod state_space;
pub mod synth;
pub mod truncnorm;

pub use error::{Error, Result};
