//! Spectrum intelligence toolkit: blind multi-level sensing, collaborative spectrum
//! mapping and learned multichannel access over a synthetic RF environment.

pub mod access;
pub mod conjugate;
mod error;
pub mod geometry;
pub mod mapping;
pub mod perception;
pub mod rf_env;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point = geometry::Point<f64>;
pub type Circle = geometry::Circle<f64>;
