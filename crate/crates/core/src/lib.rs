//! Stationary martingale difference sequences built on Rokhlin tower chains,
//! with exact checks of how badly they miss the local limit theorem and
//! how slowly they reach the normal law.

pub mod construction;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod report;
pub mod rng;
pub mod tower;

pub use error::{Error, Result};
