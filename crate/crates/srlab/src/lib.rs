//! Sparse linear representation over overcomplete dictionaries: greedy and
//! exact approximation, distortion bounds, coefficient quantization, and
//! successive refinement, with deterministic Monte Carlo estimation.

pub mod approx;
pub mod bounds;
pub mod dict;
pub mod error;
mod linalg;
pub mod quantizer;
pub mod refine;
pub mod rng;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};
pub use rng::Seed;
pub use signal::Signal;
