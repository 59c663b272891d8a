//! Random-demodulator sampling of pulsed radar echoes and segmented sparse
//! reconstruction.
//!
//! The crate is organised bottom-up: [`radar`] synthesizes Nyquist-rate
//! echoes, [`sampler`] models the random demodulator and builds the
//! measurement matrix, [`segment`] cuts a long observation into overlapping
//! segments, [`solvers`] holds the greedy recovery algorithms, [`pipeline`]
//! chains them segment by segment and [`analysis`] provides RIP estimates,
//! recovery bounds, metrics and resource accounting.

pub mod analysis;
pub mod error;
pub mod pipeline;
pub mod radar;
pub mod rng;
pub mod sampler;
pub mod segment;
pub mod solvers;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
