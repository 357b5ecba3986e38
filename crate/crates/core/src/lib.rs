#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation of number-phase squeezing transfer and the detection of
//! sub-Poissonian light in randomly displaced optical pulses.

pub mod channels;
pub mod detection;
pub mod error;
pub mod fock;
pub mod interactions;
pub mod numberphase;
pub mod protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
