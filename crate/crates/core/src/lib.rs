pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod integrator;
pub mod jump_noise;
pub mod operators;
pub mod spectral_basis;

pub use error::{Error, Result};
