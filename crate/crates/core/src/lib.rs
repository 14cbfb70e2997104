//! Spectral analysis of line solitary waves of the two-dimensional
//! Benney-Luke equation in exponentially weighted spaces.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod cli_io;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod expm;
pub mod fit;
pub mod grid;
pub mod linop;
pub mod params;
pub mod profile;
pub mod quad;
pub mod resonance;
pub mod symbols;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use exec::Exec;
pub use num_complex::Complex64 as C64;
pub use params::{make_params, params_from_eps, ModelParams};
