//! Frequency-domain low-rank plus quantization compression of real matrices.
//!
//! A real `d₁ × d₂` matrix is moved to its conjugate-symmetric half spectrum
//! ([`spectral`]), approximated there as `Q̃ + L̃₁L̃₂` by alternating a
//! (optionally calibrated) truncated complex SVD ([`csvd`], [`decompose`])
//! with polar-coordinate quantization of the residual ([`polarquant`]), and
//! serialized to a bit-exact container ([`tensorio`]).
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is
//! enabled (the default) and sequentially otherwise; results are identical
//! either way.

pub mod bench;
pub mod budget;
pub mod codec;
pub mod csvd;
pub mod decompose;
pub mod error;
pub mod par;
pub mod polarquant;
pub mod spectral;
pub mod tensorio;

pub use error::{Error, ErrorKind, Result};
