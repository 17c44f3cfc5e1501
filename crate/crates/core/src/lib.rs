//! Fourier-domain tooling for learned and table-parameterized Turbo codes.
//!
//! - [`boolfn`]: truth tables, Walsh-Hadamard spectra, expression fixtures.
//! - [`gl`]: Goldreich-Levin search for heavy Fourier coefficients under query access.
//! - [`channel`]: AWGN and discrete memoryless channels.
//! - [`codec`]: sliding-window Turbo encoder, power normalization, BCJR and brute-force MAP.
//! - [`metrics`]: BCE/BER, conditional entropy, bounds and the BER/BCE counterexample.
//! - [`landscape`]: loss along lines between Fourier-parameterized encoders.
//! - [`train`]: encoder training against estimated conditional entropy.

pub mod boolfn;
pub mod error;
pub mod rng;

pub use error::{Error, Result};
pub mod channel;
pub mod codec;
pub mod metrics;
pub mod gl;
pub mod landscape;
pub mod train;
