//! Table-parameterized rate-1/3 Turbo code and its decoders.

pub mod bcjr;
pub mod encoder;
pub mod interleaver;
pub mod map;
pub mod turbo;

pub use bcjr::{bcjr_constituent, BcjrOutput, Trellis, LLR_CLIP};
pub use encoder::{analytic_power, constrain_power, encode, optimal_center, Codeword, TurboEncoderParams, STREAMS};
pub use interleaver::Interleaver;
pub use map::{brute_force_map, CodebookLayout, BRUTE_FORCE_MAX_K};
pub use turbo::{turbo_decode, TurboDecoder, DEFAULT_ITERATIONS};

/// Per-bit posteriors `P(U_i = 1 | Y = y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftPosterior {
    probs: Vec<f64>,
}

impl SoftPosterior {
    /// Entries are clamped into `[0, 1]`.
    pub fn new(probs: Vec<f64>) -> Self {
        Self { probs: probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect() }
    }

    /// From LLRs `ln P(1) / P(0)`.
    pub fn from_llrs(llrs: &[f64]) -> Self {
        Self::new(llrs.iter().map(|&l| 1.0 / (1.0 + (-l).exp())).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Decides 1 iff the posterior exceeds 1/2.
    pub fn hard_decisions(&self) -> Vec<u8> {
        self.probs.iter().map(|&p| u8::from(p > 0.5)).collect()
    }
}
