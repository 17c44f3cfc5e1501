//! Iterative decoding of the two-constituent Turbo structure.

use super::bcjr::{bcjr_constituent, clip_llr, Trellis};
use super::encoder::{Codeword, TurboEncoderParams};
use super::interleaver::Interleaver;
use super::SoftPosterior;
use crate::error::{Error, Result};

/// Iteration count of the standard decoder.
pub const DEFAULT_ITERATIONS: usize = 6;

/// Turbo decoder with prebuilt trellises: constituent 1 emits streams 1 and
/// 2 on the input, constituent 2 emits stream 3 on the interleaved input.
#[derive(Clone, Debug)]
pub struct TurboDecoder {
    first: Trellis,
    second: Trellis,
    interleaver: Interleaver,
}

impl TurboDecoder {
    pub fn new(params: &TurboEncoderParams, interleaver: &Interleaver) -> Self {
        Self {
            first: Trellis::new(params, &[0, 1]),
            second: Trellis::new(params, &[2]),
            interleaver: interleaver.clone(),
        }
    }

    /// Final LLRs after `iterations` rounds of extrinsic exchange.
    pub fn decode_llrs(&self, received: &Codeword, sigma: f64, iterations: usize) -> Result<Vec<f64>> {
        if iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        let k = received.len();
        if k != self.interleaver.len() {
            return Err(Error::InvalidArgument(format!(
                "received length {k} != interleaver length {}",
                self.interleaver.len()
            )));
        }
        let [y1, y2, y3] = &received.streams;
        let mut prior1 = vec![0.0; k];
        let mut total = vec![0.0; k];
        for _ in 0..iterations {
            let first = bcjr_constituent(&self.first, &[y1, y2], &prior1, sigma)?;
            let prior2 = self.interleaver.interleave(&first.extrinsic);
            let second = bcjr_constituent(&self.second, &[y3], &prior2, sigma)?;
            prior1 = self.interleaver.deinterleave(&second.extrinsic);
            total = self.interleaver.deinterleave(&second.posterior);
        }
        Ok(total.into_iter().map(clip_llr).collect())
    }

    pub fn decode(&self, received: &Codeword, sigma: f64, iterations: usize) -> Result<SoftPosterior> {
        Ok(SoftPosterior::from_llrs(&self.decode_llrs(received, sigma, iterations)?))
    }
}

pub fn turbo_decode(
    params: &TurboEncoderParams,
    interleaver: &Interleaver,
    received: &Codeword,
    sigma: f64,
    iterations: usize,
) -> Result<SoftPosterior> {
    TurboDecoder::new(params, interleaver).decode(received, sigma, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{PseudoBooleanTable, SubsetMask};
    use crate::channel::AwgnChannel;
    use crate::codec::encoder::encode;
    use crate::rng::stream;
    use rand::Rng;

    fn parity_params() -> TurboEncoderParams {
        TurboEncoderParams::new([0b10001u128, 0b11011, 0b10101].map(|m| PseudoBooleanTable::parity(5, SubsetMask(m)).unwrap()))
            .unwrap()
    }

    #[test]
    fn near_noiseless_decodes_exactly() {
        let p = parity_params();
        let mut rng = stream(10, &[]);
        for _ in 0..10 {
            let il = Interleaver::random(24, &mut rng);
            let bits: Vec<u8> = (0..24).map(|_| rng.random_range(0..2)).collect();
            let cw = encode(&p, &bits, &il).unwrap();
            let y = Codeword::from_flat(&AwgnChannel::new(1e-6).unwrap().transmit(&cw.flatten(), &mut rng)).unwrap();
            let post = turbo_decode(&p, &il, &y, 1e-6, 6).unwrap();
            assert_eq!(post.hard_decisions(), bits);
        }
    }

    #[test]
    fn posteriors_are_probabilities() {
        let p = parity_params();
        let mut rng = stream(11, &[]);
        let il = Interleaver::random(10, &mut rng);
        let y = Codeword::from_flat(&(0..30).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect::<Vec<_>>()).unwrap();
        let post = turbo_decode(&p, &il, &y, 0.5, 6).unwrap();
        assert!(post.probs().iter().all(|q| (0.0..=1.0).contains(q)));
        assert!(turbo_decode(&p, &il, &y, 0.5, 0).is_err());
        assert!(turbo_decode(&p, &il, &y, -1.0, 1).is_err());
    }

    /// With a memoryless third stream, reordering its positions together
    /// with the interleaver describes the same code.
    #[test]
    fn consistent_relabeling_of_interleaver_and_third_stream() {
        let t = |m: u128| PseudoBooleanTable::parity(5, SubsetMask(m)).unwrap();
        let p = TurboEncoderParams::new([t(0b10001), t(0b11011), t(0b10000)]).unwrap();
        let mut rng = stream(12, &[]);
        for _ in 0..5 {
            let k = 16;
            let il = Interleaver::random(k, &mut rng);
            let sigma_perm = Interleaver::random(k, &mut rng);
            let y = Codeword::from_flat(&(0..3 * k).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect::<Vec<_>>()).unwrap();
            let relabeled_il = Interleaver::new(sigma_perm.perm().iter().map(|&j| il.perm()[j]).collect()).unwrap();
            let mut y2 = y.clone();
            y2.streams[2] = sigma_perm.interleave(&y.streams[2]);
            let a = turbo_decode(&p, &il, &y, 0.8, 6).unwrap();
            let b = turbo_decode(&p, &relabeled_il, &y2, 0.8, 6).unwrap();
            for (x, z) in a.probs().iter().zip(b.probs()) {
                assert!((x - z).abs() < 1e-9, "{x} vs {z}");
            }
        }
    }
}
