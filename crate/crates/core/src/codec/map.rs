//! Brute-force MAP decoding by marginalizing over every input block.

use super::encoder::{window_indices, Codeword, TurboEncoderParams, STREAMS};
use super::interleaver::Interleaver;
use super::SoftPosterior;
use crate::error::{Error, Result};

/// Largest block length accepted by brute-force marginalization.
pub const BRUTE_FORCE_MAX_K: usize = 20;

/// Table index used by every codeword symbol, for all `2^k` inputs.
///
/// Entry `[u * 3k + s * k + i]` is the window index feeding stream `s` at
/// position `i` when the input block is the integer `u` (bit `i` of `u` is
/// `u_i`). Depends only on `k`, the window and the interleaver.
#[derive(Clone, Debug)]
pub struct CodebookLayout {
    k: usize,
    window: usize,
    indices: Vec<u16>,
}

impl CodebookLayout {
    pub fn new(k: usize, window: usize, interleaver: &Interleaver) -> Result<Self> {
        if k > BRUTE_FORCE_MAX_K {
            return Err(Error::BlockTooLarge { k, limit: BRUTE_FORCE_MAX_K });
        }
        if k < window {
            return Err(Error::BlockTooShort { k, window });
        }
        if interleaver.len() != k {
            return Err(Error::InvalidArgument("interleaver length differs from block length".into()));
        }
        let n = STREAMS * k;
        let mut indices = vec![0u16; (1usize << k) * n];
        let mut bits = vec![0u8; k];
        for (u, row) in indices.chunks_exact_mut(n).enumerate() {
            for (i, b) in bits.iter_mut().enumerate() {
                *b = (u >> i & 1) as u8;
            }
            let permuted = interleaver.interleave(&bits);
            for (i, x) in window_indices(&bits, window).enumerate() {
                row[i] = x as u16;
                row[k + i] = x as u16;
            }
            for (i, x) in window_indices(&permuted, window).enumerate() {
                row[2 * k + i] = x as u16;
            }
        }
        Ok(Self { k, window, indices })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn num_codewords(&self) -> usize {
        1 << self.k
    }

    /// Window indices of codeword `u`, flattened stream-major.
    #[inline]
    pub fn row(&self, u: usize) -> &[u16] {
        let n = STREAMS * self.k;
        &self.indices[u * n..(u + 1) * n]
    }

    /// All codewords of `params`, flattened, in input order.
    pub fn codewords(&self, params: &TurboEncoderParams) -> Vec<f64> {
        let k = self.k;
        let t = params.tables();
        self.indices
            .iter()
            .enumerate()
            .map(|(j, &x)| t[(j % (STREAMS * k)) / k].eval(x as usize))
            .collect()
    }
}

/// Normalized posterior weights `P(u | y)` over all inputs for flattened
/// codewords, computed with a stable log-sum-exp.
pub fn codeword_posterior(codewords: &[f64], n: usize, y: &[f64], sigma: f64, out: &mut Vec<f64>) {
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    out.clear();
    out.extend(codewords.chunks_exact(n).map(|c| {
        -c.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() * inv2s2
    }));
    let m = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for l in out.iter_mut() {
        *l = (*l - m).exp();
        z += *l;
    }
    out.iter_mut().for_each(|w| *w /= z);
}

/// Per-bit `P(u_i = 1 | y)` from posterior weights over inputs.
pub fn bit_marginals(weights: &[f64], k: usize) -> Vec<f64> {
    let mut p = vec![0.0; k];
    for (u, &w) in weights.iter().enumerate() {
        let mut bits = u;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            p[i] += w;
            bits &= bits - 1;
        }
    }
    p.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

pub fn brute_force_map(
    params: &TurboEncoderParams,
    interleaver: &Interleaver,
    received: &Codeword,
    sigma: f64,
) -> Result<SoftPosterior> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let k = received.len();
    if k > BRUTE_FORCE_MAX_K {
        return Err(Error::BlockTooLarge { k, limit: BRUTE_FORCE_MAX_K });
    }
    let layout = CodebookLayout::new(k, params.window(), interleaver)?;
    let codewords = layout.codewords(params);
    let mut weights = Vec::new();
    codeword_posterior(&codewords, STREAMS * k, &received.flatten(), sigma, &mut weights);
    Ok(SoftPosterior::new(bit_marginals(&weights, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{PseudoBooleanTable, SubsetMask};
    use crate::codec::bcjr::{bcjr_constituent, Trellis};
    use crate::codec::encoder::encode;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn layout_matches_encoder() {
        let mut rng = stream(5, &[]);
        let t = || PseudoBooleanTable::from_fn(3, |x| x as f64 * 0.5 - 1.0).unwrap();
        let p = TurboEncoderParams::new([t(), t().clone(), t()]).unwrap().map_entries(|v| v * 1.5).unwrap();
        let il = Interleaver::random(6, &mut rng);
        let layout = CodebookLayout::new(6, 3, &il).unwrap();
        let cws = layout.codewords(&p);
        for u in 0..64usize {
            let bits: Vec<u8> = (0..6).map(|i| (u >> i & 1) as u8).collect();
            assert_eq!(encode(&p, &bits, &il).unwrap().flatten(), cws[u * 18..(u + 1) * 18].to_vec());
        }
    }

    #[test]
    fn noiseless_injective_is_indicator() {
        let w = 2;
        let p = TurboEncoderParams::new([
            PseudoBooleanTable::parity(w, SubsetMask(0b10)).unwrap(),
            PseudoBooleanTable::parity(w, SubsetMask(0b11)).unwrap(),
            PseudoBooleanTable::parity(w, SubsetMask(0b10)).unwrap(),
        ])
        .unwrap();
        let il = Interleaver::identity(4);
        let bits = [1, 0, 1, 1];
        let cw = encode(&p, &bits, &il).unwrap();
        let post = brute_force_map(&p, &il, &cw, 1e-3).unwrap();
        assert_eq!(post.probs(), &[1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_encoder_is_uninformative() {
        let z = PseudoBooleanTable::constant(3, 0.0).unwrap();
        let p = TurboEncoderParams::new([z.clone(), z.clone(), z]).unwrap();
        let il = Interleaver::identity(5);
        let y = Codeword::from_flat(&[0.3; 15]).unwrap();
        let post = brute_force_map(&p, &il, &y, 1.0).unwrap();
        assert!(post.probs().iter().all(|&q| (q - 0.5).abs() < 1e-15));
    }

    #[test]
    fn guard_on_block_length() {
        let z = PseudoBooleanTable::constant(3, 0.0).unwrap();
        let p = TurboEncoderParams::new([z.clone(), z.clone(), z]).unwrap();
        let y = Codeword::from_flat(&vec![0.0; 63]).unwrap();
        assert_eq!(
            brute_force_map(&p, &Interleaver::identity(21), &y, 1.0),
            Err(Error::BlockTooLarge { k: 21, limit: 20 })
        );
    }

    #[test]
    fn agrees_with_bcjr_on_single_constituent() {
        // zero third stream makes the full decoder a single-constituent MAP
        let mut rng = stream(8, &[]);
        let w = 3;
        let rand_table = |rng: &mut crate::rng::Stream| {
            PseudoBooleanTable::from_fn(w, |_| rng.random::<f64>() * 2.0 - 1.0).unwrap()
        };
        let (a, b) = (rand_table(&mut rng), rand_table(&mut rng));
        let p = TurboEncoderParams::new([a, b, PseudoBooleanTable::constant(w, 0.0).unwrap()]).unwrap();
        let il = Interleaver::random(8, &mut rng);
        let bits: Vec<u8> = (0..8).map(|_| rng.random_range(0..2)).collect();
        let ch = crate::channel::AwgnChannel::new(1.0).unwrap();
        let y = Codeword::from_flat(&ch.transmit(&encode(&p, &bits, &il).unwrap().flatten(), &mut rng)).unwrap();
        let bf = brute_force_map(&p, &il, &y, 1.0).unwrap();
        let tr = Trellis::new(&p, &[0, 1]);
        let out = bcjr_constituent(&tr, &[&y.streams[0], &y.streams[1]], &[0.0; 8], 1.0).unwrap();
        for (l, q) in out.posterior.iter().zip(bf.probs()) {
            assert!((1.0 / (1.0 + (-l).exp()) - q).abs() < 1e-9);
        }
    }
}
