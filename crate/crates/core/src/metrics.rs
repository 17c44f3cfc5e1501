//! Bit error rate, binary cross-entropy and conditional entropy.
//!
//! All logarithms are base 2 and `0·lg 0 = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{counterexample_channel, AwgnChannel, DiscreteChannel};
use crate::codec::{
    brute_force_map, encode, Codeword, Interleaver, SoftPosterior, TurboDecoder, TurboEncoderParams,
};
use crate::error::{Error, Result};
use crate::rng::{stream, tags};
use rand::Rng;

/// Posteriors are clamped to `[EPS, 1 - EPS]` before taking logarithms.
pub const EPS: f64 = 1e-12;

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Cross-entropy of one bit against its posterior `P(U = 1)`.
#[inline]
pub fn bit_bce(bit: u8, posterior: f64) -> f64 {
    let p = posterior.clamp(EPS, 1.0 - EPS);
    if bit == 1 {
        -p.log2()
    } else {
        -(1.0 - p).log2()
    }
}

/// Hard-decision error: posteriors `≤ 1/2` decide 0.
#[inline]
pub fn bit_error(bit: u8, posterior: f64) -> bool {
    (posterior > 0.5) != (bit == 1)
}

fn check_lengths(true_bits: &[u8], posteriors: &SoftPosterior) -> Result<()> {
    if true_bits.len() != posteriors.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} bits, {} posteriors",
            true_bits.len(),
            posteriors.len()
        )));
    }
    if true_bits.is_empty() {
        return Err(Error::InvalidArgument("empty block".into()));
    }
    Ok(())
}

/// Mean binary cross-entropy (bits) of the posteriors against the truth.
pub fn bce(true_bits: &[u8], posteriors: &SoftPosterior) -> Result<f64> {
    check_lengths(true_bits, posteriors)?;
    let s: f64 = true_bits.iter().zip(posteriors.probs()).map(|(&b, &p)| bit_bce(b, p)).sum();
    Ok(s / true_bits.len() as f64)
}

/// Fraction of hard decisions that differ from the truth.
pub fn ber(true_bits: &[u8], posteriors: &SoftPosterior) -> Result<f64> {
    check_lengths(true_bits, posteriors)?;
    let errors = true_bits.iter().zip(posteriors.probs()).filter(|(&b, &p)| bit_error(b, p)).count();
    Ok(errors as f64 / true_bits.len() as f64)
}

/// Aggregated BCE/BER over many blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossReport {
    pub bce: f64,
    pub ber: f64,
    pub per_bit_bce: Vec<f64>,
    pub per_bit_ber: Vec<f64>,
    pub blocks_evaluated: usize,
    /// Standard error of `bce` across blocks.
    pub std_error: f64,
    /// Standard error of `ber` across blocks.
    pub ber_std_error: f64,
}

/// Streaming accumulator for [`LossReport`].
#[derive(Clone, Debug)]
pub struct LossAccumulator {
    bce_sum: Vec<f64>,
    err_sum: Vec<f64>,
    block_bce: Vec<f64>,
    block_ber: Vec<f64>,
}

impl LossAccumulator {
    pub fn new(k: usize) -> Self {
        Self { bce_sum: vec![0.0; k], err_sum: vec![0.0; k], block_bce: Vec::new(), block_ber: Vec::new() }
    }

    pub fn add(&mut self, true_bits: &[u8], posteriors: &SoftPosterior) -> Result<()> {
        check_lengths(true_bits, posteriors)?;
        if true_bits.len() != self.bce_sum.len() {
            return Err(Error::InvalidArgument("block length changed between blocks".into()));
        }
        let (mut c, mut e) = (0.0, 0.0);
        for (i, (&b, &p)) in true_bits.iter().zip(posteriors.probs()).enumerate() {
            let l = bit_bce(b, p);
            let err = f64::from(u8::from(bit_error(b, p)));
            self.bce_sum[i] += l;
            self.err_sum[i] += err;
            c += l;
            e += err;
        }
        let k = true_bits.len() as f64;
        self.block_bce.push(c / k);
        self.block_ber.push(e / k);
        Ok(())
    }

    /// Per-block mean BCE in insertion order.
    pub fn block_bce(&self) -> &[f64] {
        &self.block_bce
    }

    pub fn finish(self) -> LossReport {
        let n = self.block_bce.len();
        let nf = n.max(1) as f64;
        let (bce, std_error) = mean_and_std_error(&self.block_bce);
        let (ber, ber_std_error) = mean_and_std_error(&self.block_ber);
        LossReport {
            bce,
            ber,
            per_bit_bce: self.bce_sum.iter().map(|s| s / nf).collect(),
            per_bit_ber: self.err_sum.iter().map(|s| s / nf).collect(),
            blocks_evaluated: n,
            std_error,
            ber_std_error,
        }
    }
}

/// Sample mean and its standard error, summed in index order.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Which decoder supplies the posteriors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoder {
    /// Exact marginalization over all inputs.
    BruteForce,
    /// Iterative BCJR with the given number of iterations.
    Turbo(usize),
}

/// Transmits `num_samples` uniform blocks of length `interleaver.len()`
/// through AWGN and scores the decoder's posteriors.
///
/// Block `j` draws its input and noise from stream `(seed, BLOCKS, j)`, so
/// results do not depend on thread scheduling.
pub fn evaluate_code(
    params: &TurboEncoderParams,
    interleaver: &Interleaver,
    channel: &AwgnChannel,
    num_samples: usize,
    seed: u64,
    decoder: Decoder,
) -> Result<LossReport> {
    Ok(evaluate_blocks(params, interleaver, channel, num_samples, seed, decoder)?.finish())
}

/// Like [`evaluate_code`], keeping per-block losses.
pub fn evaluate_blocks(
    params: &TurboEncoderParams,
    interleaver: &Interleaver,
    channel: &AwgnChannel,
    num_samples: usize,
    seed: u64,
    decoder: Decoder,
) -> Result<LossAccumulator> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be positive".into()));
    }
    let k = interleaver.len();
    let turbo = TurboDecoder::new(params, interleaver);
    let sigma = channel.sigma();
    let blocks: Vec<(Vec<u8>, SoftPosterior)> = (0..num_samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, &[tags::BLOCKS, j as u64]);
            let bits: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
            let mut y = encode(params, &bits, interleaver)?.flatten();
            channel.transmit_in_place(&mut y, &mut rng);
            let y = Codeword::from_flat(&y)?;
            let post = match decoder {
                Decoder::BruteForce => brute_force_map(params, interleaver, &y, sigma)?,
                Decoder::Turbo(iters) => turbo.decode(&y, sigma, iters)?,
            };
            Ok((bits, post))
        })
        .collect::<Result<_>>()?;
    let mut acc = LossAccumulator::new(k);
    for (bits, post) in &blocks {
        acc.add(bits, post)?;
    }
    Ok(acc)
}

/// Monte Carlo estimate of `(1/k) Σ_i H(U_i | Y)` with its standard error.
///
/// With an exact MAP decoder the expected BCE equals the average conditional
/// entropy, so this is the mean BCE under brute-force posteriors.
pub fn conditional_entropy_estimate(
    params: &TurboEncoderParams,
    interleaver: &Interleaver,
    channel: &AwgnChannel,
    num_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let r = evaluate_code(params, interleaver, channel, num_samples, seed, Decoder::BruteForce)?;
    Ok((r.bce, r.std_error))
}

/// Encoder from `k` bits onto the input alphabet of a discrete channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmallEncoder {
    k: usize,
    codebook: Vec<usize>,
}

impl SmallEncoder {
    /// `codebook[u]` is the channel input for the block whose bit `i` is
    /// `u_i` (0-based symbols).
    pub fn new(k: usize, codebook: Vec<usize>) -> Result<Self> {
        if k == 0 || k > 16 || codebook.len() != 1 << k {
            return Err(Error::InvalidArgument(format!("codebook must have 2^k entries for 1 <= k <= 16, k = {k}")));
        }
        Ok(Self { k, codebook })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codebook(&self) -> &[usize] {
        &self.codebook
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = self.codebook.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Exact `(C(f), B(f))` under the soft-MAP decoder, averaged over bits.
///
/// For one bit this is `B = ½ Σ_y min(p_{y,f(1)}, p_{y,f(0)})` and
/// `C = -½ Σ_y [p1 lg p1 + p0 lg p0 - (p0+p1) lg(p0+p1)]`.
pub fn exact_discrete_bce_ber(f: &SmallEncoder, ch: &DiscreteChannel) -> Result<(f64, f64)> {
    if let Some(&bad) = f.codebook.iter().find(|&&x| x >= ch.num_inputs()) {
        return Err(Error::SymbolOutOfRange { index: bad, size: ch.num_inputs() });
    }
    let k = f.k;
    let prior = 1.0 / (1usize << k) as f64;
    let xlg = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    let (mut c_total, mut b_total) = (0.0, 0.0);
    for i in 0..k {
        for y in 0..ch.num_outputs() {
            // joint P(Y = y, U_i = b)
            let mut joint = [0.0f64; 2];
            for (u, &x) in f.codebook.iter().enumerate() {
                joint[u >> i & 1] += prior * ch.prob(y, x);
            }
            b_total += joint[0].min(joint[1]);
            c_total -= xlg(joint[0]) + xlg(joint[1]) - xlg(joint[0] + joint[1]);
        }
    }
    Ok((c_total / k as f64, b_total / k as f64))
}

/// Monte Carlo BCE/BER of a small encoder on a discrete channel with the
/// exact posterior decoder.
pub fn discrete_monte_carlo(f: &SmallEncoder, ch: &DiscreteChannel, num_samples: usize, seed: u64) -> Result<LossReport> {
    let k = f.k;
    let n_out = ch.num_outputs();
    // posterior P(U_i = 1 | Y = y) for every output symbol
    let post: Vec<Vec<f64>> = (0..n_out)
        .map(|y| {
            let mut num = vec![0.0; k];
            let mut den = 0.0;
            for (u, &x) in f.codebook.iter().enumerate() {
                let p = ch.prob(y, x);
                den += p;
                for (i, n) in num.iter_mut().enumerate() {
                    if u >> i & 1 == 1 {
                        *n += p;
                    }
                }
            }
            num.iter().map(|n| if den > 0.0 { n / den } else { 0.5 }).collect()
        })
        .collect();
    let mut rng = stream(seed, &[tags::EVAL]);
    let mut acc = LossAccumulator::new(k);
    for _ in 0..num_samples {
        let u: usize = rng.random_range(0..1usize << k);
        let y = ch.transmit(f.codebook[u], &mut rng)?;
        let bits: Vec<u8> = (0..k).map(|i| (u >> i & 1) as u8).collect();
        acc.add(&bits, &SoftPosterior::new(post[y].clone()))?;
    }
    Ok(acc.finish())
}

/// `2·ber - tol ≤ bce ≤ H₂(ber) + tol`.
pub fn check_two_sided_bound(bce_i: f64, ber_i: f64, tol: f64) -> bool {
    2.0 * ber_i - tol <= bce_i && bce_i <= h2(ber_i) + tol
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 1/2], got {t}")));
    }
    Ok(())
}

/// Identity encoder over the binary symmetric channel `(t, 1-t; 1-t, t)`;
/// attains `C = H₂(B)` with `B = t`.
pub fn tight_upper_channel(t: f64) -> Result<(SmallEncoder, DiscreteChannel)> {
    check_t(t)?;
    Ok((SmallEncoder::new(1, vec![0, 1])?, DiscreteChannel::bsc_layout(t)?))
}

/// Injective encoder into three symbols with `(1-2t, 0; 0, 1-2t; 2t, 2t)`;
/// attains `C = 2B` with `B = t`.
pub fn tight_lower_channel(t: f64) -> Result<(SmallEncoder, DiscreteChannel)> {
    check_t(t)?;
    let ch = DiscreteChannel::new(vec![vec![1.0 - 2.0 * t, 0.0], vec![0.0, 1.0 - 2.0 * t], vec![2.0 * t, 2.0 * t]])?;
    Ok((SmallEncoder::new(1, vec![0, 1])?, ch))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRow {
    /// `[f(0), f(1)]`, 1-based symbols.
    pub f: [usize; 2],
    pub bce: f64,
    pub ber: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleTable {
    pub rows: Vec<CounterexampleRow>,
    pub ber_minimizers: Vec<[usize; 2]>,
    pub bce_minimizers: Vec<[usize; 2]>,
}

impl CounterexampleTable {
    pub fn minimizers_disjoint(&self) -> bool {
        self.ber_minimizers.iter().all(|f| !self.bce_minimizers.contains(f))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("f0,f1,bce,ber\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.f[0], r.f[1], r.bce, r.ber));
        }
        s
    }
}

fn argmin(rows: &[CounterexampleRow], key: impl Fn(&CounterexampleRow) -> f64) -> Vec<[usize; 2]> {
    let best = rows.iter().map(&key).fold(f64::INFINITY, f64::min);
    rows.iter().filter(|r| key(r) - best <= 1e-9).map(|r| r.f).collect()
}

/// Evaluates every injective `f: 𝔽₂ → [4]` with `f(0) < f(1)` on
/// `channel` and collects the BER and BCE minimizers.
pub fn counterexample_sweep_on(channel: &DiscreteChannel) -> Result<CounterexampleTable> {
    let n = channel.num_inputs();
    let mut rows = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (bce, ber) = exact_discrete_bce_ber(&SmallEncoder::new(1, vec![a, b])?, channel)?;
            rows.push(CounterexampleRow { f: [a + 1, b + 1], bce, ber });
        }
    }
    let ber_minimizers = argmin(&rows, |r| r.ber);
    let bce_minimizers = argmin(&rows, |r| r.bce);
    Ok(CounterexampleTable { rows, ber_minimizers, bce_minimizers })
}

/// [`counterexample_sweep_on`] the published 4×4 channel.
pub fn counterexample_sweep() -> CounterexampleTable {
    counterexample_sweep_on(&counterexample_channel()).expect("fixed channel is valid")
}
