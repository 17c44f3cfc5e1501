//! Exact log-domain BCJR over the sliding-window trellis.

use super::encoder::TurboEncoderParams;
use crate::error::{Error, Result};

/// Posterior and extrinsic LLRs are clipped to this magnitude.
pub const LLR_CLIP: f64 = 50.0;

/// Trellis of one constituent code. The state after position `i` holds the
/// `w - 1` most recent inputs in the window layout (oldest in bit 0); the
/// encoder starts in state 0 and is not terminated.
#[derive(Clone, Debug)]
pub struct Trellis {
    window: usize,
    /// `outputs[j][idx]`: output of stream `j` for window index `idx`.
    outputs: Vec<Vec<f64>>,
}

impl Trellis {
    /// Trellis emitting the given streams of `params` on each transition.
    pub fn new(params: &TurboEncoderParams, streams: &[usize]) -> Self {
        Self {
            window: params.window(),
            outputs: streams.iter().map(|&s| params.table(s).values().to_vec()).collect(),
        }
    }

    pub fn from_tables(window: usize, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if window == 0 || outputs.iter().any(|o| o.len() != 1 << window) {
            return Err(Error::InvalidArgument("trellis output tables must have 2^window entries".into()));
        }
        Ok(Self { window, outputs })
    }

    pub fn num_states(&self) -> usize {
        1 << (self.window - 1)
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Window index taken when `bit` arrives in `state`.
    #[inline]
    pub fn branch(&self, state: usize, bit: usize) -> usize {
        state | (bit << (self.window - 1))
    }

    #[inline]
    pub fn next_state(&self, branch: usize) -> usize {
        branch >> 1
    }

    #[inline]
    pub fn output(&self, stream: usize, branch: usize) -> f64 {
        self.outputs[stream][branch]
    }
}

#[inline]
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[inline]
pub(crate) fn clip_llr(l: f64) -> f64 {
    l.clamp(-LLR_CLIP, LLR_CLIP)
}

/// LLRs are `ln P(u = 1) / P(u = 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BcjrOutput {
    pub posterior: Vec<f64>,
    pub extrinsic: Vec<f64>,
}

/// Forward-backward MAP decoding of one constituent code.
///
/// `received[j]` is the noisy observation of the trellis' `j`-th stream.
pub fn bcjr_constituent(trellis: &Trellis, received: &[&[f64]], prior_llrs: &[f64], sigma: f64) -> Result<BcjrOutput> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if received.len() != trellis.num_outputs() {
        return Err(Error::InvalidArgument(format!(
            "expected {} received streams, got {}",
            trellis.num_outputs(),
            received.len()
        )));
    }
    let k = prior_llrs.len();
    if received.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidArgument("received stream length differs from prior length".into()));
    }

    let ns = trellis.num_states();
    let nb = ns * 2;
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);

    // gamma[i * nb + branch]
    let mut gamma = vec![0.0; k * nb];
    for i in 0..k {
        let half = 0.5 * prior_llrs[i];
        for br in 0..nb {
            let bit = br >> (trellis.window - 1);
            let mut g = if bit == 1 { half } else { -half };
            for (j, r) in received.iter().enumerate() {
                let d = r[i] - trellis.output(j, br);
                g -= d * d * inv2s2;
            }
            gamma[i * nb + br] = g;
        }
    }

    let mut alpha = vec![f64::NEG_INFINITY; (k + 1) * ns];
    alpha[0] = 0.0;
    for i in 0..k {
        let (cur, next) = alpha.split_at_mut((i + 1) * ns);
        let cur = &cur[i * ns..];
        let next = &mut next[..ns];
        for s in 0..ns {
            if cur[s] == f64::NEG_INFINITY {
                continue;
            }
            for bit in 0..2 {
                let br = trellis.branch(s, bit);
                let t = trellis.next_state(br);
                next[t] = log_add(next[t], cur[s] + gamma[i * nb + br]);
            }
        }
        let m = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m.is_finite() {
            next.iter_mut().for_each(|a| *a -= m);
        }
    }

    let mut beta = vec![0.0; (k + 1) * ns];
    for i in (0..k).rev() {
        let (cur, next) = beta.split_at_mut((i + 1) * ns);
        let cur = &mut cur[i * ns..];
        let next = &next[..ns];
        for s in 0..ns {
            let mut acc = f64::NEG_INFINITY;
            for bit in 0..2 {
                let br = trellis.branch(s, bit);
                acc = log_add(acc, gamma[i * nb + br] + next[trellis.next_state(br)]);
            }
            cur[s] = acc;
        }
        let m = cur.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m.is_finite() {
            cur.iter_mut().for_each(|b| *b -= m);
        }
    }

    let mut posterior = Vec::with_capacity(k);
    let mut extrinsic = Vec::with_capacity(k);
    for i in 0..k {
        let mut num = [f64::NEG_INFINITY; 2];
        for s in 0..ns {
            let a = alpha[i * ns + s];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for bit in 0..2 {
                let br = trellis.branch(s, bit);
                let v = a + gamma[i * nb + br] + beta[(i + 1) * ns + trellis.next_state(br)];
                num[bit] = log_add(num[bit], v);
            }
        }
        let l = clip_llr(num[1] - num[0]);
        if l.is_nan() {
            return Err(Error::Numerical(format!("NaN posterior at position {i}")));
        }
        posterior.push(l);
        // the code is non-systematic, so no separate channel term
        extrinsic.push(clip_llr(l - prior_llrs[i]));
    }
    Ok(BcjrOutput { posterior, extrinsic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{PseudoBooleanTable, SubsetMask};
    use crate::codec::encoder::window_indices;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn log_add_basics() {
        assert_eq!(log_add(f64::NEG_INFINITY, 1.0), 1.0);
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((log_add(-1000.0, 0.0)).abs() < 1e-15);
    }

    fn single_stream(w: usize, values: Vec<f64>) -> Trellis {
        Trellis::from_tables(w, vec![values]).unwrap()
    }

    #[test]
    fn noiseless_recovers_input() {
        let w = 3;
        let t = PseudoBooleanTable::parity(w, SubsetMask(0b101)).unwrap();
        let tr = single_stream(w, t.values().to_vec());
        let bits = [1u8, 0, 0, 1, 1, 1, 0, 1, 0, 0];
        let y: Vec<f64> = window_indices(&bits, w).map(|x| t.eval(x)).collect();
        let out = bcjr_constituent(&tr, &[&y], &[0.0; 10], 1e-3).unwrap();
        for (l, &b) in out.posterior.iter().zip(&bits) {
            assert_eq!(*l > 0.0, b == 1);
            assert_eq!(l.abs(), LLR_CLIP);
        }
    }

    #[test]
    fn uninformative_observation_returns_prior() {
        let w = 3;
        let t = PseudoBooleanTable::parity(w, SubsetMask(0b110)).unwrap();
        let tr = single_stream(w, t.values().to_vec());
        let prior = [0.3, -1.2, 0.0, 2.0, -0.5, 0.7];
        let out = bcjr_constituent(&tr, &[&[0.0; 6]], &prior, 1.0).unwrap();
        for (p, q) in out.posterior.iter().zip(&prior) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!(out.extrinsic.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_sigma() {
        let tr = single_stream(2, vec![1.0, -1.0, 1.0, -1.0]);
        assert!(matches!(bcjr_constituent(&tr, &[&[0.0; 3]], &[0.0; 3], 0.0), Err(Error::NonPositiveSigma(_))));
    }

    /// Brute-force per-bit marginalization over all inputs, with priors.
    fn brute_force(tr_tables: &[Vec<f64>], w: usize, y: &[Vec<f64>], prior: &[f64], sigma: f64) -> Vec<f64> {
        let k = prior.len();
        let mut logw = Vec::with_capacity(1 << k);
        for u in 0..1usize << k {
            let bits: Vec<u8> = (0..k).map(|i| (u >> i & 1) as u8).collect();
            let mut s = 0.0;
            for (i, x) in window_indices(&bits, w).enumerate() {
                s += if bits[i] == 1 { 0.5 * prior[i] } else { -0.5 * prior[i] };
                for (j, t) in tr_tables.iter().enumerate() {
                    let d = y[j][i] - t[x];
                    s -= d * d / (2.0 * sigma * sigma);
                }
            }
            logw.push(s);
        }
        let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logw.iter().map(|l| (l - m).exp()).sum();
        (0..k)
            .map(|i| logw.iter().enumerate().filter(|(u, _)| u >> i & 1 == 1).map(|(_, l)| (l - m).exp()).sum::<f64>() / z)
            .collect()
    }

    #[test]
    fn matches_brute_force_k8_w3() {
        let w = 3;
        let mut rng = stream(77, &[]);
        for _ in 0..5 {
            let tables: Vec<Vec<f64>> =
                (0..2).map(|_| (0..1 << w).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
            let tr = Trellis::from_tables(w, tables.clone()).unwrap();
            let bits: Vec<u8> = (0..8).map(|_| rng.random_range(0..2)).collect();
            let y: Vec<Vec<f64>> = tables
                .iter()
                .map(|t| {
                    window_indices(&bits, w)
                        .map(|x| { let g: f64 = StandardNormal.sample(&mut rng); t[x] + g })
                        .collect::<Vec<f64>>()
                })
                .collect();
            let prior: Vec<f64> = (0..8).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let out = bcjr_constituent(&tr, &[&y[0], &y[1]], &prior, 1.0).unwrap();
            let oracle = brute_force(&tables, w, &y, &prior, 1.0);
            for (l, p) in out.posterior.iter().zip(&oracle) {
                let q = 1.0 / (1.0 + (-l).exp());
                assert!((q - p).abs() < 1e-9, "{q} vs {p}");
            }
        }
    }
}
