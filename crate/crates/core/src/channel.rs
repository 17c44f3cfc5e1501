//! Noise models.
//!
//! SNR is per real symbol with unit average signal power, so
//! `sigma = 10^(-snr_db / 20)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn snr_db_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

pub fn sigma_to_snr_db(sigma: f64) -> f64 {
    -20.0 * sigma.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwgnChannel {
    sigma: f64,
}

impl AwgnChannel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::NonPositiveSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(snr_db_to_sigma(snr_db))
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Adds `sigma·g` with `g ~ N(0, 1)` to every symbol.
    pub fn transmit<R: Rng + ?Sized>(&self, symbols: &[f64], rng: &mut R) -> Vec<f64> {
        symbols
            .iter()
            .map(|&s| {
                let g: f64 = StandardNormal.sample(rng);
                s + self.sigma * g
            })
            .collect()
    }

    pub fn transmit_in_place<R: Rng + ?Sized>(&self, symbols: &mut [f64], rng: &mut R) {
        for s in symbols {
            let g: f64 = StandardNormal.sample(rng);
            *s += self.sigma * g;
        }
    }
}

pub fn awgn_transmit<R: Rng + ?Sized>(symbols: &[f64], ch: &AwgnChannel, rng: &mut R) -> Vec<f64> {
    ch.transmit(symbols, rng)
}

#[derive(Deserialize)]
struct TransitionRepr {
    transition: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TransitionReprRef<'a> {
    transition: &'a [Vec<f64>],
}

/// Discrete memoryless channel with `transition[i][j] = P(Y = i | X = j)`.
///
/// Rows are outputs and columns are inputs; every column sums to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteChannel {
    transition: Vec<Vec<f64>>,
}

/// Column-sum tolerance applied by [`DiscreteChannel::new`].
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Column-sum tolerance for published matrices printed to three or four
/// decimals (the counterexample's last column sums to 0.999).
pub const PUBLISHED_TOL: f64 = 2e-3;

impl DiscreteChannel {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(transition, STOCHASTIC_TOL)
    }

    /// Like [`new`](Self::new) but accepts columns summing to `1 ± tol`.
    /// Entries are kept as given, not renormalized.
    pub fn with_tolerance(transition: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let rows = transition.len();
        if rows == 0 {
            return Err(Error::NotStochastic("empty matrix".into()));
        }
        let cols = transition[0].len();
        if cols == 0 || transition.iter().any(|r| r.len() != cols) {
            return Err(Error::NotStochastic("ragged or empty rows".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::NotStochastic(format!("entry ({i}, {j}) = {p}")));
                }
            }
        }
        for j in 0..cols {
            let s: f64 = transition.iter().map(|r| r[j]).sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::NotStochastic(format!("column {j} sums to {s}")));
            }
        }
        Ok(Self { transition })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_with_tolerance(s, STOCHASTIC_TOL)
    }

    pub fn from_json_with_tolerance(s: &str, tol: f64) -> Result<Self> {
        let r: TransitionRepr =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("channel JSON: {e}")))?;
        Self::with_tolerance(r.transition, tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TransitionReprRef { transition: &self.transition }).expect("serializable")
    }

    /// Binary symmetric channel with crossover `1 - t` on the diagonal layout
    /// `(t, 1-t; 1-t, t)`.
    pub fn bsc_layout(t: f64) -> Result<Self> {
        Self::new(vec![vec![t, 1.0 - t], vec![1.0 - t, t]])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            transition: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.transition[0].len()
    }

    pub fn num_outputs(&self) -> usize {
        self.transition.len()
    }

    /// `P(Y = output | X = input)`.
    #[inline]
    pub fn prob(&self, output: usize, input: usize) -> f64 {
        self.transition[output][input]
    }

    pub fn column(&self, input: usize) -> Vec<f64> {
        self.transition.iter().map(|r| r[input]).collect()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Samples an output index from column `input`.
    pub fn transmit<R: Rng + ?Sized>(&self, input: usize, rng: &mut R) -> Result<usize> {
        if input >= self.num_inputs() {
            return Err(Error::SymbolOutOfRange { index: input, size: self.num_inputs() });
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, row) in self.transition.iter().enumerate() {
            let p = row[input];
            if p > 0.0 {
                last_nonzero = i;
            }
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
        // column sums may fall short of 1 by rounding
        Ok(last_nonzero)
    }
}

pub fn discrete_transmit<R: Rng + ?Sized>(symbol_index: usize, ch: &DiscreteChannel, rng: &mut R) -> Result<usize> {
    ch.transmit(symbol_index, rng)
}

/// The 4×4 channel under which BER- and BCE-optimal encoders differ, with
/// entries exactly as published.
pub fn counterexample_channel() -> DiscreteChannel {
    DiscreteChannel::with_tolerance(vec![
        vec![0.24, 0.15, 0.24, 0.056],
        vec![0.26, 0.15, 0.26, 0.343],
        vec![0.2605, 0.35, 0.2605, 0.25],
        vec![0.2395, 0.35, 0.2395, 0.35],
    ], PUBLISHED_TOL)
    .expect("columns sum to one within print precision")
}

/// Checked-in JSON form of [`counterexample_channel`].
pub const COUNTEREXAMPLE_JSON: &str = include_str!("../fixtures/counterexample_channel.json");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_db_to_sigma(0.0), 1.0);
        assert!((snr_db_to_sigma(1.0) - 0.891_250_938_133_745_5).abs() < 1e-15);
        assert!((snr_db_to_sigma(20.0) - 0.1).abs() < 1e-15);
        assert!((sigma_to_snr_db(snr_db_to_sigma(3.5)) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn awgn_tiny_sigma_and_determinism() {
        let x: Vec<f64> = (0..64).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let ch = AwgnChannel::new(1e-12).unwrap();
        let y = ch.transmit(&x, &mut stream(1, &[]));
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));

        let ch = AwgnChannel::new(1.0).unwrap();
        let a = ch.transmit(&x, &mut stream(5, &[1]));
        let b = ch.transmit(&x, &mut stream(5, &[1]));
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(AwgnChannel::new(0.0).is_err());
    }

    #[test]
    fn awgn_variance() {
        let ch = AwgnChannel::new(0.5).unwrap();
        let y = ch.transmit(&vec![0.0; 1_000_000], &mut stream(11, &[]));
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.002, "mean {mean}");
        assert!((var - 0.25).abs() < 0.002, "var {var}");
    }

    #[test]
    fn discrete_identity_and_bsc0() {
        let mut rng = stream(3, &[]);
        let id = DiscreteChannel::identity(2);
        let bsc0 = DiscreteChannel::bsc_layout(0.0).unwrap();
        for _ in 0..100 {
            assert_eq!(id.transmit(1, &mut rng).unwrap(), 1);
            assert_eq!(id.transmit(0, &mut rng).unwrap(), 0);
            // (0, 1; 1, 0): input j lands on the other row
            assert_eq!(bsc0.transmit(0, &mut rng).unwrap(), 1);
        }
        assert!(id.transmit(2, &mut rng).is_err());
    }

    #[test]
    fn discrete_empirical_column() {
        let ch = counterexample_channel();
        let mut rng = stream(17, &[]);
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[ch.transmit(2, &mut rng).unwrap()] += 1;
        }
        for (i, c) in counts.iter().enumerate() {
            let freq = *c as f64 / n as f64;
            assert!((freq - ch.prob(i, 2)).abs() < 0.003, "row {i}: {freq}");
        }
    }

    #[test]
    fn rejects_non_stochastic() {
        assert!(DiscreteChannel::new(vec![vec![0.5, 0.5], vec![0.6, 0.5]]).is_err());
        assert!(DiscreteChannel::new(vec![vec![1.5, 0.0], vec![-0.5, 1.0]]).is_err());
        assert!(DiscreteChannel::new(vec![vec![1.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn fixture_json_matches() {
        assert!(DiscreteChannel::from_json(COUNTEREXAMPLE_JSON).is_err());
        let ch = DiscreteChannel::from_json_with_tolerance(COUNTEREXAMPLE_JSON, PUBLISHED_TOL).unwrap();
        assert_eq!(ch, counterexample_channel());
        assert_eq!(ch.prob(0, 3), 0.056);
        let back = DiscreteChannel::from_json_with_tolerance(&ch.to_json(), PUBLISHED_TOL).unwrap();
        assert_eq!(back, counterexample_channel());
    }
}
