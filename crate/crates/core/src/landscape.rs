//! Loss of Fourier-parameterized Turbo encoders along lines in parameter space.
//!
//! A point is a [`ThetaTriple`]: one spectrum on five variables per stream.
//! Losses are BCE of the 6-iteration turbo decoder over AWGN. Every point on
//! a probe reuses the same inputs, noise and interleaver, so differences
//! between grid points are not swamped by Monte Carlo noise.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{wht_forward, FourierSpectrum, PseudoBooleanTable, SubsetMask};
use crate::channel::AwgnChannel;
use crate::codec::{analytic_power, Interleaver, TurboEncoderParams, DEFAULT_ITERATIONS, STREAMS};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_blocks, mean_and_std_error, Decoder};
use crate::rng::{stream, tags};

pub const THETA_ARITY: usize = 5;
pub const DEFAULT_BLOCK_LENGTH: usize = 10;
pub const DEFAULT_SNR_DB: f64 = 1.0;
pub const DEFAULT_GRID_POINTS: usize = 21;

/// Norms below this count as an all-zero spectrum.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaTriple {
    pub spectra: [FourierSpectrum; STREAMS],
}

impl ThetaTriple {
    /// Normalizes each spectrum to unit 2-norm.
    pub fn new(spectra: [FourierSpectrum; STREAMS]) -> Result<Self> {
        let arity = spectra[0].arity();
        if spectra.iter().any(|s| s.arity() != arity) {
            return Err(Error::InvalidArgument("spectra must share one arity".into()));
        }
        let mut out = Vec::with_capacity(STREAMS);
        for (b, s) in spectra.iter().enumerate() {
            if s.norm() < DEGENERATE_NORM {
                return Err(Error::InvalidArgument(format!("spectrum {} is all zero", b + 1)));
            }
            out.push(s.normalized().ok_or(Error::DegenerateSpectrum)?);
        }
        let spectra: [FourierSpectrum; STREAMS] = out.try_into().expect("three spectra");
        Ok(Self { spectra })
    }

    pub fn from_tables(tables: &[PseudoBooleanTable; STREAMS]) -> Result<Self> {
        Self::new([wht_forward(&tables[0]), wht_forward(&tables[1]), wht_forward(&tables[2])])
    }

    pub fn arity(&self) -> usize {
        self.spectra[0].arity()
    }

    /// Tables straight from the unit-norm spectra.
    pub fn encoder(&self) -> Result<TurboEncoderParams> {
        TurboEncoderParams::from_spectra(&self.spectra)
    }

    /// Encoder scaled per `power` for block length `k`.
    pub fn encoder_for(&self, k: usize, power: PowerNormalization) -> Result<TurboEncoderParams> {
        let params = self.encoder()?;
        match power {
            PowerNormalization::Parseval => Ok(params),
            PowerNormalization::Exact => {
                let p = analytic_power(&params, k);
                if !(p > 0.0) {
                    return Err(Error::ZeroVariance);
                }
                let s = p.sqrt();
                params.map_entries(|v| v / s)
            }
        }
    }

    /// `λ·other + (1−λ)·self`, renormalized per stream. `None` when some
    /// stream cancels to zero.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Option<Self>> {
        let mut out = Vec::with_capacity(STREAMS);
        for (a, b) in self.spectra.iter().zip(&other.spectra) {
            let m = a.combine(1.0 - lambda, b, lambda)?;
            match m.normalized() {
                Some(n) if m.norm() >= DEGENERATE_NORM => out.push(n),
                _ => return Ok(None),
            }
        }
        Ok(Some(Self { spectra: out.try_into().expect("three spectra") }))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectra serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(t.spectra)
    }
}

/// One unit coefficient per stream at the given masks (raw integers over
/// five variables, bit `i` = variable `i+1`).
pub fn parity_triple(masks: [SubsetMask; STREAMS]) -> Result<ThetaTriple> {
    let spectra = masks.map(|m| FourierSpectrum::single(THETA_ARITY, m, 1.0));
    let [a, b, c] = spectra;
    ThetaTriple::new([a?, b?, c?])
}

/// `x_a x_b ⊕ x_c x_d` on five variables as a ±1 table.
pub fn bent_on(vars: [usize; 4]) -> Result<PseudoBooleanTable> {
    if vars.iter().any(|&v| v == 0 || v > THETA_ARITY) {
        return Err(Error::InvalidArgument(format!("variables must be in 1..={THETA_ARITY}")));
    }
    let bit = |x: usize, v: usize| (x >> (v - 1)) & 1 == 1;
    PseudoBooleanTable::from_boolean(THETA_ARITY, |x| {
        (bit(x, vars[0]) & bit(x, vars[1])) ^ (bit(x, vars[2]) & bit(x, vars[3]))
    })
}

fn bent_triple_on(subsets: [[usize; 4]; STREAMS]) -> Result<ThetaTriple> {
    let [a, b, c] = subsets;
    ThetaTriple::from_tables(&[bent_on(a)?, bent_on(b)?, bent_on(c)?])
}

/// The bent function `x1x2 ⊕ x3x4` copied onto variables {1,2,3,4},
/// {2,3,4,5} and {1,2,4,5}.
pub fn bent_triple() -> ThetaTriple {
    bent_triple_on([[1, 2, 3, 4], [2, 3, 4, 5], [1, 2, 4, 5]]).expect("static triple")
}

/// A second bent triple on {1,3,4,5}, {1,2,3,5} and {2,3,4,5}, used as the
/// far endpoint of bent line probes.
pub fn bent_partner() -> ThetaTriple {
    bent_triple_on([[1, 3, 4, 5], [1, 2, 3, 5], [2, 5, 3, 4]]).expect("static triple")
}

/// Random parity triple whose masks all contain variable 5, the newest bit
/// of each window.
pub fn random_parity_triple<R: Rng + ?Sized>(rng: &mut R) -> ThetaTriple {
    let top = 1u128 << (THETA_ARITY - 1);
    let masks = [(); STREAMS].map(|_| SubsetMask(top | rng.random_range(0..top)));
    parity_triple(masks).expect("masks fit five variables")
}

/// Seeded pair of distinct triples from [`random_parity_triple`].
pub fn random_parity_pair(seed: u64) -> (ThetaTriple, ThetaTriple) {
    let mut rng = stream(seed, &[tags::INIT]);
    let a = random_parity_triple(&mut rng);
    loop {
        let b = random_parity_triple(&mut rng);
        if b != a {
            return (a, b);
        }
    }
}

/// How a triple's tables are scaled before transmission.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerNormalization {
    /// Unit-norm spectra only: mean square 1 over full windows.
    Parseval,
    /// Additionally scale all three tables so the exact average power at
    /// the probe's block length, zero-padded windows included, is 1.
    #[default]
    Exact,
}

/// Settings shared by [`loss_of_theta`] and [`line_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub k: usize,
    pub snr_db: f64,
    pub blocks: usize,
    pub seed: u64,
    pub power: PowerNormalization,
}

impl ProbeConfig {
    pub fn new(blocks: usize, seed: u64) -> Self {
        Self {
            k: DEFAULT_BLOCK_LENGTH,
            snr_db: DEFAULT_SNR_DB,
            blocks,
            seed,
            power: PowerNormalization::default(),
        }
    }

    /// Interleaver fixed by the seed.
    pub fn interleaver(&self) -> Interleaver {
        Interleaver::random(self.k, &mut stream(self.seed, &[tags::INTERLEAVER]))
    }
}

/// Mean BCE and its standard error. Block `j` uses stream `(seed, BLOCKS, j)`
/// for its input and noise regardless of `theta`.
pub fn loss_of_theta(theta: &ThetaTriple, cfg: &ProbeConfig, interleaver: &Interleaver) -> Result<(f64, f64)> {
    Ok(mean_and_std_error(&block_losses(theta, cfg, interleaver)?))
}

/// Per-block BCE behind [`loss_of_theta`].
pub fn block_losses(theta: &ThetaTriple, cfg: &ProbeConfig, interleaver: &Interleaver) -> Result<Vec<f64>> {
    if cfg.blocks == 0 {
        return Err(Error::InvalidArgument("blocks must be at least 1".into()));
    }
    if interleaver.len() != cfg.k {
        return Err(Error::InvalidArgument("interleaver length differs from block length".into()));
    }
    let params = theta.encoder_for(cfg.k, cfg.power)?;
    let channel = AwgnChannel::from_snr_db(cfg.snr_db)?;
    let acc = evaluate_blocks(&params, interleaver, &channel, cfg.blocks, cfg.seed, Decoder::Turbo(DEFAULT_ITERATIONS))?;
    Ok(acc.block_bce().to_vec())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineProbeResult {
    pub lambdas: Vec<f64>,
    /// `NaN` at degenerate points.
    pub losses: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Standard error of the blockwise loss difference to the `λ = 0`
    /// point; the blocks share inputs and noise, so this is much tighter
    /// than combining the two marginal errors.
    pub paired_se_to_start: Vec<f64>,
    /// Same, against the `λ = 1` point.
    pub paired_se_to_end: Vec<f64>,
    pub seed: u64,
    pub interleaver: Vec<usize>,
}

impl LineProbeResult {
    pub fn loss_at(&self, lambda: f64) -> Option<(f64, f64)> {
        self.lambdas
            .iter()
            .position(|&l| (l - lambda).abs() < 1e-12)
            .map(|i| (self.losses[i], self.std_errors[i]))
    }

    /// Loss excess of grid point `i` over the `λ = 0` (or `λ = 1`) point,
    /// in paired standard errors.
    pub fn excess_z(&self, i: usize, against_end: bool) -> f64 {
        let (j, se) = if against_end {
            (self.lambdas.len() - 1, self.paired_se_to_end[i])
        } else {
            (0, self.paired_se_to_start[i])
        };
        (self.losses[i] - self.losses[j]) / se
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,loss,std_error,degenerate_flag\n");
        for i in 0..self.lambdas.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.lambdas[i],
                self.losses[i],
                self.std_errors[i],
                u8::from(self.degenerate[i])
            ));
        }
        s
    }
}

/// `n` evenly spaced points from 0 to 1.
pub fn default_grid(n: usize) -> Vec<f64> {
    let d = (n.max(2) - 1) as f64;
    (0..n.max(2)).map(|i| i as f64 / d).collect()
}

/// Loss at `λ·b + (1−λ)·a` for each grid point.
///
/// The grid must be ascending from 0 to 1.
pub fn line_probe(a: &ThetaTriple, b: &ThetaTriple, lambdas: &[f64], cfg: &ProbeConfig) -> Result<LineProbeResult> {
    if lambdas.len() < 2 || lambdas[0] != 0.0 || lambdas[lambdas.len() - 1] != 1.0 {
        return Err(Error::InvalidArgument("grid must run from 0 to 1".into()));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("grid must be strictly ascending".into()));
    }
    if a.arity() != b.arity() {
        return Err(Error::InvalidArgument("endpoints have different arity".into()));
    }
    let il = cfg.interleaver();
    let points: Vec<Option<Vec<f64>>> = lambdas
        .par_iter()
        .map(|&l| match a.mix(b, l)? {
            Some(t) => block_losses(&t, cfg, &il).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    let summary: Vec<(f64, f64)> =
        points.iter().map(|p| p.as_deref().map_or((f64::NAN, f64::NAN), mean_and_std_error)).collect();
    let paired = |j: usize| -> Vec<f64> {
        points
            .iter()
            .map(|p| match (p, &points[j]) {
                (Some(x), Some(y)) => {
                    let d: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                    mean_and_std_error(&d).1
                }
                _ => f64::NAN,
            })
            .collect()
    };
    Ok(LineProbeResult {
        lambdas: lambdas.to_vec(),
        losses: summary.iter().map(|v| v.0).collect(),
        std_errors: summary.iter().map(|v| v.1).collect(),
        degenerate: points.iter().map(Option::is_none).collect(),
        paired_se_to_start: paired(0),
        paired_se_to_end: paired(lambdas.len() - 1),
        seed: cfg.seed,
        interleaver: il.perm().to_vec(),
    })
}
