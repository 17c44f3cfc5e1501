//! Encoder training against estimated conditional entropy.
//!
//! The loss of a batch is the mean BCE between the true bits and their
//! brute-force MAP posteriors, which estimates `(1/k) Σ_i H(U_i | Y)`. The
//! posterior is a softmax over all `2^k` codewords and every codeword symbol
//! is a table entry, so the gradient with respect to the tables is computed
//! in closed form. Each step draws a fresh interleaver and batch, takes an
//! optimizer step on the raw table entries, then projects back onto unit
//! power.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolfn::{energy_profile, wht_forward, FourierSpectrum, PseudoBooleanTable, SubsetMask};
use crate::channel::{snr_db_to_sigma, AwgnChannel};
use crate::codec::encoder::STREAMS;
use crate::codec::{
    analytic_power, constrain_power, CodebookLayout, Interleaver, TurboEncoderParams, BRUTE_FORCE_MAX_K,
    DEFAULT_ITERATIONS,
};
use crate::error::{Error, Result};
use crate::metrics::{bit_bce, evaluate_code, mean_and_std_error, Decoder, EPS};
use crate::rng::{derive_seed, stream, tags, Stream};

pub const DEFAULT_WINDOW: usize = 5;
pub const SNAPSHOT_EVERY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// I.i.d. standard normal entries.
    Normal,
    /// A random parity per stream, each containing the newest window bit.
    Parity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain stochastic gradient descent.
    Sgd,
    /// Adam with `β = (0.9, 0.999)` and `ε = 1e-8`.
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k_enc: usize,
    pub window: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub snr_db: f64,
    pub seed: u64,
    pub init: Init,
    pub optimizer: Optimizer,
    pub snapshot_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k_enc: 16,
            window: DEFAULT_WINDOW,
            steps: 500,
            batch_size: 64,
            learning_rate: 0.05,
            snr_db: 1.0,
            seed: 0,
            init: Init::Normal,
            optimizer: Optimizer::Adam,
            snapshot_every: SNAPSHOT_EVERY,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_enc > BRUTE_FORCE_MAX_K {
            return Err(Error::BlockTooLarge { k: self.k_enc, limit: BRUTE_FORCE_MAX_K });
        }
        if self.k_enc < self.window {
            return Err(Error::BlockTooShort { k: self.k_enc, window: self.window });
        }
        if self.window == 0 || self.window > 16 {
            return Err(Error::InvalidArgument(format!("window must be in 1..=16, got {}", self.window)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidArgument("snapshot interval must be at least 1".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidArgument("snr must be finite".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        snr_db_to_sigma(self.snr_db)
    }
}

pub fn init_encoder<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Result<TurboEncoderParams> {
    let w = cfg.window;
    let raw = match cfg.init {
        Init::Normal => {
            let mut t = || {
                PseudoBooleanTable::from_fn(w, |_| {
                    let g: f64 = StandardNormal.sample(rng);
                    g
                })
            };
            TurboEncoderParams::new([t()?, t()?, t()?])?
        }
        Init::Parity => {
            let top = 1usize << (w - 1);
            let mut t = || PseudoBooleanTable::parity(w, SubsetMask((top | rng.random_range(0..top)) as u128));
            TurboEncoderParams::new([t()?, t()?, t()?])?
        }
    };
    constrain_power(&raw, cfg.k_enc)
}

/// Inputs and unit-variance noise for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    /// Input blocks as integers; bit `i` is `u_i`.
    pub inputs: Vec<usize>,
    /// Standard normal noise, `3k` values per block, stream-major; scaled by
    /// `σ` when used.
    pub noise: Vec<Vec<f64>>,
}

impl Batch {
    pub fn sample<R: Rng + ?Sized>(k: usize, size: usize, rng: &mut R) -> Self {
        let mut inputs = Vec::with_capacity(size);
        let mut noise = Vec::with_capacity(size);
        for _ in 0..size {
            inputs.push(rng.random_range(0..1usize << k));
            noise.push((0..STREAMS * k).map(|_| StandardNormal.sample(rng)).collect());
        }
        Self { inputs, noise }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Loss of one block and its gradient contribution.
fn sample_loss_grad(
    layout: &CodebookLayout,
    codewords: &[f64],
    u: usize,
    noise: &[f64],
    sigma: f64,
    table_len: usize,
) -> (f64, Vec<f64>) {
    let k = layout.k();
    let n = STREAMS * k;
    let cu = &codewords[u * n..(u + 1) * n];
    let y: Vec<f64> = cu.iter().zip(noise).map(|(c, z)| c + sigma * z).collect();
    let inv_s2 = 1.0 / (sigma * sigma);

    let mut weights: Vec<f64> = codewords
        .chunks_exact(n)
        .map(|c| -0.5 * inv_s2 * c.iter().zip(&y).map(|(a, b)| (b - a) * (b - a)).sum::<f64>())
        .collect();
    let m = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for l in weights.iter_mut() {
        *l = (*l - m).exp();
        z += *l;
    }
    weights.iter_mut().for_each(|w| *w /= z);

    let mut p = vec![0.0; k];
    for (v, &w) in weights.iter().enumerate() {
        let mut bits = v;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            p[i] += w;
            bits &= bits - 1;
        }
    }

    // dℓ/dp_i, zero where the clamp is active
    let ln2 = std::f64::consts::LN_2;
    let mut loss = 0.0;
    let mut g = vec![0.0; k];
    for i in 0..k {
        let bit = (u >> i & 1) as u8;
        loss += bit_bce(bit, p[i]);
        if p[i] > EPS && p[i] < 1.0 - EPS {
            g[i] = if bit == 1 { -1.0 / (p[i] * ln2) } else { 1.0 / ((1.0 - p[i]) * ln2) } / k as f64;
        }
    }
    loss /= k as f64;

    // a_v = w_v Σ_i g_i (m_vi − p_i); dℓ = Σ_v a_v dE_v with
    // dE_v = −(1/σ²) Σ_j r_vj (dc_uj − dc_vj), r_v = y − c_v
    let gp: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
    let mut grad = vec![0.0; STREAMS * table_len];
    let mut r_sum = vec![0.0; n];
    for (v, (&w, c)) in weights.iter().zip(codewords.chunks_exact(n)).enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut gm = 0.0;
        let mut bits = v;
        while bits != 0 {
            gm += g[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        let a = w * (gm - gp);
        if a == 0.0 {
            continue;
        }
        let row = layout.row(v);
        for j in 0..n {
            let r = y[j] - c[j];
            r_sum[j] += a * r;
            grad[(j / k) * table_len + row[j] as usize] += a * r * inv_s2;
        }
    }
    let row_u = layout.row(u);
    for j in 0..n {
        grad[(j / k) * table_len + row_u[j] as usize] -= r_sum[j] * inv_s2;
    }
    (loss, grad)
}

/// Batch-mean BCE under brute-force posteriors, its standard error, and the
/// exact gradient with respect to the `3·2^w` table entries (stream-major).
pub fn entropy_loss_and_gradient(
    params: &TurboEncoderParams,
    interleaver: &Interleaver,
    batch: &Batch,
    sigma: f64,
) -> Result<(f64, f64, Vec<f64>)> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let k = interleaver.len();
    if batch.noise.iter().any(|z| z.len() != STREAMS * k) || batch.inputs.iter().any(|&u| u >> k != 0) {
        return Err(Error::InvalidArgument("batch does not match block length".into()));
    }
    let layout = CodebookLayout::new(k, params.window(), interleaver)?;
    let codewords = layout.codewords(params);
    let table_len = 1usize << params.window();
    let per_sample: Vec<(f64, Vec<f64>)> = batch
        .inputs
        .par_iter()
        .zip(&batch.noise)
        .map(|(&u, z)| sample_loss_grad(&layout, &codewords, u, z, sigma, table_len))
        .collect();
    let b = batch.len() as f64;
    let losses: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
    let (loss, se) = mean_and_std_error(&losses);
    let mut grad = vec![0.0; STREAMS * table_len];
    for (_, g) in &per_sample {
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|v| *v /= b);
    if let Some(i) = grad.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok((loss, se, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Batch estimate of the conditional entropy before the update.
    pub entropy: f64,
    pub std_error: f64,
    pub grad_norm: f64,
    /// `|analytic_power − 1|` after projection.
    pub power_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub step: usize,
    pub spectra: [FourierSpectrum; STREAMS],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainTrace {
    pub config: TrainConfig,
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    /// Set when training stopped early on a non-finite loss or gradient.
    pub aborted: Option<String>,
}

impl TrainTrace {
    pub fn steps_to_csv(&self) -> String {
        let mut s = String::from("step,entropy,std_error,grad_norm,power_residual\n");
        for r in &self.steps {
            s.push_str(&format!("{},{},{},{},{}\n", r.step, r.entropy, r.std_error, r.grad_norm, r.power_residual));
        }
        s
    }
}

/// Update rule state across steps.
struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPSILON: f64 = 1e-8;

    fn new(kind: Optimizer, lr: f64, n: usize) -> Self {
        Self { kind, lr, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, x: &[f64], g: &[f64]) -> Vec<f64> {
        match self.kind {
            Optimizer::Sgd => x.iter().zip(g).map(|(p, d)| p - self.lr * d).collect(),
            Optimizer::Adam => {
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                x.iter()
                    .zip(g)
                    .enumerate()
                    .map(|(i, (p, d))| {
                        self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * d;
                        self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * d * d;
                        p - self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPSILON)
                    })
                    .collect()
            }
        }
    }
}

fn snapshot(step: usize, params: &TurboEncoderParams) -> Snapshot {
    let t = params.tables();
    Snapshot { step, spectra: [wht_forward(&t[0]), wht_forward(&t[1]), wht_forward(&t[2])] }
}

/// Runs `cfg.steps` projected gradient steps from [`init_encoder`].
///
/// Step `t` draws its interleaver and batch from stream `(seed, STEP, t)`.
/// A non-finite loss or gradient stops training; the returned parameters
/// are then the last finite ones and `trace.aborted` says why.
pub fn train_encoder(cfg: &TrainConfig) -> Result<(TurboEncoderParams, TrainTrace)> {
    cfg.validate()?;
    let sigma = cfg.sigma();
    let mut params = init_encoder(cfg, &mut stream(cfg.seed, &[tags::INIT]))?;
    let mut trace = TrainTrace { config: cfg.clone(), steps: Vec::new(), snapshots: vec![snapshot(0, &params)], aborted: None };
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate, STREAMS << cfg.window);

    for t in 0..cfg.steps {
        let mut rng: Stream = stream(cfg.seed, &[tags::STEP, t as u64]);
        let il = Interleaver::random(cfg.k_enc, &mut rng);
        let batch = Batch::sample(cfg.k_enc, cfg.batch_size, &mut rng);
        let (loss, se, grad) = match entropy_loss_and_gradient(&params, &il, &batch, sigma) {
            Ok(v) if v.0.is_finite() => v,
            Ok(v) => {
                trace.aborted = Some(format!("non-finite loss {} at step {t}", v.0));
                break;
            }
            Err(e) => {
                trace.aborted = Some(format!("step {t}: {e}"));
                break;
            }
        };
        let entries = opt.step(&params.flat_entries(), &grad);
        let stepped = TurboEncoderParams::from_flat_entries(cfg.window, &entries)?;
        params = match constrain_power(&stepped, cfg.k_enc) {
            Ok(p) => p,
            Err(e) => {
                trace.aborted = Some(format!("step {t}: {e}"));
                break;
            }
        };
        trace.steps.push(StepRecord {
            step: t,
            entropy: loss,
            std_error: se,
            grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
            power_residual: (analytic_power(&params, cfg.k_enc) - 1.0).abs(),
        });
        let done = t + 1;
        if done % cfg.snapshot_every == 0 || done == cfg.steps {
            trace.snapshots.push(snapshot(done, &params));
        }
    }
    Ok((params, trace))
}

/// Long-format CSV `step,stream,subset_mask,coefficient`: every coefficient
/// of every stream at every snapshot. Streams are numbered from 1; masks are
/// table indices.
pub fn fc_evolution_export(trace: &TrainTrace) -> Result<String> {
    if trace.snapshots.len() < 2 {
        return Err(Error::InvalidArgument("need at least two snapshots".into()));
    }
    let mut s = String::from("step,stream,subset_mask,coefficient\n");
    for snap in &trace.snapshots {
        for (b, spec) in snap.spectra.iter().enumerate() {
            for (m, c) in spec.coeffs().iter().enumerate() {
                s.push_str(&format!("{},{},{},{}\n", snap.step, b + 1, m, c));
            }
        }
    }
    Ok(s)
}

/// Number of coefficients carrying `fraction` of each stream's energy.
pub fn concentration(params: &TurboEncoderParams, fraction: f64) -> Result<[usize; STREAMS]> {
    let t = params.tables();
    let f = |i: usize| energy_profile(&wht_forward(&t[i]), fraction).map(|v| v.len());
    Ok([f(0)?, f(1)?, f(2)?])
}

/// Conditional-entropy estimate with a fresh random interleaver per block,
/// the distribution the encoder is trained under.
pub fn entropy_estimate(params: &TurboEncoderParams, k: usize, snr_db: f64, blocks: usize, seed: u64) -> Result<(f64, f64)> {
    if blocks == 0 {
        return Err(Error::InvalidArgument("blocks must be at least 1".into()));
    }
    let sigma = snr_db_to_sigma(snr_db);
    let losses: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, &[tags::EVAL, j as u64]);
            let il = Interleaver::random(k, &mut rng);
            let batch = Batch::sample(k, 1, &mut rng);
            let layout = CodebookLayout::new(k, params.window(), &il)?;
            let cw = layout.codewords(params);
            Ok(sample_loss_grad(&layout, &cw, batch.inputs[0], &batch.noise[0], sigma, 1 << params.window()).0)
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_std_error(&losses))
}

/// Standard normal upper tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub snr_db: f64,
    pub ber: f64,
    pub ber_std_error: f64,
    pub bce: f64,
    pub bce_std_error: f64,
    /// Uncoded BPSK bit error rate `Q(1/σ)` at the same noise level.
    pub uncoded_ber: f64,
    pub blocks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub interleaver: Vec<usize>,
    pub power: f64,
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,ber,ber_std_error,bce,bce_std_error,uncoded_ber,blocks\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.snr_db, r.ber, r.ber_std_error, r.bce, r.bce_std_error, r.uncoded_ber, r.blocks
            ));
        }
        s
    }
}

/// Re-projects `params` to unit power at `k_eval`, fixes a seeded
/// interleaver and sweeps the SNR grid with the turbo decoder.
pub fn evaluate_trained(
    params: &TurboEncoderParams,
    k_eval: usize,
    snr_grid: &[f64],
    blocks: usize,
    seed: u64,
) -> Result<EvalReport> {
    if k_eval < params.window() {
        return Err(Error::BlockTooShort { k: k_eval, window: params.window() });
    }
    let p = constrain_power(params, k_eval)?;
    let il = Interleaver::random(k_eval, &mut stream(seed, &[tags::INTERLEAVER]));
    let noise_seed = derive_seed(seed, &[tags::EVAL]);
    let mut rows = Vec::with_capacity(snr_grid.len());
    for &snr in snr_grid {
        let ch = AwgnChannel::from_snr_db(snr)?;
        let r = evaluate_code(&p, &il, &ch, blocks, noise_seed, Decoder::Turbo(DEFAULT_ITERATIONS))?;
        rows.push(EvalRow {
            snr_db: snr,
            ber: r.ber,
            ber_std_error: r.ber_std_error,
            bce: r.bce,
            bce_std_error: r.std_error,
            uncoded_ber: q_function(1.0 / ch.sigma()),
            blocks,
        });
    }
    Ok(EvalReport { k: k_eval, interleaver: il.perm().to_vec(), power: analytic_power(&p, k_eval), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_difference(params: &TurboEncoderParams, il: &Interleaver, batch: &Batch, sigma: f64, h: f64) -> Vec<f64> {
        let base = params.flat_entries();
        (0..base.len())
            .map(|e| {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[e] += h;
                minus[e] -= h;
                let lp = TurboEncoderParams::from_flat_entries(params.window(), &plus).unwrap();
                let lm = TurboEncoderParams::from_flat_entries(params.window(), &minus).unwrap();
                let fp = entropy_loss_and_gradient(&lp, il, batch, sigma).unwrap().0;
                let fm = entropy_loss_and_gradient(&lm, il, batch, sigma).unwrap().0;
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = TrainConfig { k_enc: 6, window: 3, ..Default::default() };
        let mut rng = stream(21, &[]);
        let params = init_encoder(&cfg, &mut rng).unwrap();
        let il = Interleaver::random(6, &mut rng);
        let batch = Batch::sample(6, 4, &mut rng);
        let (_, _, g) = entropy_loss_and_gradient(&params, &il, &batch, 0.8).unwrap();
        let fd = finite_difference(&params, &il, &batch, 0.8, 1e-5);
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-4 * scale.max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_encoder_is_uninformative() {
        let z = PseudoBooleanTable::constant(3, 0.0).unwrap();
        let p = TurboEncoderParams::new([z.clone(), z.clone(), z]).unwrap();
        let mut rng = stream(2, &[]);
        let il = Interleaver::random(5, &mut rng);
        let batch = Batch::sample(5, 8, &mut rng);
        let (loss, _, g) = entropy_loss_and_gradient(&p, &il, &batch, 1.0).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
        assert!(g.iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn joint_scaling_invariance() {
        let cfg = TrainConfig { k_enc: 6, window: 3, ..Default::default() };
        let mut rng = stream(4, &[]);
        let p = init_encoder(&cfg, &mut rng).unwrap();
        let il = Interleaver::random(6, &mut rng);
        let batch = Batch::sample(6, 6, &mut rng);
        let a = entropy_loss_and_gradient(&p, &il, &batch, 0.7).unwrap().0;
        let b = entropy_loss_and_gradient(&p.map_entries(|v| 2.0 * v).unwrap(), &il, &batch, 1.4).unwrap().0;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn inits() {
        let cfg = TrainConfig { init: Init::Parity, k_enc: 10, ..Default::default() };
        let p = init_encoder(&cfg, &mut stream(1, &[])).unwrap();
        for t in p.tables() {
            let supp = wht_forward(t).support(1e-12);
            assert_eq!(supp.len(), 1);
            assert!((supp[0].1.abs() - 1.0).abs() < 1e-12);
            assert!(supp[0].0.contains(5));
        }
        let cfg = TrainConfig { k_enc: 10, ..Default::default() };
        let a = init_encoder(&cfg, &mut stream(1, &[])).unwrap();
        assert_eq!(a, init_encoder(&cfg, &mut stream(1, &[])).unwrap());
        assert!((analytic_power(&a, 10) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn short_training_run() {
        let cfg = TrainConfig { k_enc: 6, window: 3, steps: 12, batch_size: 8, seed: 3, ..Default::default() };
        let (p, trace) = train_encoder(&cfg).unwrap();
        assert!(trace.aborted.is_none());
        assert_eq!(trace.steps.len(), 12);
        assert!(trace.steps.iter().all(|r| r.power_residual <= 1e-9));
        assert_eq!(trace.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 10, 12]);
        let csv = fc_evolution_export(&trace).unwrap();
        assert_eq!(csv.lines().count(), 1 + 3 * 3 * 8);
        let (p2, trace2) = train_encoder(&cfg).unwrap();
        assert_eq!((p, trace), (p2, trace2));
    }

    #[test]
    fn config_guards() {
        assert!(TrainConfig { k_enc: 21, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { k_enc: 4, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(1.0) - 0.15865525393145707).abs() < 1e-12);
    }
}
