//! Goldreich-Levin search for heavy Fourier coefficients under query access.
//!
//! Inputs to a [`QueryFunction`] are packed into a `u128`: bit `i` holds
//! variable `x_{i+1}` with the usual 0 ↦ +1, 1 ↦ −1 convention, so at most
//! 128 variables are supported.
//!
//! The search walks coordinates `1..=n` in order. At depth `k` a bucket fixes
//! membership of the first `k` variables; its weight is the Fourier energy of
//! every set consistent with that prefix. Each surviving bucket splits on
//! variable `k + 1`, both children are estimated, and children whose estimate
//! reaches `γ²/2` survive.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boolfn::{parity, PseudoBooleanTable, SubsetMask};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, tags};

pub const MAX_VARIABLES: usize = 128;

/// Default sample count per bucket-weight estimate.
pub const DEFAULT_QUERIES: usize = 800;

/// Black-box `{±1}^n → {±1}`.
pub trait QueryEvaluator: Send + Sync {
    fn arity(&self) -> usize;
    fn evaluate(&self, x: u128) -> Result<f64>;
}

/// A ±1 table on `w` variables placed at variables `position+1 ..= position+w`
/// of an `n`-variable input.
#[derive(Clone, Debug)]
pub struct EmbeddedTable {
    n: usize,
    position: usize,
    table: PseudoBooleanTable,
}

impl EmbeddedTable {
    pub fn new(table: PseudoBooleanTable, n: usize, position: usize) -> Result<Self> {
        if n > MAX_VARIABLES {
            return Err(Error::InvalidArgument(format!("at most {MAX_VARIABLES} variables, got {n}")));
        }
        if position + table.arity() > n {
            return Err(Error::InvalidArgument(format!(
                "window {}..{} does not fit in {n} variables",
                position,
                position + table.arity()
            )));
        }
        if !table.is_boolean() {
            return Err(Error::InvalidArgument("query functions must be ±1-valued".into()));
        }
        Ok(Self { n, position, table })
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// A subset of the table's variables, moved to its place in the input.
    pub fn shift(&self, local: SubsetMask) -> SubsetMask {
        SubsetMask(local.0 << self.position)
    }
}

impl QueryEvaluator for EmbeddedTable {
    fn arity(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: u128) -> Result<f64> {
        let w = self.table.arity();
        let idx = (x >> self.position) & ((1u128 << w) - 1);
        Ok(self.table.eval(idx as usize))
    }
}

/// Closure-backed evaluator.
pub struct FnEvaluator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(u128) -> f64 + Send + Sync> FnEvaluator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(u128) -> f64 + Send + Sync> QueryEvaluator for FnEvaluator<F> {
    fn arity(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: u128) -> Result<f64> {
        Ok((self.f)(x))
    }
}

/// Evaluator backed by an external process.
///
/// Each query writes one line to the child's stdin holding the `n` inputs as
/// comma-separated `1`/`-1` values, `x_1` first, and reads one line holding
/// the output `1` or `-1`.
pub struct ProcessEvaluator {
    n: usize,
    io: Mutex<(Child, ChildStdin, BufReader<ChildStdout>)>,
}

impl ProcessEvaluator {
    pub fn spawn(n: usize, program: &str, args: &[String]) -> Result<Self> {
        if n > MAX_VARIABLES {
            return Err(Error::InvalidArgument(format!("at most {MAX_VARIABLES} variables, got {n}")));
        }
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Query(format!("spawn {program}: {e}")))?;
        let stdin = child.stdin.take().ok_or_else(|| Error::Query("no stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| Error::Query("no stdout".into()))?;
        Ok(Self { n, io: Mutex::new((child, stdin, BufReader::new(stdout))) })
    }

    /// Request line for input `x`.
    pub fn format_input(n: usize, x: u128) -> String {
        let vals: Vec<&str> = (0..n).map(|i| if x >> i & 1 == 1 { "-1" } else { "1" }).collect();
        vals.join(",")
    }

    pub fn parse_output(line: &str) -> Result<f64> {
        let v: f64 = line.trim().parse().map_err(|_| Error::Query(format!("unparseable reply {line:?}")))?;
        if v != 1.0 && v != -1.0 {
            return Err(Error::Query(format!("reply must be 1 or -1, got {v}")));
        }
        Ok(v)
    }
}

impl QueryEvaluator for ProcessEvaluator {
    fn arity(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: u128) -> Result<f64> {
        let mut guard = self.io.lock().map_err(|_| Error::Query("poisoned process handle".into()))?;
        let (_, stdin, stdout) = &mut *guard;
        writeln!(stdin, "{}", Self::format_input(self.n, x)).map_err(|e| Error::Query(e.to_string()))?;
        stdin.flush().map_err(|e| Error::Query(e.to_string()))?;
        let mut line = String::new();
        let read = stdout.read_line(&mut line).map_err(|e| Error::Query(e.to_string()))?;
        if read == 0 {
            return Err(Error::Query("process closed its output".into()));
        }
        Self::parse_output(&line)
    }
}

impl Drop for ProcessEvaluator {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.io.lock() {
            let _ = guard.0.kill();
            let _ = guard.0.wait();
        }
    }
}

/// Query access with an evaluation counter.
pub struct QueryFunction {
    evaluator: Box<dyn QueryEvaluator>,
    evaluations: AtomicU64,
}

impl QueryFunction {
    pub fn new(evaluator: impl QueryEvaluator + 'static) -> Self {
        Self { evaluator: Box::new(evaluator), evaluations: AtomicU64::new(0) }
    }

    pub fn arity(&self) -> usize {
        self.evaluator.arity()
    }

    /// Number of calls made to the underlying evaluator so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn evaluate(&self, x: u128) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.evaluator.evaluate(x)
    }

    fn input_mask(&self) -> u128 {
        low_mask(self.arity())
    }
}

#[inline]
fn low_mask(k: usize) -> u128 {
    if k >= 128 {
        u128::MAX
    } else {
        (1u128 << k) - 1
    }
}

/// A prefix pattern: membership of variables `1..=k` is fixed to `pattern`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bucket {
    pub k: usize,
    pub pattern: SubsetMask,
}

impl Bucket {
    pub fn root() -> Self {
        Self { k: 0, pattern: SubsetMask::EMPTY }
    }

    /// Children with variable `k + 1` outside and inside the set.
    pub fn split(self) -> [Bucket; 2] {
        let k = self.k + 1;
        [
            Bucket { k, pattern: self.pattern },
            Bucket { k, pattern: SubsetMask(self.pattern.0 | 1u128 << self.k) },
        ]
    }
}

/// Unbiased estimate of the bucket weight `Σ_{S ∩ [k] = a} f̂(S)²`, clamped
/// to `[0, 1]`.
///
/// Each of `queries` samples draws a suffix `z` on the free variables and two
/// prefixes `x`, `x'` on the fixed ones and averages
/// `f(x, z) f(x', z) χ_a(x) χ_a(x')`; every sample costs two evaluations.
pub fn estimate_bucket_weight<R: Rng + ?Sized>(
    f: &QueryFunction,
    bucket: Bucket,
    queries: usize,
    rng: &mut R,
) -> Result<f64> {
    if queries == 0 {
        return Err(Error::InvalidArgument("queries must be at least 1".into()));
    }
    let n = f.arity();
    if bucket.k > n {
        return Err(Error::InvalidArgument(format!("bucket depth {} exceeds arity {n}", bucket.k)));
    }
    let all = f.input_mask();
    let prefix = low_mask(bucket.k);
    let mut sum = 0.0;
    for _ in 0..queries {
        let z: u128 = rng.random::<u128>() & all & !prefix;
        let x: u128 = rng.random::<u128>() & prefix;
        let xp: u128 = rng.random::<u128>() & prefix;
        let a = f.evaluate(z | x)? * parity(bucket.pattern.0, x);
        let b = f.evaluate(z | xp)? * parity(bucket.pattern.0, xp);
        sum += a * b;
    }
    Ok((sum / queries as f64).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GLConfig {
    /// Coefficients with `|f̂(S)| ≥ gamma` are targeted.
    pub gamma: f64,
    /// Nominal failure probability; recorded but not used to size samples.
    pub delta: f64,
    pub queries_per_estimate: usize,
    pub rng_seed: u64,
    /// Upper bound on surviving buckets per depth; when exceeded, the
    /// heaviest estimates are kept. Defaults to `⌈4/γ²⌉`, the most buckets
    /// whose true weight can reach `γ²/4`.
    pub max_buckets: Option<usize>,
}

impl GLConfig {
    pub fn new(gamma: f64, queries_per_estimate: usize, rng_seed: u64) -> Self {
        Self { gamma, delta: 0.05, queries_per_estimate, rng_seed, max_buckets: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must be in (0, 1), got {}", self.delta)));
        }
        if self.queries_per_estimate == 0 {
            return Err(Error::InvalidArgument("queries_per_estimate must be at least 1".into()));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        self.gamma * self.gamma / 2.0
    }

    fn bucket_cap(&self) -> usize {
        self.max_buckets.unwrap_or_else(|| (4.0 / (self.gamma * self.gamma)).ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GLResult {
    /// Sets in ascending mask order with their final weight estimates.
    pub sets: Vec<(SubsetMask, f64)>,
    /// Samples drawn: `queries_per_estimate ×` number of estimates.
    pub total_queries: u64,
    /// Whether repeated runs agreed; set by [`gamma_search`].
    pub stable: bool,
}

impl GLResult {
    pub fn masks(&self) -> Vec<SubsetMask> {
        self.sets.iter().map(|s| s.0).collect()
    }
}

/// Runs the split-and-prune search.
pub fn goldreich_levin(f: &QueryFunction, cfg: &GLConfig) -> Result<GLResult> {
    cfg.validate()?;
    let n = f.arity();
    if n == 0 || n > MAX_VARIABLES {
        return Err(Error::InvalidArgument(format!("arity must be in 1..={MAX_VARIABLES}, got {n}")));
    }
    let threshold = cfg.threshold();
    let cap = cfg.bucket_cap();
    let mut live: Vec<(Bucket, f64)> = vec![(Bucket::root(), 1.0)];
    let mut estimates = 0u64;

    for depth in 1..=n {
        let children: Vec<Bucket> = live.iter().flat_map(|(b, _)| b.split()).collect();
        estimates += children.len() as u64;
        let weights: Vec<f64> = children
            .par_iter()
            .map(|c| {
                let p = c.pattern.0;
                let mut rng = stream(cfg.rng_seed, &[tags::GL, depth as u64, p as u64, (p >> 64) as u64]);
                estimate_bucket_weight(f, *c, cfg.queries_per_estimate, &mut rng)
            })
            .collect::<Result<_>>()?;
        live = children.into_iter().zip(weights).filter(|(_, w)| *w >= threshold).collect();
        if live.len() > cap {
            live.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            live.truncate(cap);
        }
        if live.is_empty() {
            break;
        }
    }

    let mut sets: Vec<(SubsetMask, f64)> = live.into_iter().map(|(b, w)| (b.pattern, w)).collect();
    sets.sort_by_key(|s| s.0);
    Ok(GLResult { sets, total_queries: estimates * cfg.queries_per_estimate as u64, stable: false })
}

/// Settings for [`gamma_search`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaSearchConfig {
    pub runs_per_gamma: usize,
    pub queries: usize,
    pub seed: u64,
    /// Candidates above one half, tried first; only a single dominant set
    /// is accepted there, since at most one coefficient can exceed 1/2.
    pub high_gammas: Vec<f64>,
    /// Smallest γ the bisection may try.
    pub floor: f64,
    /// Halvings of `(0, 1/2)` after the first stable γ has been found.
    pub bisection_steps: usize,
}

impl Default for GammaSearchConfig {
    fn default() -> Self {
        Self {
            runs_per_gamma: 5,
            queries: DEFAULT_QUERIES,
            seed: 0,
            high_gammas: vec![0.9, 0.75, 0.5],
            floor: 0.05,
            bisection_steps: 3,
        }
    }
}

/// Runs GL `runs` times at `gamma` with independent seeds; returns the
/// common result when every run produced the same non-empty list and every
/// re-estimated weight clears `γ²/2`.
pub fn stable_run(f: &QueryFunction, gamma: f64, runs: usize, queries: usize, seed: u64) -> Result<Option<GLResult>> {
    let gamma_seed = derive_seed(seed, &[gamma.to_bits()]);
    let results: Vec<GLResult> = (0..runs)
        .map(|r| goldreich_levin(f, &GLConfig::new(gamma, queries, derive_seed(gamma_seed, &[r as u64]))))
        .collect::<Result<_>>()?;
    let first = results[0].masks();
    if first.is_empty() || results.iter().any(|r| r.masks() != first) {
        return Ok(None);
    }
    let threshold = gamma * gamma / 2.0;
    let mut sets = Vec::with_capacity(first.len());
    let mut total = results.iter().map(|r| r.total_queries).sum::<u64>();
    for &m in &first {
        let mut rng = stream(gamma_seed, &[tags::EVAL, m.0 as u64, (m.0 >> 64) as u64]);
        let w = estimate_bucket_weight(f, Bucket { k: f.arity(), pattern: m }, queries, &mut rng)?;
        total += queries as u64;
        if w < threshold {
            return Ok(None);
        }
        sets.push((m, w));
    }
    Ok(Some(GLResult { sets, total_queries: total, stable: true }))
}

/// Chooses γ without prior knowledge: accept a single stable set at one of
/// the high candidates, otherwise bisect `(0, 1/2)` for the largest γ with
/// stable output.
pub fn gamma_search(f: &QueryFunction, cfg: &GammaSearchConfig) -> Result<(f64, GLResult)> {
    if cfg.runs_per_gamma < 2 {
        return Err(Error::InvalidArgument("runs_per_gamma must be at least 2".into()));
    }
    for &g in &cfg.high_gammas {
        if let Some(r) = stable_run(f, g, cfg.runs_per_gamma, cfg.queries, cfg.seed)? {
            if r.sets.len() == 1 {
                return Ok((g, r));
            }
        }
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    let mut best: Option<(f64, GLResult)> = None;
    let mut refinements = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid < cfg.floor {
            break;
        }
        match stable_run(f, mid, cfg.runs_per_gamma, cfg.queries, cfg.seed)? {
            Some(r) => {
                best = Some((mid, r));
                lo = mid;
            }
            None => hi = mid,
        }
        if best.is_some() {
            refinements += 1;
            if refinements >= cfg.bisection_steps {
                break;
            }
        }
    }
    best.ok_or(Error::NoStableThreshold { floor: cfg.floor })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub queries: usize,
    pub run: usize,
    pub gamma: f64,
    pub sets: Vec<(SubsetMask, f64)>,
}

/// Runs GL at every query budget in `query_grid`, `runs` times each.
pub fn query_convergence_sweep(
    f: &QueryFunction,
    gamma: f64,
    query_grid: &[usize],
    runs: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if query_grid.is_empty() {
        return Err(Error::InvalidArgument("query grid is empty".into()));
    }
    if query_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("query grid must be strictly ascending".into()));
    }
    let mut rows = Vec::new();
    for &q in query_grid {
        for run in 0..runs {
            let r = goldreich_levin(f, &GLConfig::new(gamma, q, derive_seed(seed, &[q as u64, run as u64])))?;
            rows.push(SweepRow { queries: q, run, gamma, sets: r.sets });
        }
    }
    Ok(rows)
}

/// CSV with columns `queries,run,gamma,set_mask,weight`, one line per
/// returned set; runs with an empty list get one line with empty mask and
/// weight.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("queries,run,gamma,set_mask,weight\n");
    for r in rows {
        if r.sets.is_empty() {
            s.push_str(&format!("{},{},{},,\n", r.queries, r.run, r.gamma));
        }
        for (m, w) in &r.sets {
            s.push_str(&format!("{},{},{},{},{}\n", r.queries, r.run, r.gamma, m.to_hex(), w));
        }
    }
    s
}
