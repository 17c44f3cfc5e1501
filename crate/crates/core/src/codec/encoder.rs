use serde::{Deserialize, Serialize};

use super::interleaver::Interleaver;
use crate::boolfn::{wht_inverse, FourierSpectrum, PseudoBooleanTable};
use crate::error::{Error, Result};

/// Number of output streams; the code has rate 1/3.
pub const STREAMS: usize = 3;

/// Largest supported encoder window.
pub const MAX_WINDOW: usize = 12;

/// Rate-1/3 non-recursive Turbo encoder given by three window tables.
///
/// At position `i` each table sees the window `u_{i-w+1..=i}` packed into a
/// table index with the oldest bit in bit 0 and the newest in bit `w-1`, so
/// variable `x_w` is the current input. Bits before the start of the block
/// are zero. Streams 1 and 2 read the input, stream 3 its interleaved copy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct TurboEncoderParams {
    window: usize,
    tables: [PseudoBooleanTable; STREAMS],
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    window: usize,
    tables: Vec<Vec<f64>>,
}

impl TryFrom<ParamsRepr> for TurboEncoderParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        if r.tables.len() != STREAMS {
            return Err(Error::InvalidArgument(format!("expected {STREAMS} tables, got {}", r.tables.len())));
        }
        let mut it = r.tables.into_iter().map(|v| PseudoBooleanTable::new(r.window, v));
        let tables = [it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?];
        Self::new(tables)
    }
}

impl From<TurboEncoderParams> for ParamsRepr {
    fn from(p: TurboEncoderParams) -> Self {
        ParamsRepr { window: p.window, tables: p.tables.into_iter().map(|t| t.into_values()).collect() }
    }
}

/// The three real-valued output streams of one block.
#[derive(Clone, Debug, PartialEq)]
pub struct Codeword {
    pub streams: [Vec<f64>; STREAMS],
}

impl Codeword {
    pub fn len(&self) -> usize {
        self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Streams concatenated in order 1, 2, 3.
    pub fn flatten(&self) -> Vec<f64> {
        self.streams.concat()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % STREAMS != 0 {
            return Err(Error::InvalidArgument(format!("flat codeword length {} not divisible by 3", flat.len())));
        }
        let k = flat.len() / STREAMS;
        Ok(Self { streams: [flat[..k].to_vec(), flat[k..2 * k].to_vec(), flat[2 * k..].to_vec()] })
    }
}

impl TurboEncoderParams {
    pub fn new(tables: [PseudoBooleanTable; STREAMS]) -> Result<Self> {
        let window = tables[0].arity();
        if tables.iter().any(|t| t.arity() != window) {
            return Err(Error::InvalidArgument("all tables must share one arity".into()));
        }
        if window > MAX_WINDOW {
            return Err(Error::InvalidArgument(format!("window {window} exceeds {MAX_WINDOW}")));
        }
        Ok(Self { window, tables })
    }

    /// Encoder whose tables are the inverse transforms of three spectra.
    pub fn from_spectra(spectra: &[FourierSpectrum; STREAMS]) -> Result<Self> {
        Self::new([wht_inverse(&spectra[0]), wht_inverse(&spectra[1]), wht_inverse(&spectra[2])])
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn tables(&self) -> &[PseudoBooleanTable; STREAMS] {
        &self.tables
    }

    pub fn table(&self, stream: usize) -> &PseudoBooleanTable {
        &self.tables[stream]
    }

    /// Table entries as one flat vector, stream-major.
    pub fn flat_entries(&self) -> Vec<f64> {
        self.tables.iter().flat_map(|t| t.values().iter().copied()).collect()
    }

    pub fn from_flat_entries(window: usize, entries: &[f64]) -> Result<Self> {
        let n = 1usize << window;
        if entries.len() != STREAMS * n {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", STREAMS * n, entries.len())));
        }
        Self::new([
            PseudoBooleanTable::new(window, entries[..n].to_vec())?,
            PseudoBooleanTable::new(window, entries[n..2 * n].to_vec())?,
            PseudoBooleanTable::new(window, entries[2 * n..].to_vec())?,
        ])
    }

    /// Applies `f` to every table entry.
    pub fn map_entries(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let w = self.window;
        let t = |s: usize| PseudoBooleanTable::new(w, self.tables[s].values().iter().map(|&v| f(v)).collect());
        Self::new([t(0)?, t(1)?, t(2)?])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Table indices seen at every position of a bit sequence.
pub fn window_indices(bits: &[u8], window: usize) -> impl Iterator<Item = usize> + '_ {
    let top = window - 1;
    bits.iter().scan(0usize, move |reg, &b| {
        *reg = (*reg >> 1) | (((b & 1) as usize) << top);
        Some(*reg)
    })
}

fn check_block(params: &TurboEncoderParams, bits: &[u8], interleaver: &Interleaver) -> Result<()> {
    let k = bits.len();
    if k < params.window {
        return Err(Error::BlockTooShort { k, window: params.window });
    }
    if interleaver.len() != k {
        return Err(Error::InvalidArgument(format!("interleaver length {} != block length {k}", interleaver.len())));
    }
    Ok(())
}

pub fn encode(params: &TurboEncoderParams, input_bits: &[u8], interleaver: &Interleaver) -> Result<Codeword> {
    check_block(params, input_bits, interleaver)?;
    let w = params.window;
    let s1: Vec<f64> = window_indices(input_bits, w).map(|x| params.tables[0].eval(x)).collect();
    let s2: Vec<f64> = window_indices(input_bits, w).map(|x| params.tables[1].eval(x)).collect();
    let permuted = interleaver.interleave(input_bits);
    let s3: Vec<f64> = window_indices(&permuted, w).map(|x| params.tables[2].eval(x)).collect();
    Ok(Codeword { streams: [s1, s2, s3] })
}

/// `Σ_{i=1..k} E[g(h(window_i))]` for uniform inputs with zero padding.
///
/// Boundary position `i < w` sees its lowest `w - i` window bits fixed to
/// zero; every later position sees a uniform window.
fn positional_sum(table: &PseudoBooleanTable, k: usize, g: impl Fn(f64) -> f64) -> f64 {
    let w = table.arity();
    let full = table.values().iter().map(|&v| g(v)).sum::<f64>() / table.values().len() as f64;
    let mut total = 0.0;
    for i in 1..w.min(k + 1) {
        let pad = w - i;
        let stride = 1usize << pad;
        let (sum, n) = (0..table.values().len())
            .step_by(stride)
            .fold((0.0, 0usize), |(s, n), x| (s + g(table.eval(x)), n + 1));
        total += sum / n as f64;
    }
    total + full * k.saturating_sub(w - 1) as f64
}

/// Expected average per-symbol squared output over uniform inputs at block
/// length `k`, boundary terms included.
pub fn analytic_power(params: &TurboEncoderParams, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let sum: f64 = params.tables.iter().map(|t| positional_sum(t, k, |v| v * v)).sum();
    sum / (STREAMS * k) as f64
}

/// Expected average per-symbol output; the translation minimizing the
/// rescaling needed to reach unit power.
pub fn optimal_center(params: &TurboEncoderParams, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let sum: f64 = params.tables.iter().map(|t| positional_sum(t, k, |v| v)).sum();
    sum / (STREAMS * k) as f64
}

/// Centers the tables at [`optimal_center`] and rescales to unit
/// [`analytic_power`] at block length `k`.
pub fn constrain_power(params: &TurboEncoderParams, k: usize) -> Result<TurboEncoderParams> {
    let c = optimal_center(params, k);
    let centered = params.map_entries(|v| v - c)?;
    let p = analytic_power(&centered, k);
    let scale_ref = params.flat_entries().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(p > 1e-24 * scale_ref.max(1.0).powi(2)) {
        return Err(Error::ZeroVariance);
    }
    let s = p.sqrt();
    centered.map_entries(|v| v / s)
}
