//! Functions on the ±1 hypercube and their Fourier expansions.
//!
//! # Sign convention
//!
//! This is the single place where 𝔽₂ bits meet ±1 values. A table index
//! `x` encodes an assignment with bit `i` holding variable `x_{i+1}`; bit
//! value `0` maps to `x_{i+1} = +1` and bit value `1` maps to `-1`. A subset
//! `S` is a bitmask over the same positions, and the parity
//! `χ_S(x) = ∏_{i∈S} x_i` evaluates to `(-1)^{popcount(S & x)}`. Boolean
//! expressions written with XOR become ±1 functions through `b ↦ (-1)^b`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest arity accepted for dense tables.
pub const MAX_ARITY: usize = 26;

/// A subset of variables, bit `i` set iff `x_{i+1}` belongs to the set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubsetMask(pub u128);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// Builds a mask from 1-based variable indices.
    pub fn from_vars(vars: &[usize]) -> Self {
        SubsetMask(vars.iter().fold(0u128, |m, &v| {
            assert!((1..=128).contains(&v), "variable index {v} out of range");
            m | (1u128 << (v - 1))
        }))
    }

    /// 1-based variable indices in ascending order.
    pub fn vars(self) -> Vec<usize> {
        (0..128).filter(|&i| self.0 >> i & 1 == 1).map(|i| i + 1).collect()
    }

    pub fn contains(self, var: usize) -> bool {
        var >= 1 && var <= 128 && self.0 >> (var - 1) & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Dense array index of the mask.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.0)
    }
}

impl std::fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let vars: Vec<String> = self.vars().iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", vars.join(","))
    }
}

/// ±1 value of bit `b` (0 ↦ +1, 1 ↦ −1).
#[inline]
pub fn sign_of_bit(b: u8) -> f64 {
    if b & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `χ_S(x)` for an assignment index and subset mask.
#[inline]
pub fn parity(subset: u128, x: u128) -> f64 {
    if (subset & x).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    arity: usize,
    values: Vec<f64>,
}

fn validate(arity: usize, values: &[f64]) -> Result<()> {
    if arity == 0 || arity > MAX_ARITY {
        return Err(Error::InvalidArgument(format!(
            "arity must be in 1..={MAX_ARITY}, got {arity}"
        )));
    }
    if values.len() != 1usize << arity {
        return Err(Error::LengthMismatch { arity, len: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// A function `{±1}^w → ℝ` stored as its `2^w` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseRepr", into = "DenseRepr")]
pub struct PseudoBooleanTable {
    arity: usize,
    values: Vec<f64>,
}

impl TryFrom<DenseRepr> for PseudoBooleanTable {
    type Error = Error;
    fn try_from(r: DenseRepr) -> Result<Self> {
        Self::new(r.arity, r.values)
    }
}

impl From<PseudoBooleanTable> for DenseRepr {
    fn from(t: PseudoBooleanTable) -> Self {
        DenseRepr { arity: t.arity, values: t.values }
    }
}

impl PseudoBooleanTable {
    pub fn new(arity: usize, values: Vec<f64>) -> Result<Self> {
        validate(arity, &values)?;
        Ok(Self { arity, values })
    }

    /// Tabulates `f` over all assignment indices.
    pub fn from_fn(arity: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        if arity == 0 || arity > MAX_ARITY {
            return Err(Error::InvalidArgument(format!("arity {arity} out of range")));
        }
        Self::new(arity, (0..1usize << arity).map(f).collect())
    }

    /// ±1 table of a Boolean function given on 𝔽₂ assignments.
    pub fn from_boolean(arity: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        Self::from_fn(arity, |x| if f(x) { -1.0 } else { 1.0 })
    }

    /// The parity `χ_S` as a table.
    pub fn parity(arity: usize, subset: SubsetMask) -> Result<Self> {
        if subset.0 >> arity != 0 {
            return Err(Error::InvalidArgument(format!("mask {subset} exceeds arity {arity}")));
        }
        Self::from_fn(arity, |x| parity(subset.0, x as u128))
    }

    pub fn constant(arity: usize, c: f64) -> Result<Self> {
        Self::from_fn(arity, |_| c)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn eval(&self, x: usize) -> f64 {
        self.values[x]
    }

    /// Mean of the squared values, `E_x[f(x)^2]`.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub fn is_boolean(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }
}

/// Fourier coefficients indexed by subset mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseRepr", into = "DenseRepr")]
pub struct FourierSpectrum {
    arity: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<DenseRepr> for FourierSpectrum {
    type Error = Error;
    fn try_from(r: DenseRepr) -> Result<Self> {
        Self::new(r.arity, r.values)
    }
}

impl From<FourierSpectrum> for DenseRepr {
    fn from(s: FourierSpectrum) -> Self {
        DenseRepr { arity: s.arity, values: s.coeffs }
    }
}

impl FourierSpectrum {
    pub fn new(arity: usize, coeffs: Vec<f64>) -> Result<Self> {
        validate(arity, &coeffs)?;
        Ok(Self { arity, coeffs })
    }

    pub fn zeros(arity: usize) -> Result<Self> {
        Self::new(arity, vec![0.0; 1usize.checked_shl(arity as u32).unwrap_or(0)])
    }

    /// Spectrum with a single coefficient of value `value` at `subset`.
    pub fn single(arity: usize, subset: SubsetMask, value: f64) -> Result<Self> {
        let mut s = Self::zeros(arity)?;
        if subset.index() >= s.coeffs.len() {
            return Err(Error::InvalidArgument(format!("mask {subset} exceeds arity {arity}")));
        }
        s.coeffs[subset.index()] = value;
        Ok(s)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, subset: SubsetMask) -> f64 {
        self.coeffs[subset.index()]
    }

    /// `Σ_S f̂(S)^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Nonzero coefficients (|c| > `tol`) in ascending mask order.
    pub fn support(&self, tol: f64) -> Vec<(SubsetMask, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(s, &c)| (SubsetMask(s as u128), c))
            .collect()
    }

    /// Rescales to unit 2-norm; `None` when the spectrum is (numerically) zero.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n < 1e-12 {
            return None;
        }
        Some(Self { arity: self.arity, coeffs: self.coeffs.iter().map(|c| c / n).collect() })
    }

    /// `a·self + b·other`, coefficientwise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.arity != other.arity {
            return Err(Error::InvalidArgument("arity mismatch".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.arity, coeffs)
    }
}

/// Unnormalized in-place fast Walsh-Hadamard butterfly.
fn fwht_in_place(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// `f̂(S) = 2^{-w} Σ_x f(x) χ_S(x)`.
pub fn wht_forward(table: &PseudoBooleanTable) -> FourierSpectrum {
    let mut coeffs = table.values.clone();
    fwht_in_place(&mut coeffs);
    let scale = 1.0 / coeffs.len() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    FourierSpectrum { arity: table.arity, coeffs }
}

/// `f(x) = Σ_S f̂(S) χ_S(x)`.
pub fn wht_inverse(spec: &FourierSpectrum) -> PseudoBooleanTable {
    let mut values = spec.coeffs.clone();
    fwht_in_place(&mut values);
    PseudoBooleanTable { arity: spec.arity, values }
}

/// Smallest set of largest-weight coefficients holding at least
/// `threshold_fraction` of the total energy, as `(mask, f̂(S)^2)` pairs.
///
/// Sorted by descending weight, ties by ascending mask.
pub fn energy_profile(spec: &FourierSpectrum, threshold_fraction: f64) -> Result<Vec<(SubsetMask, f64)>> {
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold fraction must be in (0, 1], got {threshold_fraction}"
        )));
    }
    let total = spec.energy();
    if total <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let mut weights: Vec<(SubsetMask, f64)> = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(s, c)| (SubsetMask(s as u128), c * c))
        .collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let target = threshold_fraction * total;
    // Relative slack so that e.g. sixteen weights of 1/16 reach a 100% target.
    let slack = 1e-12 * total;
    let mut acc = 0.0;
    let mut out = Vec::new();
    for (mask, w) in weights {
        acc += w;
        out.push((mask, w));
        if acc + slack >= target {
            break;
        }
    }
    Ok(out)
}

/// Fixture tables on five variables, in table order (`u_1` is variable 1).
pub mod fixtures {
    use super::*;

    #[inline]
    fn u(x: usize, i: usize) -> bool {
        x >> (i - 1) & 1 == 1
    }

    /// Exact Block 1 expression:
    /// `1 ⊕ u1 ⊕ ū2 ⊕ u3 ⊕ ū4 ⊕ u5 ⊕ ū2·u3·ū4 ⊕ u1·ū2·u3·ū4·u5`.
    pub fn block1_exact() -> PseudoBooleanTable {
        PseudoBooleanTable::from_boolean(5, |x| {
            let (u1, u2, u3, u4, u5) = (u(x, 1), u(x, 2), u(x, 3), u(x, 4), u(x, 5));
            true ^ u1 ^ !u2 ^ u3 ^ !u4 ^ u5 ^ (!u2 & u3 & !u4) ^ (u1 & !u2 & u3 & !u4 & u5)
        })
        .expect("static fixture")
    }

    /// Block 2: `u1 ⊕ u3 ⊕ u4 ⊕ u5` (exact and affine coincide).
    pub fn block2() -> PseudoBooleanTable {
        PseudoBooleanTable::from_boolean(5, |x| u(x, 1) ^ u(x, 3) ^ u(x, 4) ^ u(x, 5)).expect("static fixture")
    }

    /// Exact Block 3 expression: `u1 ⊕ u2 ⊕ u4 ⊕ ū3·ū5`.
    pub fn block3_exact() -> PseudoBooleanTable {
        PseudoBooleanTable::from_boolean(5, |x| u(x, 1) ^ u(x, 2) ^ u(x, 4) ^ (!u(x, 3) & !u(x, 5)))
            .expect("static fixture")
    }

    /// Best affine approximation of Block 1: `1 ⊕ u1 ⊕ … ⊕ u5`.
    pub fn block1_affine() -> PseudoBooleanTable {
        PseudoBooleanTable::from_boolean(5, |x| true ^ ((x as u32).count_ones() % 2 == 1)).expect("static fixture")
    }

    /// The four equally good affine approximations of Block 3 as
    /// `(complemented, support)`; `complemented` means a leading `1 ⊕`.
    pub fn block3_affine_solutions() -> [(bool, SubsetMask); 4] {
        [
            (false, SubsetMask::from_vars(&[1, 2, 4])),
            (true, SubsetMask::from_vars(&[1, 2, 3, 4])),
            (true, SubsetMask::from_vars(&[1, 2, 4, 5])),
            (true, SubsetMask::from_vars(&[1, 2, 3, 4, 5])),
        ]
    }

    pub fn block3_affine(solution: usize) -> PseudoBooleanTable {
        let (neg, mask) = block3_affine_solutions()[solution];
        let sign = if neg { -1.0 } else { 1.0 };
        PseudoBooleanTable::from_fn(5, |x| sign * parity(mask.0, x as u128)).expect("static fixture")
    }

    /// Bent function `x1·x2 ⊕ x3·x4` on four variables.
    pub fn bent4() -> PseudoBooleanTable {
        PseudoBooleanTable::from_boolean(4, |x| (u(x, 1) & u(x, 2)) ^ (u(x, 3) & u(x, 4))).expect("static fixture")
    }

    /// All fixtures by name.
    pub fn all() -> BTreeMap<&'static str, PseudoBooleanTable> {
        let mut m = BTreeMap::new();
        m.insert("block1", block1_exact());
        m.insert("block2", block2());
        m.insert("block3", block3_exact());
        m.insert("block1_affine", block1_affine());
        m.insert("block2_affine", block2());
        for i in 0..4 {
            let name: &'static str = ["block3_affine1", "block3_affine2", "block3_affine3", "block3_affine4"][i];
            m.insert(name, block3_affine(i));
        }
        m.insert("bent4", bent4());
        m
    }

    pub fn by_name(name: &str) -> Option<PseudoBooleanTable> {
        all().remove(name)
    }
}

/// Named expression fixtures.
pub fn boolean_from_expression_fixtures() -> BTreeMap<&'static str, PseudoBooleanTable> {
    fixtures::all()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(4^w) definition used as an oracle.
    fn naive_forward(t: &PseudoBooleanTable) -> Vec<f64> {
        let n = t.values().len();
        (0..n)
            .map(|s| (0..n).map(|x| t.eval(x) * parity(s as u128, x as u128)).sum::<f64>() / n as f64)
            .collect()
    }

    #[test]
    fn constant_has_only_empty_coefficient() {
        let s = wht_forward(&PseudoBooleanTable::constant(3, 1.0).unwrap());
        assert_eq!(s.coeff(SubsetMask::EMPTY), 1.0);
        assert!(s.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn parity_is_its_own_spectrum() {
        let m = SubsetMask::from_vars(&[1, 2]);
        let s = wht_forward(&PseudoBooleanTable::parity(2, m).unwrap());
        assert_eq!(s.support(0.0), vec![(m, 1.0)]);
    }

    #[test]
    fn majority_spectrum() {
        let maj = PseudoBooleanTable::from_fn(3, |x| {
            let s: f64 = (0..3).map(|i| sign_of_bit((x >> i) as u8)).sum();
            s.signum()
        })
        .unwrap();
        let oracle = naive_forward(&maj);
        let s = wht_forward(&maj);
        for (a, b) in s.coeffs().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(
            s.support(1e-12),
            vec![
                (SubsetMask::from_vars(&[1]), 0.5),
                (SubsetMask::from_vars(&[2]), 0.5),
                (SubsetMask::from_vars(&[3]), 0.5),
                (SubsetMask::from_vars(&[1, 2, 3]), -0.5),
            ]
        );
    }

    #[test]
    fn bent_is_flat() {
        let s = wht_forward(&fixtures::bent4());
        assert!(s.coeffs().iter().all(|c| (c.abs() - 0.25).abs() < 1e-15));
    }

    #[test]
    fn inverse_of_single_coefficient_is_parity() {
        let m = SubsetMask::from_vars(&[1, 3]);
        let t = wht_inverse(&FourierSpectrum::single(3, m, 1.0).unwrap());
        assert_eq!(t, PseudoBooleanTable::parity(3, m).unwrap());
        let z = wht_inverse(&FourierSpectrum::zeros(3).unwrap());
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_profile_cases() {
        let p = FourierSpectrum::single(5, SubsetMask(29), 1.0).unwrap();
        assert_eq!(energy_profile(&p, 0.95).unwrap(), vec![(SubsetMask(29), 1.0)]);

        let bent = energy_profile(&wht_forward(&fixtures::bent4()), 0.95).unwrap();
        assert_eq!(bent.len(), 16);
        assert!(bent.iter().all(|(_, w)| (w - 1.0 / 16.0).abs() < 1e-15));
        let masks: Vec<u128> = bent.iter().map(|(m, _)| m.0).collect();
        assert_eq!(masks, (0..16).collect::<Vec<u128>>());

        let maj = PseudoBooleanTable::from_fn(3, |x| {
            (0..3).map(|i| sign_of_bit((x >> i) as u8)).sum::<f64>().signum()
        })
        .unwrap();
        let prof = energy_profile(&wht_forward(&maj), 0.5).unwrap();
        assert_eq!(prof, vec![(SubsetMask(1), 0.25), (SubsetMask(2), 0.25)]);

        assert_eq!(
            energy_profile(&FourierSpectrum::zeros(3).unwrap(), 0.9),
            Err(Error::DegenerateSpectrum)
        );
    }

    #[test]
    fn constructor_rejects_bad_tables() {
        assert!(matches!(PseudoBooleanTable::new(3, vec![0.0; 7]), Err(Error::LengthMismatch { .. })));
        assert_eq!(PseudoBooleanTable::new(1, vec![0.0, f64::NAN]), Err(Error::NonFinite(1)));
        assert!(serde_json::from_str::<PseudoBooleanTable>(r#"{"arity":2,"values":[1,2,3]}"#).is_err());
    }

    #[test]
    fn json_shape() {
        let t = PseudoBooleanTable::parity(1, SubsetMask(1)).unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"arity":1,"values":[1.0,-1.0]}"#);
        let s: FourierSpectrum = serde_json::from_str(r#"{"arity":1,"values":[0.5,0.5]}"#).unwrap();
        assert_eq!(s.coeffs(), &[0.5, 0.5]);
    }

    #[test]
    fn fixtures_match_tables() {
        // all-(+1) input is the all-zero 𝔽₂ vector
        assert_eq!(fixtures::block2().eval(0), 1.0);
        let s2 = wht_forward(&fixtures::block2());
        assert_eq!(s2.support(1e-12), vec![(SubsetMask::from_vars(&[1, 3, 4, 5]), 1.0)]);

        // brute-force spectrum of Block 3 puts ±1/2 exactly on the four affine solutions
        let t3 = fixtures::block3_exact();
        let oracle = naive_forward(&t3);
        let mut support: Vec<(u128, f64)> =
            oracle.iter().enumerate().filter(|(_, c)| c.abs() > 1e-12).map(|(s, &c)| (s as u128, c)).collect();
        support.sort_by_key(|e| e.0);
        let mut expected: Vec<(u128, f64)> = fixtures::block3_affine_solutions()
            .iter()
            .map(|&(neg, m)| (m.0, if neg { -0.5 } else { 0.5 }))
            .collect();
        expected.sort_by_key(|e| e.0);
        assert_eq!(support, expected);

        // each affine solution agrees with the exact function on 3/4 of inputs
        for i in 0..4 {
            let a = fixtures::block3_affine(i);
            let agree = (0..32).filter(|&x| a.eval(x) == t3.eval(x)).count();
            assert_eq!(agree, 24);
        }
        // Block 1's affine approximation is its single largest coefficient
        let s1 = wht_forward(&fixtures::block1_exact());
        let top = energy_profile(&s1, 1e-9).unwrap()[0];
        assert_eq!(top.0, SubsetMask(0b11111));
        assert_eq!(s1.coeff(SubsetMask(0b11111)).signum(), -1.0);
    }
}
