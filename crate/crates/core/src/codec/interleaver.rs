use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Deserialize)]
struct PermRepr {
    perm: Vec<usize>,
}

#[derive(Serialize)]
struct PermReprRef<'a> {
    perm: &'a [usize],
}

/// Block permutation. The interleaved sequence is `out[i] = in[perm[i]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PermRepr", into = "PermReprOwned")]
pub struct Interleaver {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

#[derive(Serialize)]
struct PermReprOwned {
    perm: Vec<usize>,
}

impl From<Interleaver> for PermReprOwned {
    fn from(i: Interleaver) -> Self {
        PermReprOwned { perm: i.perm }
    }
}

impl TryFrom<PermRepr> for Interleaver {
    type Error = Error;
    fn try_from(r: PermRepr) -> Result<Self> {
        Self::new(r.perm)
    }
}

impl Interleaver {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let k = perm.len();
        let mut inverse = vec![usize::MAX; k];
        for (i, &p) in perm.iter().enumerate() {
            if p >= k || inverse[p] != usize::MAX {
                return Err(Error::InvalidArgument(format!("not a permutation of 0..{k}: {perm:?}")));
            }
            inverse[p] = i;
        }
        Ok(Self { perm, inverse })
    }

    pub fn identity(k: usize) -> Self {
        let perm: Vec<usize> = (0..k).collect();
        Self { inverse: perm.clone(), perm }
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(rng);
        Self::new(perm).expect("shuffle yields a permutation")
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn interleave<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.inverse.iter().map(|&q| x[q]).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PermReprRef { perm: &self.perm }).expect("serializable")
    }
}
