//! Products of full-space operators evaluated on the frozen (inactive/virtual) modes
//! without ever forming the full-space product.
//!
//! Each factor is split as `sum_F F (x) A_F` with `F` a word on frozen modes and `A_F`
//! an active polynomial. A product is processed right to left, tracking the frozen
//! determinant reached so far; only paths returning to the reference survive.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use crate::chem::{ActiveSpace, OrbitalClass};
use crate::error::{Error, Result};
use crate::fermion::{normal_order_into, FermionPolynomial, Ladder, Word};

#[derive(Debug, Clone)]
struct Part {
    frozen: Word,
    active: FermionPolynomial,
}

/// An even operator resolved by its frozen-mode content.
#[derive(Debug, Clone)]
pub struct FrozenSplit {
    parts: Vec<Part>,
}

#[derive(Debug, Clone)]
pub struct FrozenContext {
    local: Vec<Option<usize>>,
    reference: u64,
    n_active_modes: usize,
    n_modes: usize,
}

impl FrozenContext {
    pub fn new(space: &ActiveSpace) -> Result<Self> {
        let n_modes = 2 * space.n_orb();
        if n_modes > 64 {
            return Err(Error::IndexOutOfRange { index: n_modes, n: 64 });
        }
        let local = (0..n_modes).map(|m| space.local_mode(m)).collect();
        let reference = (0..n_modes)
            .filter(|m| space.class_of(m / 2) == OrbitalClass::Inactive)
            .fold(0u64, |b, m| b | 1 << m);
        Ok(Self { local, reference, n_active_modes: space.n_active_modes(), n_modes })
    }

    pub fn n_active_modes(&self) -> usize {
        self.n_active_modes
    }

    pub fn split_full(&self, op: &FermionPolynomial) -> Result<FrozenSplit> {
        if op.n_modes() != self.n_modes {
            return Err(Error::SizeMismatch(self.n_modes, op.n_modes()));
        }
        let mut groups: BTreeMap<Word, BTreeMap<Word, Complex64>> = BTreeMap::new();
        for (word, c) in op.iter() {
            let mut frozen = Vec::new();
            let mut act = Vec::new();
            let mut swaps = 0usize;
            for l in word {
                match self.local[l.mode as usize] {
                    Some(m) => act.push(Ladder { mode: m as u16, dagger: l.dagger }),
                    None => {
                        swaps += act.len();
                        frozen.push(*l);
                    }
                }
            }
            let c = if swaps % 2 == 1 { -c } else { *c };
            normal_order_into(groups.entry(frozen).or_default(), c, act);
        }
        let parts = groups
            .into_iter()
            .map(|(frozen, m)| Part { frozen, active: FermionPolynomial::from_map(self.n_active_modes, m) })
            .filter(|p| !p.active.is_zero())
            .collect();
        Ok(FrozenSplit { parts })
    }

    /// An operator that acts on active modes only.
    pub fn split_active(&self, op: &FermionPolynomial) -> Result<FrozenSplit> {
        if op.n_modes() != self.n_active_modes {
            return Err(Error::SizeMismatch(self.n_active_modes, op.n_modes()));
        }
        Ok(FrozenSplit { parts: vec![Part { frozen: Vec::new(), active: op.clone() }] })
    }

    /// Applies a frozen word to a frozen determinant, returning the sign and the result.
    fn apply(&self, word: &[Ladder], mut b: u64) -> Option<(f64, u64)> {
        let mut sign = 1.0;
        for l in word.iter().rev() {
            let bit = 1u64 << l.mode;
            if (b & bit != 0) == l.dagger {
                return None;
            }
            if (b & (bit - 1)).count_ones() % 2 == 1 {
                sign = -sign;
            }
            b ^= bit;
        }
        Some((sign, b))
    }

    /// Active reduction of `factors[0] * factors[1] * ...` on the frozen reference,
    /// as an active polynomial whose constant term carries the classical part.
    pub fn reduce_product(&self, factors: &[&FrozenSplit]) -> FermionPolynomial {
        let mut state = self.start();
        for (k, f) in factors.iter().enumerate().rev() {
            state = self.prepend(f, &state, k == 0);
        }
        self.finish(state)
    }

    /// Left-multiplies a frozen-resolved suffix by one factor. With `last`, only
    /// paths ending on the reference are kept.
    pub(crate) fn prepend(
        &self,
        f: &FrozenSplit,
        state: &HashMap<u64, FermionPolynomial>,
        last: bool,
    ) -> HashMap<u64, FermionPolynomial> {
        let n_ref = self.reference.count_ones();
        let mut out: HashMap<u64, BTreeMap<Word, Complex64>> = HashMap::new();
        let mut keys: Vec<&u64> = state.keys().collect();
        keys.sort();
        for &b in keys {
            let p = &state[&b];
            // parity of the frozen operators already moved to the left of `part.active`
            let suffix_odd = (b.count_ones() + n_ref) % 2 == 1;
            for part in &f.parts {
                let Some((s, b2)) = self.apply(&part.frozen, b) else { continue };
                if last && b2 != self.reference {
                    continue;
                }
                let sign = if suffix_odd && part.frozen.len() % 2 == 1 { -s } else { s };
                let acc = out.entry(b2).or_default();
                for (wa, ca) in part.active.iter() {
                    for (wb, cb) in p.iter() {
                        let mut w = Vec::with_capacity(wa.len() + wb.len());
                        w.extend_from_slice(wa);
                        w.extend_from_slice(wb);
                        normal_order_into(acc, ca * cb * sign, w);
                    }
                }
            }
        }
        out.into_iter()
            .map(|(b, m)| (b, FermionPolynomial::from_map(self.n_active_modes, m)))
            .filter(|(_, p)| !p.is_zero())
            .collect()
    }

    pub(crate) fn start(&self) -> HashMap<u64, FermionPolynomial> {
        HashMap::from([(self.reference, FermionPolynomial::identity(self.n_active_modes, 1.0))])
    }

    pub(crate) fn finish(&self, mut state: HashMap<u64, FermionPolynomial>) -> FermionPolynomial {
        state.remove(&self.reference).unwrap_or_else(|| FermionPolynomial::zero(self.n_active_modes))
    }
}
