//! Second-quantized operators over spin orbitals.
//!
//! Spin orbital `2p + s` is spatial orbital `p` with spin `s` (0 = alpha, 1 = beta).
//! Polynomials are kept in a canonical normal order: creators first with
//! ascending mode, then annihilators with descending mode.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::DROP_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub mode: u16,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode: mode as u16, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode: mode as u16, dagger: false }
    }

    pub fn adjoint(self) -> Self {
        Self { mode: self.mode, dagger: !self.dagger }
    }

    fn rank(self) -> (u8, i32) {
        if self.dagger {
            (0, self.mode as i32)
        } else {
            (1, -(self.mode as i32))
        }
    }
}

pub type Word = Vec<Ladder>;

pub fn spin_orbital(spatial: usize, spin: usize) -> usize {
    2 * spatial + spin
}

#[derive(Clone, PartialEq)]
pub struct FermionPolynomial {
    n_modes: usize,
    terms: BTreeMap<Word, Complex64>,
}

impl FermionPolynomial {
    pub fn zero(n_modes: usize) -> Self {
        Self { n_modes, terms: BTreeMap::new() }
    }

    pub fn identity(n_modes: usize, c: impl Into<Complex64>) -> Self {
        let mut p = Self::zero(n_modes);
        p.terms.insert(Vec::new(), c.into());
        p.prune();
        p
    }

    /// Single product of ladder operators, normal ordered on construction.
    pub fn term(n_modes: usize, c: impl Into<Complex64>, word: &[Ladder]) -> Result<Self> {
        for l in word {
            if l.mode as usize >= n_modes {
                return Err(Error::IndexOutOfRange { index: l.mode as usize, n: n_modes });
            }
        }
        let mut p = Self::zero(n_modes);
        normal_order_into(&mut p.terms, c.into(), word.to_vec());
        p.prune();
        Ok(p)
    }

    /// `a^dagger_p a_q`.
    pub fn hop(n_modes: usize, p: usize, q: usize) -> Result<Self> {
        Self::term(n_modes, 1.0, &[Ladder::create(p), Ladder::annihilate(q)])
    }

    /// Singlet excitation `E_pq` over spatial orbitals (needs `2 * n_spatial` modes).
    pub fn singlet_excitation(n_spatial: usize, p: usize, q: usize) -> Result<Self> {
        let n = 2 * n_spatial;
        Self::hop(n, spin_orbital(p, 0), spin_orbital(q, 0))?
            .add(&Self::hop(n, spin_orbital(p, 1), spin_orbital(q, 1))?)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn constant(&self) -> Complex64 {
        self.terms.get(&Vec::new()).copied().unwrap_or_default()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_TOLERANCE);
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::SizeMismatch(self.n_modes, other.n_modes));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            *out.terms.entry(w.clone()).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, f: impl Into<Complex64>) -> Self {
        let f = f.into();
        let mut out = Self {
            n_modes: self.n_modes,
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c * f)).collect(),
        };
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = BTreeMap::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let mut w = Vec::with_capacity(wa.len() + wb.len());
                w.extend_from_slice(wa);
                w.extend_from_slice(wb);
                normal_order_into(&mut out, ca * cb, w);
            }
        }
        let mut p = Self { n_modes: self.n_modes, terms: out };
        p.prune();
        Ok(p)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Reverses every product and conjugates coefficients.
    pub fn adjoint(&self) -> Self {
        let mut out = BTreeMap::new();
        for (w, c) in &self.terms {
            let rev: Word = w.iter().rev().map(|l| l.adjoint()).collect();
            normal_order_into(&mut out, c.conj(), rev);
        }
        let mut p = Self { n_modes: self.n_modes, terms: out };
        p.prune();
        p
    }

    /// Largest coefficient difference, for tests.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (w, c) in &self.terms {
            m = m.max((c - other.terms.get(w).copied().unwrap_or_default()).norm());
        }
        for (w, c) in &other.terms {
            if !self.terms.contains_key(w) {
                m = m.max(c.norm());
            }
        }
        m
    }

    /// Particle-number change of every term, if uniform (`None` for zero).
    pub fn rank_change(&self) -> Option<i32> {
        let mut it = self.terms.keys().map(|w| {
            w.iter().map(|l| if l.dagger { 1 } else { -1 }).sum::<i32>()
        });
        let first = it.next()?;
        it.all(|r| r == first).then_some(first)
    }

    pub(crate) fn from_map(n_modes: usize, terms: BTreeMap<Word, Complex64>) -> Self {
        let mut p = Self { n_modes, terms };
        p.prune();
        p
    }
}

/// Adds `c * word` to `out` in canonical normal order.
pub(crate) fn normal_order_into(out: &mut BTreeMap<Word, Complex64>, c: Complex64, word: Word) {
    let mut stack = vec![(c, word)];
    while let Some((c, mut w)) = stack.pop() {
        let mut sign = 1.0;
        let mut done = true;
        // bubble sort; each anticommutation with a matching pair spawns a contracted term
        'outer: loop {
            for i in 0..w.len().saturating_sub(1) {
                let (l, r) = (w[i], w[i + 1]);
                if l == r {
                    done = false;
                    break 'outer;
                }
                if l.rank() > r.rank() {
                    if l.mode == r.mode && !l.dagger && r.dagger {
                        let mut contracted = Vec::with_capacity(w.len() - 2);
                        contracted.extend_from_slice(&w[..i]);
                        contracted.extend_from_slice(&w[i + 2..]);
                        stack.push((c * sign, contracted));
                    }
                    w.swap(i, i + 1);
                    sign = -sign;
                    continue 'outer;
                }
            }
            break;
        }
        if done {
            *out.entry(w).or_default() += c * sign;
        }
    }
}

impl fmt::Debug for FermionPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FermionPolynomial[{}](", self.n_modes)?;
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for l in w {
                write!(f, " a{}{}", if l.dagger { "+" } else { "" }, l.mode)?;
            }
        }
        write!(f, ")")
    }
}
