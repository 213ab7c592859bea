//! Pauli strings and sums of Pauli strings.
//!
//! A string is stored in symplectic form: bit `q` of `x` / `z` marks an X / Z
//! component on qubit `q`, with Y = both. Strings are written with the highest
//! qubit leftmost, so `"XZ"` is X on qubit 1 and Z on qubit 0.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients with modulus below this are removed after every arithmetic operation.
pub const DROP_TOLERANCE: f64 = 1e-12;

pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis on a register of fixed size.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    n: u32,
    x: u64,
    z: u64,
}

impl PauliTerm {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        Self { n: n_qubits as u32, x: 0, z: 0 }
    }

    pub fn from_bits(n_qubits: usize, x: u64, z: u64) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        let mask = mask(n_qubits);
        Self { n: n_qubits as u32, x: x & mask, z: z & mask }
    }

    /// Single Pauli `p` on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Self {
        let mut t = Self::identity(n_qubits);
        t.set(qubit, p);
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Qubits carrying a non-identity Pauli.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn set(&mut self, qubit: usize, p: Pauli) {
        assert!(qubit < self.n as usize, "qubit {qubit} out of range");
        let (x, z) = p.bits();
        let bit = 1u64 << qubit;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n as usize, other.n as usize));
        }
        Ok(())
    }

    /// Product `self * other = phase * product`.
    pub fn multiply(&self, other: &Self) -> Result<(Complex64, PauliTerm)> {
        self.check_size(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> (Complex64, PauliTerm) {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let y1 = x1 & z1;
        let xo1 = x1 & !z1;
        let zo1 = z1 & !x1;
        let y2 = x2 & z2;
        let xo2 = x2 & !z2;
        let zo2 = z2 & !x2;
        // Powers of i picked up per qubit: XY=iZ, YZ=iX, ZX=iY and the reverses give -i.
        let plus = (xo1 & y2) | (y1 & zo2) | (zo1 & xo2);
        let minus = (xo1 & zo2) | (y1 & xo2) | (zo1 & y2);
        let k = (plus.count_ones() as i64 - minus.count_ones() as i64).rem_euclid(4);
        let phase = match k {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        (phase, PauliTerm { n: self.n, x: x1 ^ x2, z: z1 ^ z2 })
    }

    /// True iff on every qubit the symbols agree or one of them is the identity.
    pub fn qubitwise_commutes(&self, other: &Self) -> Result<bool> {
        self.check_size(other)?;
        Ok(self.qwc_unchecked(other))
    }

    pub(crate) fn qwc_unchecked(&self, other: &Self) -> bool {
        let both = self.support() & other.support();
        ((self.x ^ other.x) | (self.z ^ other.z)) & both == 0
    }

    /// Full (not qubit-wise) commutation.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_size(other)?;
        let anti = ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2;
        Ok(anti == 0)
    }

    /// Sign `(-1)^{popcount(bits & z)}` of this string's Z-part acting on basis state `bits`,
    /// i.e. the eigenvalue of the diagonal string obtained by replacing X/Y with Z.
    pub fn parity_on(&self, bits: u64) -> bool {
        (bits & self.support()).count_ones() % 2 == 1
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn symbol_code(p: Pauli) -> u8 {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

impl Ord for PauliTerm {
    /// Lexicographic order of the printed string (highest qubit first, I < X < Y < Z).
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            let diff = (self.x ^ other.x) | (self.z ^ other.z);
            if diff == 0 {
                return Ordering::Equal;
            }
            let q = 63 - diff.leading_zeros() as usize;
            symbol_code(self.get(q)).cmp(&symbol_code(other.get(q)))
        })
    }
}

impl PartialOrd for PauliTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n as usize).rev() {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliTerm({self})")
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::InvalidPauli(s.to_string()));
        }
        let mut t = PauliTerm::identity(n);
        for (i, c) in s.chars().enumerate() {
            let p = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::InvalidPauli(s.to_string())),
            };
            t.set(n - 1 - i, p);
        }
        Ok(t)
    }
}

impl Serialize for PauliTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Linear combination of Pauli strings with complex coefficients.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliTerm, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n: n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize, coefficient: impl Into<Complex64>) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(PauliTerm::identity(n_qubits), coefficient.into());
        s.prune();
        s
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliTerm, Complex64)>,
    ) -> Result<Self> {
        let mut s = Self::zero(n_qubits);
        for (t, c) in terms {
            if t.n_qubits() != n_qubits {
                return Err(Error::SizeMismatch(n_qubits, t.n_qubits()));
            }
            s.add_term(t, c);
        }
        s.prune();
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliTerm, &Complex64)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = &PauliTerm> {
        self.terms.keys()
    }

    pub fn coefficient(&self, term: &PauliTerm) -> Complex64 {
        self.terms.get(term).copied().unwrap_or_default()
    }

    /// Accumulates without pruning; call [`PauliSum::prune`] once done.
    pub(crate) fn add_term(&mut self, term: PauliTerm, c: Complex64) {
        *self.terms.entry(term).or_default() += c;
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_TOLERANCE);
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.add_term(*t, *c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: impl Into<Complex64>) -> Self {
        let f = factor.into();
        let mut out = Self {
            n: self.n,
            terms: self.terms.iter().map(|(t, c)| (*t, c * f)).collect(),
        };
        out.prune();
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        let mut out = Self::zero(self.n);
        for (ta, ca) in &self.terms {
            for (tb, cb) in &other.terms {
                let (phase, t) = ta.mul_unchecked(tb);
                out.add_term(t, phase * ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, terms: self.terms.iter().map(|(t, c)| (*t, c.conj())).collect() }
    }

    /// Coefficient of the all-identity string.
    pub fn constant(&self) -> Complex64 {
        self.coefficient(&PauliTerm::identity(self.n))
    }

    /// Strings that can change a real expectation value: non-identity with a
    /// non-negligible real coefficient, in lexicographic order.
    pub fn measurable_terms(&self) -> impl Iterator<Item = (&PauliTerm, &Complex64)> {
        self.terms
            .iter()
            .filter(|(t, c)| !t.is_identity() && c.re.abs() >= DROP_TOLERANCE)
    }

    /// Largest coefficient modulus difference against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (t, c) in &self.terms {
            m = m.max((c - other.coefficient(t)).norm());
        }
        for (t, c) in &other.terms {
            if !self.terms.contains_key(t) {
                m = m.max(c.norm());
            }
        }
        m
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliSum[{}](", self.n)?;
        for (i, (t, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i) {t}", c.re, c.im)?;
        }
        write!(f, ")")
    }
}
