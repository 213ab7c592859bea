//! Fermion-to-qubit encodings.
//!
//! With Jordan-Wigner, qubit `j` holds the occupation of mode `j` (`|1>` occupied).
//! With the parity encoding, qubit `j` holds the parity of modes `0..=j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Ladder};
use crate::pauli::{Pauli, PauliSum, PauliTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    JordanWigner,
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinLayout {
    Interleaved,
    Blocked,
}

/// Encoding plus a mode-to-qubit assignment.
#[derive(Debug, Clone)]
pub struct QubitMapper {
    encoding: Encoding,
    qubit_of_mode: Vec<usize>,
    /// Ladder images indexed by `2 * mode + dagger`.
    images: Vec<PauliSum>,
}

impl QubitMapper {
    pub fn identity_order(encoding: Encoding, n_modes: usize) -> Self {
        Self::with_order(encoding, (0..n_modes).collect()).expect("identity permutation")
    }

    pub fn with_order(encoding: Encoding, qubit_of_mode: Vec<usize>) -> Result<Self> {
        let n = qubit_of_mode.len();
        let mut seen = vec![false; n];
        for &q in &qubit_of_mode {
            if q >= n || seen[q] {
                return Err(Error::Dimension(format!("not a permutation: {qubit_of_mode:?}")));
            }
            seen[q] = true;
        }
        let images = (0..n)
            .flat_map(|m| [false, true].map(|d| ladder_image(encoding, n, qubit_of_mode[m], d)))
            .collect();
        Ok(Self { encoding, qubit_of_mode, images })
    }

    /// Mapper for spin orbitals `2v + s`, either interleaved (`qubit = 2v + s`) or
    /// blocked by spin (`qubit = s * n_spatial + v`).
    pub fn for_spin_orbitals(encoding: Encoding, n_spatial: usize, layout: SpinLayout) -> Self {
        let order = (0..2 * n_spatial)
            .map(|m| match layout {
                SpinLayout::Interleaved => m,
                SpinLayout::Blocked => (m % 2) * n_spatial + m / 2,
            })
            .collect();
        Self::with_order(encoding, order).expect("valid permutation")
    }

    /// Computational-basis index encoding the occupation bitstring `occupation` (bit = mode).
    pub fn basis_index(&self, occupation: u64) -> u64 {
        let mut jw = 0u64;
        for (m, &q) in self.qubit_of_mode.iter().enumerate() {
            jw |= ((occupation >> m) & 1) << q;
        }
        match self.encoding {
            Encoding::JordanWigner => jw,
            Encoding::Parity => parity_basis_index(jw, self.n_qubits()),
        }
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn n_qubits(&self) -> usize {
        self.qubit_of_mode.len()
    }

    pub fn qubit_of_mode(&self, mode: usize) -> usize {
        self.qubit_of_mode[mode]
    }

    pub fn map(&self, op: &FermionPolynomial) -> Result<PauliSum> {
        let n = self.n_qubits();
        if op.n_modes() != n {
            return Err(Error::SizeMismatch(n, op.n_modes()));
        }
        let mut out = PauliSum::zero(n);
        for (word, c) in op.iter() {
            let img = self.map_word(word)?;
            for (t, v) in img.iter() {
                out.add_term(*t, v * c);
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn map_word(&self, word: &[Ladder]) -> Result<PauliSum> {
        let n = self.n_qubits();
        let mut acc = PauliSum::identity(n, 1.0);
        for l in word {
            let m = l.mode as usize;
            if m >= n {
                return Err(Error::IndexOutOfRange { index: m, n });
            }
            acc = acc.mul(&self.images[2 * m + l.dagger as usize])?;
        }
        Ok(acc)
    }
}

fn ladder_image(enc: Encoding, n: usize, j: usize, dagger: bool) -> PauliSum {
    // a^dagger = (X - iY)/2 * string, a = (X + iY)/2 * string
    let s = if dagger { -0.5 } else { 0.5 };
    match enc {
        Encoding::JordanWigner => {
            let mut x = PauliTerm::single(n, j, Pauli::X);
            let mut y = PauliTerm::single(n, j, Pauli::Y);
            for k in 0..j {
                x.set(k, Pauli::Z);
                y.set(k, Pauli::Z);
            }
            PauliSum::from_terms(n, [(x, Complex64::new(0.5, 0.0)), (y, Complex64::new(0.0, s))])
                .expect("sizes match")
        }
        Encoding::Parity => {
            // X on all higher qubits; X_j Z_{j-1} and Y_j on the occupied-parity pair.
            let mut x = PauliTerm::single(n, j, Pauli::X);
            let mut y = PauliTerm::single(n, j, Pauli::Y);
            for k in j + 1..n {
                x.set(k, Pauli::X);
                y.set(k, Pauli::X);
            }
            if j > 0 {
                x.set(j - 1, Pauli::Z);
            }
            PauliSum::from_terms(n, [(x, Complex64::new(0.5, 0.0)), (y, Complex64::new(0.0, s))])
                .expect("sizes match")
        }
    }
}

pub fn jordan_wigner(op: &FermionPolynomial, n_spin_orbitals: usize) -> Result<PauliSum> {
    check_modes(op, n_spin_orbitals)?;
    QubitMapper::identity_order(Encoding::JordanWigner, n_spin_orbitals).map(op)
}

pub fn parity_map(op: &FermionPolynomial, n_spin_orbitals: usize) -> Result<PauliSum> {
    check_modes(op, n_spin_orbitals)?;
    QubitMapper::identity_order(Encoding::Parity, n_spin_orbitals).map(op)
}

fn check_modes(op: &FermionPolynomial, n: usize) -> Result<()> {
    for (w, _) in op.iter() {
        for l in w {
            if l.mode as usize >= n {
                return Err(Error::IndexOutOfRange { index: l.mode as usize, n });
            }
        }
    }
    if op.n_modes() != n {
        return Err(Error::SizeMismatch(n, op.n_modes()));
    }
    Ok(())
}

/// Basis-state index under the parity encoding for a Jordan-Wigner occupation index.
pub fn parity_basis_index(occupation: u64, n: usize) -> u64 {
    let mut out = 0u64;
    let mut parity = 0u64;
    for j in 0..n {
        parity ^= (occupation >> j) & 1;
        out |= parity << j;
    }
    out
}
