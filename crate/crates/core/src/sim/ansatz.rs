//! Trotterized unitary coupled cluster with singles and doubles.

use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Ladder};
use crate::mapping::QubitMapper;
use crate::pauli::{PauliSum, PauliTerm};
use crate::sim::statevector::Statevector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationKind {
    Single,
    Double,
}

#[derive(Debug, Clone)]
pub struct Excitation {
    pub kind: ExcitationKind,
    /// `(I, A)` for singles, `(I, J, A, B)` for doubles, in active spin-orbital indices.
    pub indices: Vec<usize>,
    /// `T - T^dagger`.
    pub generator: FermionPolynomial,
    /// Strings `P_l` with real weights `r_l` such that the generator maps to `sum_l i r_l P_l`,
    /// in lexicographic string order.
    pub rotations: Vec<(PauliTerm, f64)>,
}

#[derive(Debug, Clone)]
pub struct TUCCSDAnsatz {
    excitations: Vec<Excitation>,
    n_qubits: usize,
    /// Reference state as a computational-basis index of the register.
    reference: u64,
    /// Reference occupation over active spin orbitals.
    occupation: u64,
}

impl TUCCSDAnsatz {
    /// Spin-conserving singles then Sz-conserving doubles out of the closed-shell
    /// reference with `n_elec` electrons in `n_modes` active spin orbitals.
    pub fn new(n_modes: usize, n_elec: usize, mapper: &QubitMapper) -> Result<Self> {
        if mapper.n_qubits() != n_modes {
            return Err(Error::SizeMismatch(n_modes, mapper.n_qubits()));
        }
        let occ: Vec<usize> = (0..n_elec).collect();
        let vir: Vec<usize> = (n_elec..n_modes).collect();
        let spin = |m: usize| m % 2;
        let mut excitations = Vec::new();
        for &i in &occ {
            for &a in &vir {
                if spin(i) == spin(a) {
                    let t = FermionPolynomial::term(n_modes, 1.0, &[Ladder::create(a), Ladder::annihilate(i)])?;
                    excitations.push(make_excitation(ExcitationKind::Single, vec![i, a], t, mapper)?);
                }
            }
        }
        for (x, &i) in occ.iter().enumerate() {
            for &j in &occ[x + 1..] {
                for (y, &a) in vir.iter().enumerate() {
                    for &b in &vir[y + 1..] {
                        if spin(i) + spin(j) != spin(a) + spin(b) {
                            continue;
                        }
                        let t = FermionPolynomial::term(
                            n_modes,
                            1.0,
                            &[Ladder::create(a), Ladder::create(b), Ladder::annihilate(j), Ladder::annihilate(i)],
                        )?;
                        excitations.push(make_excitation(ExcitationKind::Double, vec![i, j, a, b], t, mapper)?);
                    }
                }
            }
        }
        let occupation = (0..n_elec).fold(0u64, |acc, m| acc | 1 << m);
        Ok(Self { excitations, n_qubits: n_modes, reference: mapper.basis_index(occupation), occupation })
    }

    pub fn excitations(&self) -> &[Excitation] {
        &self.excitations
    }

    pub fn n_params(&self) -> usize {
        self.excitations.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn reference(&self) -> u64 {
        self.reference
    }

    pub fn occupation(&self) -> u64 {
        self.occupation
    }

    /// Number of Pauli rotations in the circuit, used as the depth proxy for gate noise.
    pub fn n_pauli_layers(&self) -> usize {
        self.excitations.iter().map(|e| e.rotations.len()).sum()
    }

    /// Bytes identifying the circuit structure (not its parameters).
    pub fn structure_key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.n_qubits as u64).to_le_bytes());
        out.extend_from_slice(&self.reference.to_le_bytes());
        for e in &self.excitations {
            for (t, r) in &e.rotations {
                out.extend_from_slice(&t.x_bits().to_le_bytes());
                out.extend_from_slice(&t.z_bits().to_le_bytes());
                out.extend_from_slice(&r.to_le_bytes());
            }
            out.push(0xff);
        }
        out
    }
}

fn make_excitation(
    kind: ExcitationKind,
    indices: Vec<usize>,
    t: FermionPolynomial,
    mapper: &QubitMapper,
) -> Result<Excitation> {
    let generator = t.sub(&t.adjoint())?;
    let image: PauliSum = mapper.map(&generator)?;
    let mut rotations = Vec::with_capacity(image.len());
    for (p, c) in image.iter() {
        // anti-Hermitian generator: purely imaginary coefficients
        debug_assert!(c.re.abs() < 1e-12);
        rotations.push((*p, c.im));
    }
    Ok(Excitation { kind, indices, generator, rotations })
}

/// Reference state followed by `exp(i θ_k r_l P_l)` for every excitation `k` and string `l`.
pub fn prepare_state(ansatz: &TUCCSDAnsatz, theta: &[f64]) -> Result<Statevector> {
    if theta.len() != ansatz.n_params() {
        return Err(Error::ParameterLength { expected: ansatz.n_params(), got: theta.len() });
    }
    let mut psi = Statevector::basis(ansatz.n_qubits, ansatz.reference);
    for (e, &th) in ansatz.excitations.iter().zip(theta) {
        if th == 0.0 {
            continue;
        }
        for (p, r) in &e.rotations {
            psi.apply_pauli_rotation(p, th * r)?;
        }
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{Encoding, SpinLayout};

    #[test]
    fn excitation_counts() {
        let m = QubitMapper::for_spin_orbitals(Encoding::Parity, 2, SpinLayout::Interleaved);
        let a = TUCCSDAnsatz::new(4, 2, &m).unwrap();
        assert_eq!(a.n_params(), 3);
        assert_eq!(a.excitations()[0].indices, vec![0, 2]);
        assert_eq!(a.excitations()[2].indices, vec![0, 1, 2, 3]);
        let m = QubitMapper::for_spin_orbitals(Encoding::JordanWigner, 4, SpinLayout::Interleaved);
        let a = TUCCSDAnsatz::new(8, 4, &m).unwrap();
        // singles: 2 per spin * 2 * 2 = 8; doubles: aa 1, bb 1, ab 4*4=16 -> 18
        assert_eq!(a.n_params(), 8 + 18);
    }

    #[test]
    fn zero_parameters_give_reference() {
        let m = QubitMapper::for_spin_orbitals(Encoding::JordanWigner, 2, SpinLayout::Interleaved);
        let a = TUCCSDAnsatz::new(4, 2, &m).unwrap();
        let s = prepare_state(&a, &[0.0; 3]).unwrap();
        assert_eq!(s, Statevector::basis(4, 0b0011));
        assert!(prepare_state(&a, &[0.0; 2]).is_err());
    }

    #[test]
    fn norm_preserved() {
        let m = QubitMapper::for_spin_orbitals(Encoding::Parity, 3, SpinLayout::Interleaved);
        let a = TUCCSDAnsatz::new(6, 2, &m).unwrap();
        let theta: Vec<f64> = (0..a.n_params()).map(|k| 0.37 * k as f64 - 0.8).collect();
        let s = prepare_state(&a, &theta).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }
}
