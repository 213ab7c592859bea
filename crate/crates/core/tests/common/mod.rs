#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qlrlab::chem::MolecularSystem;
use qlrlab::fermion::FermionPolynomial;
use qlrlab::pauli::{Pauli, PauliSum, PauliTerm};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(name: &str) -> MolecularSystem {
    let path = fixture(&format!("{name}.fcidump"));
    MolecularSystem::load(&path, Some(&path)).unwrap()
}

pub fn reference() -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(fixture("reference.json")).unwrap()).unwrap()
}

pub fn oracle_ints(sys: &MolecularSystem) -> (Vec<f64>, Vec<f64>) {
    (sys.h_flat(), sys.g_flat().to_vec())
}

/// Dense matrix of a Pauli string; basis index bit q is qubit q.
pub fn pauli_dense(t: &PauliTerm) -> DMatrix<Complex64> {
    let n = t.n_qubits();
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amp = Complex64::new(1.0, 0.0);
        let mut row = col;
        for q in 0..n {
            let bit = (col >> q) & 1;
            match t.get(q) {
                Pauli::I => {}
                Pauli::X => row ^= 1 << q,
                Pauli::Y => {
                    row ^= 1 << q;
                    amp *= if bit == 0 { Complex64::new(0.0, 1.0) } else { Complex64::new(0.0, -1.0) };
                }
                Pauli::Z => {
                    if bit == 1 {
                        amp = -amp;
                    }
                }
            }
        }
        m[(row, col)] = amp;
    }
    m
}

pub fn pauli_sum_dense(s: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << s.n_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for (t, c) in s.iter() {
        m += pauli_dense(t) * *c;
    }
    m
}

/// Occupation-basis matrix of a fermionic polynomial, computed by applying
/// ladder operators to bitstrings with the usual sign counting (mode 0 first).
pub fn fermion_dense(op: &FermionPolynomial) -> DMatrix<Complex64> {
    let n = op.n_modes();
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        for (word, c) in op.iter() {
            let mut state = Some((1.0f64, col));
            for l in word.iter().rev() {
                state = state.and_then(|(s, b)| {
                    let bit = 1usize << l.mode;
                    let occupied = b & bit != 0;
                    if occupied == l.dagger {
                        return None;
                    }
                    let sign = if (b & (bit - 1)).count_ones() % 2 == 1 { -s } else { s };
                    Some((sign, b ^ bit))
                });
            }
            if let Some((s, row)) = state {
                m[(row, col)] += *c * s;
            }
        }
    }
    m
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.norm()))
}

/// Sparse vector over occupation bitstrings (bit `m` is spin orbital `m`).
pub type Fock = std::collections::BTreeMap<u64, Complex64>;

/// Applies a fermionic polynomial to a sparse Fock vector, mode 0 first in the sign count.
pub fn fock_apply(op: &FermionPolynomial, v: &Fock) -> Fock {
    let mut out = Fock::new();
    for (&det, &a) in v {
        for (word, c) in op.iter() {
            let mut state = Some((1.0f64, det));
            for l in word.iter().rev() {
                state = state.and_then(|(s, b)| {
                    let bit = 1u64 << l.mode;
                    if (b & bit != 0) == l.dagger {
                        return None;
                    }
                    let sign = if (b & (bit - 1)).count_ones() % 2 == 1 { -s } else { s };
                    Some((sign, b ^ bit))
                });
            }
            if let Some((s, row)) = state {
                *out.entry(row).or_default() += *c * a * s;
            }
        }
    }
    out.retain(|_, c| c.norm() > 1e-15);
    out
}

pub fn fock_dot(a: &Fock, b: &Fock) -> Complex64 {
    a.iter().filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y)).sum()
}

pub fn fock_axpy(alpha: Complex64, x: &Fock, y: &mut Fock) {
    for (k, v) in x {
        *y.entry(*k).or_default() += alpha * v;
    }
}

pub struct GroundStateFixture {
    pub rotated: MolecularSystem,
    pub space: qlrlab::chem::ActiveSpace,
    pub mapper: qlrlab::mapping::QubitMapper,
    pub ansatz: qlrlab::sim::TUCCSDAnsatz,
    pub gs: qlrlab::sim::GroundState,
}

impl GroundStateFixture {
    pub fn new(name: &str, space: qlrlab::chem::ActiveSpace) -> Self {
        use qlrlab::chem::{rotate_integrals, KappaMatrix};
        use qlrlab::mapping::{Encoding, QubitMapper, SpinLayout};
        use qlrlab::sim::{oo_vqe, TUCCSDAnsatz};
        let sys = load(name);
        let na = space.active.len();
        let mapper = QubitMapper::for_spin_orbitals(Encoding::Parity, na, SpinLayout::Interleaved);
        let ansatz = TUCCSDAnsatz::new(2 * na, space.n_active_elec, &mapper).unwrap();
        let nk = space.rotation_pairs().len();
        let theta0 = vec![0.0; ansatz.n_params()];
        let gs = oo_vqe(&sys, &space, &ansatz, &mapper, &theta0, &vec![0.0; nk], &Default::default()).unwrap();
        let rotated = rotate_integrals(&sys, &KappaMatrix::from_params(&space, &gs.kappa).unwrap()).unwrap();
        Self { rotated, space, mapper, ansatz, gs }
    }

    /// LiH with one inactive orbital and a CAS(2,2) on orbitals 1 and 2.
    pub fn lih_cas() -> Self {
        Self::new("lih", qlrlab::chem::ActiveSpace::new(6, 4, 2, vec![1, 2]).unwrap())
    }

    pub fn prepared(&self) -> qlrlab::sim::PreparedState {
        qlrlab::sim::PreparedState::new(&self.ansatz, &self.gs.theta, &self.gs.kappa).unwrap()
    }

    pub fn plan(&self, p: qlrlab::qlr::Parametrization, mirror: bool) -> qlrlab::qlr::QlrPlan {
        let opts = qlrlab::qlr::PlanOptions { mirror_lower_triangle: mirror };
        qlrlab::qlr::QlrPlan::build(&self.rotated, &self.space, p, &self.mapper, opts).unwrap()
    }
}
