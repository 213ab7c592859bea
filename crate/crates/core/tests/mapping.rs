mod common;

use common::{fermion_dense, load, max_abs, pauli_sum_dense};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qlrlab::fermion::{FermionPolynomial, Ladder};
use qlrlab::mapping::{Encoding, QubitMapper, SpinLayout};
use qlrlab::qlr::solve::symmetric_eigen;

/// Sign between a determinant ordered by mode and the same determinant ordered by qubit.
fn reorder_sign(mapper: &QubitMapper, occ: usize) -> f64 {
    let qubits: Vec<usize> = (0..mapper.n_qubits()).filter(|m| occ >> m & 1 == 1).map(|m| mapper.qubit_of_mode(m)).collect();
    let inversions = (0..qubits.len()).flat_map(|i| (i + 1..qubits.len()).map(move |j| (i, j))).filter(|&(i, j)| qubits[i] > qubits[j]).count();
    if inversions % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// The mapped operator, re-indexed from qubit basis states back to occupations.
fn in_occupation_basis(mapper: &QubitMapper, op: &FermionPolynomial) -> DMatrix<Complex64> {
    let q = pauli_sum_dense(&mapper.map(op).unwrap());
    let dim = q.nrows();
    DMatrix::from_fn(dim, dim, |r, c| {
        let v = q[(mapper.basis_index(r as u64) as usize, mapper.basis_index(c as u64) as usize)];
        v * reorder_sign(mapper, r) * reorder_sign(mapper, c)
    })
}

fn mappers(n_spatial: usize) -> Vec<QubitMapper> {
    let mut out = Vec::new();
    for enc in [Encoding::JordanWigner, Encoding::Parity] {
        for layout in [SpinLayout::Interleaved, SpinLayout::Blocked] {
            out.push(QubitMapper::for_spin_orbitals(enc, n_spatial, layout));
        }
    }
    out
}

fn ladder(mode: usize, dagger: bool) -> Ladder {
    Ladder { mode: mode as u16, dagger }
}

#[test]
fn single_ladder_operators_match_occupation_matrices() {
    for mapper in mappers(2) {
        for m in 0..4 {
            for dagger in [false, true] {
                let op = FermionPolynomial::term(4, 1.0, &[ladder(m, dagger)]).unwrap();
                let diff = max_abs(&(in_occupation_basis(&mapper, &op) - fermion_dense(&op)));
                assert!(diff < 1e-14, "{:?} mode {m} dagger {dagger}", mapper.encoding());
            }
        }
    }
}

#[test]
fn molecular_hamiltonian_matches_in_every_encoding() {
    let sys = load("h2");
    let h = sys.hamiltonian();
    let want = fermion_dense(&h);
    for mapper in mappers(2) {
        assert!(max_abs(&(in_occupation_basis(&mapper, &h) - &want)) < 1e-12);
    }
}

#[test]
fn h2_qubit_spectrum_contains_the_fci_ground_state() {
    let sys = load("h2");
    let e0 = common::reference()["h2"]["e_fci_lowest_roots"][0].as_f64().unwrap();
    for mapper in mappers(2) {
        let m = pauli_sum_dense(&mapper.map(&sys.hamiltonian()).unwrap());
        let re = m.map(|c| c.re);
        let eig = re.symmetric_eigenvalues();
        assert!(eig.iter().any(|e| (e - e0).abs() < 1e-9));
    }
}

fn word() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..4, any::<bool>()), 0..5)
}

fn polynomial() -> impl Strategy<Value = FermionPolynomial> {
    prop::collection::vec((word(), -1.0f64..1.0, -1.0f64..1.0), 1..5).prop_map(|terms| {
        let mut p = FermionPolynomial::zero(4);
        for (w, re, im) in terms {
            let w: Vec<Ladder> = w.into_iter().map(|(m, d)| ladder(m, d)).collect();
            p = p.add(&FermionPolynomial::term(4, Complex64::new(re, im), &w).unwrap()).unwrap();
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_polynomials_map_faithfully(p in polynomial()) {
        let want = fermion_dense(&p);
        for mapper in mappers(2) {
            prop_assert!(max_abs(&(in_occupation_basis(&mapper, &p) - &want)) < 1e-12);
        }
    }

    #[test]
    fn encodings_share_the_spectrum(p in polynomial()) {
        let h = p.add(&p.adjoint()).unwrap();
        let spectrum = |enc| {
            let m = pauli_sum_dense(&QubitMapper::identity_order(enc, 4).map(&h).unwrap());
            // real form [[Re, -Im], [Im, Re]]: same spectrum, every eigenvalue twice
            let d = m.nrows();
            let real = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
                let z = m[(r % d, c % d)];
                match (r < d, c < d) {
                    (true, true) | (false, false) => z.re,
                    (true, false) => -z.im,
                    (false, true) => z.im,
                }
            });
            let mut e: Vec<f64> = symmetric_eigen(&real).eigenvalues.iter().copied().collect();
            e.sort_by(f64::total_cmp);
            e
        };
        let jw = spectrum(Encoding::JordanWigner);
        let parity = spectrum(Encoding::Parity);
        for (a, b) in jw.iter().zip(&parity) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn products_map_to_products(a in polynomial(), b in polynomial()) {
        let mapper = QubitMapper::for_spin_orbitals(Encoding::Parity, 2, SpinLayout::Interleaved);
        let lhs = mapper.map(&a.mul(&b).unwrap()).unwrap();
        let rhs = mapper.map(&a).unwrap().mul(&mapper.map(&b).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
