//! qLR matrix elements against direct evaluation in the full Fock space, with the
//! projector `|0><0|` and the shift `-<G>` applied literally.

mod common;

use std::cell::RefCell;
use std::collections::HashMap;

use common::{fock_apply, fock_axpy, fock_dot, load, Fock};
use num_complex::Complex64;
use qlrlab::chem::{one_body_operator, rotate_integrals, ActiveSpace, Axis, KappaMatrix, MolecularSystem};
use qlrlab::fermion::FermionPolynomial;
use qlrlab::mapping::{Encoding, QubitMapper, SpinLayout};
use qlrlab::qlr::{build_matrices, build_operator_basis, Evaluator, Parametrization, PlanOptions, QlrPlan};
use qlrlab::sim::{prepare_state, Statevector, TUCCSDAnsatz};

struct Oracle {
    psi: Fock,
    cache: RefCell<HashMap<Vec<Key>, Fock>>,
    h: FermionPolynomial,
    mu: Vec<FermionPolynomial>,
    ops: Vec<(FermionPolynomial, FermionPolynomial, bool, Complex64)>,
}

type Key = (u8, usize, bool);

#[derive(Clone, Copy)]
enum Sym {
    X(usize, bool),
    H,
    Mu(usize),
}

impl Sym {
    fn key(self) -> Key {
        match self {
            Sym::X(l, d) => (0, l, d),
            Sym::H => (1, 0, false),
            Sym::Mu(k) => (2, k, false),
        }
    }

    fn adjoint(self) -> Self {
        match self {
            Sym::X(l, d) => Sym::X(l, !d),
            other => other,
        }
    }
}

impl Oracle {
    fn apply(&self, s: Sym, v: &Fock) -> Fock {
        match s {
            Sym::H => fock_apply(&self.h, v),
            Sym::Mu(k) => fock_apply(&self.mu[k], v),
            Sym::X(l, dagger) => {
                let (g, gd, projected, shift) = &self.ops[l];
                if !projected {
                    return fock_apply(if dagger { gd } else { g }, v);
                }
                // X = G|0><0| - <G>,  X† = |0><0|G† - <G>*
                let mut out = if dagger {
                    let overlap = fock_dot(&self.psi, &fock_apply(gd, v));
                    let mut o = Fock::new();
                    fock_axpy(overlap, &self.psi, &mut o);
                    o
                } else {
                    let overlap = fock_dot(&self.psi, v);
                    let mut o = Fock::new();
                    fock_axpy(overlap, &fock_apply(g, &self.psi), &mut o);
                    o
                };
                let c = if dagger { -shift.conj() } else { -shift };
                fock_axpy(c, v, &mut out);
                out
            }
        }
    }

    /// `syms[0] * syms[1] * ... |0>`, memoized on the operator sequence.
    fn ket(&self, syms: &[Sym]) -> Fock {
        let key: Vec<Key> = syms.iter().map(|s| s.key()).collect();
        if let Some(v) = self.cache.borrow().get(&key) {
            return v.clone();
        }
        let v = match syms.split_first() {
            None => self.psi.clone(),
            Some((first, rest)) => self.apply(*first, &self.ket(rest)),
        };
        self.cache.borrow_mut().insert(key, v.clone());
        v
    }

    /// `<0|syms[0] syms[1] ...|0>` as `<syms[0]† 0| syms[1] ... 0>`.
    fn chain(&self, syms: &[Sym]) -> f64 {
        let left = self.ket(&[syms[0].adjoint()]);
        fock_dot(&left, &self.ket(&syms[1..])).re
    }

    /// `½(<[a,[b,c]]> + <[[a,b],c]>)`
    fn sym_double(&self, a: Sym, b: Sym, c: Sym) -> f64 {
        let inner = self.chain(&[a, b, c]) - self.chain(&[a, c, b]) - self.chain(&[b, c, a]) + self.chain(&[c, b, a]);
        let outer = self.chain(&[a, b, c]) - self.chain(&[b, a, c]) - self.chain(&[c, a, b]) + self.chain(&[c, b, a]);
        0.5 * (inner + outer)
    }

    fn comm(&self, a: Sym, b: Sym) -> f64 {
        self.chain(&[a, b]) - self.chain(&[b, a])
    }
}

fn embed(state: &Statevector, mapper: &QubitMapper, space: &ActiveSpace) -> Fock {
    let inactive: u64 = space.inactive.iter().map(|&i| 0b11u64 << (2 * i)).sum();
    let mut psi = Fock::new();
    for occ in 0u64..(1 << space.n_active_modes()) {
        let amp = state.amplitudes()[mapper.basis_index(occ) as usize];
        if amp.norm() < 1e-15 {
            continue;
        }
        let mut det = inactive;
        for m in 0..space.n_active_modes() {
            if occ >> m & 1 == 1 {
                det |= 1 << (2 * space.active[m / 2] + m % 2);
            }
        }
        psi.insert(det, amp);
    }
    psi
}

fn check(name: &str, sys: &MolecularSystem, space: ActiveSpace) {
    let na = space.active.len();
    let mapper = QubitMapper::for_spin_orbitals(Encoding::Parity, na, SpinLayout::Interleaved);
    let ansatz = TUCCSDAnsatz::new(2 * na, space.n_active_elec, &mapper).unwrap();
    // a generic, non-stationary state and orbital basis
    let theta: Vec<f64> = (0..ansatz.n_params()).map(|k| 0.3 * ((k as f64) * 1.7 + 0.4).sin()).collect();
    let kappa: Vec<f64> = (0..space.rotation_pairs().len()).map(|k| 0.05 * ((k as f64) * 0.9 + 0.2).cos()).collect();
    let rot = rotate_integrals(sys, &KappaMatrix::from_params(&space, &kappa).unwrap()).unwrap();
    let state = prepare_state(&ansatz, &theta).unwrap();
    let psi = embed(&state, &mapper, &space);
    assert!((fock_dot(&psi, &psi).re - 1.0).abs() < 1e-12);
    for p in [Parametrization::Naive, Parametrization::Proj, Parametrization::Allproj] {
        let plan = QlrPlan::build(&rot, &space, p, &mapper, PlanOptions { mirror_lower_triangle: false }).unwrap();
        let problem = build_matrices(&plan, Evaluator::Exact(&state)).unwrap();
        let basis = build_operator_basis(&space, p).unwrap();
        let ops = basis
            .iter()
            .map(|o| {
                let shift = fock_dot(&psi, &fock_apply(&o.full, &psi));
                (o.full.clone(), o.full.adjoint(), o.projected, shift)
            })
            .collect();
        let mu: Vec<FermionPolynomial> =
            Axis::ALL.iter().filter_map(|&a| rot.dipole(a)).map(one_body_operator).collect();
        let oracle = Oracle { psi: psi.clone(), cache: Default::default(), h: rot.hamiltonian(), mu, ops };
        let n = basis.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = oracle.sym_double(Sym::X(i, true), Sym::H, Sym::X(j, false));
                let b = oracle.sym_double(Sym::X(i, true), Sym::H, Sym::X(j, true));
                let s = oracle.comm(Sym::X(i, true), Sym::X(j, false));
                let d = oracle.comm(Sym::X(i, true), Sym::X(j, true));
                for (want, got) in [
                    (a, problem.a.value[(i, j)]),
                    (b, problem.b.value[(i, j)]),
                    (s, problem.sigma.value[(i, j)]),
                    (d, problem.delta.value[(i, j)]),
                ] {
                    assert!((want - got).abs() < 1e-10, "{name} {p} ({i},{j}): {want} vs {got}");
                    worst = worst.max((want - got).abs());
                }
            }
        }
        assert_eq!(problem.moments.len(), 3);
        for (k, m) in problem.moments.iter().enumerate() {
            for l in 0..n {
                let de = oracle.comm(Sym::Mu(k), Sym::X(l, true));
                let ex = oracle.comm(Sym::Mu(k), Sym::X(l, false));
                assert!((de - m.de_excitation[l]).abs() < 1e-10, "{name} {p} moment {k} {l}");
                assert!((ex - m.excitation[l]).abs() < 1e-10, "{name} {p} moment {k} {l}");
            }
        }
        println!("{name} {p}: {n} operators, max deviation {worst:e}");
    }
}

#[test]
fn h2_full_space_matches_fock_space() {
    check("h2", &load("h2"), ActiveSpace::full(2, 2).unwrap());
}

#[test]
fn lih_cas_matches_fock_space() {
    check("lih", &load("lih"), ActiveSpace::new(6, 4, 2, vec![1, 2]).unwrap());
}

#[test]
fn lih_shifted_active_window_matches_fock_space() {
    // inactive orbital above an active one exercises the frozen-mode signs
    check("lih", &load("lih"), ActiveSpace::new(6, 4, 2, vec![0, 2]).unwrap());
}

#[test]
fn beh2_cas_matches_fock_space() {
    check("beh2", &load("beh2"), ActiveSpace::new(7, 6, 4, vec![1, 2, 3, 4]).unwrap());
}
