//! Exact-mode qLR against full configuration interaction and structural checks.

mod common;

use common::{load, oracle_ints};
use nalgebra::DMatrix;
use qlrlab::chem::{rotate_integrals, ActiveSpace, Axis, KappaMatrix, MolecularSystem};
use qlrlab::mapping::{Encoding, QubitMapper, SpinLayout};
use qlrlab::qlr::{
    build_matrices, solve, symmetry_defect, Evaluator, Parametrization, PlanOptions, QlrPlan, QlrProblem, QlrSolution,
};
use qlrlab::sim::{oo_vqe, prepare_state, Statevector, TUCCSDAnsatz, VqeOptions};

struct Fixture {
    rotated: MolecularSystem,
    space: ActiveSpace,
    mapper: QubitMapper,
    state: Statevector,
    energy: f64,
}

fn ground_state(sys: &MolecularSystem, space: ActiveSpace) -> Fixture {
    let na = space.active.len();
    let mapper = QubitMapper::for_spin_orbitals(Encoding::Parity, na, SpinLayout::Interleaved);
    let ansatz = TUCCSDAnsatz::new(2 * na, space.n_active_elec, &mapper).unwrap();
    let nk = space.rotation_pairs().len();
    let gs = oo_vqe(sys, &space, &ansatz, &mapper, &vec![0.0; ansatz.n_params()], &vec![0.0; nk], &VqeOptions::default()).unwrap();
    let rotated = rotate_integrals(sys, &KappaMatrix::from_params(&space, &gs.kappa).unwrap()).unwrap();
    let state = prepare_state(&ansatz, &gs.theta).unwrap();
    Fixture { rotated, space, mapper, state, energy: gs.energy }
}

fn run(f: &Fixture, p: Parametrization, mirror: bool) -> (QlrProblem, QlrSolution) {
    let plan = QlrPlan::build(&f.rotated, &f.space, p, &f.mapper, PlanOptions { mirror_lower_triangle: mirror }).unwrap();
    let problem = build_matrices(&plan, Evaluator::Exact(&f.state)).unwrap();
    let sol = solve(&problem).unwrap();
    (problem, sol)
}

fn fci(sys: &MolecularSystem) -> fci_oracle::FciSolution {
    let (h, g) = oracle_ints(sys);
    let ints = fci_oracle::Integrals { n_orb: sys.n_orb, h: &h, g: &g, e_core: sys.e_core };
    fci_oracle::solve(&ints, sys.n_elec / 2, sys.n_elec / 2)
}

fn h2() -> Fixture {
    ground_state(&load("h2"), ActiveSpace::full(2, 2).unwrap())
}

#[test]
fn h2_naive_energies_are_the_fci_singlet_gaps() {
    let sys = load("h2");
    let f = h2();
    let exact = fci(&sys);
    assert!((f.energy - exact.energies[0]).abs() < 1e-8);
    let (_, sol) = run(&f, Parametrization::Naive, true);
    assert!(sol.valid);
    let singlets = exact.gaps_with_spin(0.0, 1e-6);
    let triplets = exact.gaps_with_spin(1.0, 1e-6);
    assert_eq!(sol.omega.len(), singlets.len());
    for (w, g) in sol.omega.iter().zip(&singlets) {
        assert!((w - g).abs() < 1e-8, "{w} vs {g}");
    }
    for t in &triplets {
        assert!(sol.omega.iter().all(|w| (w - t).abs() > 1e-4), "triplet gap {t} present");
    }
}

#[test]
fn h2_oscillator_strengths_match_fci_transition_dipoles() {
    let sys = load("h2");
    let f = h2();
    let exact = fci(&sys);
    let (_, sol) = run(&f, Parametrization::Naive, true);
    let n = sys.n_orb;
    let singlet_states: Vec<usize> =
        (1..exact.energies.len()).filter(|&k| exact.s2[k].abs() < 1e-6).collect();
    for (k, &state) in singlet_states.iter().enumerate() {
        let mut total = 0.0;
        for axis in Axis::ALL {
            let d = sys.dipole(axis).unwrap();
            let flat: Vec<f64> = (0..n * n).map(|i| d[(i / n, i % n)]).collect();
            total += exact.one_body(n, &flat, 0, state).powi(2);
        }
        let want = 2.0 / 3.0 * (exact.energies[state] - exact.energies[0]) * total;
        let got = sol.oscillator_strengths[k].unwrap();
        assert!((got - want).abs() < 1e-7, "state {k}: {got} vs {want}");
    }
}

#[test]
fn full_space_proj_and_allproj_coincide() {
    for name in ["h2", "h4"] {
        let sys = load(name);
        let f = ground_state(&sys, ActiveSpace::full(sys.n_orb, sys.n_elec).unwrap());
        let (_, proj) = run(&f, Parametrization::Proj, true);
        let (_, all) = run(&f, Parametrization::Allproj, true);
        assert_eq!(proj.omega.len(), all.omega.len());
        for (a, b) in proj.omega.iter().zip(&all.omega) {
            assert!((a - b).abs() < 1e-10, "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn exact_matrices_keep_their_symmetries() {
    let cases = [
        ("h2", ActiveSpace::full(2, 2).unwrap()),
        ("lih", ActiveSpace::new(6, 4, 2, vec![1, 2]).unwrap()),
        ("beh2", ActiveSpace::new(7, 6, 4, vec![1, 2, 3, 4]).unwrap()),
    ];
    for (name, space) in cases {
        let f = ground_state(&load(name), space);
        for p in [Parametrization::Naive, Parametrization::Proj, Parametrization::Allproj] {
            let (unmirrored, _) = run(&f, p, false);
            let (mirrored, _) = run(&f, p, true);
            assert!(symmetry_defect(&unmirrored) < 1e-10, "{name} {p}");
            assert_eq!(symmetry_defect(&mirrored), 0.0, "{name} {p}");
            let diff = (&unmirrored.a.value - &mirrored.a.value).amax();
            assert!(diff < 1e-10, "{name} {p}: mirrored A differs by {diff}");
        }
    }
}

#[test]
fn proj_b_vanishes_in_full_space_at_the_exact_state() {
    let f = h2();
    let (p, _) = run(&f, Parametrization::Proj, true);
    assert!(p.b.value.amax() < 1e-6, "max |B| = {}", p.b.value.amax());
    let (naive, _) = run(&f, Parametrization::Naive, true);
    assert!(naive.b.value.amax() > 1e-3);
}

#[test]
fn excitation_energies_do_not_depend_on_the_starting_orbitals() {
    let sys = load("h2");
    let base = h2();
    let (_, reference) = run(&base, Parametrization::Naive, true);
    let mut k = DMatrix::zeros(2, 2);
    k[(1, 0)] = 0.3;
    k[(0, 1)] = -0.3;
    let rotated = rotate_integrals(&sys, &KappaMatrix::from_matrix(k).unwrap()).unwrap();
    let f = ground_state(&rotated, ActiveSpace::full(2, 2).unwrap());
    assert!((f.energy - base.energy).abs() < 1e-8);
    let (_, sol) = run(&f, Parametrization::Naive, true);
    for (a, b) in sol.omega.iter().zip(&reference.omega) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn negative_hessian_marks_the_solution_invalid() {
    let f = ground_state(&load("lih"), ActiveSpace::new(6, 4, 2, vec![1, 2]).unwrap());
    let (mut problem, sol) = run(&f, Parametrization::Naive, true);
    assert!(sol.valid);
    assert!(sol.hessian_eigs[0] > 0.0);
    problem.a.value[(0, 0)] -= 10.0;
    let broken = solve(&problem).unwrap();
    assert!(!broken.valid);
    assert!(broken.z.is_empty());
    assert!(broken.oscillator_strengths.iter().all(Option::is_none));
}
