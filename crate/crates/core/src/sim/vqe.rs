//! Orbital-optimized VQE with a shot-free simulator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chem::{active_system, rotate_integrals, ActiveSpace, KappaMatrix, MolecularSystem};
use crate::error::{Error, Result};
use crate::fermion::FermionPolynomial;
use crate::mapping::QubitMapper;
use crate::pauli::PauliSum;
use crate::sim::ansatz::{prepare_state, TUCCSDAnsatz};
use crate::sim::statevector::{exact_expectation, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqeOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the gradient infinity norm.
    pub gradient_tolerance: f64,
    pub finite_difference_step: f64,
    pub optimize_orbitals: bool,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self { max_iterations: 500, gradient_tolerance: 1e-7, finite_difference_step: 1e-6, optimize_orbitals: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub theta: Vec<f64>,
    /// Rotation parameters in [`ActiveSpace::rotation_pairs`] order.
    pub kappa: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub log: Vec<IterationRecord>,
}

/// Spin-summed one- and two-body reduced density matrices of an active state,
/// `D_vw = <E_vw>` and `d_vwxy = <E_vw E_xy - delta_wx E_vy>`.
#[derive(Debug, Clone)]
pub struct ActiveRdms {
    pub n: usize,
    pub d1: DMatrix<f64>,
    pub d2: Vec<f64>,
}

/// Mapped singlet operators `E_vw` and `e_vwxy` for density matrices.
#[derive(Debug, Clone)]
pub struct RdmOperators {
    n: usize,
    e1: Vec<PauliSum>,
    e2: Vec<PauliSum>,
}

impl RdmOperators {
    pub fn new(n_active: usize, mapper: &QubitMapper) -> Result<Self> {
        let n = n_active;
        let mut e_ops = Vec::with_capacity(n * n);
        for v in 0..n {
            for w in 0..n {
                e_ops.push(FermionPolynomial::singlet_excitation(n, v, w)?);
            }
        }
        let e1 = e_ops.iter().map(|e| mapper.map(e)).collect::<Result<Vec<_>>>()?;
        let mut e2 = Vec::with_capacity(n.pow(4));
        for v in 0..n {
            for w in 0..n {
                for x in 0..n {
                    for y in 0..n {
                        let mut op = e_ops[v * n + w].mul(&e_ops[x * n + y])?;
                        if w == x {
                            op = op.sub(&e_ops[v * n + y])?;
                        }
                        e2.push(mapper.map(&op)?);
                    }
                }
            }
        }
        Ok(Self { n, e1, e2 })
    }

    pub fn evaluate(&self, state: &Statevector) -> Result<ActiveRdms> {
        let n = self.n;
        let mut d1 = DMatrix::zeros(n, n);
        for v in 0..n {
            for w in 0..n {
                d1[(v, w)] = exact_expectation(state, &self.e1[v * n + w])?;
            }
        }
        let d2 = self.e2.iter().map(|op| exact_expectation(state, op)).collect::<Result<Vec<_>>>()?;
        Ok(ActiveRdms { n, d1, d2 })
    }
}

impl ActiveRdms {
    /// Energy of these densities with the given active integrals (including their `e_core`).
    pub fn energy(&self, active: &MolecularSystem) -> f64 {
        let n = self.n;
        let mut e = active.e_core;
        for v in 0..n {
            for w in 0..n {
                e += active.h[(v, w)] * self.d1[(v, w)];
            }
        }
        let g = active.g_flat();
        for (k, d) in self.d2.iter().enumerate() {
            e += 0.5 * g[k] * d;
        }
        e
    }
}

struct Problem<'a> {
    sys: &'a MolecularSystem,
    space: &'a ActiveSpace,
    ansatz: &'a TUCCSDAnsatz,
    mapper: &'a QubitMapper,
    rdm_ops: RdmOperators,
    n_theta: usize,
}

impl Problem<'_> {
    fn active_at(&self, kappa: &[f64]) -> Result<MolecularSystem> {
        if kappa.is_empty() {
            return active_system(self.sys, self.space);
        }
        let k = KappaMatrix::from_params(self.space, kappa)?;
        active_system(&rotate_integrals(self.sys, &k)?, self.space)
    }

    fn hamiltonian_at(&self, kappa: &[f64]) -> Result<PauliSum> {
        let a = self.active_at(kappa)?;
        self.mapper.map(&a.hamiltonian())
    }

    fn energy(&self, x: &[f64]) -> Result<f64> {
        let (theta, kappa) = x.split_at(self.n_theta);
        let h = self.hamiltonian_at(kappa)?;
        exact_expectation(&prepare_state(self.ansatz, theta)?, &h)
    }

    fn gradient(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        let (theta, kappa) = x.split_at(self.n_theta);
        let mut g = vec![0.0; x.len()];
        let h = self.hamiltonian_at(kappa)?;
        let mut t = theta.to_vec();
        for k in 0..self.n_theta {
            let t0 = t[k];
            t[k] = t0 + step;
            let ep = exact_expectation(&prepare_state(self.ansatz, &t)?, &h)?;
            t[k] = t0 - step;
            let em = exact_expectation(&prepare_state(self.ansatz, &t)?, &h)?;
            t[k] = t0;
            g[k] = (ep - em) / (2.0 * step);
        }
        if !kappa.is_empty() {
            let rdms = self.rdm_ops.evaluate(&prepare_state(self.ansatz, theta)?)?;
            let mut kp = kappa.to_vec();
            for k in 0..kappa.len() {
                let k0 = kp[k];
                kp[k] = k0 + step;
                let ep = rdms.energy(&self.active_at(&kp)?);
                kp[k] = k0 - step;
                let em = rdms.energy(&self.active_at(&kp)?);
                kp[k] = k0;
                g[self.n_theta + k] = (ep - em) / (2.0 * step);
            }
        }
        Ok(g)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `<A(θ)|H(κ)|A(θ)>` with BFGS and central finite-difference gradients.
/// `kappa0` is ignored (and κ held at zero) when orbital optimization is disabled.
pub fn oo_vqe(
    sys: &MolecularSystem,
    space: &ActiveSpace,
    ansatz: &TUCCSDAnsatz,
    mapper: &QubitMapper,
    theta0: &[f64],
    kappa0: &[f64],
    opts: &VqeOptions,
) -> Result<GroundState> {
    space.validate(sys.n_orb)?;
    if theta0.len() != ansatz.n_params() {
        return Err(Error::ParameterLength { expected: ansatz.n_params(), got: theta0.len() });
    }
    let n_kappa = if opts.optimize_orbitals { space.rotation_pairs().len() } else { 0 };
    if opts.optimize_orbitals && kappa0.len() != n_kappa {
        return Err(Error::ParameterLength { expected: n_kappa, got: kappa0.len() });
    }
    if mapper.n_qubits() != space.n_active_modes() || ansatz.n_qubits() != mapper.n_qubits() {
        return Err(Error::SizeMismatch(space.n_active_modes(), mapper.n_qubits()));
    }
    let problem = Problem {
        sys,
        space,
        ansatz,
        mapper,
        rdm_ops: RdmOperators::new(space.active.len(), mapper)?,
        n_theta: ansatz.n_params(),
    };
    let mut x: Vec<f64> = theta0.iter().copied().chain(kappa0.iter().copied().take(n_kappa)).collect();
    let dim = x.len();
    let step = opts.finite_difference_step;
    let mut e = problem.energy(&x)?;
    let mut g = problem.gradient(&x, step)?;
    let mut hinv = DMatrix::<f64>::identity(dim, dim);
    let mut log = vec![IterationRecord { iteration: 0, energy: e, gradient_norm: inf_norm(&g) }];
    let mut iterations = 0;
    while inf_norm(&g) >= opts.gradient_tolerance {
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged { iterations, gradient: inf_norm(&g) });
        }
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut d = -(&hinv * &gv);
        let mut slope = d.dot(&gv);
        if slope >= 0.0 {
            hinv = DMatrix::identity(dim, dim);
            d = -gv.clone();
            slope = d.dot(&gv);
        }
        // Armijo backtracking, allowing for roundoff in the energy itself
        let noise_floor = 1e-13 * e.abs().max(1.0);
        let mut alpha = 1.0;
        let (x_new, e_new) = loop {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
            let et = problem.energy(&trial)?;
            if et <= e + 1e-4 * alpha * slope + noise_floor {
                break (trial, et);
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return Err(Error::NotConverged { iterations, gradient: inf_norm(&g) });
            }
        };
        let g_new = problem.gradient(&x_new, step)?;
        let s = DVector::from_iterator(dim, x_new.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(dim, g_new.iter().zip(&g).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-16 {
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(dim, dim);
            let left = &id - rho * &s * y.transpose();
            let right = &id - rho * &y * s.transpose();
            hinv = &left * &hinv * &right + rho * &s * s.transpose();
        }
        x = x_new;
        e = e_new;
        g = g_new;
        log.push(IterationRecord { iteration: iterations, energy: e, gradient_norm: inf_norm(&g) });
    }
    let (theta, kappa) = x.split_at(problem.n_theta);
    let kappa = if opts.optimize_orbitals { kappa.to_vec() } else { vec![0.0; space.rotation_pairs().len()] };
    Ok(GroundState { theta: theta.to_vec(), kappa, energy: e, iterations, gradient_norm: inf_norm(&g), log })
}
