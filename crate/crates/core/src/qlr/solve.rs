//! The qLR generalized eigenproblem, oscillator strengths and broadened spectra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlr::plan::{QlrProblem, TransitionMoments};

pub const HARTREE_TO_EV: f64 = 27.211386245988;
/// Excitation energies at or below this (Hartree) are treated as numerical zero modes.
pub const ZERO_MODE: f64 = 1e-10;
/// Hessian eigenvalues above `-HESSIAN_TOLERANCE` count as non-negative.
pub const HESSIAN_TOLERANCE: f64 = 1e-10;
/// Largest accepted condition number of the metric `S^[2]`.
pub const MAX_METRIC_CONDITION: f64 = 1e12;
pub const DEFAULT_FWHM_EV: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlrSolution {
    /// Ascending excitation energies in Hartree.
    pub omega: Vec<f64>,
    pub omega_ev: Vec<f64>,
    /// Excitation vectors normalized to `βᵀ S^[2] β = 1`; empty when not available.
    pub z: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `None` where the norm `<[O_k, O_k†]>` is not positive or no dipoles were given.
    pub oscillator_strengths: Vec<Option<f64>>,
    pub valid: bool,
    /// Ascending eigenvalues of `E^[2]`.
    pub hessian_eigs: Vec<f64>,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn antisym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

fn blocks(tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>) -> DMatrix<f64> {
    let n = tl.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(tl);
    m.view_mut((0, n), (n, n)).copy_from(tr);
    m.view_mut((n, 0), (n, n)).copy_from(bl);
    m.view_mut((n, n), (n, n)).copy_from(br);
    m
}

/// `(E^[2], S^[2])` from the problem's matrices. Independently measured elements are
/// symmetrized here; under Pauli saving or exact evaluation this changes nothing.
pub fn response_matrices(p: &QlrProblem) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = sym(&p.a.value);
    let b = sym(&p.b.value);
    let s = sym(&p.sigma.value);
    let d = antisym(&p.delta.value);
    (blocks(&a, &b, &b, &a), blocks(&s, &d, &(-&d), &(-&s)))
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if max == 0.0 || min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Symmetric eigendecomposition. nalgebra's implicit QR can return NaN on sparse
/// matrices with an exactly zero diagonal; a diagonal shift avoids that without
/// changing the eigenvectors.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().chain(eig.eigenvectors.iter()).all(|x| x.is_finite()) {
        return eig;
    }
    let shift = 1.0 + m.amax();
    let n = m.nrows();
    let mut eig = (m + DMatrix::identity(n, n) * shift).symmetric_eigen();
    eig.eigenvalues.add_scalar_mut(-shift);
    eig
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = symmetric_eigen(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Solves `E^[2] β = ω S^[2] β`, keeping positive roots above [`ZERO_MODE`].
///
/// With a positive definite Hessian `E = L Lᵀ` the problem becomes the symmetric
/// eigenproblem of `L⁻¹ S L⁻ᵀ` with eigenvalues `1/ω`. Otherwise the run is flagged
/// invalid and only the real positive roots of `S⁻¹ E` are reported.
pub fn solve(problem: &QlrProblem) -> Result<QlrSolution> {
    let n = problem.n_operators();
    for m in [&problem.a.value, &problem.b.value, &problem.sigma.value, &problem.delta.value] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!("expected {n}x{n} matrices, got {}x{}", m.nrows(), m.ncols())));
        }
    }
    let (e, s) = response_matrices(problem);
    let cond = condition_number(&s);
    if !(cond < MAX_METRIC_CONDITION) {
        return Err(Error::Singular(cond));
    }
    let hessian_eigs = sorted_eigenvalues(&e);
    let valid = hessian_eigs.first().is_none_or(|&m| m >= -HESSIAN_TOLERANCE);
    let mut roots: Vec<(f64, Option<DVector<f64>>)> = Vec::new();
    match e.clone().cholesky().filter(|_| valid) {
        Some(chol) => {
            let l = chol.l();
            let linv = l.clone().try_inverse().ok_or(Error::Singular(f64::INFINITY))?;
            let m = sym(&(&linv * &s * linv.transpose()));
            let eig = symmetric_eigen(&m);
            for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda <= 1.0 / f64::MAX {
                    continue;
                }
                let omega = 1.0 / lambda;
                if omega <= ZERO_MODE {
                    continue;
                }
                let mut beta = linv.transpose() * eig.eigenvectors.column(i) / lambda.sqrt();
                let imax = beta.iamax();
                if beta[imax] < 0.0 {
                    beta = -beta;
                }
                roots.push((omega, Some(beta)));
            }
        }
        None => {
            let sinv = s.clone().lu().try_inverse().ok_or(Error::Singular(cond))?;
            for ev in (sinv * &e).complex_eigenvalues().iter() {
                if ev.im.abs() <= 1e-8 * ev.re.abs().max(1.0) && ev.re > ZERO_MODE {
                    roots.push((ev.re, None));
                }
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let omega: Vec<f64> = roots.iter().map(|r| r.0).collect();
    let (z, y) = if roots.iter().all(|r| r.1.is_some()) {
        roots
            .iter()
            .map(|r| {
                let b = r.1.as_ref().expect("checked above");
                (b.rows(0, n).iter().copied().collect(), b.rows(n, n).iter().copied().collect())
            })
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };
    let mut sol = QlrSolution {
        omega_ev: omega.iter().map(|w| w * HARTREE_TO_EV).collect(),
        oscillator_strengths: vec![None; omega.len()],
        omega,
        z,
        y,
        valid,
        hessian_eigs,
    };
    if !problem.moments.is_empty() && !sol.z.is_empty() {
        sol.oscillator_strengths = oscillator_strengths(&sol, problem, &problem.moments)?;
    }
    Ok(sol)
}

/// `f_k = 2/3 ω_k Σ_γ <[μ_γ, Õ_k]>²` with `O_k = Σ_l (Z_kl X_l† + Y_kl X_l)` normalized by
/// `<[O_k, O_k†]> = βᵀ S^[2] β`.
pub fn oscillator_strengths(
    solution: &QlrSolution,
    problem: &QlrProblem,
    moments: &[TransitionMoments],
) -> Result<Vec<Option<f64>>> {
    let n = problem.n_operators();
    if solution.z.len() != solution.omega.len() {
        return Err(Error::Dimension("solution carries no excitation vectors".into()));
    }
    for m in moments {
        if m.de_excitation.len() != n || m.excitation.len() != n {
            return Err(Error::SizeMismatch(n, m.de_excitation.len()));
        }
    }
    let (_, s) = response_matrices(problem);
    let mut out = Vec::with_capacity(solution.omega.len());
    for (k, &omega) in solution.omega.iter().enumerate() {
        let (z, y) = (&solution.z[k], &solution.y[k]);
        let beta = DVector::from_iterator(2 * n, z.iter().chain(y.iter()).copied());
        let norm = beta.dot(&(&s * &beta));
        if !(norm > 0.0) {
            out.push(None);
            continue;
        }
        let total: f64 = moments
            .iter()
            .map(|m| {
                let t: f64 = (0..n).map(|l| z[l] * m.de_excitation[l] + y[l] * m.excitation[l]).sum::<f64>() / norm.sqrt();
                t * t
            })
            .sum();
        out.push(Some(2.0 / 3.0 * omega * total));
    }
    Ok(out)
}

/// Sum of Lorentzians (height `f_k` at `ω_k`) on an energy grid in eV.
pub fn spectrum(solution: &QlrSolution, fwhm_ev: f64, grid_ev: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !solution.valid || solution.omega.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if !(fwhm_ev > 0.0) {
        return Err(Error::Dimension(format!("broadening must be positive, got {fwhm_ev}")));
    }
    let g2 = (fwhm_ev / 2.0).powi(2);
    let peaks: Vec<(f64, f64)> = solution
        .omega_ev
        .iter()
        .zip(&solution.oscillator_strengths)
        .map(|(&w, f)| (w, f.unwrap_or(0.0)))
        .collect();
    Ok(grid_ev
        .iter()
        .map(|&x| (x, peaks.iter().map(|&(w, f)| f * g2 / ((x - w).powi(2) + g2)).sum()))
        .collect())
}

/// Evenly spaced grid including both ends.
pub fn energy_grid(min_ev: f64, max_ev: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min_ev],
        _ => (0..points).map(|i| min_ev + (max_ev - min_ev) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::Axis;
    use crate::qlr::operators::{OperatorKind, Parametrization};
    use crate::qlr::plan::MatrixEstimate;

    fn est(m: DMatrix<f64>) -> MatrixEstimate {
        let z = DMatrix::zeros(m.nrows(), m.ncols());
        MatrixEstimate { value: m, std: z.clone(), std_nc: z }
    }

    fn problem(a: DMatrix<f64>, b: DMatrix<f64>, s: DMatrix<f64>) -> QlrProblem {
        let n = a.nrows();
        QlrProblem {
            parametrization: Parametrization::Naive,
            labels: (0..n).map(|i| i.to_string()).collect(),
            kinds: vec![OperatorKind::Single; n],
            a: est(a),
            b: est(b),
            sigma: est(s),
            delta: est(DMatrix::zeros(n, n)),
            moments: Vec::new(),
            pauli_saving: None,
        }
    }

    #[test]
    fn scalar_problem() {
        let p = problem(DMatrix::from_element(1, 1, 2.0), DMatrix::zeros(1, 1), DMatrix::identity(1, 1));
        let s = solve(&p).unwrap();
        assert_eq!(s.omega.len(), 1);
        assert!((s.omega[0] - 2.0).abs() < 1e-14);
        assert!(s.valid);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = solve(&problem(a, DMatrix::zeros(2, 2), DMatrix::identity(2, 2))).unwrap();
        assert!((s.omega[0] - 1.0).abs() < 1e-12 && (s.omega[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rpa_pair_with_b() {
        // ω = sqrt((a-b)(a+b)) for one operator with unit metric
        let s = solve(&problem(DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 0.5), DMatrix::identity(1, 1)))
            .unwrap();
        assert!((s.omega[0] - (1.5f64 * 2.5).sqrt()).abs() < 1e-12);
        let (z, y) = (s.z[0][0], s.y[0][0]);
        assert!((z * z - y * y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_hessian_is_invalid() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.5]);
        let s = solve(&problem(a, b, DMatrix::identity(2, 2))).unwrap();
        assert!(!s.valid);
        assert!(s.hessian_eigs[0] < 0.0);
        assert!(s.z.is_empty());
    }

    #[test]
    fn singular_metric_is_an_error() {
        let r = solve(&problem(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)));
        assert!(matches!(r, Err(Error::Singular(_))));
    }

    #[test]
    fn oscillator_strength_arithmetic() {
        let mut p = problem(DMatrix::from_element(1, 1, 0.5), DMatrix::zeros(1, 1), DMatrix::identity(1, 1));
        p.moments = Axis::ALL
            .iter()
            .map(|&axis| TransitionMoments { axis, de_excitation: vec![1.0], excitation: vec![0.0] })
            .collect();
        let s = solve(&p).unwrap();
        assert!((s.oscillator_strengths[0].unwrap() - 1.0).abs() < 1e-14);
        for m in &mut p.moments {
            m.de_excitation[0] = 0.0;
        }
        assert_eq!(solve(&p).unwrap().oscillator_strengths[0], Some(0.0));
    }

    #[test]
    fn spectrum_shapes() {
        let sol = QlrSolution {
            omega: vec![0.2, 0.6],
            omega_ev: vec![0.2 * HARTREE_TO_EV, 0.6 * HARTREE_TO_EV],
            z: vec![vec![1.0]; 2],
            y: vec![vec![0.0]; 2],
            oscillator_strengths: vec![Some(0.3), Some(0.1)],
            valid: true,
            hessian_eigs: vec![1.0],
        };
        let grid = energy_grid(0.0, 20.0, 2001);
        let curve = spectrum(&sol, DEFAULT_FWHM_EV, &grid).unwrap();
        let maxima: Vec<f64> = (1..curve.len() - 1)
            .filter(|&i| curve[i].1 > curve[i - 1].1 && curve[i].1 >= curve[i + 1].1)
            .map(|i| curve[i].0)
            .collect();
        assert_eq!(maxima.len(), 2);
        assert!((maxima[0] - sol.omega_ev[0]).abs() <= 0.01 + 1e-9);
        assert!((maxima[1] - sol.omega_ev[1]).abs() <= 0.01 + 1e-9);
        let mut dark = sol.clone();
        dark.oscillator_strengths = vec![Some(0.0); 2];
        assert!(spectrum(&dark, 0.5, &grid).unwrap().iter().all(|p| p.1 == 0.0));
        dark.valid = false;
        assert!(matches!(spectrum(&dark, 0.5, &grid), Err(Error::EmptySpectrum)));
    }

    /// Real symmetric form of a mapped three-body hopping term. nalgebra's plain
    /// symmetric eigensolver returns NaN for this matrix.
    fn sparse_hermitian() -> DMatrix<f64> {
        use crate::fermion::{FermionPolynomial, Ladder};
        use crate::mapping::{Encoding, QubitMapper};
        use crate::sim::Statevector;
        use num_complex::Complex64;
        let l = |mode: u16, dagger| Ladder { mode, dagger };
        let p = FermionPolynomial::term(4, Complex64::new(-0.839579, 0.277802), &[l(2, true), l(1, false), l(0, false)])
            .unwrap();
        let h = QubitMapper::identity_order(Encoding::JordanWigner, 4).map(&p.add(&p.adjoint()).unwrap()).unwrap();
        let d = 16;
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(d, d);
        for c in 0..d {
            for (t, coeff) in h.iter() {
                let v = Statevector::basis(4, c as u64).apply_pauli(t).unwrap();
                for (r, a) in v.amplitudes().iter().enumerate() {
                    m[(r, c)] += coeff * a;
                }
            }
        }
        DMatrix::from_fn(2 * d, 2 * d, |r, c| {
            let z = m[(r % d, c % d)];
            match (r < d, c < d) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    }

    #[test]
    fn eigensolver_survives_sparse_zero_diagonal() {
        let m = sparse_hermitian();
        let eig = symmetric_eigen(&m);
        assert!(eig.eigenvalues.iter().all(|x| x.is_finite()));
        let recon = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues) * eig.eigenvectors.transpose();
        assert!((recon - &m).amax() < 1e-12);
        let e = sorted_eigenvalues(&m);
        assert!((e[0] + e[e.len() - 1]).abs() < 1e-12);
    }
}
