//! Brute-force full configuration interaction over alpha/beta string determinants.
//!
//! This crate exists to check the main library against an independent route. It
//! shares no code with it: determinants are stored as separate alpha and beta
//! occupation strings over spatial orbitals, the Hamiltonian is assembled by
//! applying singlet excitation operators `E_pq` directly, and everything is
//! diagonalized densely.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

/// Spatial-orbital integrals in chemists' notation, `g[((p*n+q)*n+r)*n+s] = (pq|rs)`.
#[derive(Debug, Clone, Copy)]
pub struct Integrals<'a> {
    pub n_orb: usize,
    pub h: &'a [f64],
    pub g: &'a [f64],
    pub e_core: f64,
}

/// Determinant as (alpha string, beta string); bit `p` set means orbital `p` occupied.
pub type Det = (u64, u64);

#[derive(Debug, Clone)]
pub struct FciSolution {
    pub dets: Vec<Det>,
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in the `dets` basis.
    pub vectors: DMatrix<f64>,
    /// `<S^2>` for each eigenvector.
    pub s2: Vec<f64>,
}

fn strings(n_orb: usize, n_el: usize) -> Vec<u64> {
    (0u64..(1u64 << n_orb))
        .filter(|s| s.count_ones() as usize == n_el)
        .collect()
}

/// `a^dagger_p a_q` on one spin string. Returns the sign and the new string.
fn excite(s: u64, p: usize, q: usize) -> Option<(f64, u64)> {
    if s & (1 << q) == 0 {
        return None;
    }
    let mut sign = if (s & ((1 << q) - 1)).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    let s1 = s & !(1 << q);
    if s1 & (1 << p) != 0 {
        return None;
    }
    if (s1 & ((1 << p) - 1)).count_ones() % 2 == 1 {
        sign = -sign;
    }
    Some((sign, s1 | (1 << p)))
}

/// `E_pq |det>` as a list of (coefficient, det).
fn apply_e(det: Det, p: usize, q: usize) -> Vec<(f64, Det)> {
    let mut out = Vec::with_capacity(2);
    if let Some((s, a)) = excite(det.0, p, q) {
        out.push((s, (a, det.1)));
    }
    if let Some((s, b)) = excite(det.1, p, q) {
        out.push((s, (det.0, b)));
    }
    out
}

fn idx4(n: usize, p: usize, q: usize, r: usize, s: usize) -> usize {
    ((p * n + q) * n + r) * n + s
}

/// Dense Hamiltonian in the given determinant list.
pub fn hamiltonian_matrix(ints: &Integrals<'_>, dets: &[Det]) -> DMatrix<f64> {
    let n = ints.n_orb;
    let index: HashMap<Det, usize> = dets.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let dim = dets.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (col, &det) in dets.iter().enumerate() {
        h[(col, col)] += ints.e_core;
        for p in 0..n {
            for q in 0..n {
                let hpq = ints.h[p * n + q];
                for (c, d) in apply_e(det, p, q) {
                    if let Some(&row) = index.get(&d) {
                        h[(row, col)] += hpq * c;
                    }
                }
            }
        }
        // 1/2 sum g_pqrs (E_pq E_rs - delta_qr E_ps)
        for r in 0..n {
            for s in 0..n {
                let first = apply_e(det, r, s);
                if first.is_empty() {
                    continue;
                }
                for p in 0..n {
                    for q in 0..n {
                        let g = ints.g[idx4(n, p, q, r, s)];
                        if g == 0.0 {
                            continue;
                        }
                        for &(c1, d1) in &first {
                            for (c2, d2) in apply_e(d1, p, q) {
                                if let Some(&row) = index.get(&d2) {
                                    h[(row, col)] += 0.5 * g * c1 * c2;
                                }
                            }
                        }
                    }
                }
            }
        }
        for p in 0..n {
            for s in 0..n {
                for q in 0..n {
                    let g = ints.g[idx4(n, p, q, q, s)];
                    if g == 0.0 {
                        continue;
                    }
                    for (c, d) in apply_e(det, p, s) {
                        if let Some(&row) = index.get(&d) {
                            h[(row, col)] -= 0.5 * g * c;
                        }
                    }
                }
            }
        }
    }
    h
}

/// `S^2` in the determinant list, built from `S_- S_+ + S_z (S_z + 1)`.
pub fn s2_matrix(n_orb: usize, dets: &[Det]) -> DMatrix<f64> {
    let index: HashMap<Det, usize> = dets.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let dim = dets.len();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (col, &(a, b)) in dets.iter().enumerate() {
        let sz = 0.5 * (a.count_ones() as f64 - b.count_ones() as f64);
        m[(col, col)] += sz * (sz + 1.0);
        // S_+ = sum_p a+_{p alpha} a_{p beta}; S_- = sum_q a+_{q beta} a_{q alpha}.
        // Determinant ordering puts every alpha operator before every beta one.
        for p in 0..n_orb {
            if b & (1 << p) == 0 || a & (1 << p) != 0 {
                continue;
            }
            let mut sign = parity(a.count_ones()) * parity((b & ((1 << p) - 1)).count_ones());
            let b1 = b & !(1 << p);
            sign *= parity((a & ((1 << p) - 1)).count_ones());
            let a1 = a | (1 << p);
            for q in 0..n_orb {
                if a1 & (1 << q) == 0 || b1 & (1 << q) != 0 {
                    continue;
                }
                let mut s2 = sign * parity((a1 & ((1 << q) - 1)).count_ones());
                let a2 = a1 & !(1 << q);
                s2 *= parity(a2.count_ones()) * parity((b1 & ((1 << q) - 1)).count_ones());
                let b2 = b1 | (1 << q);
                if let Some(&row) = index.get(&(a2, b2)) {
                    m[(row, col)] += s2;
                }
            }
        }
    }
    m
}

fn parity(k: u32) -> f64 {
    if k % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

fn diagonalize(ints: &Integrals<'_>, dets: Vec<Det>) -> FciSolution {
    let h = hamiltonian_matrix(ints, &dets);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dets.len(), dets.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let s2m = s2_matrix(ints.n_orb, &dets);
    let s2 = (0..dets.len())
        .map(|k| {
            let v = vectors.column(k);
            (v.transpose() * &s2m * v)[(0, 0)]
        })
        .collect();
    FciSolution { dets, energies, vectors, s2 }
}

/// Full CI in the (n_alpha, n_beta) sector.
pub fn solve(ints: &Integrals<'_>, n_alpha: usize, n_beta: usize) -> FciSolution {
    let sa = strings(ints.n_orb, n_alpha);
    let sb = strings(ints.n_orb, n_beta);
    let dets = sa.iter().flat_map(|&a| sb.iter().map(move |&b| (a, b))).collect();
    diagonalize(ints, dets)
}

/// CI restricted to determinants with `doubly_occupied` orbitals filled and `empty`
/// orbitals vacant (a CASCI in the full-space determinant basis).
pub fn solve_restricted(
    ints: &Integrals<'_>,
    n_alpha: usize,
    n_beta: usize,
    doubly_occupied: &[usize],
    empty: &[usize],
) -> FciSolution {
    let docc: u64 = doubly_occupied.iter().map(|&p| 1u64 << p).sum();
    let virt: u64 = empty.iter().map(|&p| 1u64 << p).sum();
    let ok = |s: &u64| s & docc == docc && s & virt == 0;
    let sa: Vec<u64> = strings(ints.n_orb, n_alpha).into_iter().filter(ok).collect();
    let sb: Vec<u64> = strings(ints.n_orb, n_beta).into_iter().filter(ok).collect();
    let dets = sa.iter().flat_map(|&a| sb.iter().map(move |&b| (a, b))).collect();
    diagonalize(ints, dets)
}

impl FciSolution {
    /// `<Psi_i| sum_pq op_pq E_pq |Psi_j>` for a one-electron operator.
    pub fn one_body(&self, n_orb: usize, op: &[f64], i: usize, j: usize) -> f64 {
        let index: HashMap<Det, usize> =
            self.dets.iter().enumerate().map(|(k, d)| (*d, k)).collect();
        let mut acc = 0.0;
        for (col, &det) in self.dets.iter().enumerate() {
            let cj = self.vectors[(col, j)];
            if cj == 0.0 {
                continue;
            }
            for p in 0..n_orb {
                for q in 0..n_orb {
                    let o = op[p * n_orb + q];
                    if o == 0.0 {
                        continue;
                    }
                    for (c, d) in apply_e(det, p, q) {
                        if let Some(&row) = index.get(&d) {
                            acc += self.vectors[(row, i)] * o * c * cj;
                        }
                    }
                }
            }
        }
        acc
    }

    /// Excitation energies from the ground state to every state with `<S^2>` near
    /// `s(s+1)` for the requested total spin.
    pub fn gaps_with_spin(&self, s: f64, tol: f64) -> Vec<f64> {
        let target = s * (s + 1.0);
        (1..self.energies.len())
            .filter(|&k| (self.s2[k] - target).abs() < tol)
            .map(|k| self.energies[k] - self.energies[0])
            .collect()
    }
}
