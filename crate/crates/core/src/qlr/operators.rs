//! Spin-adapted excitation operators and the qLR operator basis.

use serde::{Deserialize, Serialize};

use crate::chem::ActiveSpace;
use crate::error::{Error, Result};
use crate::fermion::{FermionPolynomial, Ladder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    Naive,
    Proj,
    Allproj,
}

impl std::str::FromStr for Parametrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Self::Naive),
            "proj" => Ok(Self::Proj),
            "allproj" => Ok(Self::Allproj),
            _ => Err(Error::Dimension(format!("unknown parametrization {s:?}"))),
        }
    }
}

impl std::fmt::Display for Parametrization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Naive => "naive",
            Self::Proj => "proj",
            Self::Allproj => "allproj",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    OrbitalRotation,
    Single,
    DoubleSymmetric,
    DoubleAntisymmetric,
}

/// One qLR operator `X_l`: either an orbital rotation `q_pq` over all spin orbitals or an
/// active excitation `G` over the active spin orbitals, possibly carrying `|0><0|`.
#[derive(Debug, Clone)]
pub struct QlrOperator {
    pub kind: OperatorKind,
    pub label: String,
    /// Full-space operator over `2 * n_orb` spin orbitals.
    pub full: FermionPolynomial,
    /// Active-space form over `2 * |active|` local spin orbitals, for active excitations.
    pub active: Option<FermionPolynomial>,
    pub projected: bool,
}

impl QlrOperator {
    pub fn is_active(&self) -> bool {
        self.active.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SpinAdaptedOps {
    /// `(label, operator)` over active local spin orbitals.
    pub singles: Vec<(String, FermionPolynomial)>,
    pub doubles: Vec<(OperatorKind, String, FermionPolynomial)>,
    /// `q_pq = E_pq / sqrt(2)` over all spin orbitals, in [`ActiveSpace::rotation_pairs`] order.
    pub rotations: Vec<(String, FermionPolynomial)>,
}

fn e(n: usize, p: usize, q: usize) -> Result<FermionPolynomial> {
    FermionPolynomial::singlet_excitation(n, p, q)
}

/// Singlet singles `E_ai/sqrt(2)`, symmetric doubles (`i<=j`, `a<=b`) and antisymmetric
/// doubles (`i<j`, `a<b`) out of the active closed-shell reference, plus the naive
/// orbital rotations.
pub fn build_spin_adapted_ops(space: &ActiveSpace) -> Result<SpinAdaptedOps> {
    if space.active.is_empty() {
        return Err(Error::ActiveSpace("empty active space".into()));
    }
    let na = space.active.len();
    let occ: Vec<usize> = space.occupied_active().collect();
    let vir: Vec<usize> = space.unoccupied_active().collect();
    let r2 = std::f64::consts::SQRT_2;
    let mut singles = Vec::new();
    for &i in &occ {
        for &a in &vir {
            singles.push((format!("G[{a}<-{i}]"), e(na, a, i)?.scale(1.0 / r2)));
        }
    }
    let mut doubles = Vec::new();
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y..] {
                    let eaibj = e(na, a, i)?.mul(&e(na, b, j)?)?;
                    let eajbi = e(na, a, j)?.mul(&e(na, b, i)?)?;
                    let dab: f64 = if a == b { 2.0 } else { 1.0 };
                    let dij = if i == j { 2.0 } else { 1.0 };
                    let sym = eaibj.add(&eajbi)?.scale(1.0 / (2.0 * (dab * dij).sqrt()));
                    doubles.push((OperatorKind::DoubleSymmetric, format!("G+[{a}{b}<-{i}{j}]"), sym));
                    if i < j && a < b {
                        let anti = eaibj.sub(&eajbi)?.scale(1.0 / (2.0 * 3f64.sqrt()));
                        doubles.push((OperatorKind::DoubleAntisymmetric, format!("G-[{a}{b}<-{i}{j}]"), anti));
                    }
                }
            }
        }
    }
    let n = space.n_orb();
    let rotations = space
        .rotation_pairs()
        .into_iter()
        .map(|(p, q)| Ok((format!("q[{p}<-{q}]"), e(n, p, q)?.scale(1.0 / r2))))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpinAdaptedOps { singles, doubles, rotations })
}

/// Re-indexes an active-space polynomial onto the full spin-orbital set.
pub fn embed_active(op: &FermionPolynomial, space: &ActiveSpace) -> Result<FermionPolynomial> {
    let n_full = 2 * space.n_orb();
    let mut out = FermionPolynomial::zero(n_full);
    for (w, c) in op.iter() {
        let word: Vec<Ladder> = w
            .iter()
            .map(|l| {
                let m = l.mode as usize;
                Ladder { mode: (2 * space.active[m / 2] + m % 2) as u16, dagger: l.dagger }
            })
            .collect();
        out = out.add(&FermionPolynomial::term(n_full, *c, &word)?)?;
    }
    Ok(out)
}

/// Orbital rotations first, then active singles and doubles; projectors per parametrization.
pub fn build_operator_basis(space: &ActiveSpace, parametrization: Parametrization) -> Result<Vec<QlrOperator>> {
    let ops = build_spin_adapted_ops(space)?;
    let mut out = Vec::new();
    let q_projected = parametrization == Parametrization::Allproj;
    let g_projected = parametrization != Parametrization::Naive;
    for (label, full) in ops.rotations {
        out.push(QlrOperator { kind: OperatorKind::OrbitalRotation, label, full, active: None, projected: q_projected });
    }
    let actives = ops
        .singles
        .into_iter()
        .map(|(l, p)| (OperatorKind::Single, l, p))
        .chain(ops.doubles);
    for (kind, label, active) in actives {
        let full = embed_active(&active, space)?;
        out.push(QlrOperator { kind, label, full, active: Some(active), projected: g_projected });
    }
    Ok(out)
}
