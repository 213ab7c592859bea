//! Molecular integrals, active spaces, orbital rotations and frozen-space reduction.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{normal_order_into, spin_orbital, FermionPolynomial, Ladder, Word};

const DUPLICATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Axis::X => "dx",
            Axis::Y => "dy",
            Axis::Z => "dz",
        }
    }
}

/// Spatial-orbital integrals in chemists' notation.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularSystem {
    pub n_orb: usize,
    pub n_elec: usize,
    pub h: DMatrix<f64>,
    g: Vec<f64>,
    pub e_core: f64,
    pub dipole: [Option<DMatrix<f64>>; 3],
}

impl MolecularSystem {
    pub fn new(n_orb: usize, n_elec: usize, h: DMatrix<f64>, g: Vec<f64>, e_core: f64) -> Result<Self> {
        if h.nrows() != n_orb || h.ncols() != n_orb {
            return Err(Error::SizeMismatch(n_orb, h.nrows()));
        }
        if g.len() != n_orb.pow(4) {
            return Err(Error::SizeMismatch(n_orb.pow(4), g.len()));
        }
        Ok(Self { n_orb, n_elec, h, g, e_core, dipole: [None, None, None] })
    }

    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let n = self.n_orb;
        ((p * n + q) * n + r) * n + s
    }

    /// `(pq|rs)`.
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g[self.idx(p, q, r, s)]
    }

    /// Flat `(pq|rs)` array, index `((p*n+q)*n+r)*n+s`.
    pub fn g_flat(&self) -> &[f64] {
        &self.g
    }

    pub fn h_flat(&self) -> Vec<f64> {
        // nalgebra is column-major; h is symmetric so either order works, but be explicit.
        let n = self.n_orb;
        (0..n * n).map(|k| self.h[(k / n, k % n)]).collect()
    }

    pub fn dipole(&self, axis: Axis) -> Option<&DMatrix<f64>> {
        self.dipole[axis.index()].as_ref()
    }

    pub fn set_dipole(&mut self, axis: Axis, m: DMatrix<f64>) -> Result<()> {
        if m.nrows() != self.n_orb || m.ncols() != self.n_orb {
            return Err(Error::SizeMismatch(self.n_orb, m.nrows()));
        }
        self.dipole[axis.index()] = Some(m);
        Ok(())
    }

    /// Loads `path` and, if present, the dipole sidecars `{prefix}.dx/.dy/.dz`.
    pub fn load(path: &Path, dipole_prefix: Option<&Path>) -> Result<Self> {
        let mut sys = parse_fcidump(path)?;
        if let Some(prefix) = dipole_prefix {
            for axis in Axis::ALL {
                let mut name = prefix.as_os_str().to_owned();
                name.push(".");
                name.push(axis.suffix());
                let p = Path::new(&name);
                if p.exists() {
                    let m = parse_dipole(p, sys.n_orb)?;
                    sys.set_dipole(axis, m)?;
                }
            }
        }
        Ok(sys)
    }

    /// Second-quantized Hamiltonian over `2 * n_orb` spin orbitals, including `e_core`.
    pub fn hamiltonian(&self) -> FermionPolynomial {
        let n = self.n_orb;
        let modes = 2 * n;
        let mut terms: BTreeMap<Word, Complex64> = BTreeMap::new();
        normal_order_into(&mut terms, Complex64::new(self.e_core, 0.0), Vec::new());
        for p in 0..n {
            for q in 0..n {
                let v = self.h[(p, q)];
                if v == 0.0 {
                    continue;
                }
                for s in 0..2 {
                    let w = vec![
                        Ladder::create(spin_orbital(p, s)),
                        Ladder::annihilate(spin_orbital(q, s)),
                    ];
                    normal_order_into(&mut terms, Complex64::new(v, 0.0), w);
                }
            }
        }
        // 1/2 sum g_pqrs a+_ps a+_rt a_st a_qs
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        for sa in 0..2 {
                            for sb in 0..2 {
                                let w = vec![
                                    Ladder::create(spin_orbital(p, sa)),
                                    Ladder::create(spin_orbital(r, sb)),
                                    Ladder::annihilate(spin_orbital(s, sb)),
                                    Ladder::annihilate(spin_orbital(q, sa)),
                                ];
                                normal_order_into(&mut terms, Complex64::new(0.5 * v, 0.0), w);
                            }
                        }
                    }
                }
            }
        }
        FermionPolynomial::from_map(modes, terms)
    }
}

/// `sum_pq m_pq E_pq` over `2 * n` spin orbitals.
pub fn one_body_operator(m: &DMatrix<f64>) -> FermionPolynomial {
    let n = m.nrows();
    let mut terms: BTreeMap<Word, Complex64> = BTreeMap::new();
    for p in 0..n {
        for q in 0..n {
            let v = m[(p, q)];
            if v == 0.0 {
                continue;
            }
            for s in 0..2 {
                let w = vec![Ladder::create(spin_orbital(p, s)), Ladder::annihilate(spin_orbital(q, s))];
                normal_order_into(&mut terms, Complex64::new(v, 0.0), w);
            }
        }
    }
    FermionPolynomial::from_map(2 * n, terms)
}

struct Header {
    norb: usize,
    nelec: usize,
}

fn parse_header(text: &str) -> Result<Header> {
    let upper = text.to_ascii_uppercase();
    let field = |key: &str| -> Result<usize> {
        let mut search = 0;
        while let Some(pos) = upper[search..].find(key) {
            let at = search + pos;
            search = at + key.len();
            // reject matches inside longer identifiers such as "ORBSYM"
            let before_ok = at == 0 || !upper.as_bytes()[at - 1].is_ascii_alphanumeric();
            let rest = upper[search..].trim_start();
            if before_ok && rest.starts_with('=') {
                let digits: String =
                    rest[1..].trim_start().chars().take_while(|c| c.is_ascii_digit()).collect();
                return digits
                    .parse()
                    .map_err(|_| Error::Parse { line: 1, msg: format!("bad value for {key}") });
            }
        }
        Err(Error::Parse { line: 1, msg: format!("missing {key} in header") })
    };
    Ok(Header { norb: field("NORB")?, nelec: field("NELEC")? })
}

/// Splits an FCIDUMP-style file into its namelist header and numbered data lines.
fn split_namelist(text: &str) -> Result<(String, Vec<(usize, &str)>)> {
    let mut header = String::new();
    let mut lines = text.lines().enumerate();
    let mut closed = false;
    for (_, line) in lines.by_ref() {
        let t = line.trim();
        header.push_str(t);
        header.push(' ');
        let up = t.to_ascii_uppercase();
        if up.ends_with("&END") || up == "/" || up.ends_with("/") && !up.starts_with("&FCI") {
            closed = true;
            break;
        }
    }
    if !closed {
        return Err(Error::Parse { line: 1, msg: "unterminated namelist header".into() });
    }
    let data = lines
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    Ok((header, data))
}

fn parse_record(line_no: usize, line: &str) -> Result<(f64, [usize; 4])> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::Parse { line: line_no, msg: format!("expected 5 fields, got {}", fields.len()) });
    }
    let value: f64 = fields[0]
        .replace(['D', 'd'], "E")
        .parse()
        .map_err(|_| Error::Parse { line: line_no, msg: format!("bad value {:?}", fields[0]) })?;
    let mut idx = [0usize; 4];
    for (k, f) in fields[1..].iter().enumerate() {
        idx[k] = f
            .parse()
            .map_err(|_| Error::Parse { line: line_no, msg: format!("bad index {f:?}") })?;
    }
    Ok((value, idx))
}

fn store(slot: &mut f64, set: &mut bool, v: f64, line: usize) -> Result<()> {
    if *set && (*slot - v).abs() > DUPLICATE_TOLERANCE {
        return Err(Error::Parse {
            line,
            msg: format!("inconsistent duplicate entry ({} vs {v})", *slot),
        });
    }
    *slot = v;
    *set = true;
    Ok(())
}

pub fn parse_fcidump_str(text: &str) -> Result<MolecularSystem> {
    let (header, data) = split_namelist(text)?;
    let Header { norb: n, nelec } = parse_header(&header)?;
    let mut h = vec![0.0; n * n];
    let mut h_set = vec![false; n * n];
    let mut g = vec![0.0; n.pow(4)];
    let mut g_set = vec![false; n.pow(4)];
    let mut e_core = 0.0;
    let mut core_set = false;
    let gi = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    for (line_no, line) in data {
        let (v, [i, j, k, l]) = parse_record(line_no, line)?;
        if [i, j, k, l].iter().any(|&x| x > n) {
            return Err(Error::Parse { line: line_no, msg: format!("index exceeds NORB={n}") });
        }
        match (i, j, k, l) {
            (0, 0, 0, 0) => store(&mut e_core, &mut core_set, v, line_no)?,
            (_, 0, 0, 0) => {} // orbital energy
            (i, j, 0, 0) if j > 0 => {
                let (p, q) = (i - 1, j - 1);
                for (a, b) in [(p, q), (q, p)] {
                    store(&mut h[a * n + b], &mut h_set[a * n + b], v, line_no)?;
                }
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (p, q, r, s) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in [
                    (p, q, r, s),
                    (q, p, r, s),
                    (p, q, s, r),
                    (q, p, s, r),
                    (r, s, p, q),
                    (s, r, p, q),
                    (r, s, q, p),
                    (s, r, q, p),
                ] {
                    let x = gi(a, b, c, d);
                    store(&mut g[x], &mut g_set[x], v, line_no)?;
                }
            }
            _ => {
                return Err(Error::Parse { line: line_no, msg: "malformed index pattern".into() });
            }
        }
    }
    let h = DMatrix::from_fn(n, n, |p, q| h[p * n + q]);
    MolecularSystem::new(n, nelec, h, g, e_core)
}

pub fn parse_fcidump(path: &Path) -> Result<MolecularSystem> {
    parse_fcidump_str(&std::fs::read_to_string(path)?)
}

/// One-electron sidecar file: same grammar as FCIDUMP, records `value i j 0 0` only.
/// The namelist header is optional.
pub fn parse_dipole_str(text: &str, n_orb: usize) -> Result<DMatrix<f64>> {
    let trimmed = text.trim_start();
    let data: Vec<(usize, &str)> = if trimmed.starts_with('&') {
        split_namelist(text)?.1
    } else {
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect()
    };
    let mut m = vec![0.0; n_orb * n_orb];
    let mut set = vec![false; n_orb * n_orb];
    for (line_no, line) in data {
        let (v, [i, j, k, l]) = parse_record(line_no, line)?;
        if k != 0 || l != 0 {
            return Err(Error::Parse { line: line_no, msg: "two-electron record in one-electron file".into() });
        }
        if i == 0 || j == 0 || i > n_orb || j > n_orb {
            return Err(Error::Parse { line: line_no, msg: format!("index outside 1..={n_orb}") });
        }
        let (p, q) = (i - 1, j - 1);
        for (a, b) in [(p, q), (q, p)] {
            store(&mut m[a * n_orb + b], &mut set[a * n_orb + b], v, line_no)?;
        }
    }
    Ok(DMatrix::from_fn(n_orb, n_orb, |p, q| m[p * n_orb + q]))
}

pub fn parse_dipole(path: &Path, n_orb: usize) -> Result<DMatrix<f64>> {
    parse_dipole_str(&std::fs::read_to_string(path)?, n_orb)
}

/// Writes the unique non-zero entries (`i>=j`, `k>=l`, `ij>=kl`) with round-trip float formatting.
pub fn write_fcidump_string(sys: &MolecularSystem) -> String {
    let n = sys.n_orb;
    let mut out = String::new();
    let _ = writeln!(out, " &FCI NORB={n},NELEC={},MS2=0,", sys.n_elec);
    let _ = writeln!(out, "  ORBSYM={}", "1,".repeat(n));
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                        continue;
                    }
                    let v = sys.g(i, j, k, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = sys.h[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{v:e} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", sys.e_core);
    out
}

pub fn write_fcidump(sys: &MolecularSystem, path: &Path) -> Result<()> {
    std::fs::write(path, write_fcidump_string(sys))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitalClass {
    Inactive,
    Active,
    Virtual,
}

/// Partition of the spatial orbitals into inactive, active and virtual parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSpace {
    pub inactive: Vec<usize>,
    pub active: Vec<usize>,
    pub virtual_: Vec<usize>,
    pub n_active_elec: usize,
}

impl ActiveSpace {
    /// The lowest non-active orbitals are made inactive until the electron count matches.
    pub fn new(n_orb: usize, n_elec: usize, n_active_elec: usize, active: Vec<usize>) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::ActiveSpace("empty active space".into()));
        }
        if n_active_elec > n_elec || (n_elec - n_active_elec) % 2 != 0 {
            return Err(Error::ActiveSpace(format!(
                "{n_active_elec} active electrons incompatible with {n_elec} total"
            )));
        }
        let n_inactive = (n_elec - n_active_elec) / 2;
        let rest: Vec<usize> = (0..n_orb).filter(|p| !active.contains(p)).collect();
        if rest.len() < n_inactive {
            return Err(Error::ActiveSpace("not enough orbitals for inactive electrons".into()));
        }
        let space = Self {
            inactive: rest[..n_inactive].to_vec(),
            virtual_: rest[n_inactive..].to_vec(),
            active,
            n_active_elec,
        };
        space.validate(n_orb)?;
        Ok(space)
    }

    pub fn full(n_orb: usize, n_elec: usize) -> Result<Self> {
        Self::new(n_orb, n_elec, n_elec, (0..n_orb).collect())
    }

    pub fn validate(&self, n_orb: usize) -> Result<()> {
        let mut seen = vec![false; n_orb];
        for &p in self.inactive.iter().chain(&self.active).chain(&self.virtual_) {
            if p >= n_orb || seen[p] {
                return Err(Error::ActiveSpace(format!("orbital {p} out of range or repeated")));
            }
            seen[p] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::ActiveSpace("orbital lists do not cover all orbitals".into()));
        }
        if self.active.is_empty() {
            return Err(Error::ActiveSpace("empty active space".into()));
        }
        if self.n_active_elec % 2 != 0 || self.n_active_elec > 2 * self.active.len() {
            return Err(Error::ActiveSpace(format!(
                "{} electrons cannot form a closed shell in {} orbitals",
                self.n_active_elec,
                self.active.len()
            )));
        }
        Ok(())
    }

    pub fn n_orb(&self) -> usize {
        self.inactive.len() + self.active.len() + self.virtual_.len()
    }

    pub fn n_active_modes(&self) -> usize {
        2 * self.active.len()
    }

    pub fn class_of(&self, p: usize) -> OrbitalClass {
        if self.active.contains(&p) {
            OrbitalClass::Active
        } else if self.inactive.contains(&p) {
            OrbitalClass::Inactive
        } else {
            OrbitalClass::Virtual
        }
    }

    /// Active spin-orbital index of a full-space spin orbital, if active.
    pub fn local_mode(&self, mode: usize) -> Option<usize> {
        let v = self.active.iter().position(|&p| p == mode / 2)?;
        Some(2 * v + mode % 2)
    }

    /// Occupied active orbitals of the closed-shell reference (local indices).
    pub fn occupied_active(&self) -> std::ops::Range<usize> {
        0..self.n_active_elec / 2
    }

    pub fn unoccupied_active(&self) -> std::ops::Range<usize> {
        self.n_active_elec / 2..self.active.len()
    }

    /// Reference occupation of the active spin orbitals as a bitstring over local modes.
    pub fn reference_occupation(&self) -> u64 {
        (0..self.n_active_elec).fold(0u64, |acc, m| acc | 1 << m)
    }

    /// Non-redundant rotation pairs `(p, q)` where `p` belongs to the higher class
    /// (inactive < active < virtual), ordered by `q` then `p`.
    pub fn rotation_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_orb();
        let mut out = Vec::new();
        for q in 0..n {
            for p in 0..n {
                if self.class_of(p) > self.class_of(q) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// Compact label such as `(2,2)`.
    pub fn label(&self) -> String {
        format!("({},{})", self.n_active_elec, self.active.len())
    }
}

/// Real antisymmetric orbital-rotation generator.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaMatrix {
    k: DMatrix<f64>,
}

impl KappaMatrix {
    pub fn zero(n_orb: usize) -> Self {
        Self { k: DMatrix::zeros(n_orb, n_orb) }
    }

    /// Builds κ from parameters in [`ActiveSpace::rotation_pairs`] order.
    pub fn from_params(space: &ActiveSpace, params: &[f64]) -> Result<Self> {
        let pairs = space.rotation_pairs();
        if params.len() != pairs.len() {
            return Err(Error::ParameterLength { expected: pairs.len(), got: params.len() });
        }
        let mut k = DMatrix::zeros(space.n_orb(), space.n_orb());
        for (&(p, q), &v) in pairs.iter().zip(params) {
            k[(p, q)] = v;
            k[(q, p)] = -v;
        }
        Ok(Self { k })
    }

    pub fn from_matrix(k: DMatrix<f64>) -> Result<Self> {
        let asym = (&k + k.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::NotAntisymmetric(asym));
        }
        Ok(Self { k })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn neg(&self) -> Self {
        Self { k: -&self.k }
    }
}

fn transform_one(m: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    u.transpose() * m * u
}

/// Integrals after the orbital rotation `exp(-κ̂)`: every index is transformed with
/// `U = exp(-κ)`, so `h(κ) = Uᵀ h U` and likewise for all four indices of `g`.
pub fn rotate_integrals(sys: &MolecularSystem, kappa: &KappaMatrix) -> Result<MolecularSystem> {
    let n = sys.n_orb;
    let k = kappa.matrix();
    if k.nrows() != n {
        return Err(Error::SizeMismatch(n, k.nrows()));
    }
    let asym = (k + k.transpose()).amax();
    if asym > 1e-12 {
        return Err(Error::NotAntisymmetric(asym));
    }
    let u = (-k).exp();
    let h = transform_one(&sys.h, &u);
    // four successive quarter transformations, each O(n^5)
    let mut g = sys.g.clone();
    let mut tmp = vec![0.0; g.len()];
    let stride = [n * n * n, n * n, n, 1];
    for axis in 0..4 {
        let st = stride[axis];
        tmp.iter_mut().for_each(|x| *x = 0.0);
        for base in 0..g.len() {
            let old = (base / st) % n;
            let v = g[base];
            if v == 0.0 {
                continue;
            }
            let rest = base - old * st;
            for new in 0..n {
                tmp[rest + new * st] += u[(old, new)] * v;
            }
        }
        std::mem::swap(&mut g, &mut tmp);
    }
    let mut out = MolecularSystem::new(n, sys.n_elec, h, g, sys.e_core)?;
    for axis in Axis::ALL {
        if let Some(m) = sys.dipole(axis) {
            out.set_dipole(axis, transform_one(m, &u))?;
        }
    }
    Ok(out)
}

/// An operator split into a classical constant and a remainder acting on active spin orbitals.
#[derive(Debug, Clone)]
pub struct ActiveReduction {
    pub scalar: Complex64,
    /// Over `2 * |active|` local modes, without an identity term.
    pub active_op: FermionPolynomial,
}

/// Evaluates inactive (doubly occupied) and virtual (empty) modes classically.
pub fn reduce_to_active(op: &FermionPolynomial, space: &ActiveSpace) -> Result<ActiveReduction> {
    let n_modes = 2 * space.n_orb();
    if op.n_modes() != n_modes {
        return Err(Error::SizeMismatch(n_modes, op.n_modes()));
    }
    let local: Vec<Option<usize>> = (0..n_modes).map(|m| space.local_mode(m)).collect();
    let occupied: Vec<bool> = (0..n_modes)
        .map(|m| space.class_of(m / 2) == OrbitalClass::Inactive)
        .collect();
    let mut scalar = Complex64::new(0.0, 0.0);
    let mut active: BTreeMap<Word, Complex64> = BTreeMap::new();
    let mut frozen: Vec<Ladder> = Vec::new();
    for (word, c) in op.iter() {
        frozen.clear();
        let mut act: Word = Vec::new();
        let mut swaps = 0usize;
        for l in word {
            match local[l.mode as usize] {
                Some(m) => act.push(Ladder { mode: m as u16, dagger: l.dagger }),
                None => {
                    swaps += act.len();
                    frozen.push(*l);
                }
            }
        }
        let f = frozen_expectation(&frozen, &occupied);
        if f == 0.0 {
            continue;
        }
        let sign = if swaps % 2 == 1 { -f } else { f };
        if act.is_empty() {
            scalar += c * sign;
        } else {
            normal_order_into(&mut active, c * sign, act);
        }
    }
    // normal ordering of the active words cannot create constants: they were already ordered
    Ok(ActiveReduction {
        scalar,
        active_op: FermionPolynomial::from_map(space.n_active_modes(), active),
    })
}

/// `<D|w|D>` for a normal-ordered word on a determinant: creators ascending,
/// annihilators descending, so a nonzero value needs matching occupied sets and is then +1.
fn frozen_expectation(w: &[Ladder], occupied: &[bool]) -> f64 {
    if w.len() % 2 == 1 {
        return 0.0;
    }
    let k = w.len() / 2;
    for i in 0..k {
        let (c, a) = (w[i], w[w.len() - 1 - i]);
        if !c.dagger || a.dagger || c.mode != a.mode || !occupied[c.mode as usize] {
            return 0.0;
        }
    }
    1.0
}

/// Integrals of the active orbitals with the inactive orbitals folded in:
/// `h_vw + sum_i (2 g_vwii - g_viiw)` and `e_core` replaced by the inactive energy.
pub fn active_system(sys: &MolecularSystem, space: &ActiveSpace) -> Result<MolecularSystem> {
    space.validate(sys.n_orb)?;
    let act = &space.active;
    let na = act.len();
    let mut e = sys.e_core;
    for &i in &space.inactive {
        e += 2.0 * sys.h[(i, i)];
        for &j in &space.inactive {
            e += 2.0 * sys.g(i, i, j, j) - sys.g(i, j, j, i);
        }
    }
    let h = DMatrix::from_fn(na, na, |v, w| {
        let (p, q) = (act[v], act[w]);
        sys.h[(p, q)]
            + space.inactive.iter().map(|&i| 2.0 * sys.g(p, q, i, i) - sys.g(p, i, i, q)).sum::<f64>()
    });
    let mut g = vec![0.0; na.pow(4)];
    for v in 0..na {
        for w in 0..na {
            for x in 0..na {
                for y in 0..na {
                    g[((v * na + w) * na + x) * na + y] = sys.g(act[v], act[w], act[x], act[y]);
                }
            }
        }
    }
    let mut out = MolecularSystem::new(na, space.n_active_elec, h, g, e)?;
    for axis in Axis::ALL {
        if let Some(m) = sys.dipole(axis) {
            out.set_dipole(axis, DMatrix::from_fn(na, na, |v, w| m[(act[v], act[w])]))?;
        }
    }
    Ok(out)
}

/// Active-space Hamiltonian; the scalar is the inactive energy including `e_core`.
pub fn active_hamiltonian(sys: &MolecularSystem, space: &ActiveSpace) -> Result<ActiveReduction> {
    let a = active_system(sys, space)?;
    let full = a.hamiltonian();
    let scalar = full.constant();
    let active_op = full.sub(&FermionPolynomial::identity(full.n_modes(), scalar))?;
    Ok(ActiveReduction { scalar, active_op })
}
