//! Symbolic expansion of the qLR matrix elements into active-space Pauli expectation values.
//!
//! Projected operators are written `X = O |0><0|` (the constant shift drops out of every
//! commutator), so a word `S0 P S1 P S2` evaluates to `<S0><S1><S2>`. Each element becomes
//! a polynomial in distinct expectation values, each a mapped active-space `PauliSum`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chem::{active_system, one_body_operator, reduce_to_active, ActiveSpace, Axis, MolecularSystem};
use crate::clique::{clique_basis, cover_first_fit};
use crate::error::{Error, Result};
use crate::fermion::FermionPolynomial;
use crate::mapping::QubitMapper;
use crate::pauli::{PauliSum, PauliTerm};
use crate::qlr::operators::{build_operator_basis, OperatorKind, Parametrization, QlrOperator};
use crate::qlr::reduce::{FrozenContext, FrozenSplit};
use crate::sim::measure::{pauli_variance, MeasurementCache, PreparedState};
use crate::sim::statevector::Statevector;

/// Tolerance for the exact-mode Hermiticity check of assembled matrices.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    A,
    B,
    Sigma,
    Delta,
}

impl MatrixKind {
    pub const ALL: [MatrixKind; 4] = [MatrixKind::A, MatrixKind::B, MatrixKind::Sigma, MatrixKind::Delta];

    fn index(self) -> usize {
        self as usize
    }
}

/// One element as `sum_p c_p prod_{k in p} <E_k>`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElementPlan {
    pub products: Vec<(f64, Vec<usize>)>,
}

impl ElementPlan {
    fn single(coef: f64, k: usize) -> Self {
        Self { products: vec![(coef, vec![k])] }
    }

    fn negated(&self) -> Self {
        Self { products: self.products.iter().map(|(c, p)| (-c, p.clone())).collect() }
    }

    /// Distinct expectation values this element needs, ascending.
    pub fn expectations(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.products.iter().flat_map(|(_, p)| p.iter().copied()).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    fn value(&self, v: &[f64]) -> f64 {
        self.products.iter().map(|(c, p)| c * p.iter().map(|&k| v[k]).product::<f64>()).sum()
    }

    /// First-order propagation of independent per-expectation variances.
    fn variance(&self, v: &[f64], var: &[f64]) -> f64 {
        let mut total = 0.0;
        for k in self.expectations() {
            let mut grad = 0.0;
            for (c, p) in &self.products {
                for (pos, &kk) in p.iter().enumerate() {
                    if kk == k {
                        let rest: f64 = p.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &j)| v[j]).product();
                        grad += c * rest;
                    }
                }
            }
            total += grad * grad * var[k];
        }
        total
    }

    /// Coefficient-free variance: every needed expectation contributes with unit weight.
    fn variance_nc(&self, var_nc: &[f64]) -> f64 {
        self.expectations().into_iter().map(|k| var_nc[k]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanOptions {
    /// Reuse the upper-triangle expansion for the lower triangle: `A_JI` and `Σ_JI` are the
    /// adjoint operators of `A_IJ` and `Σ_IJ`, `B` is symmetric and `Δ` antisymmetric as
    /// operator identities.
    pub mirror_lower_triangle: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { mirror_lower_triangle: true }
    }
}

/// Transition-moment elements `<[μ, X_l†]>` and `<[μ, X_l]>` for one dipole axis.
#[derive(Debug, Clone)]
pub struct MomentPlan {
    pub axis: Axis,
    pub de_excitation: Vec<ElementPlan>,
    pub excitation: Vec<ElementPlan>,
}

#[derive(Debug, Clone)]
pub struct QlrPlan {
    pub parametrization: Parametrization,
    pub labels: Vec<String>,
    pub kinds: Vec<OperatorKind>,
    n_qubits: usize,
    expectations: Vec<PauliSum>,
    matrices: [Vec<ElementPlan>; 4],
    moments: Vec<MomentPlan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliCounts {
    /// Every Pauli string occurrence measured separately.
    pub none: u64,
    /// Qubit-wise commuting groups, formed per expectation value.
    pub qwc: u64,
    /// Qubit-wise commuting groups with every measured basis reused across elements.
    pub ps_qwc: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Item {
    Op(usize, bool),
    Ext(usize),
    Proj,
}

impl Item {
    fn adjoint(self) -> Self {
        match self {
            Item::Op(l, d) => Item::Op(l, !d),
            other => other,
        }
    }
}

type Expr = Vec<(f64, Vec<Item>)>;

fn mul(a: &Expr, b: &Expr) -> Expr {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (ca, wa) in a {
        for (cb, wb) in b {
            out.push((ca * cb, wa.iter().chain(wb).copied().collect()));
        }
    }
    out
}

fn comm(a: &Expr, b: &Expr) -> Expr {
    let mut out = mul(a, b);
    out.extend(mul(b, a).into_iter().map(|(c, w)| (-c, w)));
    out
}

fn scaled(mut e: Expr, f: f64) -> Expr {
    for t in &mut e {
        t.0 *= f;
    }
    e
}

/// `½([a, [b, c]] + [[a, b], c])`, Hermitian in the sense `(A_IJ)† = A_JI`.
fn sym_double(a: &Expr, b: &Expr, c: &Expr) -> Expr {
    let mut out = scaled(comm(a, &comm(b, c)), 0.5);
    out.extend(scaled(comm(&comm(a, b), c), 0.5));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Factor {
    Op(usize, bool),
    Ext(usize),
    /// `[ext, X_l]` or `[ext, X_l†]`.
    Comm(usize, usize, bool),
}

type FrozenState = HashMap<u64, FermionPolynomial>;

struct Builder<'a> {
    ctx: FrozenContext,
    ops: &'a [QlrOperator],
    mapper: &'a QubitMapper,
    ext_full: Vec<FermionPolynomial>,
    ext_active: Vec<FermionPolynomial>,
    polys: HashMap<(Factor, bool), FermionPolynomial>,
    splits: HashMap<(Factor, bool), Arc<FrozenSplit>>,
    suffixes: HashMap<(Vec<Factor>, bool), Arc<FrozenState>>,
    segments: HashMap<Vec<Item>, Option<usize>>,
    expectations: Vec<PauliSum>,
}

impl Builder<'_> {
    fn is_active(&self, l: usize) -> bool {
        self.ops[l].is_active()
    }

    fn poly(&mut self, f: Factor, full: bool) -> Result<FermionPolynomial> {
        if let Some(p) = self.polys.get(&(f, full)) {
            return Ok(p.clone());
        }
        let p = match f {
            Factor::Op(l, d) => {
                let base = if full {
                    self.ops[l].full.clone()
                } else {
                    self.ops[l].active.clone().ok_or_else(|| Error::Dimension("orbital rotation in active product".into()))?
                };
                if d {
                    base.adjoint()
                } else {
                    base
                }
            }
            Factor::Ext(k) => {
                if full {
                    self.ext_full[k].clone()
                } else {
                    self.ext_active[k].clone()
                }
            }
            Factor::Comm(k, l, d) => {
                let e = self.poly(Factor::Ext(k), full)?;
                let x = self.poly(Factor::Op(l, d), full)?;
                e.commutator(&x)?
            }
        };
        self.polys.insert((f, full), p.clone());
        Ok(p)
    }

    fn split(&mut self, f: Factor, full: bool) -> Result<Arc<FrozenSplit>> {
        if let Some(s) = self.splits.get(&(f, full)) {
            return Ok(s.clone());
        }
        let p = self.poly(f, full)?;
        let s = Arc::new(if full { self.ctx.split_full(&p)? } else { self.ctx.split_active(&p)? });
        self.splits.insert((f, full), s.clone());
        Ok(s)
    }

    fn suffix(&mut self, factors: &[Factor], full: bool) -> Result<Arc<FrozenState>> {
        if factors.is_empty() {
            return Ok(Arc::new(self.ctx.start()));
        }
        let key = (factors.to_vec(), full);
        if let Some(s) = self.suffixes.get(&key) {
            return Ok(s.clone());
        }
        let rest = self.suffix(&factors[1..], full)?;
        let f = self.split(factors[0], full)?;
        let s = Arc::new(self.ctx.prepend(&f, &rest, false));
        self.suffixes.insert(key, s.clone());
        Ok(s)
    }

    /// Active reduction of a product, constant term included.
    fn reduce(&mut self, factors: &[Factor], full: bool) -> Result<FermionPolynomial> {
        let rest = self.suffix(&factors[1..], full)?;
        let f = self.split(factors[0], full)?;
        Ok(self.ctx.finish(self.ctx.prepend(&f, &rest, true)))
    }

    fn register(&mut self, active: &FermionPolynomial) -> Result<Option<usize>> {
        let op = self.mapper.map(active)?;
        if op.is_empty() {
            return Ok(None);
        }
        self.expectations.push(op);
        Ok(Some(self.expectations.len() - 1))
    }

    /// Sum of reduced products as one expectation value.
    fn combination(&mut self, products: &[(f64, Vec<Factor>)], full: bool) -> Result<Option<usize>> {
        let mut acc = FermionPolynomial::zero(self.ctx.n_active_modes());
        for (c, factors) in products {
            acc = acc.add(&self.reduce(factors, full)?.scale(*c))?;
        }
        self.register(&acc)
    }

    fn segment(&mut self, items: &[Item]) -> Result<Option<usize>> {
        let adj: Vec<Item> = items.iter().rev().map(|i| i.adjoint()).collect();
        // a segment and its adjoint have equal (real) expectation values
        let key = if adj.as_slice() < items { adj } else { items.to_vec() };
        if let Some(k) = self.segments.get(&key) {
            return Ok(*k);
        }
        let full = key.iter().any(|i| matches!(i, Item::Op(l, _) if !self.is_active(*l)));
        let factors: Vec<Factor> = key
            .iter()
            .map(|i| match *i {
                Item::Op(l, d) => Factor::Op(l, d),
                Item::Ext(k) => Factor::Ext(k),
                Item::Proj => unreachable!("segments are split at projectors"),
            })
            .collect();
        let reduced = self.reduce(&factors, full)?;
        let k = self.register(&reduced)?;
        self.segments.insert(key, k);
        Ok(k)
    }

    fn words_element(&mut self, expr: &Expr) -> Result<ElementPlan> {
        let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        'words: for (c, word) in expr {
            let mut ids = Vec::new();
            for seg in word.split(|i| *i == Item::Proj) {
                if seg.is_empty() {
                    continue;
                }
                match self.segment(seg)? {
                    Some(k) => ids.push(k),
                    None => continue 'words,
                }
            }
            ids.sort_unstable();
            *acc.entry(ids).or_default() += c;
        }
        Ok(ElementPlan { products: acc.into_iter().filter(|(_, c)| c.abs() > 1e-14).map(|(p, c)| (c, p)).collect() })
    }

    fn x(&self, l: usize) -> Expr {
        if self.ops[l].projected {
            vec![(1.0, vec![Item::Op(l, false), Item::Proj])]
        } else {
            vec![(1.0, vec![Item::Op(l, false)])]
        }
    }

    fn xd(&self, l: usize) -> Expr {
        if self.ops[l].projected {
            vec![(1.0, vec![Item::Proj, Item::Op(l, true)])]
        } else {
            vec![(1.0, vec![Item::Op(l, true)])]
        }
    }

    fn element(&mut self, kind: MatrixKind, i: usize, j: usize) -> Result<ElementPlan> {
        let naive = !self.ops[i].projected && !self.ops[j].projected;
        if naive {
            let full = !self.is_active(i) || !self.is_active(j);
            use Factor::*;
            let products: Vec<(f64, Vec<Factor>)> = match kind {
                // ½(X_I† C_J − C_J X_I† − C'_I X_J + X_J C'_I), C = [H, X], C' = [H, X†]
                MatrixKind::A => vec![
                    (0.5, vec![Op(i, true), Comm(0, j, false)]),
                    (-0.5, vec![Comm(0, j, false), Op(i, true)]),
                    (-0.5, vec![Comm(0, i, true), Op(j, false)]),
                    (0.5, vec![Op(j, false), Comm(0, i, true)]),
                ],
                MatrixKind::B => vec![
                    (0.5, vec![Op(i, true), Comm(0, j, true)]),
                    (-0.5, vec![Comm(0, j, true), Op(i, true)]),
                    (-0.5, vec![Comm(0, i, true), Op(j, true)]),
                    (0.5, vec![Op(j, true), Comm(0, i, true)]),
                ],
                MatrixKind::Sigma => vec![(1.0, vec![Op(i, true), Op(j, false)]), (-1.0, vec![Op(j, false), Op(i, true)])],
                MatrixKind::Delta => vec![(1.0, vec![Op(i, true), Op(j, true)]), (-1.0, vec![Op(j, true), Op(i, true)])],
            };
            return Ok(match self.combination(&products, full)? {
                Some(k) => ElementPlan::single(1.0, k),
                None => ElementPlan::default(),
            });
        }
        let h = vec![(1.0, vec![Item::Ext(0)])];
        let expr = match kind {
            MatrixKind::A => sym_double(&self.xd(i), &h, &self.x(j)),
            MatrixKind::B => sym_double(&self.xd(i), &h, &self.xd(j)),
            MatrixKind::Sigma => comm(&self.xd(i), &self.x(j)),
            MatrixKind::Delta => comm(&self.xd(i), &self.xd(j)),
        };
        self.words_element(&expr)
    }

    /// `<[μ, X_l†]>` (`dagger`) or `<[μ, X_l]>`.
    fn moment(&mut self, ext: usize, l: usize, dagger: bool) -> Result<ElementPlan> {
        if !self.ops[l].projected {
            let full = !self.is_active(l);
            let products = vec![
                (1.0, vec![Factor::Ext(ext), Factor::Op(l, dagger)]),
                (-1.0, vec![Factor::Op(l, dagger), Factor::Ext(ext)]),
            ];
            return Ok(match self.combination(&products, full)? {
                Some(k) => ElementPlan::single(1.0, k),
                None => ElementPlan::default(),
            });
        }
        let mu = vec![(1.0, vec![Item::Ext(ext)])];
        let x = if dagger { self.xd(l) } else { self.x(l) };
        self.words_element(&comm(&mu, &x))
    }
}

fn with_constant(r: crate::chem::ActiveReduction) -> Result<FermionPolynomial> {
    let n = r.active_op.n_modes();
    r.active_op.add(&FermionPolynomial::identity(n, r.scalar))
}

impl QlrPlan {
    /// Expands every element for the (already orbital-rotated) system `sys`.
    pub fn build(
        sys: &MolecularSystem,
        space: &ActiveSpace,
        parametrization: Parametrization,
        mapper: &QubitMapper,
        options: PlanOptions,
    ) -> Result<Self> {
        space.validate(sys.n_orb)?;
        if mapper.n_qubits() != space.n_active_modes() {
            return Err(Error::SizeMismatch(space.n_active_modes(), mapper.n_qubits()));
        }
        let ops = build_operator_basis(space, parametrization)?;
        let mut ext_full = vec![sys.hamiltonian()];
        let mut ext_active = vec![active_system(sys, space)?.hamiltonian()];
        let mut axes = Vec::new();
        for axis in Axis::ALL {
            if let Some(m) = sys.dipole(axis) {
                let mu = one_body_operator(m);
                ext_active.push(with_constant(reduce_to_active(&mu, space)?)?);
                ext_full.push(mu);
                axes.push(axis);
            }
        }
        let mut b = Builder {
            ctx: FrozenContext::new(space)?,
            ops: &ops,
            mapper,
            ext_full,
            ext_active,
            polys: HashMap::new(),
            splits: HashMap::new(),
            suffixes: HashMap::new(),
            segments: HashMap::new(),
            expectations: Vec::new(),
        };
        let n = ops.len();
        let mut matrices: [Vec<ElementPlan>; 4] = Default::default();
        for kind in MatrixKind::ALL {
            let mut m = vec![ElementPlan::default(); n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = if options.mirror_lower_triangle && j < i {
                        match kind {
                            MatrixKind::Delta => m[j * n + i].negated(),
                            _ => m[j * n + i].clone(),
                        }
                    } else {
                        b.element(kind, i, j)?
                    };
                }
            }
            matrices[kind.index()] = m;
        }
        let mut moments = Vec::new();
        for (e, axis) in axes.into_iter().enumerate() {
            let de_excitation = (0..n).map(|l| b.moment(e + 1, l, true)).collect::<Result<Vec<_>>>()?;
            let excitation = (0..n).map(|l| b.moment(e + 1, l, false)).collect::<Result<Vec<_>>>()?;
            moments.push(MomentPlan { axis, de_excitation, excitation });
        }
        Ok(Self {
            parametrization,
            labels: ops.iter().map(|o| o.label.clone()).collect(),
            kinds: ops.iter().map(|o| o.kind).collect(),
            n_qubits: mapper.n_qubits(),
            expectations: b.expectations,
            matrices,
            moments,
        })
    }

    pub fn n_operators(&self) -> usize {
        self.labels.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn expectations(&self) -> &[PauliSum] {
        &self.expectations
    }

    pub fn element(&self, kind: MatrixKind, i: usize, j: usize) -> &ElementPlan {
        &self.matrices[kind.index()][i * self.n_operators() + j]
    }

    pub fn moments(&self) -> &[MomentPlan] {
        &self.moments
    }

    /// Element operator `sum_p c_p prod <E_k>` for single-expectation elements, as a `PauliSum`.
    pub fn element_operator(&self, kind: MatrixKind, i: usize, j: usize) -> Option<PauliSum> {
        let e = self.element(kind, i, j);
        match e.products.as_slice() {
            [] => Some(PauliSum::zero(self.n_qubits)),
            [(c, p)] if p.len() == 1 => Some(self.expectations[p[0]].scale(*c)),
            _ => None,
        }
    }

    fn matrix_elements(&self) -> impl Iterator<Item = &ElementPlan> {
        self.matrices.iter().flat_map(|m| m.iter())
    }

    /// Measurement counts for all four matrices, elements visited row by row in the
    /// order A, B, Σ, Δ.
    pub fn pauli_counts(&self) -> Result<PauliCounts> {
        let mut none = 0u64;
        let mut qwc = 0u64;
        let mut stored: Vec<PauliTerm> = Vec::new();
        let mut seen: std::collections::HashSet<PauliTerm> = Default::default();
        let mut ps_qwc = 0u64;
        for e in self.matrix_elements() {
            for k in e.expectations() {
                let terms: Vec<PauliTerm> = self.expectations[k].measurable_terms().map(|(t, _)| *t).collect();
                none += terms.len() as u64;
                qwc += cover_first_fit(&terms).len() as u64;
                let pending: Vec<PauliTerm> = terms
                    .into_iter()
                    .filter(|t| !seen.contains(t) && !stored.iter().any(|b| b.qubitwise_commutes(t).unwrap_or(false)))
                    .collect();
                for t in &pending {
                    seen.insert(*t);
                }
                let cover = cover_first_fit(&pending);
                for clique in cover.cliques() {
                    stored.push(full_axes(&clique_basis(clique)?));
                    ps_qwc += 1;
                }
            }
        }
        Ok(PauliCounts { none, qwc, ps_qwc })
    }
}

fn full_axes(basis: &PauliTerm) -> PauliTerm {
    let mut out = *basis;
    for q in 0..basis.n_qubits() {
        out.set(q, crate::clique::measured_axis(basis, q));
    }
    out
}

/// Element values with Eq. 25-style per-shot standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEstimate {
    pub value: DMatrix<f64>,
    /// Predicted single-shot standard deviation of each element.
    pub std: DMatrix<f64>,
    /// The same with every Pauli coefficient set to one.
    pub std_nc: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMoments {
    pub axis: Axis,
    /// `<[μ, X_l†]>`.
    pub de_excitation: Vec<f64>,
    /// `<[μ, X_l]>`.
    pub excitation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlrProblem {
    pub parametrization: Parametrization,
    pub labels: Vec<String>,
    pub kinds: Vec<OperatorKind>,
    pub a: MatrixEstimate,
    pub b: MatrixEstimate,
    pub sigma: MatrixEstimate,
    pub delta: MatrixEstimate,
    pub moments: Vec<TransitionMoments>,
    /// `None` for exact evaluation.
    pub pauli_saving: Option<bool>,
}

impl QlrProblem {
    pub fn n_operators(&self) -> usize {
        self.labels.len()
    }

    pub fn matrix(&self, kind: MatrixKind) -> &MatrixEstimate {
        match kind {
            MatrixKind::A => &self.a,
            MatrixKind::B => &self.b,
            MatrixKind::Sigma => &self.sigma,
            MatrixKind::Delta => &self.delta,
        }
    }
}

pub enum Evaluator<'a> {
    Exact(&'a Statevector),
    Sampled { state: &'a PreparedState, cache: &'a mut MeasurementCache },
}

/// `(value, per-shot variance, coefficient-free per-shot variance)` of one expectation value.
type Stat = (f64, f64, f64);

fn stat_from(op: &PauliSum, means: impl Iterator<Item = f64>) -> Stat {
    let mut value = op.constant().re;
    let mut var = 0.0;
    let mut var_nc = 0.0;
    for ((_, c), m) in op.measurable_terms().zip(means) {
        value += c.re * m;
        let p1 = ((1.0 - m) / 2.0).clamp(0.0, 1.0);
        var += pauli_variance(Complex64::new(c.re, 0.0), p1);
        var_nc += pauli_variance(Complex64::new(1.0, 0.0), p1);
    }
    (value, var, var_nc)
}

fn exact_stat(state: &Statevector, op: &PauliSum) -> Result<Stat> {
    let means = op
        .measurable_terms()
        .map(|(t, _)| state.pauli_expectation(t).map(|v| v.re))
        .collect::<Result<Vec<_>>>()?;
    Ok(stat_from(op, means.into_iter()))
}

struct Sampler<'a, 'b> {
    plan: &'a QlrPlan,
    state: &'b PreparedState,
    cache: &'b mut MeasurementCache,
    memo: HashMap<usize, Stat>,
}

impl Sampler<'_, '_> {
    fn stat(&mut self, k: usize) -> Result<Stat> {
        if self.cache.pauli_saving() {
            if let Some(s) = self.memo.get(&k) {
                return Ok(*s);
            }
        }
        let op = &self.plan.expectations[k];
        let terms: Vec<PauliTerm> = op.measurable_terms().map(|(t, _)| *t).collect();
        let stats = self.cache.measure_terms(self.state, &terms)?;
        // the sampled mean gives p1 directly; variance uses the sampled p1
        let s = stat_from(op, stats.iter().map(|(m, _)| *m));
        if self.cache.pauli_saving() {
            self.memo.insert(k, s);
        }
        Ok(s)
    }

    /// Values of all expectations an element needs, measured for this element.
    fn element(&mut self, e: &ElementPlan) -> Result<Stat> {
        let ks = e.expectations();
        let n = self.plan.expectations.len();
        let mut v = vec![0.0; n];
        let mut var = vec![0.0; n];
        let mut var_nc = vec![0.0; n];
        for k in ks {
            let (a, b, c) = self.stat(k)?;
            v[k] = a;
            var[k] = b;
            var_nc[k] = c;
        }
        Ok((e.value(&v), e.variance(&v, &var), e.variance_nc(&var_nc)))
    }
}

fn element_stat(e: &ElementPlan, stats: &[Stat]) -> Stat {
    let v: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let var: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let var_nc: Vec<f64> = stats.iter().map(|s| s.2).collect();
    (e.value(&v), e.variance(&v, &var), e.variance_nc(&var_nc))
}

fn assemble(n: usize, stats: &[Stat]) -> MatrixEstimate {
    MatrixEstimate {
        value: DMatrix::from_fn(n, n, |i, j| stats[i * n + j].0),
        std: DMatrix::from_fn(n, n, |i, j| stats[i * n + j].1.max(0.0).sqrt()),
        std_nc: DMatrix::from_fn(n, n, |i, j| stats[i * n + j].2.max(0.0).sqrt()),
    }
}

/// Evaluates every planned element. Exact evaluation checks Hermiticity of A and Σ and the
/// symmetry of B; sampled elements are measured in plan order against the run's cache.
pub fn build_matrices(plan: &QlrPlan, evaluator: Evaluator<'_>) -> Result<QlrProblem> {
    let n = plan.n_operators();
    let (element_stats, moment_stats, pauli_saving): (Vec<Stat>, Vec<(Vec<Stat>, Vec<Stat>)>, Option<bool>) = match evaluator {
        Evaluator::Exact(state) => {
            if state.n_qubits() != plan.n_qubits {
                return Err(Error::SizeMismatch(plan.n_qubits, state.n_qubits()));
            }
            let stats = plan
                .expectations
                .par_iter()
                .map(|op| exact_stat(state, op))
                .collect::<Result<Vec<_>>>()?;
            let elements = plan.matrix_elements().map(|e| element_stat(e, &stats)).collect();
            let moments = plan
                .moments
                .iter()
                .map(|m| {
                    (
                        m.de_excitation.iter().map(|e| element_stat(e, &stats)).collect(),
                        m.excitation.iter().map(|e| element_stat(e, &stats)).collect(),
                    )
                })
                .collect();
            (elements, moments, None)
        }
        Evaluator::Sampled { state, cache } => {
            let saving = cache.pauli_saving();
            let mut s = Sampler { plan, state, cache, memo: HashMap::new() };
            let elements = plan.matrix_elements().map(|e| s.element(e)).collect::<Result<Vec<_>>>()?;
            let mut moments = Vec::new();
            for m in &plan.moments {
                let de = m.de_excitation.iter().map(|e| s.element(e)).collect::<Result<Vec<_>>>()?;
                let ex = m.excitation.iter().map(|e| s.element(e)).collect::<Result<Vec<_>>>()?;
                moments.push((de, ex));
            }
            (elements, moments, Some(saving))
        }
    };
    let nn = n * n;
    let problem = QlrProblem {
        parametrization: plan.parametrization,
        labels: plan.labels.clone(),
        kinds: plan.kinds.clone(),
        a: assemble(n, &element_stats[0..nn]),
        b: assemble(n, &element_stats[nn..2 * nn]),
        sigma: assemble(n, &element_stats[2 * nn..3 * nn]),
        delta: assemble(n, &element_stats[3 * nn..4 * nn]),
        moments: plan
            .moments
            .iter()
            .zip(moment_stats)
            .map(|(m, (de, ex))| TransitionMoments {
                axis: m.axis,
                de_excitation: de.iter().map(|s| s.0).collect(),
                excitation: ex.iter().map(|s| s.0).collect(),
            })
            .collect(),
        pauli_saving,
    };
    if pauli_saving.is_none() {
        let dev = symmetry_defect(&problem);
        if dev > HERMITICITY_TOLERANCE {
            return Err(Error::NotHermitian(dev));
        }
    }
    Ok(problem)
}

/// Largest of `|A - Aᵀ|`, `|B - Bᵀ|`, `|Σ - Σᵀ|` and `|Δ + Δᵀ|` over all elements.
pub fn symmetry_defect(p: &QlrProblem) -> f64 {
    let a = &p.a.value;
    let b = &p.b.value;
    let s = &p.sigma.value;
    let d = &p.delta.value;
    [(a - a.transpose()).amax(), (b - b.transpose()).amax(), (s - s.transpose()).amax(), (d + d.transpose()).amax()]
        .into_iter()
        .fold(0.0, f64::max)
}
