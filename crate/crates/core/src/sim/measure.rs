//! Shot-sampled measurement of Pauli strings, device noise and Pauli saving.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clique::{clique_basis, cover_first_fit, measured_axis};
use crate::error::{Error, Result};
use crate::mitigation::ConfusionMatrix;
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::sim::ansatz::{prepare_state, TUCCSDAnsatz};
use crate::sim::statevector::Statevector;

/// Synthetic device noise: per-qubit readout flips and one global depolarizing
/// channel whose strength grows with the number of Pauli rotations in the circuit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// `(p(0->1), p(1->0))` per qubit; empty means no readout error.
    pub readout_flip: Vec<(f64, f64)>,
    pub depolarizing_per_pauli_layer: f64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn uniform(n_qubits: usize, readout: f64, depolarizing: f64) -> Result<Self> {
        let m = Self { readout_flip: vec![(readout, readout); n_qubits], depolarizing_per_pauli_layer: depolarizing };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        for &(a, b) in &self.readout_flip {
            if !ok(a) {
                return Err(Error::Probability(a));
            }
            if !ok(b) {
                return Err(Error::Probability(b));
            }
        }
        if !ok(self.depolarizing_per_pauli_layer) {
            return Err(Error::Probability(self.depolarizing_per_pauli_layer));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_per_pauli_layer == 0.0 && self.readout_flip.iter().all(|&(a, b)| a == 0.0 && b == 0.0)
    }

    /// Depolarizing strength after `layers` Pauli rotations.
    pub fn effective_depolarizing(&self, layers: usize) -> f64 {
        1.0 - (1.0 - self.depolarizing_per_pauli_layer).powi(layers as i32)
    }

    /// Outcome distribution after the gate channel and readout errors.
    pub fn noisy_distribution(&self, ideal: &[f64], layers: usize) -> Vec<f64> {
        let lam = self.effective_depolarizing(layers);
        let dim = ideal.len();
        let mut p: Vec<f64> = ideal.iter().map(|x| (1.0 - lam) * x + lam / dim as f64).collect();
        for (q, &(p01, p10)) in self.readout_flip.iter().enumerate() {
            if p01 == 0.0 && p10 == 0.0 {
                continue;
            }
            let bit = 1usize << q;
            for b in 0..dim {
                if b & bit != 0 {
                    continue;
                }
                let (z, o) = (p[b], p[b | bit]);
                p[b] = (1.0 - p01) * z + p10 * o;
                p[b | bit] = p01 * z + (1.0 - p10) * o;
            }
        }
        p
    }
}

/// Bitstring counts, indexed by the measured computational-basis outcome.
pub type Histogram = Vec<u64>;

/// A circuit together with the identity of its parameters.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: Statevector,
    pub fingerprint: u64,
    pub n_pauli_layers: usize,
}

impl PreparedState {
    pub fn new(ansatz: &TUCCSDAnsatz, theta: &[f64], kappa: &[f64]) -> Result<Self> {
        let state = prepare_state(ansatz, theta)?;
        Ok(Self { state, fingerprint: fingerprint(ansatz, theta, kappa), n_pauli_layers: ansatz.n_pauli_layers() })
    }

    /// A bare statevector without circuit provenance (noise sees zero Pauli layers).
    pub fn from_state(state: Statevector, fingerprint: u64) -> Self {
        Self { state, fingerprint, n_pauli_layers: 0 }
    }
}

/// Hash of the circuit structure and its parameters.
pub fn fingerprint(ansatz: &TUCCSDAnsatz, theta: &[f64], kappa: &[f64]) -> u64 {
    let mut h = Sha256::new();
    h.update(ansatz.structure_key());
    h.update(b"theta");
    for t in theta {
        h.update(t.to_le_bytes());
    }
    h.update(b"kappa");
    for k in kappa {
        h.update(k.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Deterministic RNG for measurement `counter` of run `run_id`.
pub fn stream_rng(master_seed: u64, run_id: u64, counter: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(run_id.to_le_bytes());
    h.update(counter.to_le_bytes());
    let seed: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(seed)
}

/// Probabilities of each outcome after rotating every qubit into the axis of `basis`
/// (Z where `basis` is the identity).
pub fn rotated_probabilities(state: &Statevector, basis: &PauliTerm) -> Vec<f64> {
    let n = state.n_qubits();
    let mut amps = state.amplitudes().to_vec();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for q in 0..n {
        let axis = measured_axis(basis, q);
        if axis == Pauli::Z {
            continue;
        }
        let bit = 1usize << q;
        for b in 0..amps.len() {
            if b & bit != 0 {
                continue;
            }
            let (mut a0, mut a1) = (amps[b], amps[b | bit]);
            if axis == Pauli::Y {
                a1 *= Complex64::new(0.0, -1.0);
            }
            (a0, a1) = ((a0 + a1) * h, (a0 - a1) * h);
            amps[b] = a0;
            amps[b | bit] = a1;
        }
    }
    amps.iter().map(|a| a.norm_sqr()).collect()
}

/// Draws `shots` outcomes from `p` with sequential conditional binomials.
pub fn sample_distribution(p: &[f64], shots: u64, rng: &mut impl Rng) -> Histogram {
    let mut counts = vec![0u64; p.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    for (b, &pb) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if b + 1 == p.len() || mass <= 0.0 {
            counts[b] = left;
            break;
        }
        let q = (pb.max(0.0) / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q).expect("valid binomial").sample(rng);
        counts[b] = k;
        left -= k;
        mass -= pb.max(0.0);
    }
    counts
}

/// Measures all members of a qubit-wise commuting clique with one set of shots.
pub fn sample_clique(
    state: &PreparedState,
    clique: &[PauliTerm],
    shots: u64,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let basis = clique_basis(clique)?;
    if basis.n_qubits() != state.state.n_qubits() {
        return Err(Error::SizeMismatch(state.state.n_qubits(), basis.n_qubits()));
    }
    let p = noise.noisy_distribution(&rotated_probabilities(&state.state, &basis), state.n_pauli_layers);
    Ok(sample_distribution(&p, shots, rng))
}

/// `(mean, p1)` of a string from a (quasi-)probability vector in a compatible basis.
pub fn pauli_statistics(dist: &[f64], term: &PauliTerm) -> (f64, f64) {
    let support = term.support() as usize;
    let p1: f64 = dist
        .iter()
        .enumerate()
        .filter(|(b, _)| (b & support).count_ones() % 2 == 1)
        .map(|(_, p)| p)
        .sum();
    let total: f64 = dist.iter().sum();
    (total - 2.0 * p1, p1)
}

#[derive(Debug, Clone)]
struct StoredBasis {
    /// Measured axis on every qubit (never the identity).
    axes: PauliTerm,
    dist: Vec<f64>,
}

/// Per-state store of measured clique distributions.
///
/// With saving on, a string is looked up among the stored bases first and only
/// measured when no stored basis covers it; a string therefore always gets the
/// same sampled mean. With saving off, every request measures afresh.
#[derive(Debug, Clone)]
pub struct MeasurementCache {
    fingerprint: u64,
    shots: u64,
    saving: bool,
    noise: NoiseModel,
    mitigation: Option<Arc<ConfusionMatrix>>,
    master_seed: u64,
    run_id: u64,
    bases: Vec<StoredBasis>,
    lookup: HashMap<PauliTerm, (f64, f64)>,
    cliques_measured: u64,
}

/// Sampled estimate of an expectation value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub predicted_std: f64,
}

impl MeasurementCache {
    pub fn new(fingerprint: u64, shots: u64, saving: bool, noise: NoiseModel, master_seed: u64, run_id: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        noise.validate()?;
        Ok(Self {
            fingerprint,
            shots,
            saving,
            noise,
            mitigation: None,
            master_seed,
            run_id,
            bases: Vec::new(),
            lookup: HashMap::new(),
            cliques_measured: 0,
        })
    }

    pub fn with_mitigation(mut self, m: Arc<ConfusionMatrix>) -> Self {
        self.mitigation = Some(m);
        self
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn pauli_saving(&self) -> bool {
        self.saving
    }

    /// Number of clique measurements performed so far.
    pub fn cliques_measured(&self) -> u64 {
        self.cliques_measured
    }

    pub fn stored_bases(&self) -> usize {
        self.bases.len()
    }

    fn check(&self, state: &PreparedState) -> Result<()> {
        if state.fingerprint != self.fingerprint {
            return Err(Error::FingerprintMismatch { cache: self.fingerprint, state: state.fingerprint });
        }
        Ok(())
    }

    fn measure_basis(&mut self, state: &PreparedState, clique: &[PauliTerm]) -> Result<Vec<f64>> {
        let mut rng = stream_rng(self.master_seed, self.run_id, self.cliques_measured);
        self.cliques_measured += 1;
        let hist = sample_clique(state, clique, self.shots, &self.noise, &mut rng)?;
        let raw: Vec<f64> = hist.iter().map(|&c| c as f64 / self.shots as f64).collect();
        match &self.mitigation {
            Some(m) => m.mitigate(&raw),
            None => Ok(raw),
        }
    }

    fn covering_basis(&self, t: &PauliTerm) -> Option<usize> {
        self.bases.iter().position(|b| b.axes.qwc_unchecked(t))
    }

    /// `(mean, p1)` for each requested string; the identity gives `(1, 0)` without shots.
    pub fn measure_terms(&mut self, state: &PreparedState, terms: &[PauliTerm]) -> Result<Vec<(f64, f64)>> {
        self.check(state)?;
        let fresh: Vec<PauliTerm> = terms
            .iter()
            .filter(|t| !t.is_identity() && !(self.saving && self.lookup.contains_key(t)))
            .copied()
            .collect();
        let mut local: HashMap<PauliTerm, (f64, f64)> = HashMap::new();
        if self.saving {
            let mut pending = Vec::new();
            for t in fresh {
                match self.covering_basis(&t) {
                    Some(i) => {
                        let s = pauli_statistics(&self.bases[i].dist, &t);
                        self.lookup.insert(t, s);
                    }
                    None => pending.push(t),
                }
            }
            let cover = cover_first_fit(&pending);
            for clique in cover.cliques() {
                let dist = self.measure_basis(state, clique)?;
                let axes = full_axes(&clique_basis(clique)?);
                for t in clique {
                    self.lookup.insert(*t, pauli_statistics(&dist, t));
                }
                self.bases.push(StoredBasis { axes, dist });
            }
        } else {
            let cover = cover_first_fit(&fresh);
            for clique in cover.cliques() {
                let dist = self.measure_basis(state, clique)?;
                for t in clique {
                    local.insert(*t, pauli_statistics(&dist, t));
                }
            }
        }
        Ok(terms
            .iter()
            .map(|t| {
                if t.is_identity() {
                    (1.0, 0.0)
                } else if self.saving {
                    self.lookup[t]
                } else {
                    local[t]
                }
            })
            .collect())
    }
}

/// Basis with Z filled in wherever `basis` has the identity.
fn full_axes(basis: &PauliTerm) -> PauliTerm {
    let n = basis.n_qubits();
    let mut out = *basis;
    for q in 0..n {
        out.set(q, measured_axis(basis, q));
    }
    out
}

/// Per-shot variance `4 Re{c^2} (p1 - p1^2)` of one string's contribution,
/// with negative `Re{c^2}` clamped to zero.
pub fn pauli_variance(c: Complex64, p1: f64) -> f64 {
    let p1 = p1.clamp(0.0, 1.0);
    (4.0 * (c * c).re * (p1 - p1 * p1)).max(0.0)
}

/// Shot estimate of `<op>`; only the real part of each coefficient contributes.
pub fn sampled_expectation(state: &PreparedState, op: &PauliSum, cache: &mut MeasurementCache) -> Result<Estimate> {
    let terms: Vec<PauliTerm> = op.measurable_terms().map(|(t, _)| *t).collect();
    let stats = cache.measure_terms(state, &terms)?;
    let mut value = op.constant().re;
    let mut var = 0.0;
    for ((_, c), (mean, p1)) in op.measurable_terms().zip(&stats) {
        value += c.re * mean;
        var += pauli_variance(Complex64::new(c.re, 0.0), *p1);
    }
    Ok(Estimate { value, predicted_std: (var / cache.shots() as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliTerm {
        s.parse().unwrap()
    }

    fn prepared(amps: Vec<Complex64>) -> PreparedState {
        PreparedState::from_state(Statevector::from_amplitudes(amps).unwrap(), 7)
    }

    #[test]
    fn zero_state_all_zero_outcomes() {
        let s = PreparedState::from_state(Statevector::basis(1, 0), 1);
        let mut rng = stream_rng(1, 0, 0);
        let h = sample_clique(&s, &[p("Z")], 1000, &NoiseModel::none(), &mut rng).unwrap();
        assert_eq!(h, vec![1000, 0]);
    }

    #[test]
    fn readout_flip_mean() {
        let noise = NoiseModel::uniform(1, 0.1, 0.0).unwrap();
        let d = noise.noisy_distribution(&[1.0, 0.0], 0);
        assert!((pauli_statistics(&d, &p("Z")).0 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rotated_basis_probabilities() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |+i> = (|0> + i|1>)/sqrt2 has <Y> = 1
        let s = prepared(vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)]);
        let pr = rotated_probabilities(&s.state, &p("Y"));
        assert!((pr[0] - 1.0).abs() < 1e-15);
        let pr = rotated_probabilities(&s.state, &p("X"));
        assert!((pr[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_costs_no_shots() {
        let s = PreparedState::from_state(Statevector::basis(2, 0), 3);
        let mut cache = MeasurementCache::new(3, 100, true, NoiseModel::none(), 0, 0).unwrap();
        let op = PauliSum::identity(2, 2.5);
        let e = sampled_expectation(&s, &op, &mut cache).unwrap();
        assert_eq!(e, Estimate { value: 2.5, predicted_std: 0.0 });
        assert_eq!(cache.cliques_measured(), 0);
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let s = PreparedState::from_state(Statevector::basis(1, 0), 3);
        let mut cache = MeasurementCache::new(4, 100, true, NoiseModel::none(), 0, 0).unwrap();
        assert!(matches!(
            cache.measure_terms(&s, &[p("Z")]),
            Err(Error::FingerprintMismatch { cache: 4, state: 3 })
        ));
    }

    #[test]
    fn saving_reuses_and_covers() {
        let h = 0.5;
        let s = prepared(vec![Complex64::new(h, 0.0); 4]);
        let mut cache = MeasurementCache::new(7, 1000, true, NoiseModel::none(), 11, 0).unwrap();
        let op = PauliSum::from_terms(2, [(p("XI"), Complex64::new(1.0, 0.0)), (p("IX"), Complex64::new(0.5, 0.0))]).unwrap();
        let a = sampled_expectation(&s, &op, &mut cache).unwrap();
        let b = sampled_expectation(&s, &op, &mut cache).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.cliques_measured(), 1);
        // qubit 0 was measured in X, so XZ needs a new basis
        cache.measure_terms(&s, &[p("XZ")]).unwrap();
        assert_eq!(cache.cliques_measured(), 2);
        // IZ is covered by the stored XZ basis
        cache.measure_terms(&s, &[p("IZ")]).unwrap();
        assert_eq!(cache.cliques_measured(), 2);
    }

    #[test]
    fn no_saving_measures_every_time() {
        let s = PreparedState::from_state(Statevector::basis(1, 0), 3);
        let mut cache = MeasurementCache::new(3, 10, false, NoiseModel::none(), 0, 0).unwrap();
        cache.measure_terms(&s, &[p("Z")]).unwrap();
        cache.measure_terms(&s, &[p("Z")]).unwrap();
        assert_eq!(cache.cliques_measured(), 2);
    }

    #[test]
    fn pauli_variance_examples() {
        assert_eq!(pauli_variance(Complex64::new(1.0, 0.0), 0.5), 1.0);
        assert_eq!(pauli_variance(Complex64::new(2.0, 0.0), 0.0), 0.0);
        assert_eq!(pauli_variance(Complex64::new(0.0, 1.0), 0.5), 0.0);
    }
}
