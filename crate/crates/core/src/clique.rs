//! Qubit-wise commuting clique covers.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliTerm};

/// Partition of a list of strings into qubit-wise commuting groups.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CliqueCover {
    cliques: Vec<Vec<PauliTerm>>,
    #[serde(skip)]
    member_index: HashMap<PauliTerm, usize>,
}

impl CliqueCover {
    pub fn cliques(&self) -> &[Vec<PauliTerm>] {
        &self.cliques
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn clique_of(&self, term: &PauliTerm) -> Option<usize> {
        self.member_index.get(term).copied()
    }
}

/// Greedy first-fit: each term joins the first clique whose members it all
/// qubit-wise commutes with, otherwise it opens a new clique. Repeated terms
/// are placed once.
pub fn cover_first_fit(terms: &[PauliTerm]) -> CliqueCover {
    let mut cover = CliqueCover::default();
    // A clique's members are QWC with a string iff that string is QWC with the
    // clique's combined basis, so only the basis needs to be kept per clique.
    let mut bases: Vec<PauliTerm> = Vec::new();
    for t in terms {
        if cover.member_index.contains_key(t) {
            continue;
        }
        let slot = bases.iter().position(|b| b.qwc_unchecked(t) && b.n_qubits() == t.n_qubits());
        let id = match slot {
            Some(id) => {
                bases[id] = merge_basis(&bases[id], t);
                cover.cliques[id].push(*t);
                id
            }
            None => {
                bases.push(*t);
                cover.cliques.push(vec![*t]);
                cover.cliques.len() - 1
            }
        };
        cover.member_index.insert(*t, id);
    }
    cover
}

/// Union of the non-identity positions of two qubit-wise commuting strings.
pub fn merge_basis(a: &PauliTerm, b: &PauliTerm) -> PauliTerm {
    PauliTerm::from_bits(a.n_qubits(), a.x_bits() | b.x_bits(), a.z_bits() | b.z_bits())
}

/// Shared measurement basis of a clique; qubits where every member is the
/// identity are reported as `I`.
pub fn clique_basis(clique: &[PauliTerm]) -> Result<PauliTerm> {
    let first = clique.first().ok_or_else(|| Error::Dimension("empty clique".into()))?;
    let mut basis = *first;
    for t in &clique[1..] {
        if !basis.qubitwise_commutes(t)? {
            return Err(Error::NotQubitwiseCommuting(basis.to_string(), t.to_string()));
        }
        basis = merge_basis(&basis, t);
    }
    Ok(basis)
}

/// Measurement basis symbol for one qubit, Z where the basis has the identity.
pub fn measured_axis(basis: &PauliTerm, qubit: usize) -> Pauli {
    match basis.get(qubit) {
        Pauli::I => Pauli::Z,
        p => p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn terms(s: &[&str]) -> Vec<PauliTerm> {
        s.iter().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn first_fit_examples() {
        let c = cover_first_fit(&terms(&["ZI", "IZ", "XI"]));
        assert_eq!(c.cliques(), &[terms(&["ZI", "IZ"]), terms(&["XI"])]);
        let c = cover_first_fit(&terms(&["XX", "YY", "ZZ"]));
        assert_eq!(c.len(), 3);
        assert_eq!(c.clique_of(&"YY".parse().unwrap()), Some(1));
    }

    #[test]
    fn clique_basis_rejects_non_commuting() {
        assert!(clique_basis(&terms(&["XI", "YI"])).is_err());
        assert_eq!(clique_basis(&terms(&["XI", "IZ"])).unwrap().to_string(), "XZ");
    }

    proptest! {
        #[test]
        fn cover_invariants(raw in prop::collection::vec((0u64..16, 0u64..16), 0..40)) {
            let ts: Vec<PauliTerm> = raw.iter().map(|&(x, z)| PauliTerm::from_bits(4, x, z)).collect();
            let c = cover_first_fit(&ts);
            prop_assert!(c.len() <= ts.len());
            for t in &ts {
                let id = c.clique_of(t).unwrap();
                prop_assert_eq!(c.cliques()[id].iter().filter(|m| *m == t).count(), 1);
                let hits = c.cliques().iter().flatten().filter(|m| *m == t).count();
                prop_assert_eq!(hits, 1);
            }
            for cl in c.cliques() {
                for a in cl {
                    for b in cl {
                        prop_assert!(a.qubitwise_commutes(b).unwrap());
                    }
                }
            }
        }
    }
}
