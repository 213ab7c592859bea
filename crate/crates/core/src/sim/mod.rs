//! Statevector simulation, sampling and ground-state optimization.

pub mod ansatz;
pub mod measure;
pub mod statevector;
pub mod vqe;

pub use ansatz::{prepare_state, Excitation, ExcitationKind, TUCCSDAnsatz};
pub use measure::{
    fingerprint, pauli_variance, sample_clique, sampled_expectation, stream_rng, Estimate,
    Histogram, MeasurementCache, NoiseModel, PreparedState,
};
pub use statevector::{exact_expectation, Statevector};
pub use vqe::{oo_vqe, GroundState, VqeOptions};
