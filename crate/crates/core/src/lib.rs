//! Quantum linear response on a simulated quantum register.

pub mod campaign;
pub mod chem;
pub mod clique;
pub mod error;
pub mod fermion;
pub mod mapping;
pub mod metrics;
pub mod mitigation;
pub mod pauli;
pub mod qlr;
pub mod sim;

pub use error::{Error, Result};
