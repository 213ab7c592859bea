//! Quantum linear response: operator basis, matrix construction and the eigenproblem.

pub mod operators;
pub mod plan;
pub mod reduce;
pub mod solve;

pub use operators::{build_operator_basis, build_spin_adapted_ops, OperatorKind, Parametrization, QlrOperator};
pub use plan::{
    build_matrices, symmetry_defect, Evaluator, MatrixEstimate, MatrixKind, PauliCounts, PlanOptions, QlrPlan,
    QlrProblem, TransitionMoments,
};
pub use solve::{energy_grid, oscillator_strengths, solve, spectrum, QlrSolution, HARTREE_TO_EV};
