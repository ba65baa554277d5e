//! Open-system model of one multilevel atom coupled to two counter-propagating
//! resonator modes `a` (+ sense) and `b` (− sense).
//!
//! Rates follow one convention throughout: `κ₀`, `κ_ext` and `γ` are field
//! (amplitude) decay rates, collapse operators carry `√(2·rate)`, and the
//! empty-cavity transmission dip has an intensity HWHM of `κ₀ + κ_ext`.

mod evolve;
mod liouvillian;
mod operators;
mod space;
mod steady;
mod system;

use thiserror::Error;

pub use evolve::{time_evolve, EvolveOptions, Integrator};
pub use liouvillian::{build_liouvillian, unvectorize, vectorize, Liouvillian};
pub use operators::{build_operators, Operators};
pub use space::{build_space, CompositeSpace, SpaceBudget};
pub use steady::{expectation, steady_state, DensityOperator, SolverKind, SteadyStateOptions};
pub use system::{build_hamiltonian, DriveMode, ModeCoupling, SystemParams};

pub use faer::c64;
pub type Matrix = faer::Mat<c64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error(
        "composite dimension {dim} exceeds the budget of {max_dim}; prune atomic levels or lower the photon cutoffs"
    )]
    Capacity { dim: usize, max_dim: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(&'static str),
    #[error("inconsistent parameters: {0}")]
    Consistency(String),
    #[error("steady state is not unique (degenerate null space of the generator)")]
    NonUnique,
    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Convergence { residual: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step size underflow at t = {t:e} s (h = {h:e} s); the problem is too stiff, consider smaller cutoffs")]
    Stiffness { t: f64, h: f64 },
    #[error("time grid must be non-empty and increasing")]
    InvalidGrid,
    #[error("invalid density operator: {0}")]
    InvalidState(String),
    #[error("linear solver failure: {0}")]
    Solver(String),
}
