//! Nonlinear Klein–Gordon solver and the perturbative oracle.

mod nonlinearity;
mod perturbative;
mod solver;

pub use nonlinearity::{Monomial, NonlinearitySpec, Slot};
pub use perturbative::{perturbative, PerturbativePaths};
pub use solver::{energy, solve, solve_at_times, Scheme, SolutionPath, SolverConfig};
