//! Conserved quantities of nonlinear Klein–Gordon equations through a
//! classical Fock space of polynomial functionals, on a periodic spectral grid.

pub mod conserved;
pub mod dynamics;
pub mod error;
pub mod fockspace;
pub mod io;
pub mod majorant;
pub mod propagator;
pub mod quad;
pub mod selftest;
pub mod spectral;
pub mod texp;
pub mod trees;

pub use dynamics::{NonlinearitySpec, SolverConfig};
pub use error::{Error, Result};
pub use fockspace::{CoVector, ModeBasis, PolyFunctional};
pub use majorant::MajorantSeries;
pub use propagator::LinearSolution;
pub use spectral::{CauchyPair, SpectralField, SpectralGrid};
pub use trees::RootedTree;
