//! Polynomial functionals on the free-solution space and the operators acting on them.

mod basis;
mod functional;
mod interaction;
pub mod multiset;
mod operators;

pub use basis::{sparse_product, ModeBasis, ModeKind, RealMode, Sparse, MAX_DEGREE};
pub use functional::{Capped, NormMode, NormTag, NormValue, PolyFunctional};
pub use interaction::{DegreeTable, InteractionTable};
pub use operators::CoVector;
