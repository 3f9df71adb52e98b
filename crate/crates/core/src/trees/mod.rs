//! Wick reduction and tree-indexed evaluation of the homogeneous series terms.

mod tree;
mod wick;

pub use tree::{enumerate_trees, evaluate_tree, linear_extensions, wick_weights, RootedTree, Subtree, TreeValue};
pub use wick::{vacuum_expectation, wick_reduce, Pairing, WickKind, WickSymbol, WickTerm, WickWord};
