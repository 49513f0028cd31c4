//! Space-efficient quantum backtracking.
//!
//! The crate builds classical backtracking trees for small constraint
//! satisfaction problems (graph coloring and SAT) and runs the quantum-walk
//! detection and finding procedures on top of them. The walk reflections
//! `R_A` / `R_B` exist in two independent backends:
//!
//! - [`walk::TreeOperators`]: dense matrices over the tree-vertex basis.
//! - [`walk::build_ra_circuit`] / [`walk::build_rb_circuit`]: qubit-level
//!   circuits using an `O(n log d)` assignment register and an `O(log m)`
//!   quantum counter for the predicate.
//!
//! Both backends feed the same phase-estimation kernel in [`simulator`], and
//! every quantum verdict can be checked against [`classical`] backtracking.
//!
//! Variables are 0-based everywhere in the API. File formats and printed
//! assignments use the usual 1-based DIMACS numbering.

pub mod classical;
pub mod csp;
pub mod driver;
pub mod heuristics;
pub mod simulator;
pub mod walk;

pub use classical::{BacktrackTree, ClassicalError};
pub use csp::{Assignment, Constraint, CspError, CspInstance, Literal, ProblemKind, TriBool};
pub use driver::{
    Backend, DetectionConfig, DetectionResult, DriverError, FindResult, Mode, Verdict,
};
pub use heuristics::{Heuristic, VariableOrder};
pub use simulator::{Circuit, Gate, RegisterLayout, SimError, Statevector};
pub use walk::{TreeOperators, WalkError, WalkOptions};
