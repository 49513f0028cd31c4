//! The walk reflections `R_A` and `R_B`, as dense operators on the tree
//! space and as qubit-level circuits.
//!
//! The circuits work on any subtree: [`WalkOptions::root_level`] is the depth
//! of the subtree root, which sets the parity split between the two
//! reflections, the root weight, and the `R_B` bypass.

mod circuit;
mod predicate;
mod tree;

use thiserror::Error;

use crate::simulator::{Qubit, SimError};

pub use circuit::{
    ancilla_violations, build_ra_circuit, build_rb_circuit, circuit_operators,
    circuit_phase_accept, restrict_to_tree, CircuitOperators, Restriction,
};
pub use predicate::{
    build_parallel_predicate, build_partial_predicate_circuit, build_predicate_circuit,
    constraint_gadget, gadget_bool_negate, gadget_clause, gadget_edge_differs,
    gadget_vertex_assigned, CheckWires, ParallelLayout,
};
pub use tree::{build_tree_operators, diffusion_state, TreeOperators};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("layout does not match the instance: {0}")]
    Layout(String),
    #[error("constraints are not sorted by milestone")]
    Unsorted,
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Options for the reflection circuits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkOptions {
    /// Extra control on the step-6 reflection only.
    pub control: Option<Qubit>,
    /// Depth of the subtree root.
    pub root_level: usize,
    /// Skip constraints that are settled above the subtree root.
    pub skip_settled: bool,
    /// Largest domain the multiplexed reflection accepts.
    pub max_branching: usize,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            control: None,
            root_level: 0,
            skip_settled: false,
            max_branching: 4,
        }
    }
}
