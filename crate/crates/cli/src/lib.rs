//! Conformance checking, diagram desugaring and the Blackboard simulator.

pub mod blackboard;
pub mod check;
pub mod desugar;
pub mod sim;
pub mod theorem;
