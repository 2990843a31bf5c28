//! Snapshot model, finite algebras, interface specifications and temporal
//! constraints over traces of architecture configurations.

pub mod algebra;
pub mod constraints;
pub mod diagrams;
pub mod eval;
pub mod fixtures;
pub mod interface;
pub mod model;
pub mod syntax;
pub mod typing;
pub mod value;

pub use algebra::{Algebra, DatatypeSpec, Signature};
pub use constraints::{check_trace_assertion, trace_holds, Mode, Monitor, TraceAssertion, Verdict, VerdictValue};
pub use model::{ArchConfiguration, ComponentSnapshot, ComponentUniverse, ConfigurationTrace};
pub use syntax::{Formula, Term, TraceFormula};
pub use value::{Sort, Value};
