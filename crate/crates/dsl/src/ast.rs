//! Parsed units. Formulas are the core syntax trees before elaboration:
//! bare names are still variables and quantifier domains may be omitted.

use std::collections::BTreeMap;

use archtrace_core::syntax::{Formula, PortRef, TraceFormula};
use archtrace_core::value::{Sort, Value};
use serde::Serialize;

use crate::diagnostics::Span;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum UnitKind {
    Datatype,
    Portspec,
    Interface,
    Constraints,
    Diagram,
    Algebra,
    Trace,
}

impl UnitKind {
    pub fn keyword(self) -> &'static str {
        match self {
            UnitKind::Datatype => "datatype",
            UnitKind::Portspec => "portspec",
            UnitKind::Interface => "interface",
            UnitKind::Constraints => "constraints",
            UnitKind::Diagram => "diagram",
            UnitKind::Algebra => "algebra",
            UnitKind::Trace => "trace",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "datatype" => UnitKind::Datatype,
            "portspec" => UnitKind::Portspec,
            "interface" => UnitKind::Interface,
            "constraints" => UnitKind::Constraints,
            "diagram" => UnitKind::Diagram,
            "algebra" => UnitKind::Algebra,
            "trace" => UnitKind::Trace,
            _ => return None,
        })
    }
}

/// `names: sort`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub names: Vec<String>,
    pub sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Axiom<F> {
    pub label: Option<String>,
    pub formula: F,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionDecl {
    pub name: String,
    pub args: Vec<Sort>,
    pub result: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PredicateDecl {
    pub name: String,
    pub args: Vec<Sort>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DatatypeUnit {
    pub sorts: Vec<String>,
    pub functions: Vec<FunctionDecl>,
    pub predicates: Vec<PredicateDecl>,
    pub vars: Vec<VarDecl>,
    pub axioms: Vec<Axiom<Formula>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PortspecUnit {
    pub ports: Vec<VarDecl>,
}

/// A port listed by an interface, with an optional sort overriding the port specification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PortEntry {
    pub name: String,
    pub sort: Option<Sort>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InterfaceUnit {
    pub local: Vec<PortEntry>,
    pub input: Vec<PortEntry>,
    pub output: Vec<PortEntry>,
    pub vars: Vec<VarDecl>,
    pub axioms: Vec<Axiom<Formula>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConstraintsUnit {
    pub rigid: Vec<VarDecl>,
    pub flexible: Vec<VarDecl>,
    pub axioms: Vec<Axiom<TraceFormula>>,
}

/// `[n]`, `[n..m]`, `[n..]` or `[..m]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub min: Option<u32>,
    pub max: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagramComponent {
    /// Rigid component variables annotated on the box.
    pub vars: Vec<String>,
    pub iface: String,
    pub bounds: Option<Bounds>,
    pub local: Vec<PortEntry>,
    pub input: Vec<PortEntry>,
    pub output: Vec<PortEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DiagramUnit {
    pub components: Vec<DiagramComponent>,
    /// `I.input <- J.output` at interface level.
    pub connections: Vec<(PortRef, PortRef)>,
    pub vars: Vec<VarDecl>,
    /// Interface assertions grouped by interface.
    pub axioms: Vec<(String, Vec<Axiom<Formula>>)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AlgebraUnit {
    pub carriers: Vec<(String, Vec<Value>)>,
    pub functions: Vec<(String, Vec<Value>, Value)>,
    pub predicates: Vec<(String, Vec<Value>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceComponent {
    pub id: String,
    pub iface: Option<String>,
    pub local: Vec<(String, Vec<Value>)>,
    pub input: Vec<String>,
    pub output: Vec<String>,
    /// `concrete -> interface port`.
    pub renames: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActiveEntry {
    pub id: String,
    pub values: Vec<(String, Vec<Value>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub active: Vec<ActiveEntry>,
    /// `id.input <- id.output` on concrete ports.
    pub conns: Vec<(PortRef, PortRef)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TraceUnit {
    pub components: Vec<TraceComponent>,
    pub steps: Vec<TraceStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Body {
    Datatype(DatatypeUnit),
    Portspec(PortspecUnit),
    Interface(InterfaceUnit),
    Constraints(ConstraintsUnit),
    Diagram(DiagramUnit),
    Algebra(AlgebraUnit),
    Trace(TraceUnit),
}

/// One parsed unit. Equality ignores source positions, which live in [`ParsedUnit`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceUnit {
    pub name: String,
    pub imports: Vec<String>,
    pub body: Body,
}

impl SourceUnit {
    pub fn kind(&self) -> UnitKind {
        match &self.body {
            Body::Datatype(_) => UnitKind::Datatype,
            Body::Portspec(_) => UnitKind::Portspec,
            Body::Interface(_) => UnitKind::Interface,
            Body::Constraints(_) => UnitKind::Constraints,
            Body::Diagram(_) => UnitKind::Diagram,
            Body::Algebra(_) => UnitKind::Algebra,
            Body::Trace(_) => UnitKind::Trace,
        }
    }
}

/// A unit with the positions of its header and items, keyed like `axiom:2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedUnit {
    pub unit: SourceUnit,
    pub header: Span,
    pub spans: BTreeMap<String, Span>,
}

impl ParsedUnit {
    pub fn span(&self, key: &str) -> Span {
        self.spans.get(key).copied().unwrap_or(self.header)
    }

    /// Unit without positions, as produced by constructing the tree directly.
    pub fn bare(unit: SourceUnit) -> Self {
        ParsedUnit { unit, header: Span::default(), spans: BTreeMap::new() }
    }
}
