//! Port specifications, interfaces, interface assertions and their
//! interpretation by component snapshots.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Signature};
use crate::eval::{Assignments, Binding, Env, EvalError, Evaluator, World};
use crate::model::{ComponentSnapshot, ComponentUniverse, PortKind, ViolationKind};
use crate::syntax::{Binder, Formula, Term};
use crate::value::{MessageSet, Sort, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InterfaceError {
    #[error("port {port} of interface {iface} appears in more than one port set")]
    OverlappingPorts { iface: String, port: String },
    #[error("port {port} of interface {iface} has no sort")]
    UntypedPort { iface: String, port: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Typing of port names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PortSpec {
    pub typing: BTreeMap<String, Sort>,
}

impl PortSpec {
    pub fn validate(&self, sig: &Signature) -> Result<(), InterfaceError> {
        for s in self.typing.values() {
            sig.check_sort(s)?;
        }
        Ok(())
    }
}

/// Local, input and output ports of an interface, each with its declared sort.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interface {
    local: BTreeSet<String>,
    input: BTreeSet<String>,
    output: BTreeSet<String>,
    typing: BTreeMap<String, Sort>,
}

impl Interface {
    pub fn new(
        id: &str,
        ports: &PortSpec,
        local: BTreeSet<String>,
        input: BTreeSet<String>,
        output: BTreeSet<String>,
    ) -> Result<Self, InterfaceError> {
        let mut typing = BTreeMap::new();
        for (set_a, set_b) in [(&local, &input), (&local, &output), (&input, &output)] {
            if let Some(p) = set_a.intersection(set_b).next() {
                return Err(InterfaceError::OverlappingPorts { iface: id.into(), port: p.clone() });
            }
        }
        for p in local.iter().chain(&input).chain(&output) {
            let s =
                ports.typing.get(p).ok_or_else(|| InterfaceError::UntypedPort { iface: id.into(), port: p.clone() })?;
            typing.insert(p.clone(), s.clone());
        }
        Ok(Interface { local, input, output, typing })
    }

    pub fn local(&self) -> &BTreeSet<String> {
        &self.local
    }

    pub fn input(&self) -> &BTreeSet<String> {
        &self.input
    }

    pub fn output(&self) -> &BTreeSet<String> {
        &self.output
    }

    pub fn sort_of(&self, port: &str) -> Option<&Sort> {
        self.typing.get(port)
    }

    pub fn kind_of(&self, port: &str) -> Option<PortKind> {
        if self.local.contains(port) {
            Some(PortKind::Local)
        } else if self.input.contains(port) {
            Some(PortKind::Input)
        } else if self.output.contains(port) {
            Some(PortKind::Output)
        } else {
            None
        }
    }

    pub fn ports(&self) -> impl Iterator<Item = &String> {
        self.local.iter().chain(&self.input).chain(&self.output)
    }
}

/// Labelled interface assertion with declarations for its free variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterfaceAssertion {
    pub label: String,
    pub formula: Formula,
    pub vars: Vec<Binder>,
}

/// Interfaces keyed by id, each with its assertions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InterfaceSpec {
    pub interfaces: BTreeMap<String, Interface>,
    pub assertions: BTreeMap<String, Vec<InterfaceAssertion>>,
}

impl InterfaceSpec {
    pub fn interface(&self, id: &str) -> Option<&Interface> {
        self.interfaces.get(id)
    }

    /// `(interface, input port)` pairs over all interfaces.
    pub fn if_in(&self) -> BTreeSet<(String, String)> {
        self.interfaces.iter().flat_map(|(i, f)| f.input.iter().map(move |p| (i.clone(), p.clone()))).collect()
    }

    /// `(interface, output port)` pairs over all interfaces.
    pub fn if_out(&self) -> BTreeSet<(String, String)> {
        self.interfaces.iter().flat_map(|(i, f)| f.output.iter().map(move |p| (i.clone(), p.clone()))).collect()
    }

    /// Assertions that read a local port of their interface.
    pub fn local_port_reads(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (iface, list) in &self.assertions {
            let Some(ifc) = self.interfaces.get(iface) else { continue };
            for a in list {
                if reads_local(&a.formula, ifc) {
                    out.push((iface.clone(), a.label.clone()));
                }
            }
        }
        out
    }
}

fn reads_local(f: &Formula, ifc: &Interface) -> bool {
    fn term(t: &Term, ifc: &Interface) -> bool {
        match t {
            Term::Port(p) => ifc.local.contains(p),
            Term::Var(_) | Term::PortOf(..) => false,
            Term::App(_, a) | Term::Set(a) => a.iter().any(|x| term(x, ifc)),
            Term::Pair(a, b) => term(a, ifc) || term(b, ifc),
        }
    }
    match f {
        Formula::Pred(_, a) => a.iter().any(|x| term(x, ifc)),
        Formula::Eq(a, b) | Formula::Member(a, b) => term(a, ifc) || term(b, ifc),
        Formula::Not(g) | Formula::Quant(_, _, g) => reads_local(g, ifc),
        Formula::Binary(_, a, b) => reads_local(a, ifc) || reads_local(b, ifc),
        _ => false,
    }
}

/// A snapshot interpreting an interface, with the port bijection
/// `interface port -> snapshot port`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterfaceInterpretation {
    pub iface: String,
    pub snapshot: ComponentSnapshot,
    pub ports: BTreeMap<String, String>,
}

impl InterfaceInterpretation {
    /// Interpretation whose snapshot uses the interface's port names.
    pub fn identity(iface: &str, ifc: &Interface, snapshot: ComponentSnapshot) -> Self {
        let ports = ifc.ports().map(|p| (p.clone(), p.clone())).collect();
        InterfaceInterpretation { iface: iface.to_string(), snapshot, ports }
    }

    /// Valuation of an interface port.
    pub fn read(&self, port: &str) -> Option<&MessageSet> {
        self.snapshot.value(self.ports.get(port)?)
    }

    /// Problems with the bijection: every interface port maps to a distinct
    /// snapshot port of the same kind, covering all snapshot ports.
    pub fn check_bijection(&self, ifc: &Interface) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for p in ifc.ports() {
            match self.ports.get(p) {
                None => problems.push(format!("interface port {p} is not mapped")),
                Some(c) => {
                    if !seen.insert(c) {
                        problems.push(format!("snapshot port {c} is the image of two interface ports"));
                    }
                    if self.snapshot.port_kind(c) != ifc.kind_of(p) {
                        problems.push(format!("interface port {p} maps to {c} of a different kind"));
                    }
                }
            }
        }
        for p in self.ports.keys() {
            if ifc.kind_of(p).is_none() {
                problems.push(format!("{p} is not a port of the interface"));
            }
        }
        let all: BTreeSet<&String> = self
            .snapshot
            .local_ports()
            .iter()
            .chain(self.snapshot.input_ports())
            .chain(self.snapshot.output_ports())
            .collect();
        for c in all {
            if !seen.contains(c) {
                problems.push(format!("snapshot port {c} interprets no interface port"));
            }
        }
        problems
    }
}

struct SnapshotWorld<'a> {
    interp: &'a InterfaceInterpretation,
}

impl World for SnapshotWorld<'_> {
    fn own_port(&self, port: &str) -> Result<Option<&MessageSet>, EvalError> {
        match self.interp.read(port) {
            Some(v) => Ok(Some(v)),
            None => Err(EvalError::UnknownPort { id: self.interp.snapshot.id().to_string(), port: port.to_string() }),
        }
    }
}

/// Value of an interface term for one interpreted snapshot.
pub fn eval_interface_term(
    alg: &Algebra,
    asg: &BTreeMap<String, Value>,
    interp: &InterfaceInterpretation,
    t: &Term,
) -> Result<Value, EvalError> {
    let world = SnapshotWorld { interp };
    let ev = Evaluator::new(alg, &world);
    ev.term_strict(t, &mut Env::from_data(asg))
}

/// Truth of an interface assertion for one interpreted snapshot. Free
/// variables not fixed by `asg` range over their declared sorts, universally.
pub fn interface_assertion_holds(
    alg: &Algebra,
    asg: &BTreeMap<String, Value>,
    interp: &InterfaceInterpretation,
    a: &InterfaceAssertion,
) -> Result<bool, EvalError> {
    Ok(first_counterexample(alg, asg, interp, a)?.is_none())
}

fn first_counterexample(
    alg: &Algebra,
    asg: &BTreeMap<String, Value>,
    interp: &InterfaceInterpretation,
    a: &InterfaceAssertion,
) -> Result<Option<Vec<(String, String)>>, EvalError> {
    let world = SnapshotWorld { interp };
    let ev = Evaluator::new(alg, &world);
    let free = a.formula.free_vars();
    let open: Vec<Binder> =
        a.vars.iter().filter(|b| free.contains(&b.var) && !asg.contains_key(&b.var)).cloned().collect();
    for v in &free {
        if !asg.contains_key(v) && !open.iter().any(|b| &b.var == v) {
            return Err(EvalError::Unbound(v.clone()));
        }
    }
    let domains = ev.domains(&open)?;
    let mut env = Env::from_data(asg);
    let base = env.len();
    for b in &open {
        env.push(&b.var, Binding::Data(Value::atom("")));
    }
    let mut it = Assignments::new(&domains);
    while let Some(choice) = it.next_choice() {
        for (i, b) in choice.iter().enumerate() {
            env.set(base + i, b.clone());
        }
        if !ev.holds(&a.formula, &mut env)? {
            return Ok(Some(open.iter().zip(&choice).map(|(b, v)| (b.var.clone(), v.to_string())).collect()));
        }
    }
    Ok(None)
}

/// Snapshot valuations outside their port sorts.
pub fn check_port_typing(interp: &InterfaceInterpretation, ifc: &Interface, alg: &Algebra) -> Vec<InterfaceViolation> {
    let mut out = Vec::new();
    for p in ifc.ports() {
        let (Some(sort), Some(vals)) = (ifc.sort_of(p), interp.read(p)) else { continue };
        let msg = sort.message_sort();
        for v in vals.iter() {
            if !alg.contains(msg, v) {
                out.push(InterfaceViolation::Typing {
                    id: interp.snapshot.id().to_string(),
                    port: p.clone(),
                    value: v.to_string(),
                    sort: msg.to_string(),
                });
            }
        }
    }
    out
}

/// Interface interpretations grouped by interface id, with a lookup from
/// component ids to their interface and port map.
#[derive(Clone, Debug, Default)]
pub struct SpecInterpretation {
    by_iface: BTreeMap<String, Vec<InterfaceInterpretation>>,
    components: BTreeMap<String, Vec<Arc<str>>>,
    bindings: HashMap<String, (String, BTreeMap<String, String>)>,
}

impl SpecInterpretation {
    pub fn new(interps: impl IntoIterator<Item = InterfaceInterpretation>) -> Self {
        let mut by_iface: BTreeMap<String, Vec<InterfaceInterpretation>> = BTreeMap::new();
        for j in interps {
            by_iface.entry(j.iface.clone()).or_default().push(j);
        }
        let mut components: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut bindings = HashMap::new();
        for (iface, list) in &by_iface {
            for j in list {
                components.entry(iface.clone()).or_default().insert(j.snapshot.id().to_string());
                bindings.entry(j.snapshot.id().to_string()).or_insert_with(|| (iface.clone(), j.ports.clone()));
            }
        }
        let components = components
            .into_iter()
            .map(|(i, ids)| (i, ids.into_iter().map(|s| Arc::from(s.as_str())).collect()))
            .collect();
        SpecInterpretation { by_iface, components, bindings }
    }

    /// Adds interfaces that have no interpretation, so quantifiers over them are empty.
    pub fn declare_interfaces<'a>(&mut self, ids: impl IntoIterator<Item = &'a String>) {
        for i in ids {
            self.components.entry(i.clone()).or_default();
            self.by_iface.entry(i.clone()).or_default();
        }
    }

    pub fn interpretations(&self) -> &BTreeMap<String, Vec<InterfaceInterpretation>> {
        &self.by_iface
    }

    /// Component ids interpreted for an interface, ascending.
    pub fn components(&self, iface: &str) -> Option<&[Arc<str>]> {
        self.components.get(iface).map(|v| v.as_slice())
    }

    /// Interface id of a component.
    pub fn interface_of(&self, id: &str) -> Option<&str> {
        self.bindings.get(id).map(|(i, _)| i.as_str())
    }

    /// Snapshot port interpreting an interface port of a component.
    pub fn concrete_port(&self, id: &str, port: &str) -> Option<&str> {
        self.bindings.get(id)?.1.get(port).map(|s| s.as_str())
    }

    /// Union of all interpreting snapshots.
    pub fn universe(&self) -> ComponentUniverse {
        ComponentUniverse::new(self.by_iface.values().flatten().map(|j| j.snapshot.clone()))
    }
}

/// Failure found while checking a specification interpretation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum InterfaceViolation {
    UnknownInterface { iface: String },
    SharedId { id: String, ifaces: Vec<String> },
    PortMap { id: String, problem: String },
    Unhealthy(ViolationKind),
    Typing { id: String, port: String, value: String, sort: String },
    Assertion { iface: String, label: String, id: String, assignment: Vec<(String, String)> },
    Evaluation { iface: String, label: String, id: String, error: String },
}

impl fmt::Display for InterfaceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterfaceViolation::UnknownInterface { iface } => write!(f, "unknown interface {iface}"),
            InterfaceViolation::SharedId { id, ifaces } => {
                write!(f, "component {id} interprets several interfaces: {}", ifaces.join(", "))
            }
            InterfaceViolation::PortMap { id, problem } => write!(f, "{id}: {problem}"),
            InterfaceViolation::Unhealthy(k) => write!(f, "{k}"),
            InterfaceViolation::Typing { id, port, value, sort } => {
                write!(f, "{id}.{port} holds {value}, which is not of sort {sort}")
            }
            InterfaceViolation::Assertion { iface, label, id, assignment } => {
                write!(f, "{iface} assertion {label} fails for {id}")?;
                if !assignment.is_empty() {
                    let a: Vec<String> = assignment.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                    write!(f, " with {}", a.join(", "))?;
                }
                Ok(())
            }
            InterfaceViolation::Evaluation { iface, label, id, error } => {
                write!(f, "{iface} assertion {label} cannot be evaluated for {id}: {error}")
            }
        }
    }
}

/// Disjoint ids across interfaces, consistent port maps, a healthy union,
/// port typing and every interface assertion on every interpreting snapshot.
pub fn check_spec_interpretation(
    alg: &Algebra,
    spec: &InterfaceSpec,
    j: &SpecInterpretation,
) -> Vec<InterfaceViolation> {
    let mut out = Vec::new();
    let mut owners: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (iface, list) in &j.by_iface {
        if !list.is_empty() && !spec.interfaces.contains_key(iface) {
            out.push(InterfaceViolation::UnknownInterface { iface: iface.clone() });
        }
        for interp in list {
            owners.entry(interp.snapshot.id()).or_default().insert(iface);
        }
    }
    for (id, ifaces) in &owners {
        if ifaces.len() > 1 {
            out.push(InterfaceViolation::SharedId {
                id: id.to_string(),
                ifaces: ifaces.iter().map(|s| s.to_string()).collect(),
            });
        }
    }
    for v in j.universe().check_healthy().violations {
        out.push(InterfaceViolation::Unhealthy(v.kind));
    }
    for (iface, list) in &j.by_iface {
        let Some(ifc) = spec.interfaces.get(iface) else { continue };
        let empty = Vec::new();
        let assertions = spec.assertions.get(iface).unwrap_or(&empty);
        for interp in list {
            let id = interp.snapshot.id().to_string();
            let bij = interp.check_bijection(ifc);
            let bad_map = !bij.is_empty();
            for problem in bij {
                out.push(InterfaceViolation::PortMap { id: id.clone(), problem });
            }
            if j.bindings.get(&id).is_some_and(|(_, m)| m != &interp.ports) {
                out.push(InterfaceViolation::PortMap {
                    id: id.clone(),
                    problem: "snapshots of one component use different port maps".into(),
                });
            }
            if bad_map {
                continue;
            }
            out.extend(check_port_typing(interp, ifc, alg));
            for a in assertions {
                match first_counterexample(alg, &BTreeMap::new(), interp, a) {
                    Ok(None) => {}
                    Ok(Some(assignment)) => out.push(InterfaceViolation::Assertion {
                        iface: iface.clone(),
                        label: a.label.clone(),
                        id: id.clone(),
                        assignment,
                    }),
                    Err(e) => out.push(InterfaceViolation::Evaluation {
                        iface: iface.clone(),
                        label: a.label.clone(),
                        id: id.clone(),
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    out
}
