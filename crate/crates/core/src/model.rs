//! Component snapshots, universes, configurations and configuration traces.
//!
//! A component is never mutated in place. Each distinct valuation of its ports
//! is its own [`ComponentSnapshot`], and snapshots sharing an id describe the
//! same component at different times.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::value::{show_set, MessageSet, Value};

/// `(component id, port name)`.
pub type PortKey = (String, String);

/// Kind of a port within a snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PortKind {
    Local,
    Input,
    Output,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("port {port} of {id} is declared in more than one port set")]
    OverlappingPorts { id: String, port: String },
    #[error("valuation of {id} mentions {port}, which is not one of its ports")]
    UnknownPort { id: String, port: String },
    #[error("a configuration trace needs at least one configuration")]
    EmptyTrace,
}

/// Immutable snapshot of a component: id, interface and port valuation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ComponentSnapshot {
    id: String,
    local: BTreeSet<String>,
    input: BTreeSet<String>,
    output: BTreeSet<String>,
    valuation: BTreeMap<String, MessageSet>,
}

impl ComponentSnapshot {
    /// Builds a snapshot. Ports missing from `valuation` get the empty set.
    pub fn new(
        id: impl Into<String>,
        local: BTreeSet<String>,
        input: BTreeSet<String>,
        output: BTreeSet<String>,
        mut valuation: BTreeMap<String, MessageSet>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        for p in local.iter().chain(input.iter()) {
            if output.contains(p) || (local.contains(p) && input.contains(p)) {
                return Err(ModelError::OverlappingPorts { id, port: p.clone() });
            }
        }
        for p in valuation.keys() {
            if !local.contains(p) && !input.contains(p) && !output.contains(p) {
                return Err(ModelError::UnknownPort { id, port: p.clone() });
            }
        }
        for p in local.iter().chain(&input).chain(&output) {
            valuation.entry(p.clone()).or_insert_with(|| Arc::new(BTreeSet::new()));
        }
        Ok(ComponentSnapshot { id, local, input, output, valuation })
    }

    /// Starts a builder for snapshots whose messages are plain atoms.
    pub fn builder(id: &str) -> SnapshotBuilder {
        SnapshotBuilder {
            id: id.to_string(),
            local: BTreeSet::new(),
            input: BTreeSet::new(),
            output: BTreeSet::new(),
            valuation: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn local_ports(&self) -> &BTreeSet<String> {
        &self.local
    }

    pub fn input_ports(&self) -> &BTreeSet<String> {
        &self.input
    }

    pub fn output_ports(&self) -> &BTreeSet<String> {
        &self.output
    }

    pub fn valuation(&self) -> &BTreeMap<String, MessageSet> {
        &self.valuation
    }

    pub fn value(&self, port: &str) -> Option<&MessageSet> {
        self.valuation.get(port)
    }

    pub fn port_kind(&self, port: &str) -> Option<PortKind> {
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

    /// Same local, input and output port sets.
    pub fn same_interface(&self, other: &ComponentSnapshot) -> bool {
        self.local == other.local && self.input == other.input && self.output == other.output
    }

    /// Same valuation on every local port.
    pub fn same_local_values(&self, other: &ComponentSnapshot) -> bool {
        self.local.iter().all(|p| self.valuation.get(p) == other.valuation.get(p))
    }

    /// Copy of this snapshot with one port revalued.
    pub fn with_value(&self, port: &str, value: MessageSet) -> Result<Self, ModelError> {
        if self.port_kind(port).is_none() {
            return Err(ModelError::UnknownPort { id: self.id.clone(), port: port.to_string() });
        }
        let mut next = self.clone();
        next.valuation.insert(port.to_string(), value);
        Ok(next)
    }
}

/// Convenience builder for snapshots over atom messages.
#[derive(Clone, Debug)]
pub struct SnapshotBuilder {
    id: String,
    local: BTreeSet<String>,
    input: BTreeSet<String>,
    output: BTreeSet<String>,
    valuation: BTreeMap<String, MessageSet>,
}

impl SnapshotBuilder {
    fn put(mut self, port: &str, values: &[&str]) -> Self {
        let set: BTreeSet<Value> = values.iter().map(|v| Value::atom(v)).collect();
        self.valuation.insert(port.to_string(), Arc::new(set));
        self
    }

    pub fn local(mut self, port: &str, values: &[&str]) -> Self {
        self.local.insert(port.to_string());
        self.put(port, values)
    }

    pub fn input(mut self, port: &str, values: &[&str]) -> Self {
        self.input.insert(port.to_string());
        self.put(port, values)
    }

    pub fn output(mut self, port: &str, values: &[&str]) -> Self {
        self.output.insert(port.to_string());
        self.put(port, values)
    }

    pub fn build(self) -> Result<ComponentSnapshot, ModelError> {
        ComponentSnapshot::new(self.id, self.local, self.input, self.output, self.valuation)
    }
}

/// What went wrong, and where.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// Two snapshots share an id but not their port sets.
    InterfaceMismatch { id: String },
    /// Two snapshots share an id but not their local valuation.
    LocalValuation { id: String, port: String },
    /// An active snapshot is not part of the universe.
    NotInUniverse { id: String },
    /// Two active snapshots share an id but differ in valuation.
    Nondeterministic { id: String },
    /// A connection is keyed by something other than an input of an active snapshot.
    ConnectionInput { id: String, port: String },
    /// A connection target is not an output of an active snapshot.
    ConnectionOutput { input: PortKey, output: PortKey },
    /// A connected input differs from the union of its connected outputs.
    Inconsistent { id: String, port: String, expected: String, actual: String },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::InterfaceMismatch { id } => {
                write!(f, "snapshots of {id} have different interfaces")
            }
            ViolationKind::LocalValuation { id, port } => {
                write!(f, "snapshots of {id} disagree on local port {port}")
            }
            ViolationKind::NotInUniverse { id } => {
                write!(f, "active snapshot of {id} is not in the universe")
            }
            ViolationKind::Nondeterministic { id } => {
                write!(f, "two active snapshots of {id} have different valuations")
            }
            ViolationKind::ConnectionInput { id, port } => {
                write!(f, "connection from {id}.{port}, which is not an input of an active component")
            }
            ViolationKind::ConnectionOutput { input, output } => write!(
                f,
                "{}.{} is connected to {}.{}, which is not an output of an active component",
                input.0, input.1, output.0, output.1
            ),
            ViolationKind::Inconsistent { id, port, expected, actual } => {
                write!(f, "inconsistent valuation at ({id}, {port}): holds {actual}, connected outputs give {expected}")
            }
        }
    }
}

/// One failed clause, optionally tagged with a trace index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub step: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(n) => write!(f, "step {n}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

/// Collection of violations; empty means the check passed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, kind: ViolationKind) {
        self.violations.push(Violation { step: None, kind });
    }

    fn extend_at(&mut self, step: usize, other: Report) {
        for mut v in other.violations {
            v.step = Some(step);
            self.violations.push(v);
        }
    }
}

/// A set of snapshots; healthy when equal ids agree on interface and locals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ComponentUniverse {
    snapshots: BTreeSet<ComponentSnapshot>,
}

impl ComponentUniverse {
    pub fn new(snapshots: impl IntoIterator<Item = ComponentSnapshot>) -> Self {
        ComponentUniverse { snapshots: snapshots.into_iter().collect() }
    }

    pub fn insert(&mut self, s: ComponentSnapshot) {
        self.snapshots.insert(s);
    }

    pub fn snapshots(&self) -> &BTreeSet<ComponentSnapshot> {
        &self.snapshots
    }

    pub fn contains(&self, s: &ComponentSnapshot) -> bool {
        self.snapshots.contains(s)
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.snapshots.iter().map(|s| s.id()).collect()
    }

    /// Checks interface agreement and local-value agreement per id.
    pub fn check_healthy(&self) -> Report {
        let mut report = Report::default();
        let mut by_id: BTreeMap<&str, Vec<&ComponentSnapshot>> = BTreeMap::new();
        for s in &self.snapshots {
            by_id.entry(s.id()).or_default().push(s);
        }
        for (id, group) in by_id {
            let first = group[0];
            let mut iface_bad = false;
            let mut bad_locals = BTreeSet::new();
            for other in &group[1..] {
                if !first.same_interface(other) {
                    iface_bad = true;
                    continue;
                }
                for p in &first.local {
                    if first.valuation.get(p) != other.valuation.get(p) {
                        bad_locals.insert(p.clone());
                    }
                }
            }
            if iface_bad {
                report.push(ViolationKind::InterfaceMismatch { id: id.to_string() });
            }
            for port in bad_locals {
                report.push(ViolationKind::LocalValuation { id: id.to_string(), port });
            }
        }
        report
    }
}

/// Active snapshots plus connections from inputs to sets of outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ArchConfiguration {
    active: BTreeSet<ComponentSnapshot>,
    connections: BTreeMap<PortKey, BTreeSet<PortKey>>,
}

impl ArchConfiguration {
    pub fn new(
        active: impl IntoIterator<Item = ComponentSnapshot>,
        connections: BTreeMap<PortKey, BTreeSet<PortKey>>,
    ) -> Self {
        ArchConfiguration { active: active.into_iter().collect(), connections }
    }

    pub fn active(&self) -> &BTreeSet<ComponentSnapshot> {
        &self.active
    }

    pub fn connections(&self) -> &BTreeMap<PortKey, BTreeSet<PortKey>> {
        &self.connections
    }

    pub fn activate(&mut self, s: ComponentSnapshot) {
        self.active.insert(s);
    }

    /// Adds `input <- output`.
    pub fn connect(&mut self, input: (&str, &str), output: (&str, &str)) {
        self.connections
            .entry((input.0.to_string(), input.1.to_string()))
            .or_default()
            .insert((output.0.to_string(), output.1.to_string()));
    }

    /// The active snapshot with this id, if any.
    pub fn snapshot(&self, id: &str) -> Option<&ComponentSnapshot> {
        self.active.iter().find(|s| s.id == id)
    }

    pub fn is_active(&self, id: &str) -> bool {
        self.snapshot(id).is_some()
    }

    pub fn is_connected(&self, input: (&str, &str), output: (&str, &str)) -> bool {
        self.connections
            .iter()
            .find(|((c, p), _)| c == input.0 && p == input.1)
            .is_some_and(|(_, outs)| outs.iter().any(|(c, p)| c == output.0 && p == output.1))
    }

    /// Membership, determinism, connection typing and consistency.
    pub fn check_configuration(&self, universe: &ComponentUniverse) -> Report {
        let mut report = Report::default();
        for s in &self.active {
            if !universe.contains(s) {
                report.push(ViolationKind::NotInUniverse { id: s.id.clone() });
            }
        }
        let mut by_id: BTreeMap<&str, &ComponentSnapshot> = BTreeMap::new();
        for s in &self.active {
            if let Some(prev) = by_id.insert(&s.id, s) {
                if prev.valuation != s.valuation || !prev.same_interface(s) {
                    report.push(ViolationKind::Nondeterministic { id: s.id.clone() });
                }
            }
        }
        for ((cid, port), outs) in &self.connections {
            let is_input = by_id.get(cid.as_str()).is_some_and(|s| s.input.contains(port));
            if !is_input {
                report.push(ViolationKind::ConnectionInput { id: cid.clone(), port: port.clone() });
            }
            let mut typed = true;
            for (oid, oport) in outs {
                let is_output = by_id.get(oid.as_str()).is_some_and(|s| s.output.contains(oport));
                if !is_output {
                    typed = false;
                    report.push(ViolationKind::ConnectionOutput {
                        input: (cid.clone(), port.clone()),
                        output: (oid.clone(), oport.clone()),
                    });
                }
            }
            if !is_input || !typed || outs.is_empty() {
                continue;
            }
            let mut expected: BTreeSet<Value> = BTreeSet::new();
            for (oid, oport) in outs {
                expected.extend(by_id[oid.as_str()].valuation[oport].iter().cloned());
            }
            let actual = &by_id[cid.as_str()].valuation[port];
            if **actual != expected {
                report.push(ViolationKind::Inconsistent {
                    id: cid.clone(),
                    port: port.clone(),
                    expected: show_set(&expected),
                    actual: show_set(actual),
                });
            }
        }
        report
    }
}

/// Finite, nonempty sequence of configurations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigurationTrace {
    steps: Vec<ArchConfiguration>,
}

impl ConfigurationTrace {
    pub fn new(steps: Vec<ArchConfiguration>) -> Result<Self, ModelError> {
        if steps.is_empty() {
            return Err(ModelError::EmptyTrace);
        }
        Ok(ConfigurationTrace { steps })
    }

    pub fn steps(&self) -> &[ArchConfiguration] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Always false; traces are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&ArchConfiguration> {
        self.steps.get(n)
    }

    /// Prefix of the first `n` steps (`n >= 1`).
    pub fn prefix(&self, n: usize) -> Result<Self, ModelError> {
        ConfigurationTrace::new(self.steps[..n.min(self.steps.len())].to_vec())
    }

    /// Every step checked with `check_configuration`, violations tagged by index.
    pub fn check_trace(&self, universe: &ComponentUniverse) -> Report {
        let mut report = Report::default();
        for (n, k) in self.steps.iter().enumerate() {
            report.extend_at(n, k.check_configuration(universe));
        }
        report
    }

    /// Union of all active snapshots.
    pub fn universe(&self) -> ComponentUniverse {
        ComponentUniverse::new(self.steps.iter().flat_map(|k| k.active.iter().cloned()))
    }
}
