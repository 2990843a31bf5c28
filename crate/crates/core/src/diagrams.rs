//! Configuration diagrams: interfaces plus activation, rigidity and
//! connection annotations, each a shorthand for a trace assertion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::constraints::{ConfigWorld, TraceAssertion};
use crate::eval::EvalError;
use crate::interface::{InterfaceSpec, SpecInterpretation};
use crate::model::ConfigurationTrace;
use crate::syntax::{Binder, Formula, PortRef, Quantifier, Term, TraceFormula};

/// Lower and upper bounds on the number of active components per interface.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MinMaxAnnotation {
    pub min: BTreeMap<String, u32>,
    pub max: BTreeMap<String, u32>,
}

impl MinMaxAnnotation {
    pub fn is_empty(&self) -> bool {
        self.min.is_empty() && self.max.is_empty()
    }
}

/// Rigid component variables per interface, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RigidAnnotation {
    pub vars: BTreeMap<String, Vec<String>>,
}

impl RigidAnnotation {
    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// Required connections `(I.input, J.output)` at interface level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RequiredConnAnnotation {
    pub relation: BTreeSet<(PortRef, PortRef)>,
}

impl RequiredConnAnnotation {
    pub fn is_empty(&self) -> bool {
        self.relation.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConfigurationDiagram {
    pub name: String,
    pub portspec: Option<String>,
    pub datatype: Option<String>,
    pub spec: InterfaceSpec,
    pub minmax: Option<MinMaxAnnotation>,
    pub rigid: Option<RigidAnnotation>,
    pub required: Option<RequiredConnAnnotation>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum DiagramError {
    #[error("annotation refers to unknown interface {0}")]
    UnknownInterface(String),
    #[error("{iface}.{port} is not an {kind} port of {iface}")]
    UnknownPort { iface: String, port: String, kind: &'static str },
    #[error("interface {iface} has min {min} above max {max}")]
    MinAboveMax { iface: String, min: u32, max: u32 },
    #[error("rigid annotation of {0} names no variables")]
    EmptyRigid(String),
    #[error("rigid variable {var} is used for both {first} and {second}")]
    SharedRigid { var: String, first: String, second: String },
}

/// All resolution failures of a diagram.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub struct DiagramErrors(pub Vec<DiagramError>);

impl fmt::Display for DiagramErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn check_minmax(ann: &MinMaxAnnotation, spec: Option<&InterfaceSpec>, out: &mut Vec<DiagramError>) {
    for i in ann.min.keys().chain(ann.max.keys()) {
        if spec.is_some_and(|s| !s.interfaces.contains_key(i)) {
            out.push(DiagramError::UnknownInterface(i.clone()));
        }
    }
    for (i, &lo) in &ann.min {
        if let Some(&hi) = ann.max.get(i) {
            if lo > hi {
                out.push(DiagramError::MinAboveMax { iface: i.clone(), min: lo, max: hi });
            }
        }
    }
}

fn check_rigid(ann: &RigidAnnotation, spec: Option<&InterfaceSpec>, out: &mut Vec<DiagramError>) {
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, vars) in &ann.vars {
        if spec.is_some_and(|s| !s.interfaces.contains_key(i)) {
            out.push(DiagramError::UnknownInterface(i.clone()));
        }
        if vars.is_empty() {
            out.push(DiagramError::EmptyRigid(i.clone()));
        }
        for v in vars {
            if let Some(first) = owner.insert(v, i) {
                if first != i {
                    out.push(DiagramError::SharedRigid { var: v.clone(), first: first.into(), second: i.clone() });
                }
            }
        }
    }
}

fn check_required(ann: &RequiredConnAnnotation, spec: &InterfaceSpec, out: &mut Vec<DiagramError>) {
    for (input, output) in &ann.relation {
        for (r, kind) in [(input, "input"), (output, "output")] {
            match spec.interfaces.get(&r.owner) {
                None => out.push(DiagramError::UnknownInterface(r.owner.clone())),
                Some(ifc) => {
                    let ok =
                        if kind == "input" { ifc.input().contains(&r.port) } else { ifc.output().contains(&r.port) };
                    if !ok {
                        out.push(DiagramError::UnknownPort { iface: r.owner.clone(), port: r.port.clone(), kind });
                    }
                }
            }
        }
    }
}

impl ConfigurationDiagram {
    /// Every annotation reference resolved against the diagram's interfaces.
    pub fn validate(&self) -> Result<(), DiagramErrors> {
        let mut out = Vec::new();
        if let Some(a) = &self.minmax {
            check_minmax(a, Some(&self.spec), &mut out);
        }
        if let Some(a) = &self.rigid {
            check_rigid(a, Some(&self.spec), &mut out);
        }
        if let Some(a) = &self.required {
            check_required(a, &self.spec, &mut out);
        }
        out.dedup();
        if out.is_empty() {
            Ok(())
        } else {
            Err(DiagramErrors(out))
        }
    }
}

/// `G` of the per-interface bounds; `[n]` (min = max) becomes `minmax(i, n, n)`.
pub fn desugar_minmax(ann: &MinMaxAnnotation) -> TraceAssertion {
    let ifaces: BTreeSet<&String> = ann.min.keys().chain(ann.max.keys()).collect();
    let mut parts = Vec::new();
    for i in ifaces {
        match (ann.min.get(i), ann.max.get(i)) {
            (Some(&lo), Some(&hi)) if lo == hi => parts.push(Formula::MinMax(i.clone(), lo, hi)),
            (lo, hi) => {
                if let Some(&lo) = lo {
                    parts.push(Formula::Min(i.clone(), lo));
                }
                if let Some(&hi) = hi {
                    parts.push(Formula::Max(i.clone(), hi));
                }
            }
        }
    }
    let body = TraceFormula::State(Formula::conj(parts));
    TraceAssertion::closed("minmax", TraceFormula::Globally(Box::new(body)))
}

fn fresh(base: &str, taken: &BTreeSet<&str>) -> String {
    let mut v = base.to_string();
    while taken.contains(v.as_str()) {
        v.push('\'');
    }
    v
}

/// For every annotated interface `i` with variables `c1..ck`:
/// `exists c1: i. .. exists ck: i. G (forall v: i. active(v) -> v = c1 | .. | v = ck)`.
///
/// The rigid variables are closed existentially so that the assertion says
/// "at most these k components of `i` are ever active".
pub fn desugar_rigid(ann: &RigidAnnotation) -> Result<TraceAssertion, DiagramErrors> {
    let mut errors = Vec::new();
    check_rigid(ann, None, &mut errors);
    if !errors.is_empty() {
        return Err(DiagramErrors(errors));
    }
    let taken: BTreeSet<&str> = ann.vars.values().flatten().map(|s| s.as_str()).collect();
    let v = fresh("v", &taken);
    let mut parts = Vec::new();
    for (i, vars) in &ann.vars {
        let allowed = Formula::disj(vars.iter().map(|c| Formula::Eq(Term::var(&v), Term::var(c))));
        parts.push(Formula::forall(Binder::interface(&v, i), Formula::implies(Formula::Active(v.clone()), allowed)));
    }
    let mut f = TraceFormula::Globally(Box::new(TraceFormula::State(Formula::conj(parts))));
    for (i, vars) in ann.vars.iter().rev() {
        for c in vars.iter().rev() {
            f = TraceFormula::Quant(Quantifier::Exists, Binder::interface(c, i), Box::new(f));
        }
    }
    Ok(TraceAssertion::closed("rigid", f))
}

/// Input and output port pairs of the whole spec that are not in the annotation.
pub fn rest(ann: &RequiredConnAnnotation, spec: &InterfaceSpec) -> Vec<(PortRef, PortRef)> {
    let mut out = Vec::new();
    for (j, i) in spec.if_in() {
        for (k, o) in spec.if_out() {
            let pair = (PortRef::new(&j, &i), PortRef::new(&k, &o));
            if !ann.relation.contains(&pair) {
                out.push(pair);
            }
        }
    }
    out
}

/// `G (irconn(..) for each required pair & no connection for each pair in rest)`.
pub fn desugar_required_conn(
    ann: &RequiredConnAnnotation,
    spec: &InterfaceSpec,
) -> Result<TraceAssertion, DiagramErrors> {
    let mut errors = Vec::new();
    check_required(ann, spec, &mut errors);
    if !errors.is_empty() {
        return Err(DiagramErrors(errors));
    }
    let mut parts: Vec<Formula> = ann.relation.iter().map(|(i, o)| Formula::IrConn(i.clone(), o.clone())).collect();
    for (i, o) in rest(ann, spec) {
        let guard = Formula::and(Formula::Active("v".into()), Formula::Active("w".into()));
        let body = Formula::implies(
            guard,
            Formula::not(Formula::Conn(PortRef::new("v", &i.port), PortRef::new("w", &o.port))),
        );
        parts.push(Formula::forall(
            Binder::interface("v", &i.owner),
            Formula::forall(Binder::interface("w", &o.owner), body),
        ));
    }
    let body = TraceFormula::State(Formula::conj(parts));
    Ok(TraceAssertion::closed("required_conn", TraceFormula::Globally(Box::new(body))))
}

/// Interface fragment plus the assertions of the annotations present, in the
/// order min-max, rigid, required connections. Empty annotations are skipped.
pub fn desugar_diagram(d: &ConfigurationDiagram) -> Result<(InterfaceSpec, Vec<TraceAssertion>), DiagramErrors> {
    d.validate()?;
    let mut out = Vec::new();
    let label = |a: TraceAssertion| TraceAssertion { label: format!("{}:{}", d.name, a.label), ..a };
    if let Some(a) = d.minmax.as_ref().filter(|a| !a.is_empty()) {
        out.push(label(desugar_minmax(a)));
    }
    if let Some(a) = d.rigid.as_ref().filter(|a| !a.is_empty()) {
        out.push(label(desugar_rigid(a)?));
    }
    if let Some(a) = d.required.as_ref().filter(|a| !a.is_empty()) {
        out.push(label(desugar_required_conn(a, &d.spec)?));
    }
    Ok((d.spec.clone(), out))
}

/// At every step, for every ordered pair of active components (a component
/// paired with itself included), `a.i <- b.o` is connected exactly when the
/// interface pair is required.
pub fn check_full_homomorphism(
    t: &ConfigurationTrace,
    ann: &RequiredConnAnnotation,
    spec: &InterfaceSpec,
    j: &SpecInterpretation,
) -> Result<bool, EvalError> {
    use crate::eval::World;
    for k in t.steps() {
        let world = ConfigWorld { interpretation: j, config: k };
        let mut active = Vec::new();
        for s in k.active() {
            let iface = j.interface_of(s.id()).ok_or_else(|| EvalError::Uninterpreted(s.id().to_string()))?;
            let ifc = spec.interface(iface).ok_or_else(|| EvalError::UnknownInterface(iface.to_string()))?;
            active.push((s.id(), iface, ifc));
        }
        for &(a, ia, fa) in &active {
            for &(b, ib, fb) in &active {
                for i in fa.input() {
                    for o in fb.output() {
                        let required = ann.relation.contains(&(PortRef::new(ia, i), PortRef::new(ib, o)));
                        if world.is_connected((a, i), (b, o))? != required {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}
