//! Algebra and trace units turned into the checker's inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use archtrace_core::algebra::{Algebra, Signature};
use archtrace_core::interface::{InterfaceInterpretation, SpecInterpretation};
use archtrace_core::model::{ArchConfiguration, ComponentSnapshot, ConfigurationTrace};
use archtrace_core::value::{MessageSet, Value};

use crate::ast::*;
use crate::diagnostics::{sort_diagnostics, Diagnostic};
use crate::resolve::Bundle;

fn tagged(unit: &str, mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    for d in &mut diags {
        d.unit = unit.to_string();
    }
    sort_diagnostics(&mut diags);
    diags
}

/// Builds the algebra of an `algebra` unit over a signature.
pub fn load_algebra(u: &ParsedUnit, sig: &Signature) -> Result<Algebra, Vec<Diagnostic>> {
    let name = &u.unit.name;
    let Body::Algebra(a) = &u.unit.body else {
        return Err(vec![Diagnostic::error("kind", u.header, format!("{name} is not an algebra unit")).in_unit(name)]);
    };
    let mut diags = Vec::new();
    let mut carriers: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
    for (s, vals) in &a.carriers {
        let span = u.span(&format!("carrier:{s}"));
        if carriers.insert(s.clone(), vals.iter().cloned().collect()).is_some() {
            diags.push(Diagnostic::error("duplicate", span, format!("carrier {s} given twice")));
        }
    }
    let mut functions: BTreeMap<String, BTreeMap<Vec<Value>, Value>> = BTreeMap::new();
    for (i, (f, args, v)) in a.functions.iter().enumerate() {
        let span = u.span(&format!("function:{f}:{i}"));
        let table = functions.entry(f.clone()).or_default();
        if let Some(prev) = table.insert(args.clone(), v.clone()) {
            if prev != *v {
                diags.push(Diagnostic::error("duplicate", span, format!("{f} has two values for the same arguments")));
            }
        }
    }
    let mut predicates: BTreeMap<String, BTreeSet<Vec<Value>>> = BTreeMap::new();
    for (p, args) in &a.predicates {
        predicates.entry(p.clone()).or_default().insert(args.clone());
    }
    if !diags.is_empty() {
        return Err(tagged(name, diags));
    }
    Algebra::new(sig.clone(), carriers, functions, predicates)
        .map_err(|e| tagged(name, vec![Diagnostic::error("algebra", u.header, e.to_string())]))
}

struct Decl {
    iface: Option<String>,
    /// Interface port to concrete port.
    ports: BTreeMap<String, String>,
    local: BTreeSet<String>,
    input: BTreeSet<String>,
    output: BTreeSet<String>,
    locals: BTreeMap<String, MessageSet>,
}

/// Builds the configuration trace of a `trace` unit and the interpretation of
/// the bundle's interfaces by its declared components.
///
/// Every distinct snapshot of a component with an interface interprets that
/// interface; a component that is never active contributes its snapshot with
/// empty inputs and outputs.
pub fn load_trace(
    u: &ParsedUnit,
    bundle: &Bundle,
) -> Result<(ConfigurationTrace, SpecInterpretation), Vec<Diagnostic>> {
    let name = &u.unit.name;
    let Body::Trace(t) = &u.unit.body else {
        return Err(vec![Diagnostic::error("kind", u.header, format!("{name} is not a trace unit")).in_unit(name)]);
    };
    let mut diags = Vec::new();
    let mut decls: BTreeMap<String, Decl> = BTreeMap::new();
    for c in &t.components {
        let span = u.span(&format!("component:{}", c.id));
        let mut d = Decl {
            iface: c.iface.clone(),
            ports: BTreeMap::new(),
            local: BTreeSet::new(),
            input: BTreeSet::new(),
            output: BTreeSet::new(),
            locals: BTreeMap::new(),
        };
        match &c.iface {
            Some(i) => {
                let Some(ifc) = bundle.interfaces.interface(i) else {
                    diags.push(Diagnostic::error("unresolved", span, format!("unknown interface {i}")));
                    continue;
                };
                if !c.input.is_empty() || !c.output.is_empty() {
                    diags.push(Diagnostic::error("trace", span, format!("{} takes its ports from {i}", c.id)));
                }
                let mut ports: BTreeMap<String, String> = ifc.ports().map(|p| (p.clone(), p.clone())).collect();
                for (concrete, ifport) in &c.renames {
                    match ports.get_mut(ifport) {
                        Some(slot) => *slot = concrete.clone(),
                        None => {
                            diags.push(Diagnostic::error("unresolved", span, format!("{ifport} is not a port of {i}")))
                        }
                    }
                }
                let distinct: BTreeSet<&String> = ports.values().collect();
                if distinct.len() != ports.len() {
                    diags.push(Diagnostic::error(
                        "trace",
                        span,
                        format!("renames of {} map two ports to one name", c.id),
                    ));
                }
                d.local = ifc.local().iter().map(|p| ports[p].clone()).collect();
                d.input = ifc.input().iter().map(|p| ports[p].clone()).collect();
                d.output = ifc.output().iter().map(|p| ports[p].clone()).collect();
                d.ports = ports;
            }
            None => {
                if !c.renames.is_empty() {
                    diags.push(Diagnostic::error("trace", span, "renames need an interface"));
                }
                d.local = c.local.iter().map(|(p, _)| p.clone()).collect();
                d.input = c.input.iter().cloned().collect();
                d.output = c.output.iter().cloned().collect();
            }
        }
        for (p, vals) in &c.local {
            if !d.local.contains(p) {
                diags.push(Diagnostic::error("trace", span, format!("{p} is not a local port of {}", c.id)));
            }
            d.locals.insert(p.clone(), Arc::new(vals.iter().cloned().collect()));
        }
        if decls.insert(c.id.clone(), d).is_some() {
            diags.push(Diagnostic::error("duplicate", span, format!("component {} declared twice", c.id)));
        }
    }

    let snapshot = |id: &str, d: &Decl, vals: BTreeMap<String, MessageSet>| {
        let mut v = d.locals.clone();
        v.extend(vals);
        ComponentSnapshot::new(id, d.local.clone(), d.input.clone(), d.output.clone(), v)
    };
    let mut steps = Vec::new();
    let mut seen: BTreeMap<String, BTreeSet<ComponentSnapshot>> = BTreeMap::new();
    for s in &t.steps {
        let mut k = ArchConfiguration::default();
        let mut active = BTreeSet::new();
        for a in &s.active {
            let span = u.span(&format!("active:{}:{}", s.index, a.id));
            let Some(d) = decls.get(&a.id) else {
                diags.push(Diagnostic::error("unresolved", span, format!("undeclared component {}", a.id)));
                continue;
            };
            if !active.insert(a.id.clone()) {
                diags.push(Diagnostic::error(
                    "duplicate",
                    span,
                    format!("{} is active twice in step {}", a.id, s.index),
                ));
                continue;
            }
            let mut vals = BTreeMap::new();
            for (p, vs) in &a.values {
                if d.local.contains(p) {
                    diags.push(Diagnostic::error(
                        "trace",
                        span,
                        format!("local port {p} is set in the component section"),
                    ));
                } else if !d.input.contains(p) && !d.output.contains(p) {
                    diags.push(Diagnostic::error("trace", span, format!("{p} is not a port of {}", a.id)));
                } else if vals.insert(p.clone(), Arc::new(vs.iter().cloned().collect())).is_some() {
                    diags.push(Diagnostic::error("duplicate", span, format!("{}.{p} given twice", a.id)));
                }
            }
            match snapshot(&a.id, d, vals) {
                Ok(snap) => {
                    seen.entry(a.id.clone()).or_default().insert(snap.clone());
                    k.activate(snap);
                }
                Err(e) => diags.push(Diagnostic::error("trace", span, e.to_string())),
            }
        }
        for (i, (input, output)) in s.conns.iter().enumerate() {
            let span = u.span(&format!("conn:{}:{i}", s.index));
            for r in [input, output] {
                if !decls.contains_key(&r.owner) {
                    diags.push(Diagnostic::error("unresolved", span, format!("undeclared component {}", r.owner)));
                }
            }
            k.connect((&input.owner, &input.port), (&output.owner, &output.port));
        }
        steps.push(k);
    }

    let mut interps = Vec::new();
    for (id, d) in &decls {
        let Some(iface) = &d.iface else { continue };
        let snaps = match seen.get(id) {
            Some(s) => s.iter().cloned().collect::<Vec<_>>(),
            None => match snapshot(id, d, BTreeMap::new()) {
                Ok(s) => vec![s],
                Err(e) => {
                    diags.push(Diagnostic::error("trace", u.header, e.to_string()));
                    continue;
                }
            },
        };
        for snap in snaps {
            interps.push(InterfaceInterpretation { iface: iface.clone(), snapshot: snap, ports: d.ports.clone() });
        }
    }
    let mut j = SpecInterpretation::new(interps);
    j.declare_interfaces(bundle.interfaces.interfaces.keys());
    let trace = match ConfigurationTrace::new(steps) {
        Ok(t) => Some(t),
        Err(e) => {
            diags.push(Diagnostic::error("trace", u.header, e.to_string()));
            None
        }
    };
    match trace {
        Some(t) if diags.is_empty() => Ok((t, j)),
        _ => Err(tagged(name, diags)),
    }
}
