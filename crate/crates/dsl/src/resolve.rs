//! Cross-unit resolution: one global namespace, imports checked for existence
//! and cycles, every assertion elaborated and sort-checked.

use std::collections::{BTreeMap, BTreeSet};

use archtrace_core::algebra::{DatatypeSpec, FunctionType, Signature};
use archtrace_core::constraints::TraceAssertion;
use archtrace_core::diagrams::{
    desugar_diagram, ConfigurationDiagram, MinMaxAnnotation, RequiredConnAnnotation, RigidAnnotation,
};
use archtrace_core::interface::{Interface, InterfaceAssertion, InterfaceSpec, PortSpec};
use archtrace_core::syntax::{Binder, Domain, Formula, Term, TraceFormula};
use archtrace_core::typing::{Checker, Level, VarType};
use archtrace_core::value::Sort;

use crate::ast::*;
use crate::diagnostics::{sort_diagnostics, Diagnostic, Span};

/// Built-in import name standing for the `set(S)` and `pair(S, T)` sort constructors.
pub const BUILTIN_SET: &str = "SET";

pub const NOTE_LOCAL_PORT: &str = "extension: local-port term";

/// A resolved specification: every formula is elaborated and sort-correct.
#[derive(Clone, Debug, Default)]
pub struct Bundle {
    pub signature: Signature,
    pub datatype: DatatypeSpec,
    pub portspec: PortSpec,
    /// Interfaces from interface units and diagrams.
    pub interfaces: InterfaceSpec,
    /// Assertions of the constraint units, labelled `unit:label`.
    pub constraints: Vec<TraceAssertion>,
    pub diagrams: Vec<ConfigurationDiagram>,
    pub notes: Vec<String>,
}

impl Bundle {
    /// Desugared assertions of every diagram.
    pub fn diagram_assertions(&self) -> Vec<TraceAssertion> {
        self.diagrams.iter().flat_map(|d| desugar_diagram(d).map(|(_, a)| a).unwrap_or_default()).collect()
    }

    /// Constraint assertions followed by the desugared diagram assertions.
    pub fn all_assertions(&self) -> Vec<TraceAssertion> {
        let mut out = self.constraints.clone();
        out.extend(self.diagram_assertions());
        out
    }
}

struct Ctx<'u> {
    units: Vec<&'u ParsedUnit>,
    diags: Vec<Diagnostic>,
}

impl<'u> Ctx<'u> {
    fn error(&mut self, unit: &str, span: Span, code: &'static str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg).in_unit(unit));
    }

    fn warning(&mut self, unit: &str, span: Span, code: &'static str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::warning(code, span, msg).in_unit(unit));
    }

    fn of_kind(&self, kind: UnitKind) -> Vec<&'u ParsedUnit> {
        self.units.iter().copied().filter(|u| u.unit.kind() == kind).collect()
    }
}

/// Resolves specification units. Any error means no bundle.
pub fn resolve(units: &[ParsedUnit]) -> (Option<Bundle>, Vec<Diagnostic>) {
    let mut sorted: Vec<&ParsedUnit> = units.iter().collect();
    sorted.sort_by(|a, b| a.unit.name.cmp(&b.unit.name));
    let mut cx = Ctx { units: Vec::new(), diags: Vec::new() };

    let mut seen = BTreeSet::new();
    for u in sorted {
        let name = &u.unit.name;
        if matches!(u.unit.kind(), UnitKind::Algebra | UnitKind::Trace) {
            cx.error(
                name,
                u.header,
                "kind",
                format!("{} units are inputs to a check, not specification units", u.unit.kind().keyword()),
            );
            continue;
        }
        if !seen.insert(name.clone()) {
            cx.error(name, u.header, "duplicate", format!("duplicate unit name {name}"));
            continue;
        }
        cx.units.push(u);
    }
    imports(&mut cx);

    let mut b = Bundle::default();
    signature(&mut cx, &mut b);
    portspec(&mut cx, &mut b);
    interfaces(&mut cx, &mut b);
    diagrams(&mut cx, &mut b);
    constraints(&mut cx, &mut b);
    if !b.interfaces.local_port_reads().is_empty() || reads_local_ports(&b) {
        b.notes.push(NOTE_LOCAL_PORT.to_string());
    }

    let mut diags = cx.diags;
    sort_diagnostics(&mut diags);
    diags.dedup();
    if diags.iter().any(|d| d.is_error()) {
        (None, diags)
    } else {
        (Some(b), diags)
    }
}

fn imports(cx: &mut Ctx) {
    let names: BTreeMap<String, usize> = cx.units.iter().enumerate().map(|(i, u)| (u.unit.name.clone(), i)).collect();
    let mut errs = Vec::new();
    for u in &cx.units {
        for imp in &u.unit.imports {
            if imp != BUILTIN_SET && !names.contains_key(imp) {
                let span = u.span(&format!("import:{imp}"));
                errs.push((u.unit.name.clone(), span, format!("import of unknown unit {imp}")));
            }
        }
    }
    // Depth-first search; a back edge closes a cycle.
    let n = cx.units.len();
    let mut state = vec![0u8; n];
    fn visit(
        i: usize,
        units: &[&ParsedUnit],
        names: &BTreeMap<String, usize>,
        state: &mut Vec<u8>,
        stack: &mut Vec<usize>,
        errs: &mut Vec<(String, Span, String)>,
    ) {
        state[i] = 1;
        stack.push(i);
        for imp in &units[i].unit.imports {
            let Some(&j) = names.get(imp) else { continue };
            if state[j] == 1 {
                let start = stack.iter().position(|&k| k == j).unwrap_or(0);
                let mut path: Vec<&str> = stack[start..].iter().map(|&k| units[k].unit.name.as_str()).collect();
                path.push(&units[j].unit.name);
                let u = units[i];
                errs.push((
                    u.unit.name.clone(),
                    u.span(&format!("import:{imp}")),
                    format!("cyclic import: {}", path.join(" -> ")),
                ));
            } else if state[j] == 0 {
                visit(j, units, names, state, stack, errs);
            }
        }
        stack.pop();
        state[i] = 2;
    }
    for i in 0..n {
        if state[i] == 0 {
            visit(i, &cx.units, &names, &mut state, &mut Vec::new(), &mut errs);
        }
    }
    for (u, s, m) in errs {
        cx.error(&u, s, "import", m);
    }
}

fn signature(cx: &mut Ctx, b: &mut Bundle) {
    let units = cx.of_kind(UnitKind::Datatype);
    let mut sig = Signature::default();
    for u in &units {
        let Body::Datatype(d) = &u.unit.body else { continue };
        let name = &u.unit.name;
        for s in &d.sorts {
            if !sig.sorts.insert(s.clone()) {
                cx.error(name, u.span(&format!("sort:{s}")), "duplicate", format!("duplicate sort {s}"));
            }
        }
    }
    for u in &units {
        let Body::Datatype(d) = &u.unit.body else { continue };
        let name = &u.unit.name;
        for f in &d.functions {
            let span = u.span(&format!("function:{}", f.name));
            if sig.functions.contains_key(&f.name) || sig.predicates.contains_key(&f.name) {
                cx.error(name, span, "duplicate", format!("duplicate symbol {}", f.name));
                continue;
            }
            for s in f.args.iter().chain([&f.result]) {
                if let Err(e) = sig.check_sort(s) {
                    cx.error(name, span, "unresolved", e.to_string());
                }
            }
            sig.functions.insert(f.name.clone(), FunctionType { args: f.args.clone(), result: f.result.clone() });
        }
        for p in &d.predicates {
            let span = u.span(&format!("predicate:{}", p.name));
            if sig.functions.contains_key(&p.name) || sig.predicates.contains_key(&p.name) {
                cx.error(name, span, "duplicate", format!("duplicate symbol {}", p.name));
                continue;
            }
            for s in &p.args {
                if let Err(e) = sig.check_sort(s) {
                    cx.error(name, span, "unresolved", e.to_string());
                }
            }
            sig.predicates.insert(p.name.clone(), p.args.clone());
        }
    }
    let mut spec = DatatypeSpec { signature: sig.clone(), vars: BTreeMap::new(), axioms: Vec::new() };
    for u in &units {
        let Body::Datatype(d) = &u.unit.body else { continue };
        let name = &u.unit.name;
        let mut local = BTreeMap::new();
        for decl in &d.vars {
            for v in &decl.names {
                let span = u.span(&format!("var:{v}"));
                if let Err(e) = sig.check_sort(&decl.sort) {
                    cx.error(name, span, "unresolved", e.to_string());
                    continue;
                }
                if local.insert(v.clone(), decl.sort.clone()).is_some() {
                    cx.error(name, span, "duplicate", format!("variable {v} declared twice"));
                }
                match spec.vars.get(v) {
                    Some(s) if *s != decl.sort => cx.error(
                        name,
                        span,
                        "duplicate",
                        format!("variable {v} is declared with sorts {s} and {}", decl.sort),
                    ),
                    _ => {
                        spec.vars.insert(v.clone(), decl.sort.clone());
                    }
                }
            }
        }
        for (i, ax) in d.axioms.iter().enumerate() {
            let mut c = Checker::new(&sig, Level::Datatype);
            for (v, s) in &local {
                c.declare(v, VarType::Data(s.clone()));
                c.default_domain(v, Domain::Sort(s.clone()));
            }
            let mut f = ax.formula.clone();
            match c.formula(&mut f) {
                Ok(()) => spec.axioms.push((label(name, &ax.label, i), f)),
                Err(e) => cx.error(name, u.span(&format!("axiom:{i}")), "type", e.to_string()),
            }
        }
    }
    b.signature = sig;
    b.datatype = spec;
}

fn label(unit: &str, l: &Option<String>, i: usize) -> String {
    match l {
        Some(l) => format!("{unit}:{l}"),
        None => format!("{unit}:{}", i + 1),
    }
}

fn portspec(cx: &mut Ctx, b: &mut Bundle) {
    for u in cx.of_kind(UnitKind::Portspec) {
        let Body::Portspec(p) = &u.unit.body else { continue };
        let name = &u.unit.name;
        for decl in &p.ports {
            for port in &decl.names {
                let span = u.span(&format!("port:{port}"));
                if let Err(e) = b.signature.check_sort(&decl.sort) {
                    cx.error(name, span, "unresolved", e.to_string());
                }
                if b.portspec.typing.insert(port.clone(), decl.sort.clone()).is_some() {
                    cx.error(name, span, "duplicate", format!("duplicate port {port}"));
                }
            }
        }
    }
}

/// Builds an interface from port entries; entries without a sort take it from the port specification.
#[allow(clippy::too_many_arguments)]
fn build_interface(
    cx: &mut Ctx,
    b: &Bundle,
    unit: &str,
    span: impl Fn(&str) -> Span,
    id: &str,
    local: &[PortEntry],
    input: &[PortEntry],
    output: &[PortEntry],
) -> Option<Interface> {
    let mut ps = PortSpec::default();
    let mut ok = true;
    let mut sets: [BTreeSet<String>; 3] = Default::default();
    for (k, entries) in [local, input, output].into_iter().enumerate() {
        for e in entries {
            let sort = match e.sort.clone().or_else(|| b.portspec.typing.get(&e.name).cloned()) {
                Some(s) => s,
                None => {
                    cx.error(
                        unit,
                        span(&e.name),
                        "unresolved",
                        format!("port {} of {id} has no sort; no port specification declares it", e.name),
                    );
                    ok = false;
                    continue;
                }
            };
            if let Err(err) = b.signature.check_sort(&sort) {
                cx.error(unit, span(&e.name), "unresolved", err.to_string());
                ok = false;
            }
            if !sets[k].insert(e.name.clone()) {
                cx.error(unit, span(&e.name), "duplicate", format!("port {} listed twice in {id}", e.name));
                ok = false;
            }
            ps.typing.insert(e.name.clone(), sort);
        }
    }
    if !ok {
        return None;
    }
    let [l, i, o] = sets;
    match Interface::new(id, &ps, l, i, o) {
        Ok(ifc) => Some(ifc),
        Err(e) => {
            cx.error(unit, span(""), "interface", e.to_string());
            None
        }
    }
}

fn var_map(cx: &mut Ctx, b: &Bundle, unit: &str, span: Span, decls: &[VarDecl]) -> Vec<(String, Sort)> {
    let mut out: Vec<(String, Sort)> = Vec::new();
    for d in decls {
        if let Err(e) = b.signature.check_sort(&d.sort) {
            cx.error(unit, span, "unresolved", e.to_string());
            continue;
        }
        for v in &d.names {
            if out.iter().any(|(n, _)| n == v) {
                cx.error(unit, span, "duplicate", format!("variable {v} declared twice"));
                continue;
            }
            out.push((v.clone(), d.sort.clone()));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn interface_assertion(
    cx: &mut Ctx,
    b: &Bundle,
    unit: &str,
    span: Span,
    ifc: &Interface,
    vars: &[(String, Sort)],
    label: String,
    formula: &Formula,
) -> Option<InterfaceAssertion> {
    let mut c = Checker::new(&b.signature, Level::Interface(ifc));
    for (v, s) in vars {
        c.declare(v, VarType::Data(s.clone()));
        c.default_domain(v, Domain::Sort(s.clone()));
    }
    let mut f = formula.clone();
    if let Err(e) = c.formula(&mut f) {
        cx.error(unit, span, "type", e.to_string());
        return None;
    }
    let free = f.free_vars();
    let binders = vars.iter().filter(|(v, _)| free.contains(v)).map(|(v, s)| Binder::sort(v, s.clone())).collect();
    Some(InterfaceAssertion { label, formula: f, vars: binders })
}

fn interfaces(cx: &mut Ctx, b: &mut Bundle) {
    for u in cx.of_kind(UnitKind::Interface) {
        let Body::Interface(i) = &u.unit.body else { continue };
        let name = u.unit.name.clone();
        let span = |p: &str| u.span(&format!("port:{p}"));
        let Some(ifc) = build_interface(cx, b, &name, span, &name, &i.local, &i.input, &i.output) else { continue };
        let vars = var_map(cx, b, &name, u.header, &i.vars);
        let mut list = Vec::new();
        for (k, ax) in i.axioms.iter().enumerate() {
            let sp = u.span(&format!("axiom:{k}"));
            if let Some(a) = interface_assertion(cx, b, &name, sp, &ifc, &vars, label(&name, &ax.label, k), &ax.formula)
            {
                list.push(a);
            }
        }
        b.interfaces.interfaces.insert(name.clone(), ifc);
        b.interfaces.assertions.insert(name, list);
    }
}

fn first_import(cx: &Ctx, u: &ParsedUnit, kind: UnitKind) -> Option<String> {
    u.unit.imports.iter().find(|i| cx.units.iter().any(|x| &x.unit.name == *i && x.unit.kind() == kind)).cloned()
}

fn diagrams(cx: &mut Ctx, b: &mut Bundle) {
    for u in cx.of_kind(UnitKind::Diagram) {
        let Body::Diagram(d) = &u.unit.body else { continue };
        let name = u.unit.name.clone();
        let mut spec = InterfaceSpec::default();
        let mut minmax = MinMaxAnnotation::default();
        let mut rigid = RigidAnnotation::default();
        let mut ok = true;
        for c in &d.components {
            let span = u.span(&format!("component:{}", c.iface));
            if spec.interfaces.contains_key(&c.iface) {
                cx.error(&name, span, "duplicate", format!("interface {} appears twice in diagram {name}", c.iface));
                ok = false;
                continue;
            }
            let declared = b.interfaces.interfaces.get(&c.iface).cloned();
            let no_ports = c.local.is_empty() && c.input.is_empty() && c.output.is_empty();
            let ifc = if no_ports {
                match declared {
                    Some(i) => i,
                    None => {
                        cx.error(
                            &name,
                            span,
                            "unresolved",
                            format!("interface {} is not declared and the diagram lists no ports for it", c.iface),
                        );
                        ok = false;
                        continue;
                    }
                }
            } else {
                let Some(ifc) = build_interface(cx, b, &name, |_| span, &c.iface, &c.local, &c.input, &c.output) else {
                    ok = false;
                    continue;
                };
                match declared {
                    Some(prev) if prev != ifc => {
                        cx.error(
                            &name,
                            span,
                            "interface",
                            format!("interface {} in diagram {name} differs from its declaration", c.iface),
                        );
                        ok = false;
                        continue;
                    }
                    Some(_) => {}
                    None => {
                        b.interfaces.interfaces.insert(c.iface.clone(), ifc.clone());
                        b.interfaces.assertions.entry(c.iface.clone()).or_default();
                    }
                }
                ifc
            };
            spec.interfaces.insert(c.iface.clone(), ifc);
            spec.assertions.insert(c.iface.clone(), Vec::new());
            if let Some(bd) = c.bounds {
                if let Some(n) = bd.min {
                    minmax.min.insert(c.iface.clone(), n);
                }
                if let Some(m) = bd.max {
                    minmax.max.insert(c.iface.clone(), m);
                }
            }
            if !c.vars.is_empty() {
                rigid.vars.insert(c.iface.clone(), c.vars.clone());
            }
        }
        let vars = var_map(cx, b, &name, u.header, &d.vars);
        let mut n = 0;
        for (iface, axioms) in &d.axioms {
            for ax in axioms {
                let sp = u.span(&format!("axiom:{n}"));
                let lbl = label(&name, &ax.label, n);
                n += 1;
                let Some(ifc) = spec.interfaces.get(iface).cloned() else {
                    cx.error(
                        &name,
                        sp,
                        "unresolved",
                        format!("axioms for {iface}, which is not a component of the diagram"),
                    );
                    ok = false;
                    continue;
                };
                let Some(a) = interface_assertion(cx, b, &name, sp, &ifc, &vars, lbl, &ax.formula) else {
                    ok = false;
                    continue;
                };
                let global = b.interfaces.assertions.entry(iface.clone()).or_default();
                if !global.iter().any(|g| g.formula == a.formula) {
                    global.push(a.clone());
                }
                spec.assertions.entry(iface.clone()).or_default().push(a);
            }
        }
        let required = RequiredConnAnnotation { relation: d.connections.iter().cloned().collect() };
        let diagram = ConfigurationDiagram {
            name: name.clone(),
            portspec: first_import(cx, u, UnitKind::Portspec),
            datatype: first_import(cx, u, UnitKind::Datatype),
            spec,
            minmax: (!minmax.is_empty()).then_some(minmax),
            rigid: (!rigid.is_empty()).then_some(rigid),
            required: (!required.is_empty()).then_some(required),
        };
        if !ok {
            continue;
        }
        if let Err(errs) = diagram.validate() {
            for e in errs.0 {
                cx.error(&name, u.header, "diagram", e.to_string());
            }
            continue;
        }
        b.diagrams.push(diagram);
    }
}

/// Ports read through `name.p` or named in `conn` for the variable `name`.
fn ports_of_var(f: &TraceFormula, name: &str, out: &mut BTreeSet<String>) {
    fn term(t: &Term, name: &str, out: &mut BTreeSet<String>) {
        match t {
            Term::PortOf(v, p) if v == name => {
                out.insert(p.clone());
            }
            Term::App(_, a) | Term::Set(a) => a.iter().for_each(|x| term(x, name, out)),
            Term::Pair(a, b) => {
                term(a, name, out);
                term(b, name, out);
            }
            _ => {}
        }
    }
    fn state(f: &Formula, name: &str, out: &mut BTreeSet<String>) {
        match f {
            Formula::Pred(_, a) => a.iter().for_each(|x| term(x, name, out)),
            Formula::Eq(a, b) | Formula::Member(a, b) => {
                term(a, name, out);
                term(b, name, out);
            }
            Formula::Not(g) => state(g, name, out),
            Formula::Binary(_, a, b) => {
                state(a, name, out);
                state(b, name, out);
            }
            Formula::Quant(_, b, g) if b.var != name => state(g, name, out),
            Formula::Conn(i, o) => {
                for r in [i, o] {
                    if r.owner == name {
                        out.insert(r.port.clone());
                    }
                }
            }
            _ => {}
        }
    }
    match f {
        TraceFormula::State(s) => state(s, name, out),
        TraceFormula::Not(g) | TraceFormula::Next(g) | TraceFormula::Eventually(g) | TraceFormula::Globally(g) => {
            ports_of_var(g, name, out)
        }
        TraceFormula::Binary(_, a, b) | TraceFormula::Until(a, b) | TraceFormula::WeakUntil(a, b) => {
            ports_of_var(a, name, out);
            ports_of_var(b, name, out);
        }
        TraceFormula::Quant(_, b, g) if b.var != name => ports_of_var(g, name, out),
        TraceFormula::Quant(..) => {}
    }
}

/// Interface for an undeclared component variable, with the rule that found it.
fn repair(
    name: &str,
    f: &TraceFormula,
    elsewhere: &BTreeMap<String, BTreeSet<String>>,
    spec: &InterfaceSpec,
) -> Option<(String, &'static str)> {
    if let Some(ifaces) = elsewhere.get(name) {
        if ifaces.len() == 1 {
            return Some((ifaces.iter().next()?.clone(), "declared with this interface in another constraint unit"));
        }
    }
    let ci: Vec<&String> = spec.interfaces.keys().filter(|i| i.eq_ignore_ascii_case(name)).collect();
    if ci.len() == 1 {
        return Some((ci[0].clone(), "its name matches the interface"));
    }
    let mut ports = BTreeSet::new();
    ports_of_var(f, name, &mut ports);
    if !ports.is_empty() {
        let fits: Vec<&String> = spec
            .interfaces
            .iter()
            .filter(|(_, ifc)| ports.iter().all(|p| ifc.kind_of(p).is_some()))
            .map(|(i, _)| i)
            .collect();
        if fits.len() == 1 {
            return Some((fits[0].clone(), "the ports it uses belong only to this interface"));
        }
    }
    None
}

fn constraints(cx: &mut Ctx, b: &mut Bundle) {
    let units = cx.of_kind(UnitKind::Constraints);
    let is_iface = |s: &Sort| match s {
        Sort::Named(n) if b.interfaces.interfaces.contains_key(n) && !b.signature.sorts.contains(n) => Some(n.clone()),
        _ => None,
    };
    // Component variables declared anywhere, for repairs in other units.
    let mut component_vars: BTreeMap<String, BTreeMap<String, BTreeSet<String>>> = BTreeMap::new();
    for u in &units {
        let Body::Constraints(c) = &u.unit.body else { continue };
        for d in c.rigid.iter().chain(&c.flexible) {
            if let Some(i) = is_iface(&d.sort) {
                for v in &d.names {
                    component_vars
                        .entry(v.clone())
                        .or_default()
                        .entry(i.clone())
                        .or_default()
                        .insert(u.unit.name.clone());
                }
            }
        }
    }
    for u in &units {
        let Body::Constraints(c) = &u.unit.body else { continue };
        let name = u.unit.name.clone();
        let sig = b.signature.clone();
        let checker = Checker::new(&sig, Level::Configuration(&b.interfaces));
        let mut decls: Vec<(String, Domain, bool)> = Vec::new();
        for (rigid, list) in [(true, &c.rigid), (false, &c.flexible)] {
            for d in list {
                for v in &d.names {
                    let span = u.span(&format!("var:{v}"));
                    let mut dom = Domain::Sort(d.sort.clone());
                    if let Err(e) = checker.domain(&mut dom) {
                        cx.error(&name, span, "unresolved", e.message);
                        continue;
                    }
                    if decls.iter().any(|(n, _, _)| n == v) {
                        cx.error(&name, span, "duplicate", format!("variable {v} declared twice"));
                        continue;
                    }
                    decls.push((v.clone(), dom, rigid));
                }
            }
        }
        let elsewhere: BTreeMap<String, BTreeSet<String>> = component_vars
            .iter()
            .map(|(v, by_iface)| {
                let ifaces =
                    by_iface.iter().filter(|(_, us)| us.iter().any(|x| *x != name)).map(|(i, _)| i.clone()).collect();
                (v.clone(), ifaces)
            })
            .collect();
        let mut labels = BTreeSet::new();
        for (i, ax) in c.axioms.iter().enumerate() {
            let span = u.span(&format!("axiom:{i}"));
            let lbl = label(&name, &ax.label, i);
            if !labels.insert(lbl.clone()) {
                cx.error(&name, span, "duplicate", format!("duplicate label {lbl}"));
                continue;
            }
            let mut extra: Vec<(String, Domain)> = Vec::new();
            let mut failed = false;
            for v in ax.formula.free_vars() {
                let constant = sig.functions.get(&v).is_some_and(|f| f.args.is_empty());
                if constant || decls.iter().any(|(n, _, _)| *n == v) {
                    continue;
                }
                match repair(&v, &ax.formula, &elsewhere, &b.interfaces) {
                    Some((iface, why)) => {
                        cx.warning(
                            &name,
                            span,
                            "repair",
                            format!("undeclared variable {v} taken as a rigid component variable of {iface}: {why}"),
                        );
                        extra.push((v, Domain::Interface(iface)));
                    }
                    None => {
                        cx.error(&name, span, "unresolved", format!("undeclared variable {v}"));
                        failed = true;
                    }
                }
            }
            if failed {
                continue;
            }
            let mut ch = Checker::new(&sig, Level::Configuration(&b.interfaces));
            for (v, d, _) in &decls {
                let ty = match d {
                    Domain::Interface(i) => VarType::Component(i.clone()),
                    Domain::Sort(s) => VarType::Data(s.clone()),
                    Domain::Declared => continue,
                };
                ch.declare(v, ty);
                ch.default_domain(v, d.clone());
            }
            for (v, d) in &extra {
                if let Domain::Interface(i) = d {
                    ch.declare(v, VarType::Component(i.clone()));
                }
            }
            let mut f = ax.formula.clone();
            if let Err(e) = ch.trace(&mut f) {
                cx.error(&name, span, "type", e.to_string());
                continue;
            }
            let free = f.free_vars();
            let rigid: Vec<Binder> = decls
                .iter()
                .filter(|(v, _, r)| *r && free.contains(v))
                .map(|(v, d, _)| Binder { var: v.clone(), domain: d.clone() })
                .chain(extra.iter().map(|(v, d)| Binder { var: v.clone(), domain: d.clone() }))
                .collect();
            let flexible: Vec<Binder> = decls
                .iter()
                .filter(|(v, _, r)| !*r && free.contains(v))
                .map(|(v, d, _)| Binder { var: v.clone(), domain: d.clone() })
                .collect();
            for fl in &flexible {
                cx.warning(
                    &name,
                    span,
                    "closure",
                    format!("flexible variable {} is closed existentially at each step", fl.var),
                );
            }
            b.constraints.push(TraceAssertion { label: lbl, formula: f, rigid, flexible });
        }
    }
}

fn reads_local_ports(b: &Bundle) -> bool {
    let locals: BTreeSet<&String> = b.interfaces.interfaces.values().flat_map(|i| i.local().iter()).collect();
    b.constraints.iter().any(|a| {
        let mut vars = a.formula.free_vars();
        vars.extend(bound_vars(&a.formula));
        vars.iter().any(|v| {
            let mut ports = BTreeSet::new();
            ports_of_var(&a.formula, v, &mut ports);
            ports.iter().any(|p| locals.contains(p))
        })
    })
}

fn bound_vars(f: &TraceFormula) -> BTreeSet<String> {
    fn state(f: &Formula, out: &mut BTreeSet<String>) {
        match f {
            Formula::Not(g) => state(g, out),
            Formula::Binary(_, a, b) => {
                state(a, out);
                state(b, out);
            }
            Formula::Quant(_, b, g) => {
                out.insert(b.var.clone());
                state(g, out);
            }
            _ => {}
        }
    }
    fn go(f: &TraceFormula, out: &mut BTreeSet<String>) {
        match f {
            TraceFormula::State(s) => state(s, out),
            TraceFormula::Not(g) | TraceFormula::Next(g) | TraceFormula::Eventually(g) | TraceFormula::Globally(g) => {
                go(g, out)
            }
            TraceFormula::Binary(_, a, b) | TraceFormula::Until(a, b) | TraceFormula::WeakUntil(a, b) => {
                go(a, out);
                go(b, out);
            }
            TraceFormula::Quant(_, b, g) => {
                out.insert(b.var.clone());
                go(g, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut out);
    out
}
