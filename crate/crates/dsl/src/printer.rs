//! Canonical text for units. `parse_unit(print_unit(u))` gives back `u`.

use std::fmt::{Display, Write};

use archtrace_core::value::Value;

use crate::ast::*;

pub fn print_unit(u: &SourceUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", u.kind().keyword(), u.name);
    if !u.imports.is_empty() {
        let _ = writeln!(out, "  imports {}", u.imports.join(", "));
    }
    match &u.body {
        Body::Datatype(d) => datatype(&mut out, d),
        Body::Portspec(p) => {
            if !p.ports.is_empty() {
                out.push_str("  ports\n");
                decls(&mut out, &p.ports);
            }
        }
        Body::Interface(i) => {
            entries(&mut out, "  ", "local", &i.local);
            entries(&mut out, "  ", "input", &i.input);
            entries(&mut out, "  ", "output", &i.output);
            section(&mut out, "vars", &i.vars, decl);
            section(&mut out, "axioms", &i.axioms, axiom);
        }
        Body::Constraints(c) => {
            section(&mut out, "rigid vars", &c.rigid, decl);
            section(&mut out, "vars", &c.flexible, decl);
            section(&mut out, "axioms", &c.axioms, axiom);
        }
        Body::Diagram(d) => diagram(&mut out, d),
        Body::Algebra(a) => algebra(&mut out, a),
        Body::Trace(t) => trace(&mut out, t),
    }
    out.push_str("end\n");
    out
}

fn section<T>(out: &mut String, head: &str, items: &[T], mut line: impl FnMut(&mut String, &T)) {
    if items.is_empty() {
        return;
    }
    let _ = writeln!(out, "  {head}");
    for it in items {
        out.push_str("    ");
        line(out, it);
        out.push('\n');
    }
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn decl(out: &mut String, d: &VarDecl) {
    let _ = write!(out, "{}: {}", d.names.join(", "), d.sort);
}

fn decls(out: &mut String, ds: &[VarDecl]) {
    for d in ds {
        out.push_str("    ");
        decl(out, d);
        out.push('\n');
    }
}

fn axiom<F: Display>(out: &mut String, a: &Axiom<F>) {
    if let Some(l) = &a.label {
        let _ = write!(out, "{l}: ");
    }
    let _ = write!(out, "{}", a.formula);
}

fn entries(out: &mut String, indent: &str, kw: &str, es: &[PortEntry]) {
    if es.is_empty() {
        return;
    }
    let items: Vec<String> = es
        .iter()
        .map(|e| match &e.sort {
            Some(s) => format!("{}: {s}", e.name),
            None => e.name.clone(),
        })
        .collect();
    let _ = writeln!(out, "{indent}{kw} {}", items.join(", "));
}

fn datatype(out: &mut String, d: &DatatypeUnit) {
    if !d.sorts.is_empty() {
        let _ = writeln!(out, "  sorts {}", d.sorts.join(", "));
    }
    section(out, "functions", &d.functions, |o, f| {
        if f.args.is_empty() {
            let _ = write!(o, "{}: -> {}", f.name, f.result);
        } else {
            let _ = write!(o, "{}: {} -> {}", f.name, join(&f.args), f.result);
        }
    });
    section(out, "predicates", &d.predicates, |o, p| {
        let _ = write!(o, "{}: {}", p.name, join(&p.args));
    });
    section(out, "vars", &d.vars, decl);
    section(out, "axioms", &d.axioms, axiom);
}

fn bounds(b: &Bounds) -> String {
    match (b.min, b.max) {
        (Some(n), Some(m)) if n == m => format!("[{n}]"),
        (n, m) => format!(
            "[{}..{}]",
            n.map(|n| n.to_string()).unwrap_or_default(),
            m.map(|m| m.to_string()).unwrap_or_default()
        ),
    }
}

fn diagram(out: &mut String, d: &DiagramUnit) {
    for c in &d.components {
        out.push_str("  component ");
        if !c.vars.is_empty() {
            let _ = write!(out, "{}: ", c.vars.join(", "));
        }
        out.push_str(&c.iface);
        if let Some(b) = &c.bounds {
            let _ = write!(out, " {}", bounds(b));
        }
        out.push('\n');
        entries(out, "    ", "local", &c.local);
        entries(out, "    ", "input", &c.input);
        entries(out, "    ", "output", &c.output);
    }
    for (a, b) in &d.connections {
        let _ = writeln!(out, "  connect {a} <- {b}");
    }
    section(out, "vars", &d.vars, decl);
    for (iface, axioms) in &d.axioms {
        let _ = writeln!(out, "  axioms {iface}");
        for a in axioms {
            out.push_str("    ");
            axiom(out, a);
            out.push('\n');
        }
    }
}

fn values(vs: &[Value]) -> String {
    format!("{{{}}}", join(vs))
}

fn algebra(out: &mut String, a: &AlgebraUnit) {
    for (s, vs) in &a.carriers {
        let _ = writeln!(out, "  carrier {s} = {}", values(vs));
    }
    section(out, "functions", &a.functions, |o, (f, args, v)| {
        let _ = write!(o, "{f}({}) = {v}", join(args));
    });
    section(out, "predicates", &a.predicates, |o, (p, args)| {
        let _ = write!(o, "{p}({})", join(args));
    });
}

fn valuations(vals: &[(String, Vec<Value>)]) -> String {
    vals.iter().map(|(p, vs)| format!("{p} = {}", values(vs))).collect::<Vec<_>>().join(", ")
}

fn trace(out: &mut String, t: &TraceUnit) {
    for c in &t.components {
        let _ = write!(out, "  component {}", c.id);
        if let Some(i) = &c.iface {
            let _ = write!(out, ": {i}");
        }
        out.push('\n');
        for l in &c.local {
            let _ = writeln!(out, "    local {}", valuations(std::slice::from_ref(l)));
        }
        if !c.input.is_empty() {
            let _ = writeln!(out, "    input {}", c.input.join(", "));
        }
        if !c.output.is_empty() {
            let _ = writeln!(out, "    output {}", c.output.join(", "));
        }
        for (a, b) in &c.renames {
            let _ = writeln!(out, "    rename {a} -> {b}");
        }
    }
    for s in &t.steps {
        let _ = writeln!(out, "  step {}", s.index);
        for a in &s.active {
            let _ = writeln!(out, "    active {}", a.id);
            for v in &a.values {
                let _ = writeln!(out, "      {}", valuations(std::slice::from_ref(v)));
            }
        }
        for (a, b) in &s.conns {
            let _ = writeln!(out, "    conn {a} <- {b}");
        }
    }
}
