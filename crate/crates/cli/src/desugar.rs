//! Diagram annotations printed back as a constraints unit.

use archtrace_core::constraints::TraceAssertion;
use archtrace_core::diagrams::{desugar_diagram, ConfigurationDiagram, DiagramErrors};
use archtrace_core::syntax::{Binder, Domain};
use archtrace_core::value::Sort;
use archtrace_dsl::ast::{Axiom, Body, ConstraintsUnit, SourceUnit, VarDecl};

fn decls(bs: &[Binder]) -> Vec<VarDecl> {
    let mut out: Vec<VarDecl> = Vec::new();
    for b in bs {
        let sort = match &b.domain {
            Domain::Sort(s) => s.clone(),
            Domain::Interface(i) => Sort::named(i),
            Domain::Declared => continue,
        };
        match out.last_mut() {
            Some(d) if d.sort == sort => d.names.push(b.var.clone()),
            _ => out.push(VarDecl { names: vec![b.var.clone()], sort }),
        }
    }
    out
}

/// Constraints unit `<diagram>Constraints` importing the diagram, one axiom
/// per present annotation. Labels drop the diagram prefix.
pub fn constraints_unit(d: &ConfigurationDiagram) -> Result<SourceUnit, DiagramErrors> {
    let (_, assertions) = desugar_diagram(d)?;
    Ok(to_unit(&format!("{}Constraints", d.name), &d.name, &assertions))
}

pub fn to_unit(name: &str, import: &str, assertions: &[TraceAssertion]) -> SourceUnit {
    let mut c = ConstraintsUnit::default();
    for a in assertions {
        let label = a.label.rsplit(':').next().unwrap_or(&a.label).to_string();
        c.rigid.extend(decls(&a.rigid));
        c.flexible.extend(decls(&a.flexible));
        c.axioms.push(Axiom { label: Some(label), formula: a.formula.clone() });
    }
    SourceUnit { name: name.to_string(), imports: vec![import.to_string()], body: Body::Constraints(c) }
}
