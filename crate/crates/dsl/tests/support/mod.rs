//! Strategies for random units in the shape the parser produces.
#![allow(dead_code)]

use archtrace_core::syntax::{Binder, Connective, Domain, Formula, PortRef, Quantifier, Term, TraceFormula};
use archtrace_core::value::{Sort, Value};
use archtrace_dsl::ast::*;
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;

fn pick(xs: &'static [&'static str]) -> impl Strategy<Value = String> {
    prop::sample::select(xs.to_vec()).prop_map(str::to_string)
}

fn var() -> impl Strategy<Value = String> {
    pick(&["x", "y", "z", "p", "q", "n1", "x'"])
}

fn symbol() -> impl Strategy<Value = String> {
    pick(&["f", "g", "solve", "le", "h2"])
}

fn sort_name() -> impl Strategy<Value = String> {
    pick(&["A", "B", "Msg", "PROB"])
}

fn port() -> impl Strategy<Value = String> {
    pick(&["ip", "op", "a1", "prob"])
}

fn iface() -> impl Strategy<Value = String> {
    pick(&["BB", "KS", "Box"])
}

fn unit_name() -> impl Strategy<Value = String> {
    pick(&["Alpha", "Beta", "Gamma", "U1"])
}

fn label() -> impl Strategy<Value = String> {
    pick(&["ax", "rule1", "keep_it", "minmax"])
}

fn component_id() -> impl Strategy<Value = String> {
    pick(&["bb", "ks1", "c2"])
}

pub fn sort() -> impl Strategy<Value = Sort> {
    sort_name().prop_map(Sort::Named).prop_recursive(2, 6, 2, |inner| {
        prop_oneof![inner.clone().prop_map(Sort::set), (inner.clone(), inner).prop_map(|(a, b)| Sort::pair(a, b)),]
    })
}

pub fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        var().prop_map(Term::Var),
        (component_id(), port()).prop_map(|(v, p)| Term::PortOf(v, p)),
        symbol().prop_map(|f| Term::App(f, vec![])),
    ]
    .prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            (symbol(), vec(inner.clone(), 1..3)).prop_map(|(f, a)| Term::App(f, a)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            vec(inner, 0..3).prop_map(Term::Set),
        ]
    })
}

fn connective() -> impl Strategy<Value = Connective> {
    prop::sample::select(vec![Connective::And, Connective::Or, Connective::Implies, Connective::Iff])
}

fn quantifier() -> impl Strategy<Value = Quantifier> {
    prop::sample::select(vec![Quantifier::Forall, Quantifier::Exists])
}

fn binder() -> impl Strategy<Value = Binder> {
    (var(), option::of(sort()))
        .prop_map(|(v, s)| Binder { var: v, domain: s.map(Domain::Sort).unwrap_or(Domain::Declared) })
}

fn link() -> impl Strategy<Value = (PortRef, PortRef)> {
    ((component_id(), port()), (component_id(), port()))
        .prop_map(|((a, p), (b, q))| (PortRef::new(&a, &p), PortRef::new(&b, &q)))
}

pub fn atom(configuration: bool) -> BoxedStrategy<Formula> {
    let data = prop_oneof![
        any::<bool>().prop_map(Formula::Bool),
        (symbol(), vec(term(), 0..3)).prop_map(|(p, a)| Formula::Pred(p, a)),
        (term(), term()).prop_map(|(a, b)| Formula::Eq(a, b)),
        (term(), term()).prop_map(|(a, b)| Formula::Member(a, b)),
        symbol().prop_map(Formula::WellFounded),
    ];
    if !configuration {
        return data.boxed();
    }
    prop_oneof![
        3 => data,
        1 => component_id().prop_map(Formula::Active),
        1 => link().prop_map(|(a, b)| Formula::Conn(a, b)),
        1 => link().prop_map(|(a, b)| Formula::IrConn(a, b)),
        1 => (iface(), 0u32..5).prop_map(|(i, n)| Formula::Min(i, n)),
        1 => (iface(), 0u32..5).prop_map(|(i, n)| Formula::Max(i, n)),
        1 => (iface(), 0u32..5, 0u32..5).prop_map(|(i, n, m)| Formula::MinMax(i, n, m)),
    ]
    .boxed()
}

pub fn formula(configuration: bool) -> impl Strategy<Value = Formula> {
    atom(configuration).prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (connective(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Formula::binary(c, a, b)),
            (quantifier(), binder(), inner).prop_map(|(q, b, f)| Formula::Quant(q, b, Box::new(f))),
        ]
    })
}

/// Canonical trace formulas, built with the folding constructors as the parser does.
pub fn trace_formula() -> impl Strategy<Value = TraceFormula> {
    formula(true).prop_map(TraceFormula::State).prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(TraceFormula::not),
            inner.clone().prop_map(TraceFormula::next),
            inner.clone().prop_map(TraceFormula::eventually),
            inner.clone().prop_map(TraceFormula::globally),
            (connective(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| TraceFormula::binary(c, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| TraceFormula::until(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| TraceFormula::weak_until(a, b)),
            (quantifier(), binder(), inner).prop_map(|(q, b, f)| TraceFormula::quant(q, b, f)),
        ]
    })
}

fn decl() -> impl Strategy<Value = VarDecl> {
    (vec(var(), 1..3), sort()).prop_map(|(names, sort)| VarDecl { names, sort })
}

fn axiom<F: std::fmt::Debug + Clone>(f: impl Strategy<Value = F>) -> impl Strategy<Value = Axiom<F>> {
    (option::of(label()), f).prop_map(|(label, formula)| Axiom { label, formula })
}

fn entry() -> impl Strategy<Value = PortEntry> {
    (port(), option::of(sort())).prop_map(|(name, sort)| PortEntry { name, sort })
}

pub fn value() -> impl Strategy<Value = Value> {
    pick(&["pA", "s_1", "7", "z"]).prop_map(|a| Value::atom(&a)).prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Value::pair(a, b)),
            vec(inner, 0..3).prop_map(Value::set),
        ]
    })
}

fn valuation() -> impl Strategy<Value = (String, Vec<Value>)> {
    (port(), vec(value(), 0..3))
}

fn bounds() -> impl Strategy<Value = Bounds> {
    prop_oneof![
        (0u32..4).prop_map(|n| Bounds { min: Some(n), max: Some(n) }),
        (0u32..4).prop_map(|n| Bounds { min: Some(n), max: None }),
        (0u32..4).prop_map(|n| Bounds { min: None, max: Some(n) }),
        (0u32..4, 0u32..4).prop_map(|(n, m)| Bounds { min: Some(n), max: Some(m) }),
    ]
}

fn body(kind: UnitKind) -> BoxedStrategy<Body> {
    match kind {
        UnitKind::Datatype => (
            vec(sort_name(), 0..3),
            vec(
                (symbol(), vec(sort(), 0..3), sort()).prop_map(|(name, args, result)| FunctionDecl {
                    name,
                    args,
                    result,
                }),
                0..3,
            ),
            vec((symbol(), vec(sort(), 1..3)).prop_map(|(name, args)| PredicateDecl { name, args }), 0..3),
            vec(decl(), 0..3),
            vec(axiom(formula(false)), 0..3),
        )
            .prop_map(|(sorts, functions, predicates, vars, axioms)| {
                Body::Datatype(DatatypeUnit { sorts, functions, predicates, vars, axioms })
            })
            .boxed(),
        UnitKind::Portspec => vec(decl(), 0..4).prop_map(|ports| Body::Portspec(PortspecUnit { ports })).boxed(),
        UnitKind::Interface => (
            vec(entry(), 0..3),
            vec(entry(), 0..3),
            vec(entry(), 0..3),
            vec(decl(), 0..3),
            vec(axiom(formula(false)), 0..3),
        )
            .prop_map(|(local, input, output, vars, axioms)| {
                Body::Interface(InterfaceUnit { local, input, output, vars, axioms })
            })
            .boxed(),
        UnitKind::Constraints => (vec(decl(), 0..3), vec(decl(), 0..3), vec(axiom(trace_formula()), 0..3))
            .prop_map(|(rigid, flexible, axioms)| Body::Constraints(ConstraintsUnit { rigid, flexible, axioms }))
            .boxed(),
        UnitKind::Diagram => {
            let component = (
                vec(component_id(), 0..3),
                iface(),
                option::of(bounds()),
                vec(entry(), 0..2),
                vec(entry(), 0..2),
                vec(entry(), 0..2),
            )
                .prop_map(|(vars, iface, bounds, local, input, output)| DiagramComponent {
                    vars,
                    iface,
                    bounds,
                    local,
                    input,
                    output,
                });
            let conn = ((iface(), port()), (iface(), port()))
                .prop_map(|((a, p), (b, q))| (PortRef::new(&a, &p), PortRef::new(&b, &q)));
            (
                vec(component, 0..3),
                vec(conn, 0..3),
                vec(decl(), 0..2),
                vec((iface(), vec(axiom(formula(false)), 0..3)), 0..3),
            )
                .prop_map(|(components, connections, vars, axioms)| {
                    Body::Diagram(DiagramUnit { components, connections, vars, axioms })
                })
                .boxed()
        }
        UnitKind::Algebra => (
            vec((sort_name(), vec(value(), 0..4)), 0..3),
            vec((symbol(), vec(value(), 0..3), value()), 0..4),
            vec((symbol(), vec(value(), 0..3)), 0..4),
        )
            .prop_map(|(carriers, functions, predicates)| {
                Body::Algebra(AlgebraUnit { carriers, functions, predicates })
            })
            .boxed(),
        UnitKind::Trace => {
            let component = (
                component_id(),
                option::of(iface()),
                vec(valuation(), 0..2),
                vec(port(), 0..3),
                vec(port(), 0..3),
                vec((port(), port()), 0..2),
            )
                .prop_map(|(id, iface, local, input, output, renames)| TraceComponent {
                    id,
                    iface,
                    local,
                    input,
                    output,
                    renames,
                });
            let active = (component_id(), vec(valuation(), 0..3)).prop_map(|(id, values)| ActiveEntry { id, values });
            let step = (vec(active, 0..3), vec(link(), 0..3));
            (vec(component, 0..3), vec(step, 0..4))
                .prop_map(|(components, steps)| {
                    let steps = steps
                        .into_iter()
                        .enumerate()
                        .map(|(index, (active, conns))| TraceStep { index, active, conns })
                        .collect();
                    Body::Trace(TraceUnit { components, steps })
                })
                .boxed()
        }
    }
}

pub const KINDS: [UnitKind; 7] = [
    UnitKind::Datatype,
    UnitKind::Portspec,
    UnitKind::Interface,
    UnitKind::Constraints,
    UnitKind::Diagram,
    UnitKind::Algebra,
    UnitKind::Trace,
];

pub fn unit(kind: UnitKind) -> impl Strategy<Value = SourceUnit> {
    (unit_name(), vec(unit_name(), 0..3), body(kind)).prop_map(|(name, imports, body)| SourceUnit {
        name,
        imports,
        body,
    })
}
