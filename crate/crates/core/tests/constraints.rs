use std::collections::BTreeMap;

use archtrace_core::algebra::{Algebra, Signature};
use archtrace_core::constraints::*;
use archtrace_core::eval::{Binding, Env, EvalError};
use archtrace_core::interface::{Interface, InterfaceInterpretation, InterfaceSpec, PortSpec, SpecInterpretation};
use archtrace_core::model::{ArchConfiguration, ComponentSnapshot, ConfigurationTrace};
use archtrace_core::syntax::{Binder, Formula, PortRef, Term, TraceFormula};
use archtrace_core::value::{Sort, Value};

fn alg() -> Algebra {
    let mut sig = Signature::default();
    sig.sorts.insert("MSG".into());
    let carriers = BTreeMap::from([("MSG".to_string(), [Value::atom("a"), Value::atom("b")].into())]);
    Algebra::new(sig, carriers, BTreeMap::new(), BTreeMap::new()).unwrap()
}

fn spec() -> InterfaceSpec {
    let ps = PortSpec { typing: ["i", "o", "l"].iter().map(|p| (p.to_string(), Sort::named("MSG"))).collect() };
    let ifc = Interface::new("If", &ps, ["l".into()].into(), ["i".into()].into(), ["o".into()].into()).unwrap();
    InterfaceSpec { interfaces: BTreeMap::from([("If".to_string(), ifc)]), assertions: BTreeMap::new() }
}

fn snap(id: &str, i: &[&str], o: &[&str]) -> ComponentSnapshot {
    ComponentSnapshot::builder(id).local("l", &[]).input("i", i).output("o", o).build().unwrap()
}

fn interp(ids: &[&str]) -> SpecInterpretation {
    let s = spec();
    let ifc = s.interface("If").unwrap();
    SpecInterpretation::new(ids.iter().map(|id| InterfaceInterpretation::identity("If", ifc, snap(id, &[], &[]))))
}

/// One step: active components with their output values, plus connections.
fn step(active: &[(&str, &[&str])], conns: &[(&str, &str)]) -> ArchConfiguration {
    let mut k = ArchConfiguration::new(active.iter().map(|(id, o)| snap(id, &[], o)), BTreeMap::new());
    for (a, b) in conns {
        k.connect((a, "i"), (b, "o"));
    }
    k
}

fn trace(steps: Vec<ArchConfiguration>) -> ConfigurationTrace {
    ConfigurationTrace::new(steps).unwrap()
}

fn bind(v: &str, id: &str) -> Env {
    Env::from_bindings([(v.to_string(), Binding::Component(id.into()))])
}

fn st(f: Formula) -> TraceFormula {
    TraceFormula::State(f)
}

fn msg_in_out(m: &str, v: &str) -> Formula {
    Formula::Member(Term::app(m, vec![]), Term::port_of(v, "o"))
}

fn alg_with_constants() -> Algebra {
    let mut sig = Signature::default();
    sig.sorts.insert("MSG".into());
    for c in ["a", "b"] {
        sig.functions
            .insert(c.into(), archtrace_core::algebra::FunctionType { args: vec![], result: Sort::named("MSG") });
    }
    let carriers = BTreeMap::from([("MSG".to_string(), [Value::atom("a"), Value::atom("b")].into())]);
    let functions = ["a", "b"].iter().map(|c| (c.to_string(), BTreeMap::from([(vec![], Value::atom(c))]))).collect();
    Algebra::new(sig, carriers, functions, BTreeMap::new()).unwrap()
}

#[test]
fn globally_active_depends_on_mode() {
    let j = interp(&["c1"]);
    let t = trace(vec![step(&[("c1", &[])], &[]); 3]);
    let g = TraceFormula::Globally(Box::new(st(Formula::Active("v".into()))));
    let closed = trace_holds(&alg(), &j, &bind("v", "c1"), &t, 0, &g, Mode::Closed).unwrap();
    assert_eq!(closed.value, VerdictValue::Satisfied);
    assert_eq!(closed.witness, Some(2));
    let open = trace_holds(&alg(), &j, &bind("v", "c1"), &t, 0, &g, Mode::Open).unwrap();
    assert_eq!(open.value, VerdictValue::Inconclusive);
}

#[test]
fn eventually_reports_first_witness() {
    let a = alg_with_constants();
    let j = interp(&["c1"]);
    let t = trace(vec![
        step(&[("c1", &[])], &[]),
        step(&[("c1", &["b"])], &[]),
        step(&[("c1", &["a"])], &[]),
        step(&[("c1", &["a"])], &[]),
    ]);
    let f = TraceFormula::Eventually(Box::new(st(msg_in_out("a", "v"))));
    for mode in [Mode::Open, Mode::Closed] {
        let v = trace_holds(&a, &j, &bind("v", "c1"), &t, 0, &f, mode).unwrap();
        assert_eq!((v.value, v.witness), (VerdictValue::Satisfied, Some(2)));
    }
    let v = trace_holds(&a, &j, &bind("v", "c1"), &t, 3, &f, Mode::Closed).unwrap();
    assert_eq!(v.witness, Some(3));
}

#[test]
fn weak_until_fails_where_both_sides_fail() {
    let a = alg_with_constants();
    let j = interp(&["c1"]);
    let t = trace(vec![
        step(&[("c1", &["a"])], &[]),
        step(&[("c1", &["a"])], &[]),
        step(&[("c1", &[])], &[]),
        step(&[("c1", &["b"])], &[]),
    ]);
    let f = TraceFormula::WeakUntil(Box::new(st(msg_in_out("a", "v"))), Box::new(st(msg_in_out("b", "v"))));
    for mode in [Mode::Open, Mode::Closed] {
        let v = trace_holds(&a, &j, &bind("v", "c1"), &t, 0, &f, mode).unwrap();
        assert_eq!((v.value, v.witness), (VerdictValue::Violated, Some(2)));
        assert!(v.explanation.is_some());
    }
}

#[test]
fn until_and_weak_until_differ_at_the_end() {
    let a = alg_with_constants();
    let j = interp(&["c1"]);
    let t = trace(vec![step(&[("c1", &["a"])], &[]); 2]);
    let phi = st(msg_in_out("a", "v"));
    let psi = st(msg_in_out("b", "v"));
    let u = TraceFormula::Until(Box::new(phi.clone()), Box::new(psi.clone()));
    let w = TraceFormula::WeakUntil(Box::new(phi), Box::new(psi));
    let env = bind("v", "c1");
    assert_eq!(trace_holds(&a, &j, &env, &t, 0, &u, Mode::Closed).unwrap().value, VerdictValue::Violated);
    assert_eq!(trace_holds(&a, &j, &env, &t, 0, &w, Mode::Closed).unwrap().value, VerdictValue::Satisfied);
    assert_eq!(trace_holds(&a, &j, &env, &t, 0, &u, Mode::Open).unwrap().value, VerdictValue::Inconclusive);
    assert_eq!(trace_holds(&a, &j, &env, &t, 0, &w, Mode::Open).unwrap().value, VerdictValue::Inconclusive);
}

#[test]
fn next_at_last_index() {
    let j = interp(&["c1"]);
    let t = trace(vec![step(&[("c1", &[])], &[])]);
    let f = TraceFormula::Next(Box::new(st(Formula::Bool(true))));
    let env = Env::default();
    assert_eq!(trace_holds(&alg(), &j, &env, &t, 0, &f, Mode::Closed).unwrap().value, VerdictValue::Violated);
    assert_eq!(trace_holds(&alg(), &j, &env, &t, 0, &f, Mode::Open).unwrap().value, VerdictValue::Inconclusive);
}

#[test]
fn index_out_of_range_is_an_error() {
    let j = interp(&["c1"]);
    let t = trace(vec![step(&[], &[])]);
    let e = trace_holds(&alg(), &j, &Env::default(), &t, 1, &st(Formula::Bool(true)), Mode::Open).unwrap_err();
    assert_eq!(e, CheckError::IndexOutOfRange { index: 1, len: 1 });
}

#[test]
fn undefined_read_makes_atom_false() {
    let a = alg_with_constants();
    let j = interp(&["c1", "c2"]);
    let t = trace(vec![step(&[("c1", &["a"])], &[])]);
    let f = st(msg_in_out("a", "v"));
    let v = trace_holds(&a, &j, &bind("v", "c2"), &t, 0, &f, Mode::Closed).unwrap();
    assert_eq!(v.value, VerdictValue::Violated);
    assert!(v.explanation.unwrap().contains("undefined read"));
    let neg = st(Formula::not(msg_in_out("a", "v")));
    let v = trace_holds(&a, &j, &bind("v", "c2"), &t, 0, &neg, Mode::Closed).unwrap();
    assert_eq!(v.value, VerdictValue::Satisfied);
}

#[test]
fn config_level_operations() {
    let a = alg_with_constants();
    let j = interp(&["c1", "c2", "c3"]);
    let k = step(&[("c1", &["a"]), ("c2", &[])], &[("c2", "c1")]);
    let env = Env::from_bindings([
        ("v".to_string(), Binding::Component("c2".into())),
        ("w".to_string(), Binding::Component("c1".into())),
        ("u".to_string(), Binding::Component("c3".into())),
    ]);
    assert_eq!(eval_config_term(&a, &j, &env, &k, &Term::port_of("w", "o")).unwrap(), Value::set([Value::atom("a")]));
    assert!(matches!(eval_config_term(&a, &j, &env, &k, &Term::port_of("u", "o")), Err(EvalError::UndefinedRead(_))));
    assert!(config_holds(&a, &j, &env, &k, &Formula::Active("v".into())).unwrap());
    assert!(!config_holds(&a, &j, &env, &k, &Formula::Active("u".into())).unwrap());
    let conn = Formula::Conn(PortRef::new("v", "i"), PortRef::new("w", "o"));
    assert!(config_holds(&a, &j, &env, &k, &conn).unwrap());
    let conn_inactive = Formula::Conn(PortRef::new("u", "i"), PortRef::new("w", "o"));
    assert!(!config_holds(&a, &j, &env, &k, &conn_inactive).unwrap());
    assert!(config_holds(&a, &j, &env, &k, &Formula::Min("If".into(), 0)).unwrap());
    assert!(config_holds(&a, &j, &env, &k, &Formula::MinMax("If".into(), 2, 2)).unwrap());
    assert!(!config_holds(&a, &j, &env, &k, &Formula::Max("If".into(), 1)).unwrap());
}

#[test]
fn irconn_matches_its_expansion() {
    let a = alg();
    let j = interp(&["c1", "c2", "c3"]);
    let expansion = Formula::forall(
        Binder::interface("v", "If"),
        Formula::forall(
            Binder::interface("w", "If"),
            Formula::implies(
                Formula::and(Formula::Active("v".into()), Formula::Active("w".into())),
                Formula::Conn(PortRef::new("v", "i"), PortRef::new("w", "o")),
            ),
        ),
    );
    let ir = Formula::IrConn(PortRef::new("If", "i"), PortRef::new("If", "o"));
    let all = ["c1", "c2", "c3"];
    let env = Env::default();
    for mask in 0u32..8 {
        let active: Vec<(&str, &[&str])> =
            all.iter().enumerate().filter(|(n, _)| mask & (1 << n) != 0).map(|(_, id)| (*id, &[][..])).collect();
        let ids: Vec<&str> = active.iter().map(|(id, _)| *id).collect();
        for conn_mask in 0u32..(1 << (ids.len() * ids.len())) {
            let mut conns = Vec::new();
            for (x, a_) in ids.iter().enumerate() {
                for (y, b_) in ids.iter().enumerate() {
                    if conn_mask & (1 << (x * ids.len() + y)) != 0 {
                        conns.push((*a_, *b_));
                    }
                }
            }
            let k = step(&active, &conns);
            assert_eq!(
                config_holds(&a, &j, &env, &k, &ir).unwrap(),
                config_holds(&a, &j, &env, &k, &expansion).unwrap()
            );
        }
    }
}

#[test]
fn rigid_assignments_conjoin_with_violation_first() {
    let j = interp(&["c1", "c2"]);
    let t = trace(vec![
        step(&[("c1", &[]), ("c2", &[])], &[]),
        step(&[("c1", &[])], &[]),
        step(&[("c1", &[]), ("c2", &[])], &[]),
    ]);
    let gamma = TraceAssertion {
        label: "always".into(),
        formula: TraceFormula::Globally(Box::new(st(Formula::Active("v".into())))),
        rigid: vec![Binder::interface("v", "If")],
        flexible: vec![],
    };
    let v = check_trace_assertion(&alg(), &j, &t, &gamma, Mode::Closed, DEFAULT_MAX_ASSIGNMENTS).unwrap();
    assert_eq!(v.value, VerdictValue::Violated);
    assert_eq!(v.witness, Some(1));
    assert_eq!(v.assignment, vec![("v".to_string(), "c2".to_string())]);
    let v = check_trace_assertion(&alg(), &j, &t, &gamma, Mode::Open, DEFAULT_MAX_ASSIGNMENTS).unwrap();
    assert_eq!(v.value, VerdictValue::Violated);
}

#[test]
fn rigid_enumeration_is_bounded() {
    let j = interp(&["c1", "c2"]);
    let t = trace(vec![step(&[("c1", &[])], &[])]);
    let gamma = TraceAssertion {
        label: "pair".into(),
        formula: st(Formula::Eq(Term::var("v"), Term::var("w"))),
        rigid: vec![Binder::interface("v", "If"), Binder::interface("w", "If")],
        flexible: vec![],
    };
    let e = check_trace_assertion(&alg(), &j, &t, &gamma, Mode::Closed, 3).unwrap_err();
    assert_eq!(e, CheckError::Capacity { count: 4, bound: 3 });
    let v = check_trace_assertion(&alg(), &j, &t, &gamma, Mode::Closed, 4).unwrap();
    assert_eq!(v.value, VerdictValue::Violated);
}

#[test]
fn undeclared_free_variable_is_rejected() {
    let j = interp(&["c1"]);
    let t = trace(vec![step(&[("c1", &[])], &[])]);
    let gamma = TraceAssertion::closed("x", st(Formula::Active("v".into())));
    let e = check_trace_assertion(&alg(), &j, &t, &gamma, Mode::Closed, 10).unwrap_err();
    assert_eq!(e, CheckError::FreeVariable("v".into()));
}

#[test]
fn flexible_variables_are_closed_per_step() {
    let j = interp(&["c1", "c2"]);
    let t = trace(vec![step(&[("c1", &[])], &[]), step(&[("c2", &[])], &[]), step(&[], &[])]);
    let gamma = TraceAssertion {
        label: "someone".into(),
        formula: TraceFormula::Globally(Box::new(st(Formula::Active("w".into())))),
        rigid: vec![],
        flexible: vec![Binder::interface("w", "If")],
    };
    assert_eq!(gamma.flexible_closure().to_string(), "G (exists w: If. active(w))");
    let v = check_trace_assertion(&alg(), &j, &t, &gamma, Mode::Closed, 10).unwrap();
    assert_eq!((v.value, v.witness), (VerdictValue::Violated, Some(2)));
}

#[test]
fn monitor_verdicts_are_sticky() {
    let a = alg_with_constants();
    let j = interp(&["c1"]);
    let f = TraceFormula::Quant(
        archtrace_core::syntax::Quantifier::Forall,
        Binder::interface("v", "If"),
        Box::new(TraceFormula::Eventually(Box::new(st(msg_in_out("a", "v"))))),
    );
    let mut m = Monitor::new(&a, &j, TraceAssertion::closed("f", f)).unwrap();
    assert_eq!(m.verdict().unwrap_err(), MonitorError::EmptyPrefix);
    let outs: Vec<&[&str]> = vec![&[], &["b"], &[], &["a"], &[]];
    let got: Vec<VerdictValue> = outs.iter().map(|o| m.step(step(&[("c1", o)], &[])).unwrap().value).collect();
    assert_eq!(
        got,
        [
            VerdictValue::Inconclusive,
            VerdictValue::Inconclusive,
            VerdictValue::Inconclusive,
            VerdictValue::Satisfied,
            VerdictValue::Satisfied
        ]
    );

    let g = TraceFormula::Globally(Box::new(st(Formula::exists(
        Binder::interface("v", "If"),
        Formula::Active("v".into()),
    ))));
    let mut m = Monitor::new(&a, &j, TraceAssertion::closed("g", g)).unwrap();
    assert_eq!(m.step(step(&[("c1", &[])], &[])).unwrap().value, VerdictValue::Inconclusive);
    let v = m.step(step(&[], &[])).unwrap();
    assert_eq!((v.value, v.witness), (VerdictValue::Violated, Some(1)));
    assert_eq!(m.step(step(&[("c1", &[])], &[])).unwrap(), v);
}

#[test]
fn monitor_rejects_free_rigid_variables() {
    let j = interp(&["c1"]);
    let a = alg();
    let gamma = TraceAssertion {
        label: "r".into(),
        formula: st(Formula::Active("v".into())),
        rigid: vec![Binder::interface("v", "If")],
        flexible: vec![],
    };
    assert!(matches!(Monitor::new(&a, &j, gamma), Err(MonitorError::FreeRigid(_))));
}

#[test]
fn data_quantifier_ranges_over_carrier() {
    let a = alg();
    let j = interp(&["c1"]);
    let t = trace(vec![step(&[("c1", &["a", "b"])], &[])]);
    let all = st(Formula::forall(
        Binder::sort("m", Sort::named("MSG")),
        Formula::Member(Term::var("m"), Term::port_of("v", "o")),
    ));
    let v = trace_holds(&a, &j, &bind("v", "c1"), &t, 0, &all, Mode::Closed).unwrap();
    assert_eq!(v.value, VerdictValue::Satisfied);
}
