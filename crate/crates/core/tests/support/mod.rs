//! Random worlds and reference evaluators shared by the property tests and
//! the acceptance run. The evaluators here are written from the definitions
//! and share no code with the checker beyond single-configuration atoms.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use archtrace_core::algebra::{Algebra, FunctionType, Signature};
use archtrace_core::constraints::{config_holds, Mode};
use archtrace_core::diagrams::{MinMaxAnnotation, RequiredConnAnnotation, RigidAnnotation};
use archtrace_core::eval::{Binding, Env};
use archtrace_core::interface::{Interface, InterfaceInterpretation, InterfaceSpec, PortSpec, SpecInterpretation};
use archtrace_core::model::{ArchConfiguration, ComponentSnapshot, ConfigurationTrace};
use archtrace_core::syntax::{Binder, Connective, Domain, Formula, PortRef, Quantifier, Term, TraceFormula};
use archtrace_core::value::{Sort, Value};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub const MSG: &str = "MSG";
pub const CONSTANTS: [&str; 3] = ["a", "b", "c"];

/// Carrier `m0..m{k-1}` with constants `a`, `b`, `c` mapped onto it cyclically.
pub fn msg_algebra(k: usize) -> Algebra {
    let mut sig = Signature::default();
    sig.sorts.insert(MSG.into());
    let vals: Vec<Value> = (0..k).map(|i| Value::atom(&format!("m{i}"))).collect();
    let mut functions = BTreeMap::new();
    for (i, c) in CONSTANTS.iter().enumerate() {
        sig.functions.insert(c.to_string(), FunctionType { args: vec![], result: Sort::named(MSG) });
        functions.insert(c.to_string(), BTreeMap::from([(vec![], vals[i % k].clone())]));
    }
    let carriers = BTreeMap::from([(MSG.to_string(), vals.into_iter().collect())]);
    Algebra::new(sig, carriers, functions, BTreeMap::new()).expect("message algebra")
}

pub fn carrier(alg: &Algebra) -> Vec<Value> {
    alg.carrier(&Sort::named(MSG)).expect("MSG carrier").to_vec()
}

/// Interfaces `I0..I{n-1}`, each with local `l`, input `i` and output `o`.
pub fn iface_spec(n: usize) -> InterfaceSpec {
    let ps = PortSpec { typing: ["l", "i", "o"].iter().map(|p| (p.to_string(), Sort::named(MSG))).collect() };
    let interfaces = (0..n)
        .map(|k| {
            let id = format!("I{k}");
            let ifc = Interface::new(&id, &ps, ["l".into()].into(), ["i".into()].into(), ["o".into()].into())
                .expect("interface");
            (id, ifc)
        })
        .collect();
    InterfaceSpec { interfaces, assertions: BTreeMap::new() }
}

fn snapshot(id: &str, local: &Value, i: BTreeSet<Value>, o: BTreeSet<Value>) -> ComponentSnapshot {
    let valuation = BTreeMap::from([
        ("l".to_string(), Arc::new(BTreeSet::from([local.clone()]))),
        ("i".to_string(), Arc::new(i)),
        ("o".to_string(), Arc::new(o)),
    ]);
    ComponentSnapshot::new(id, ["l".into()].into(), ["i".into()].into(), ["o".into()].into(), valuation)
        .expect("snapshot")
}

fn subset<R: Rng>(rng: &mut R, vals: &[Value]) -> BTreeSet<Value> {
    vals.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect()
}

/// Components, their interfaces and a trace over them.
pub struct World {
    pub alg: Algebra,
    pub spec: InterfaceSpec,
    pub j: SpecInterpretation,
    pub ids: Vec<(String, String)>,
    pub trace: ConfigurationTrace,
}

impl World {
    pub fn ids_of(&self, iface: &str) -> Vec<&str> {
        self.ids.iter().filter(|(_, i)| i == iface).map(|(c, _)| c.as_str()).collect()
    }
}

/// Random consistent configuration over the given components. With `required`,
/// half of the steps connect exactly the pairs the relation asks for.
pub fn random_step<R: Rng>(
    rng: &mut R,
    ids: &[(String, String)],
    vals: &[Value],
    required: Option<&RequiredConnAnnotation>,
) -> ArchConfiguration {
    let active: Vec<&(String, String)> = ids.iter().filter(|_| rng.gen_bool(0.7)).collect();
    let outs: BTreeMap<&str, BTreeSet<Value>> = active.iter().map(|(c, _)| (c.as_str(), subset(rng, vals))).collect();
    let exact = required.filter(|_| rng.gen_bool(0.5));
    let mut conns: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, ia) in &active {
        for (b, ib) in &active {
            let on = match exact {
                Some(req) => req.relation.contains(&(PortRef::new(ia, "i"), PortRef::new(ib, "o"))),
                None => rng.gen_bool(0.3),
            };
            if on {
                conns.entry(a.as_str()).or_default().push(b.as_str());
            }
        }
    }
    let mut k = ArchConfiguration::default();
    for (c, _) in &active {
        let input = match conns.get(c.as_str()) {
            Some(src) => src.iter().flat_map(|b| outs[b].iter().cloned()).collect(),
            None => subset(rng, vals),
        };
        k.activate(snapshot(c, &vals[0], input, outs[c.as_str()].clone()));
    }
    for (a, srcs) in &conns {
        for b in srcs {
            k.connect((a, "i"), (b, "o"));
        }
    }
    k
}

/// `n_ifaces` interfaces, up to `max_comps` components, carrier of 1 to `max_carrier`
/// elements and 1 to `max_len` steps.
pub fn random_world<R: Rng>(
    rng: &mut R,
    n_ifaces: usize,
    max_comps: usize,
    max_carrier: usize,
    max_len: usize,
    required: Option<&RequiredConnAnnotation>,
) -> World {
    let alg = msg_algebra(rng.gen_range(1..=max_carrier));
    let vals = carrier(&alg);
    let spec = iface_spec(n_ifaces);
    let n = rng.gen_range(1..=max_comps);
    let ids: Vec<(String, String)> =
        (0..n).map(|c| (format!("c{c}"), format!("I{}", rng.gen_range(0..n_ifaces)))).collect();
    let len = rng.gen_range(1..=max_len);
    let steps = (0..len).map(|_| random_step(rng, &ids, &vals, required)).collect();
    let trace = ConfigurationTrace::new(steps).expect("nonempty");
    let j = interpretation(&spec, &ids, &vals[0]);
    World { alg, spec, j, ids, trace }
}

pub fn interpretation(spec: &InterfaceSpec, ids: &[(String, String)], local: &Value) -> SpecInterpretation {
    let mut j = SpecInterpretation::new(ids.iter().map(|(c, i)| {
        let ifc = spec.interface(i).expect("declared interface");
        InterfaceInterpretation::identity(i, ifc, snapshot(c, local, BTreeSet::new(), BTreeSet::new()))
    }));
    j.declare_interfaces(spec.interfaces.keys());
    j
}

// Formulas over one interface `I0`, free variables `v`, `w`, `u`.

pub const FREE: [&str; 3] = ["v", "w", "u"];

fn var() -> impl Strategy<Value = &'static str> {
    prop::sample::select(FREE.to_vec())
}

fn constant() -> impl Strategy<Value = Term> {
    prop::sample::select(CONSTANTS.to_vec()).prop_map(|c| Term::app(c, vec![]))
}

pub fn state_atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        var().prop_map(|v| Formula::Active(v.into())),
        (constant(), var(), prop::sample::select(vec!["i", "o"]))
            .prop_map(|(c, v, p)| Formula::Member(c, Term::port_of(v, p))),
        (var(), var()).prop_map(|(a, b)| Formula::Conn(PortRef::new(a, "i"), PortRef::new(b, "o"))),
        (constant(), constant()).prop_map(|(a, b)| Formula::Eq(a, b)),
        any::<bool>().prop_map(Formula::Bool),
    ]
}

fn connective() -> impl Strategy<Value = Connective> {
    prop::sample::select(vec![Connective::And, Connective::Or, Connective::Implies, Connective::Iff])
}

fn quantifier() -> impl Strategy<Value = Quantifier> {
    prop::sample::select(vec![Quantifier::Forall, Quantifier::Exists])
}

pub fn state_formula() -> impl Strategy<Value = Formula> {
    state_atom().prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (connective(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Formula::binary(c, a, b)),
            (quantifier(), var(), inner).prop_map(|(q, v, b)| Formula::Quant(
                q,
                Binder::interface(v, "I0"),
                Box::new(b)
            )),
        ]
    })
}

/// Temporal formulas of nesting depth at most `depth`, not necessarily canonical.
pub fn trace_formula(depth: u32) -> impl Strategy<Value = TraceFormula> {
    state_formula().prop_map(TraceFormula::State).prop_recursive(depth, 24, 2, |inner| {
        let b = |f: TraceFormula| Box::new(f);
        prop_oneof![
            inner.clone().prop_map(move |f| TraceFormula::Not(b(f))),
            inner.clone().prop_map(move |f| TraceFormula::Next(b(f))),
            inner.clone().prop_map(move |f| TraceFormula::Eventually(b(f))),
            inner.clone().prop_map(move |f| TraceFormula::Globally(b(f))),
            (connective(), inner.clone(), inner.clone()).prop_map(move |(c, x, y)| TraceFormula::Binary(c, b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| TraceFormula::Until(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| TraceFormula::WeakUntil(b(x), b(y))),
            (quantifier(), var(), inner).prop_map(move |(q, v, f)| TraceFormula::Quant(
                q,
                Binder::interface(v, "I0"),
                b(f)
            )),
        ]
    })
}

/// Every component of `I0` bound to each free variable, one environment per choice.
pub fn environments(w: &World) -> Vec<Env> {
    let ids = w.ids_of("I0");
    let mut out = Vec::new();
    for a in &ids {
        for b in &ids {
            for c in &ids {
                out.push(Env::from_bindings(
                    FREE.iter().zip([a, b, c]).map(|(v, id)| (v.to_string(), Binding::Component((**id).into()))),
                ));
            }
        }
    }
    out
}

// Reference temporal evaluator: the expansion laws
//   F f = f | X F f,  G f = f & X G f,  f U g = g | (f & X (f U g)),
// applied literally, with the step after the last one read as false (closed)
// or unknown (open). `None` is unknown; connectives are Kleene's.

fn k_not(x: Option<bool>) -> Option<bool> {
    x.map(|b| !b)
}

fn k_and(x: Option<bool>, y: Option<bool>) -> Option<bool> {
    match (x, y) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn k_or(x: Option<bool>, y: Option<bool>) -> Option<bool> {
    k_not(k_and(k_not(x), k_not(y)))
}

fn k_bin(c: Connective, x: Option<bool>, y: Option<bool>) -> Option<bool> {
    match c {
        Connective::And => k_and(x, y),
        Connective::Or => k_or(x, y),
        Connective::Implies => k_or(k_not(x), y),
        Connective::Iff => k_and(k_or(k_not(x), y), k_or(k_not(y), x)),
    }
}

pub struct Expansion<'a> {
    pub alg: &'a Algebra,
    pub j: &'a SpecInterpretation,
    pub steps: &'a [ArchConfiguration],
    pub mode: Mode,
}

impl Expansion<'_> {
    fn beyond(&self, closed: bool) -> Option<bool> {
        match self.mode {
            Mode::Closed => Some(closed),
            Mode::Open => None,
        }
    }

    fn next(&self, f: &TraceFormula, i: usize, env: &Env, closed_end: bool) -> Option<bool> {
        if i + 1 < self.steps.len() {
            self.eval(f, i + 1, env)
        } else {
            self.beyond(closed_end)
        }
    }

    pub fn eval(&self, f: &TraceFormula, i: usize, env: &Env) -> Option<bool> {
        match f {
            TraceFormula::State(s) => {
                Some(config_holds(self.alg, self.j, env, &self.steps[i], s).expect("state formula"))
            }
            TraceFormula::Not(g) => k_not(self.eval(g, i, env)),
            TraceFormula::Binary(c, a, b) => k_bin(*c, self.eval(a, i, env), self.eval(b, i, env)),
            TraceFormula::Next(g) => self.next(g, i, env, false),
            TraceFormula::Eventually(g) => k_or(self.eval(g, i, env), self.next(f, i, env, false)),
            TraceFormula::Globally(g) => k_and(self.eval(g, i, env), self.next(f, i, env, true)),
            TraceFormula::Until(a, b) => {
                k_or(self.eval(b, i, env), k_and(self.eval(a, i, env), self.next(f, i, env, false)))
            }
            TraceFormula::WeakUntil(a, b) => {
                k_or(self.eval(b, i, env), k_and(self.eval(a, i, env), self.next(f, i, env, true)))
            }
            TraceFormula::Quant(q, binder, body) => {
                let Domain::Interface(iface) = &binder.domain else {
                    panic!("reference evaluator quantifies over components only")
                };
                let ids = self.j.components(iface).map(|c| c.to_vec()).unwrap_or_default();
                let mut acc = Some(*q == Quantifier::Forall);
                for id in ids {
                    let mut e = env.clone();
                    e.push(&binder.var, Binding::Component(id));
                    let x = self.eval(body, i, &e);
                    acc = match q {
                        Quantifier::Forall => k_and(acc, x),
                        Quantifier::Exists => k_or(acc, x),
                    };
                }
                acc
            }
        }
    }
}

// Healthy universes.

/// Up to `max_snaps` snapshots over ids with fixed port layouts (at most
/// `max_ports` ports each) and fixed local values.
pub fn healthy_universe<R: Rng>(rng: &mut R, max_snaps: usize, max_ports: usize) -> Vec<ComponentSnapshot> {
    let vals: Vec<Value> = ["x", "y", "z"].iter().map(|s| Value::atom(s)).collect();
    let n_ids = rng.gen_range(1..=4);
    let mut layouts = Vec::new();
    for c in 0..n_ids {
        let n_ports = rng.gen_range(0..=max_ports);
        let mut kinds: [BTreeSet<String>; 3] = Default::default();
        for p in 0..n_ports {
            kinds[rng.gen_range(0..3)].insert(format!("p{p}"));
        }
        let locals: BTreeMap<String, BTreeSet<Value>> =
            kinds[0].iter().map(|p| (p.clone(), subset(rng, &vals))).collect();
        layouts.push((format!("c{c}"), kinds, locals));
    }
    let n = rng.gen_range(0..=max_snaps);
    let mut out = Vec::new();
    for _ in 0..n {
        let (id, kinds, locals) = layouts.choose(rng).expect("ids");
        let mut valuation: BTreeMap<String, archtrace_core::value::MessageSet> =
            locals.iter().map(|(p, v)| (p.clone(), Arc::new(v.clone()))).collect();
        for p in kinds[1].iter().chain(&kinds[2]) {
            valuation.insert(p.clone(), Arc::new(subset(rng, &vals)));
        }
        let s = ComponentSnapshot::new(id, kinds[0].clone(), kinds[1].clone(), kinds[2].clone(), valuation)
            .expect("snapshot");
        out.push(s);
    }
    out
}

// Relations.

/// Relation `r` on a carrier `e0..e{n-1}` of sort `S`.
pub fn relation_algebra(n: usize, rel: &BTreeSet<(usize, usize)>) -> Algebra {
    let mut sig = Signature::default();
    sig.sorts.insert("S".into());
    sig.predicates.insert("r".into(), vec![Sort::named("S"), Sort::named("S")]);
    let e = |i: usize| Value::atom(&format!("e{i}"));
    let carriers = BTreeMap::from([("S".to_string(), (0..n).map(e).collect())]);
    let tuples = rel.iter().map(|&(a, b)| vec![e(a), e(b)]).collect();
    Algebra::new(sig, carriers, BTreeMap::new(), BTreeMap::from([("r".to_string(), tuples)])).expect("relation algebra")
}

/// Well-founded iff no chain `x0 r x1 r .. r xn` of `n` steps exists: any such
/// chain over `n` elements repeats one, and a repeat gives an infinite chain.
pub fn well_founded_by_chains(n: usize, rel: &BTreeSet<(usize, usize)>) -> bool {
    let mut ends: BTreeSet<usize> = (0..n).collect();
    for _ in 0..n {
        ends = rel.iter().filter(|(a, _)| ends.contains(a)).map(|&(_, b)| b).collect();
    }
    ends.is_empty()
}

/// Relation numbered `bits` over `n` elements, one bit per ordered pair.
pub fn relation_from_bits(n: usize, bits: u64) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if bits >> (a * n + b) & 1 == 1 {
                out.insert((a, b));
            }
        }
    }
    out
}

// Annotation conditions checked directly.

fn active_of<'a>(w: &'a World, k: &'a ArchConfiguration, iface: &str) -> Vec<&'a str> {
    k.active().iter().map(|s| s.id()).filter(|id| w.j.interface_of(id) == Some(iface)).collect()
}

pub fn minmax_direct(w: &World, ann: &MinMaxAnnotation) -> bool {
    w.trace.steps().iter().all(|k| {
        ann.min.iter().all(|(i, &lo)| active_of(w, k, i).len() as u32 >= lo)
            && ann.max.iter().all(|(i, &hi)| active_of(w, k, i).len() as u32 <= hi)
    })
}

/// Some choice of components for the variables of each interface covers
/// every component of that interface that is ever active.
pub fn rigid_direct(w: &World, ann: &RigidAnnotation) -> bool {
    ann.vars.iter().all(|(i, vars)| {
        let ever: BTreeSet<&str> = w.trace.steps().iter().flat_map(|k| active_of(w, k, i)).collect();
        let dom = w.ids_of(i);
        let mut choice = vec![0usize; vars.len()];
        if dom.is_empty() {
            return false;
        }
        loop {
            let image: BTreeSet<&str> = choice.iter().map(|&c| dom[c]).collect();
            if ever.is_subset(&image) {
                return true;
            }
            let mut pos = 0;
            loop {
                if pos == choice.len() {
                    return false;
                }
                choice[pos] += 1;
                if choice[pos] < dom.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    })
}

pub fn random_minmax<R: Rng>(rng: &mut R, n_ifaces: usize) -> MinMaxAnnotation {
    let mut ann = MinMaxAnnotation::default();
    while ann.is_empty() {
        for k in 0..n_ifaces {
            let i = format!("I{k}");
            let lo = rng.gen_range(0..=2);
            if rng.gen_bool(0.5) {
                ann.min.insert(i.clone(), lo);
            }
            if rng.gen_bool(0.5) {
                ann.max.insert(i, lo + rng.gen_range(0..=2));
            }
        }
    }
    ann
}

pub fn random_rigid<R: Rng>(rng: &mut R, n_ifaces: usize) -> RigidAnnotation {
    let mut ann = RigidAnnotation::default();
    let mut next = 0;
    while ann.is_empty() {
        for k in 0..n_ifaces {
            if rng.gen_bool(0.6) {
                let vars = (0..rng.gen_range(1..=2))
                    .map(|_| {
                        next += 1;
                        format!("r{next}")
                    })
                    .collect();
                ann.vars.insert(format!("I{k}"), vars);
            }
        }
    }
    ann
}

pub fn random_required<R: Rng>(rng: &mut R, n_ifaces: usize) -> RequiredConnAnnotation {
    let mut ann = RequiredConnAnnotation::default();
    while ann.is_empty() {
        for a in 0..n_ifaces {
            for b in 0..n_ifaces {
                if rng.gen_bool(0.4) {
                    ann.relation.insert((PortRef::new(&format!("I{a}"), "i"), PortRef::new(&format!("I{b}"), "o")));
                }
            }
        }
    }
    ann
}
