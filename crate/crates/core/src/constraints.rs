//! Configuration assertions, trace assertions and their verdicts on finite traces.
//!
//! Trace formulas are evaluated bottom-up: every subformula gets a vector of
//! three-valued results over all trace indices, computed once per assignment
//! of the variables free in it. Closed mode treats the trace as complete;
//! open mode treats it as a prefix, so obligations pending at the end are
//! inconclusive instead of failed.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::Algebra;
use crate::eval::{Assignments, Binding, Env, EvalError, Evaluator, World};
use crate::interface::SpecInterpretation;
use crate::model::{ArchConfiguration, ConfigurationTrace};
use crate::syntax::{Binder, Connective, Formula, Quantifier, Term, TraceFormula};
use crate::value::{MessageSet, Value};

/// Default bound on rigid assignments enumerated per assertion.
pub const DEFAULT_MAX_ASSIGNMENTS: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{count} rigid assignments exceed the bound of {bound}")]
    Capacity { count: u128, bound: u128 },
    #[error("index {index} is outside a trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("variable {0} is free but not declared rigid or flexible")]
    FreeVariable(String),
}

/// How the end of the trace is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The trace is a prefix of a longer execution.
    Open,
    /// The trace is the whole execution.
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictValue {
    Satisfied,
    Violated,
    Inconclusive,
}

impl fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictValue::Satisfied => "satisfied",
            VerdictValue::Violated => "violated",
            VerdictValue::Inconclusive => "inconclusive",
        };
        write!(f, "{s}")
    }
}

/// Outcome of checking a formula, with the deciding step when there is one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub value: VerdictValue,
    pub witness: Option<usize>,
    /// Rigid assignment the verdict was decided under.
    pub assignment: Vec<(String, String)>,
    pub explanation: Option<String>,
}

impl Verdict {
    pub fn is_final(&self) -> bool {
        self.value != VerdictValue::Inconclusive
    }
}

/// Labelled trace assertion. Free rigid variables are closed universally by
/// [`check_trace_assertion`]; free flexible variables are closed
/// existentially at every step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceAssertion {
    pub label: String,
    pub formula: TraceFormula,
    pub rigid: Vec<Binder>,
    pub flexible: Vec<Binder>,
}

impl TraceAssertion {
    pub fn closed(label: &str, formula: TraceFormula) -> Self {
        TraceAssertion { label: label.to_string(), formula, rigid: vec![], flexible: vec![] }
    }

    /// Formula with each state part wrapped in `exists` for the flexible
    /// variables free in it.
    pub fn flexible_closure(&self) -> TraceFormula {
        close_flexible(&self.formula, &self.flexible)
    }
}

fn close_flexible(f: &TraceFormula, flex: &[Binder]) -> TraceFormula {
    let rec = |g: &TraceFormula| Box::new(close_flexible(g, flex));
    match f {
        TraceFormula::State(s) => {
            let free = s.free_vars();
            let mut out = s.clone();
            for b in flex.iter().rev() {
                if free.contains(&b.var) {
                    out = Formula::exists(b.clone(), out);
                }
            }
            TraceFormula::State(out)
        }
        TraceFormula::Not(g) => TraceFormula::Not(rec(g)),
        TraceFormula::Next(g) => TraceFormula::Next(rec(g)),
        TraceFormula::Eventually(g) => TraceFormula::Eventually(rec(g)),
        TraceFormula::Globally(g) => TraceFormula::Globally(rec(g)),
        TraceFormula::Binary(c, a, b) => TraceFormula::Binary(*c, rec(a), rec(b)),
        TraceFormula::Until(a, b) => TraceFormula::Until(rec(a), rec(b)),
        TraceFormula::WeakUntil(a, b) => TraceFormula::WeakUntil(rec(a), rec(b)),
        TraceFormula::Quant(q, b, body) => {
            let inner: Vec<Binder> = flex.iter().filter(|x| x.var != b.var).cloned().collect();
            TraceFormula::Quant(*q, b.clone(), Box::new(close_flexible(body, &inner)))
        }
    }
}

/// One configuration read through a specification interpretation.
pub struct ConfigWorld<'a> {
    pub interpretation: &'a SpecInterpretation,
    pub config: &'a ArchConfiguration,
}

impl ConfigWorld<'_> {
    fn concrete(&self, id: &str, port: &str) -> Result<&str, EvalError> {
        if self.interpretation.interface_of(id).is_none() {
            return Err(EvalError::Uninterpreted(id.to_string()));
        }
        self.interpretation
            .concrete_port(id, port)
            .ok_or_else(|| EvalError::UnknownPort { id: id.to_string(), port: port.to_string() })
    }
}

impl World for ConfigWorld<'_> {
    fn component_port(&self, id: &str, port: &str) -> Result<Option<&MessageSet>, EvalError> {
        let c = self.concrete(id, port)?;
        match self.config.snapshot(id) {
            None => Ok(None),
            Some(s) => {
                s.value(c).map(Some).ok_or_else(|| EvalError::UnknownPort { id: id.to_string(), port: c.to_string() })
            }
        }
    }

    fn is_active(&self, id: &str) -> Result<bool, EvalError> {
        Ok(self.config.is_active(id))
    }

    fn is_connected(&self, input: (&str, &str), output: (&str, &str)) -> Result<bool, EvalError> {
        let ip = self.concrete(input.0, input.1)?;
        let op = self.concrete(output.0, output.1)?;
        Ok(self.config.is_connected((input.0, ip), (output.0, op)))
    }

    fn components(&self, iface: &str) -> Result<&[std::sync::Arc<str>], EvalError> {
        self.interpretation.components(iface).ok_or_else(|| EvalError::UnknownInterface(iface.to_string()))
    }
}

/// Value of a configuration term; reading a port of an inactive component is an error.
pub fn eval_config_term(
    alg: &Algebra,
    j: &SpecInterpretation,
    asg: &Env,
    k: &ArchConfiguration,
    t: &Term,
) -> Result<Value, EvalError> {
    let world = ConfigWorld { interpretation: j, config: k };
    Evaluator::new(alg, &world).term_strict(t, &mut asg.clone())
}

/// Truth of a configuration assertion. Atoms that read an inactive
/// component's port are false.
pub fn config_holds(
    alg: &Algebra,
    j: &SpecInterpretation,
    asg: &Env,
    k: &ArchConfiguration,
    phi: &Formula,
) -> Result<bool, EvalError> {
    let world = ConfigWorld { interpretation: j, config: k };
    Evaluator::new(alg, &world).holds(phi, &mut asg.clone())
}

// Three-valued cells.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Truth {
    True,
    False,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    t: Truth,
    w: Option<usize>,
}

const UNKNOWN: Cell = Cell { t: Truth::Unknown, w: None };

fn neg(x: Cell) -> Cell {
    let t = match x.t {
        Truth::True => Truth::False,
        Truth::False => Truth::True,
        Truth::Unknown => Truth::Unknown,
    };
    Cell { t, w: x.w }
}

fn and(x: Cell, y: Cell) -> Cell {
    match (x.t, y.t) {
        (Truth::False, _) => x,
        (_, Truth::False) => y,
        (Truth::True, Truth::True) => y,
        _ => UNKNOWN,
    }
}

fn or(x: Cell, y: Cell) -> Cell {
    match (x.t, y.t) {
        (Truth::True, _) => x,
        (_, Truth::True) => y,
        (Truth::False, Truth::False) => y,
        _ => UNKNOWN,
    }
}

fn implies(x: Cell, y: Cell) -> Cell {
    match (x.t, y.t) {
        (Truth::False, _) => Cell { t: Truth::True, w: x.w },
        (_, Truth::True) => y,
        (Truth::True, Truth::False) => y,
        _ => UNKNOWN,
    }
}

fn iff(x: Cell, y: Cell) -> Cell {
    match (x.t, y.t) {
        (Truth::Unknown, _) | (_, Truth::Unknown) => UNKNOWN,
        (a, b) => Cell { t: if a == b { Truth::True } else { Truth::False }, w: y.w },
    }
}

fn combine(c: Connective, x: Cell, y: Cell) -> Cell {
    match c {
        Connective::And => and(x, y),
        Connective::Or => or(x, y),
        Connective::Implies => implies(x, y),
        Connective::Iff => iff(x, y),
    }
}

fn at(x: Cell, i: usize) -> Cell {
    Cell { t: x.t, w: Some(i) }
}

// Compiled formula.

#[derive(Debug)]
enum Kind {
    State(Formula),
    Not(usize),
    Bin(Connective, usize, usize),
    Next(usize),
    Eventually(usize),
    Globally(usize),
    Until(usize, usize),
    WeakUntil(usize, usize),
    Quant(Quantifier, Binder, usize),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    free: Vec<String>,
}

#[derive(Debug)]
struct Plan {
    nodes: Vec<Node>,
    root: usize,
}

impl Plan {
    fn compile(f: &TraceFormula) -> Plan {
        let mut nodes = Vec::new();
        let root = Self::add(&mut nodes, f);
        Plan { nodes, root }
    }

    fn add(nodes: &mut Vec<Node>, f: &TraceFormula) -> usize {
        let kind = match f {
            TraceFormula::State(s) => Kind::State(s.clone()),
            TraceFormula::Not(g) => Kind::Not(Self::add(nodes, g)),
            TraceFormula::Binary(c, a, b) => {
                let a = Self::add(nodes, a);
                Kind::Bin(*c, a, Self::add(nodes, b))
            }
            TraceFormula::Next(g) => Kind::Next(Self::add(nodes, g)),
            TraceFormula::Eventually(g) => Kind::Eventually(Self::add(nodes, g)),
            TraceFormula::Globally(g) => Kind::Globally(Self::add(nodes, g)),
            TraceFormula::Until(a, b) => {
                let a = Self::add(nodes, a);
                Kind::Until(a, Self::add(nodes, b))
            }
            TraceFormula::WeakUntil(a, b) => {
                let a = Self::add(nodes, a);
                Kind::WeakUntil(a, Self::add(nodes, b))
            }
            TraceFormula::Quant(q, b, body) => Kind::Quant(*q, b.clone(), Self::add(nodes, body)),
        };
        nodes.push(Node { kind, free: f.free_vars().into_iter().collect() });
        nodes.len() - 1
    }
}

type Vector = Rc<[Cell]>;

/// Evaluates a compiled formula over a sequence of configurations.
struct Engine<'a> {
    alg: &'a Algebra,
    j: &'a SpecInterpretation,
    steps: &'a [ArchConfiguration],
    mode: Mode,
    plan: &'a Plan,
    cache: HashMap<(usize, Vec<Binding>), Vector>,
    undefined: Option<String>,
}

impl<'a> Engine<'a> {
    fn new(
        alg: &'a Algebra,
        j: &'a SpecInterpretation,
        steps: &'a [ArchConfiguration],
        mode: Mode,
        plan: &'a Plan,
    ) -> Self {
        Engine { alg, j, steps, mode, plan, cache: HashMap::new(), undefined: None }
    }

    fn len(&self) -> usize {
        self.steps.len()
    }

    fn end_cell(&self, closed_truth: Truth) -> Cell {
        match self.mode {
            Mode::Closed => Cell { t: closed_truth, w: Some(self.len() - 1) },
            Mode::Open => UNKNOWN,
        }
    }

    fn key(&self, node: usize, env: &Env) -> Result<Vec<Binding>, EvalError> {
        self.plan.nodes[node]
            .free
            .iter()
            .map(|v| env.lookup(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone())))
            .collect()
    }

    fn domain(&self, b: &Binder) -> Result<Vec<Binding>, EvalError> {
        let world = ConfigWorld { interpretation: self.j, config: &self.steps[0] };
        Evaluator::new(self.alg, &world).domain(&b.domain)
    }

    fn eval(&mut self, node: usize, env: &mut Env) -> Result<Vector, EvalError> {
        let key = (node, self.key(node, env)?);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let n = self.len();
        let plan = self.plan;
        let out: Vec<Cell> = match &plan.nodes[node].kind {
            Kind::State(phi) => {
                let mut out = Vec::with_capacity(n);
                for (i, k) in self.steps.iter().enumerate() {
                    let world = ConfigWorld { interpretation: self.j, config: k };
                    let ev = Evaluator::new(self.alg, &world);
                    let b = ev.holds(phi, env)?;
                    if let Some(u) = ev.take_undefined() {
                        if self.undefined.is_none() {
                            self.undefined = Some(format!("step {i}: {u}"));
                        }
                    }
                    out.push(Cell { t: if b { Truth::True } else { Truth::False }, w: Some(i) });
                }
                out
            }
            Kind::Not(a) => self.eval(*a, env)?.iter().map(|&c| neg(c)).collect(),
            Kind::Bin(c, a, b) => {
                let x = self.eval(*a, env)?;
                let y = self.eval(*b, env)?;
                x.iter().zip(y.iter()).map(|(&p, &q)| combine(*c, p, q)).collect()
            }
            Kind::Next(a) => {
                let x = self.eval(*a, env)?;
                (0..n).map(|i| if i + 1 < n { x[i + 1] } else { self.end_cell(Truth::False) }).collect()
            }
            Kind::Eventually(a) => {
                let x = self.eval(*a, env)?;
                let mut out = vec![UNKNOWN; n];
                let mut next = self.end_cell(Truth::False);
                for i in (0..n).rev() {
                    next = or(at(x[i], i), next);
                    out[i] = next;
                }
                out
            }
            Kind::Globally(a) => {
                let x = self.eval(*a, env)?;
                let mut out = vec![UNKNOWN; n];
                let mut next = self.end_cell(Truth::True);
                for i in (0..n).rev() {
                    next = and(at(x[i], i), next);
                    out[i] = next;
                }
                out
            }
            Kind::Until(a, b) | Kind::WeakUntil(a, b) => {
                let weak = matches!(plan.nodes[node].kind, Kind::WeakUntil(..));
                let x = self.eval(*a, env)?;
                let y = self.eval(*b, env)?;
                let mut out = vec![UNKNOWN; n];
                let mut next = self.end_cell(if weak { Truth::True } else { Truth::False });
                for i in (0..n).rev() {
                    next = or(at(y[i], i), and(at(x[i], i), next));
                    out[i] = next;
                }
                out
            }
            Kind::Quant(q, binder, body) => {
                let dom = self.domain(binder)?;
                let unit = Cell { t: if *q == Quantifier::Forall { Truth::True } else { Truth::False }, w: None };
                let mut acc = vec![unit; n];
                env.push(&binder.var, Binding::Data(Value::atom("")));
                let slot = env.len() - 1;
                for v in dom {
                    env.set(slot, v);
                    let x = match self.eval(*body, env) {
                        Ok(x) => x,
                        Err(e) => {
                            env.pop();
                            return Err(e);
                        }
                    };
                    for i in 0..n {
                        acc[i] = match q {
                            Quantifier::Forall => and(acc[i], x[i]),
                            Quantifier::Exists => or(acc[i], x[i]),
                        };
                    }
                }
                env.pop();
                acc
            }
        };
        let out: Vector = out.into();
        self.cache.insert(key, out.clone());
        Ok(out)
    }

    /// Path to the subformula that decides a false result at index `i`.
    fn explain(&mut self, node: usize, env: &mut Env, i: usize, out: &mut Vec<String>) -> Result<(), EvalError> {
        let plan = self.plan;
        let n = self.len();
        match &plan.nodes[node].kind {
            Kind::State(phi) => out.push(format!("state formula `{phi}` fails at step {i}")),
            Kind::Not(a) => out.push(format!("negated subformula `{}` holds at step {i}", show(plan, *a))),
            Kind::Bin(c, a, b) => {
                let x = self.eval(*a, env)?[i];
                let y = self.eval(*b, env)?[i];
                match c {
                    Connective::And if x.t == Truth::False => {
                        out.push("left conjunct".into());
                        self.explain(*a, env, i, out)?;
                    }
                    Connective::And => {
                        out.push("right conjunct".into());
                        self.explain(*b, env, i, out)?;
                    }
                    Connective::Implies if y.t == Truth::False => {
                        out.push(format!("premise holds at step {i}, conclusion"));
                        self.explain(*b, env, i, out)?;
                    }
                    _ => out.push(format!("`{}` fails at step {i}", show(plan, node))),
                }
            }
            Kind::Next(a) => {
                if i + 1 < n {
                    out.push(format!("X at step {i}"));
                    self.explain(*a, env, i + 1, out)?;
                } else {
                    out.push(format!("X at step {i}: no next step"));
                }
            }
            Kind::Eventually(a) => out.push(format!("F: `{}` never holds from step {i} to the end", show(plan, *a))),
            Kind::Globally(a) => {
                let w = self.eval(node, env)?[i].w.unwrap_or(i);
                out.push(format!("G fails at step {w}"));
                self.explain(*a, env, w, out)?;
            }
            Kind::Until(a, b) | Kind::WeakUntil(a, b) => {
                let w = self.eval(node, env)?[i].w.unwrap_or(i);
                let x = self.eval(*a, env)?[w];
                if x.t == Truth::False {
                    out.push(format!("`{}` fails at step {w} before `{}` holds", show(plan, *a), show(plan, *b)));
                } else {
                    out.push(format!("`{}` never holds", show(plan, *b)));
                }
            }
            Kind::Quant(Quantifier::Forall, binder, body) => {
                let dom = self.domain(binder)?;
                env.push(&binder.var, Binding::Data(Value::atom("")));
                let slot = env.len() - 1;
                for v in dom {
                    env.set(slot, v.clone());
                    if self.eval(*body, env)?[i].t == Truth::False {
                        out.push(format!("{} = {v}", binder.var));
                        let r = self.explain(*body, env, i, out);
                        env.pop();
                        return r;
                    }
                }
                env.pop();
            }
            Kind::Quant(Quantifier::Exists, binder, _) => {
                out.push(format!("no {} satisfies the body at step {i}", binder.var))
            }
        }
        Ok(())
    }
}

fn show(plan: &Plan, node: usize) -> String {
    fn rebuild(plan: &Plan, node: usize) -> TraceFormula {
        let b = |x: usize| Box::new(rebuild(plan, x));
        match &plan.nodes[node].kind {
            Kind::State(s) => TraceFormula::State(s.clone()),
            Kind::Not(a) => TraceFormula::Not(b(*a)),
            Kind::Bin(c, x, y) => TraceFormula::Binary(*c, b(*x), b(*y)),
            Kind::Next(a) => TraceFormula::Next(b(*a)),
            Kind::Eventually(a) => TraceFormula::Eventually(b(*a)),
            Kind::Globally(a) => TraceFormula::Globally(b(*a)),
            Kind::Until(x, y) => TraceFormula::Until(b(*x), b(*y)),
            Kind::WeakUntil(x, y) => TraceFormula::WeakUntil(b(*x), b(*y)),
            Kind::Quant(q, bd, x) => TraceFormula::Quant(*q, bd.clone(), b(*x)),
        }
    }
    rebuild(plan, node).to_string()
}

fn to_verdict(c: Cell) -> (VerdictValue, Option<usize>) {
    match c.t {
        Truth::True => (VerdictValue::Satisfied, c.w),
        Truth::False => (VerdictValue::Violated, c.w),
        Truth::Unknown => (VerdictValue::Inconclusive, None),
    }
}

fn describe(env: &Env) -> Vec<(String, String)> {
    env.bindings().map(|(n, b)| (n.to_string(), b.to_string())).collect()
}

fn finish(engine: &mut Engine<'_>, env: &mut Env, n: usize, cell: Cell) -> Result<Verdict, EvalError> {
    let (value, witness) = to_verdict(cell);
    let mut explanation = None;
    if value == VerdictValue::Violated {
        let mut path = Vec::new();
        engine.explain(engine.plan.root, env, n, &mut path)?;
        let mut text = path.join(" > ");
        if let Some(u) = &engine.undefined {
            text.push_str(&format!(" (undefined read, {u})"));
        }
        explanation = Some(text);
    } else if value == VerdictValue::Inconclusive {
        explanation = Some("obligation still pending at the end of the observed prefix".into());
    }
    Ok(Verdict { value, witness, assignment: describe(env), explanation })
}

/// Verdict for a trace formula at index `n` under an assignment of its free variables.
pub fn trace_holds(
    alg: &Algebra,
    j: &SpecInterpretation,
    asg: &Env,
    trace: &ConfigurationTrace,
    n: usize,
    gamma: &TraceFormula,
    mode: Mode,
) -> Result<Verdict, CheckError> {
    if n >= trace.len() {
        return Err(CheckError::IndexOutOfRange { index: n, len: trace.len() });
    }
    let plan = Plan::compile(gamma);
    let mut engine = Engine::new(alg, j, trace.steps(), mode, &plan);
    let mut env = asg.clone();
    let cell = engine.eval(plan.root, &mut env)?[n];
    Ok(finish(&mut engine, &mut env, n, cell)?)
}

/// Rigid binders free in the assertion, in declaration order.
fn free_rigid(gamma: &TraceAssertion, formula: &TraceFormula) -> Result<Vec<Binder>, CheckError> {
    let free = formula.free_vars();
    for v in &free {
        if !gamma.rigid.iter().any(|b| &b.var == v) {
            return Err(CheckError::FreeVariable(v.clone()));
        }
    }
    Ok(gamma.rigid.iter().filter(|b| free.contains(&b.var)).cloned().collect())
}

fn check_steps(
    alg: &Algebra,
    j: &SpecInterpretation,
    steps: &[ArchConfiguration],
    gamma: &TraceAssertion,
    mode: Mode,
    max_assignments: u128,
) -> Result<Verdict, CheckError> {
    let formula = gamma.flexible_closure();
    let rigid = free_rigid(gamma, &formula)?;
    let plan = Plan::compile(&formula);
    let mut engine = Engine::new(alg, j, steps, mode, &plan);
    let domains: Vec<Vec<Binding>> = rigid.iter().map(|b| engine.domain(b)).collect::<Result<_, _>>()?;
    let count = Assignments::count(&domains);
    if count > max_assignments {
        return Err(CheckError::Capacity { count, bound: max_assignments });
    }
    let mut env = Env::default();
    for b in &rigid {
        env.push(&b.var, Binding::Data(Value::atom("")));
    }
    let mut first: Option<Verdict> = None;
    let mut pending: Option<Verdict> = None;
    let mut it = Assignments::new(&domains);
    while let Some(choice) = it.next_choice() {
        for (i, b) in choice.into_iter().enumerate() {
            env.set(i, b);
        }
        engine.undefined = None;
        let cell = engine.eval(plan.root, &mut env)?[0];
        match cell.t {
            Truth::False => return Ok(finish(&mut engine, &mut env, 0, cell)?),
            Truth::Unknown if pending.is_none() => {
                pending = Some(finish(&mut engine, &mut env, 0, cell)?);
            }
            Truth::True if first.is_none() => {
                first = Some(finish(&mut engine, &mut env, 0, cell)?);
            }
            _ => {}
        }
    }
    Ok(pending.or(first).unwrap_or(Verdict {
        value: VerdictValue::Satisfied,
        witness: None,
        assignment: vec![],
        explanation: Some("no rigid assignment exists".into()),
    }))
}

/// Verdict at index 0, conjoined over all rigid assignments: any violation
/// wins, then any inconclusive result.
pub fn check_trace_assertion(
    alg: &Algebra,
    j: &SpecInterpretation,
    trace: &ConfigurationTrace,
    gamma: &TraceAssertion,
    mode: Mode,
    max_assignments: u128,
) -> Result<Verdict, CheckError> {
    check_steps(alg, j, trace.steps(), gamma, mode, max_assignments)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonitorError {
    #[error("no configuration observed yet")]
    EmptyPrefix,
    #[error("monitored formulas must have no free rigid variables; found {0}")]
    FreeRigid(String),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Incremental open-mode monitor. Once a final verdict is reached it never changes.
pub struct Monitor<'a> {
    alg: &'a Algebra,
    j: &'a SpecInterpretation,
    assertion: TraceAssertion,
    prefix: Vec<ArchConfiguration>,
    decided: Option<Verdict>,
    last: Option<Verdict>,
}

impl<'a> Monitor<'a> {
    pub fn new(alg: &'a Algebra, j: &'a SpecInterpretation, assertion: TraceAssertion) -> Result<Self, MonitorError> {
        let free: Vec<String> = assertion.flexible_closure().free_vars().into_iter().collect();
        if !free.is_empty() {
            return Err(MonitorError::FreeRigid(free.join(", ")));
        }
        Ok(Monitor { alg, j, assertion, prefix: Vec::new(), decided: None, last: None })
    }

    /// Appends a configuration and returns the verdict on the prefix so far.
    pub fn step(&mut self, k: ArchConfiguration) -> Result<Verdict, MonitorError> {
        self.prefix.push(k);
        if let Some(v) = &self.decided {
            self.last = Some(v.clone());
            return Ok(v.clone());
        }
        let v = check_steps(self.alg, self.j, &self.prefix, &self.assertion, Mode::Open, DEFAULT_MAX_ASSIGNMENTS)?;
        if v.is_final() {
            self.decided = Some(v.clone());
        }
        self.last = Some(v.clone());
        Ok(v)
    }

    pub fn verdict(&self) -> Result<Verdict, MonitorError> {
        self.last.clone().ok_or(MonitorError::EmptyPrefix)
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }
}

/// Component ids bound per rigid assignment, for reporting.
pub fn assignment_map(v: &Verdict) -> BTreeMap<String, String> {
    v.assignment.iter().cloned().collect()
}
