//! Evaluation of terms and state formulas.
//!
//! One evaluator serves all levels. What a port read or an `active(v)` means is
//! supplied by a [`World`]: the algebra alone, one interpreted snapshot, or one
//! configuration under a specification interpretation.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError};
use crate::syntax::{Binder, Connective, Domain, Formula, PortRef, Quantifier, Term};
use crate::value::{MessageSet, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("variable {0} is bound to a component where a value is expected")]
    NotData(String),
    #[error("variable {0} is bound to a value where a component is expected")]
    NotComponent(String),
    #[error("function {name} is not defined on ({args})")]
    NotInDomain { name: String, args: String },
    #[error("{0} is not a set")]
    NotASet(String),
    #[error("{0} cannot be evaluated here")]
    Unsupported(&'static str),
    #[error("unknown interface {0}")]
    UnknownInterface(String),
    #[error("component {id} has no interface port {port}")]
    UnknownPort { id: String, port: String },
    #[error("component {0} is not interpreted")]
    Uninterpreted(String),
    #[error("undefined read: {0}")]
    UndefinedRead(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Value of a variable: a carrier element or a component id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Binding {
    Data(Value),
    Component(Arc<str>),
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Data(v) => write!(f, "{v}"),
            Binding::Component(c) => write!(f, "{c}"),
        }
    }
}

/// Variable environment; inner bindings shadow outer ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    frames: Vec<(String, Binding)>,
}

impl Env {
    pub fn from_data(asg: &BTreeMap<String, Value>) -> Self {
        Env { frames: asg.iter().map(|(k, v)| (k.clone(), Binding::Data(v.clone()))).collect() }
    }

    pub fn from_bindings(asg: impl IntoIterator<Item = (String, Binding)>) -> Self {
        Env { frames: asg.into_iter().collect() }
    }

    pub fn push(&mut self, name: &str, b: Binding) {
        self.frames.push((name.to_string(), b));
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }

    pub fn set(&mut self, index: usize, b: Binding) {
        self.frames[index].1 = b;
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<&Binding> {
        self.frames.iter().rev().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&str, &Binding)> {
        self.frames.iter().map(|(n, b)| (n.as_str(), b))
    }
}

/// Odometer over the product of finite domains.
pub struct Assignments<'d> {
    domains: &'d [Vec<Binding>],
    index: Vec<usize>,
    done: bool,
}

impl<'d> Assignments<'d> {
    pub fn new(domains: &'d [Vec<Binding>]) -> Self {
        let done = domains.iter().any(|d| d.is_empty());
        Assignments { domains, index: vec![0; domains.len()], done }
    }

    /// Number of assignments, saturating.
    pub fn count(domains: &[Vec<Binding>]) -> u128 {
        domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    pub fn next_choice(&mut self) -> Option<Vec<Binding>> {
        if self.done {
            return None;
        }
        let out = self.index.iter().zip(self.domains).map(|(&i, d)| d[i].clone()).collect();
        let mut k = self.index.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.index[k] += 1;
            if self.index[k] < self.domains[k].len() {
                break;
            }
            self.index[k] = 0;
        }
        Some(out)
    }
}

/// Source of port values and configuration facts.
///
/// Port names are interface port ids. `Ok(None)` from a port read means the
/// component is not active, which makes the enclosing atom false.
pub trait World {
    fn own_port(&self, _port: &str) -> Result<Option<&MessageSet>, EvalError> {
        Err(EvalError::Unsupported("port term"))
    }

    fn component_port(&self, _id: &str, _port: &str) -> Result<Option<&MessageSet>, EvalError> {
        Err(EvalError::Unsupported("component port term"))
    }

    fn is_active(&self, _id: &str) -> Result<bool, EvalError> {
        Err(EvalError::Unsupported("active(v)"))
    }

    fn is_connected(&self, _input: (&str, &str), _output: (&str, &str)) -> Result<bool, EvalError> {
        Err(EvalError::Unsupported("conn"))
    }

    fn components(&self, _iface: &str) -> Result<&[Arc<str>], EvalError> {
        Err(EvalError::Unsupported("component quantifier"))
    }

    fn active_count(&self, iface: &str) -> Result<usize, EvalError> {
        let mut n = 0;
        for c in self.components(iface)? {
            if self.is_active(c)? {
                n += 1;
            }
        }
        Ok(n)
    }
}

/// World with no ports and no configuration: datatype assertions only.
pub struct PureWorld;

impl World for PureWorld {}

enum Fail {
    Undefined(String),
    Error(EvalError),
}

impl From<EvalError> for Fail {
    fn from(e: EvalError) -> Self {
        Fail::Error(e)
    }
}

enum Operand {
    Value(Value),
    Component(Arc<str>),
}

/// Evaluator over an algebra and a world. Records the first undefined read.
pub struct Evaluator<'a, W: World + ?Sized> {
    algebra: &'a Algebra,
    world: &'a W,
    undefined: RefCell<Option<String>>,
}

impl<'a, W: World + ?Sized> Evaluator<'a, W> {
    pub fn new(algebra: &'a Algebra, world: &'a W) -> Self {
        Evaluator { algebra, world, undefined: RefCell::new(None) }
    }

    pub fn algebra(&self) -> &'a Algebra {
        self.algebra
    }

    pub fn world(&self) -> &'a W {
        self.world
    }

    /// First undefined read since construction or the last `take_undefined`.
    pub fn take_undefined(&self) -> Option<String> {
        self.undefined.borrow_mut().take()
    }

    fn note_undefined(&self, what: String) {
        let mut slot = self.undefined.borrow_mut();
        if slot.is_none() {
            *slot = Some(what);
        }
    }

    /// Domains of the binders, in order.
    pub fn domains(&self, binders: &[Binder]) -> Result<Vec<Vec<Binding>>, EvalError> {
        binders.iter().map(|b| self.domain(&b.domain)).collect()
    }

    pub fn domain(&self, d: &Domain) -> Result<Vec<Binding>, EvalError> {
        Ok(match d {
            Domain::Sort(s) => self.algebra.carrier(s)?.iter().cloned().map(Binding::Data).collect(),
            Domain::Interface(i) => self.world.components(i)?.iter().cloned().map(Binding::Component).collect(),
            Domain::Declared => return Err(EvalError::Unsupported("quantifier without a domain")),
        })
    }

    /// Term value; an undefined read is an error here.
    pub fn term_strict(&self, t: &Term, env: &mut Env) -> Result<Value, EvalError> {
        match self.term(t, env) {
            Ok(v) => Ok(v),
            Err(Fail::Undefined(w)) => Err(EvalError::UndefinedRead(w)),
            Err(Fail::Error(e)) => Err(e),
        }
    }

    fn component(&self, var: &str, env: &Env) -> Result<Arc<str>, EvalError> {
        match env.lookup(var) {
            Some(Binding::Component(c)) => Ok(c.clone()),
            Some(Binding::Data(_)) => Err(EvalError::NotComponent(var.to_string())),
            None => Err(EvalError::Unbound(var.to_string())),
        }
    }

    fn term(&self, t: &Term, env: &mut Env) -> Result<Value, Fail> {
        match t {
            Term::Var(x) => match env.lookup(x) {
                Some(Binding::Data(v)) => Ok(v.clone()),
                Some(Binding::Component(_)) => Err(EvalError::NotData(x.clone()).into()),
                None => Err(EvalError::Unbound(x.clone()).into()),
            },
            Term::App(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.term(a, env)?);
                }
                match self.algebra.apply(f, &vals) {
                    Some(v) => Ok(v.clone()),
                    None => Err(EvalError::NotInDomain {
                        name: f.clone(),
                        args: vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
                    }
                    .into()),
                }
            }
            Term::Pair(a, b) => {
                let x = self.term(a, env)?;
                let y = self.term(b, env)?;
                Ok(Value::pair(x, y))
            }
            Term::Set(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for a in items {
                    vals.push(self.term(a, env)?);
                }
                Ok(Value::set(vals))
            }
            Term::Port(p) => match self.world.own_port(p)? {
                Some(s) => Ok(Value::Set(s.clone())),
                None => Err(Fail::Undefined(format!("port {p}"))),
            },
            Term::PortOf(v, p) => {
                let id = self.component(v, env)?;
                match self.world.component_port(&id, p)? {
                    Some(s) => Ok(Value::Set(s.clone())),
                    None => Err(Fail::Undefined(format!("{v}.{p} with {v} = {id} inactive"))),
                }
            }
        }
    }

    fn operand(&self, t: &Term, env: &mut Env) -> Result<Operand, Fail> {
        if let Term::Var(x) = t {
            if let Some(Binding::Component(c)) = env.lookup(x) {
                return Ok(Operand::Component(c.clone()));
            }
        }
        Ok(Operand::Value(self.term(t, env)?))
    }

    fn atom(&self, r: Result<bool, Fail>) -> Result<bool, EvalError> {
        match r {
            Ok(b) => Ok(b),
            Err(Fail::Undefined(w)) => {
                self.note_undefined(w);
                Ok(false)
            }
            Err(Fail::Error(e)) => Err(e),
        }
    }

    /// Truth of a state formula under `env`.
    pub fn holds(&self, f: &Formula, env: &mut Env) -> Result<bool, EvalError> {
        match f {
            Formula::Bool(b) => Ok(*b),
            Formula::Pred(p, args) => {
                let r = (|| {
                    let mut vals = Vec::with_capacity(args.len());
                    for a in args {
                        vals.push(self.term(a, env)?);
                    }
                    Ok(self.algebra.holds(p, &vals))
                })();
                self.atom(r)
            }
            Formula::Eq(a, b) => {
                let r = (|| {
                    let x = self.operand(a, env)?;
                    let y = self.operand(b, env)?;
                    Ok(match (x, y) {
                        (Operand::Value(x), Operand::Value(y)) => x == y,
                        (Operand::Component(x), Operand::Component(y)) => x == y,
                        _ => false,
                    })
                })();
                self.atom(r)
            }
            Formula::Member(e, s) => {
                let r = (|| {
                    let x = self.term(e, env)?;
                    match self.term(s, env)? {
                        Value::Set(items) => Ok(items.contains(&x)),
                        other => Err(EvalError::NotASet(other.to_string()).into()),
                    }
                })();
                self.atom(r)
            }
            Formula::Not(g) => Ok(!self.holds(g, env)?),
            Formula::Binary(c, a, b) => {
                let x = self.holds(a, env)?;
                Ok(match c {
                    Connective::And => x && self.holds(b, env)?,
                    Connective::Or => x || self.holds(b, env)?,
                    Connective::Implies => !x || self.holds(b, env)?,
                    Connective::Iff => x == self.holds(b, env)?,
                })
            }
            Formula::Quant(q, binder, body) => {
                let dom = self.domain(&binder.domain)?;
                env.push(&binder.var, Binding::Data(Value::atom("")));
                let slot = env.len() - 1;
                let want = matches!(q, Quantifier::Exists);
                let mut result = !want;
                for b in dom {
                    env.set(slot, b);
                    match self.holds(body, env) {
                        Ok(v) if v == want => {
                            result = want;
                            break;
                        }
                        Ok(_) => {}
                        Err(e) => {
                            env.pop();
                            return Err(e);
                        }
                    }
                }
                env.pop();
                Ok(result)
            }
            Formula::WellFounded(r) => Ok(self.algebra.check_well_founded(r)?),
            Formula::Active(v) => {
                let id = self.component(v, env)?;
                self.world.is_active(&id)
            }
            Formula::Conn(input, output) => {
                let a = self.component(&input.owner, env)?;
                let b = self.component(&output.owner, env)?;
                self.world.is_connected((&a, &input.port), (&b, &output.port))
            }
            Formula::IrConn(input, output) => self.irconn(input, output),
            Formula::Min(i, n) => Ok(self.world.active_count(i)? >= *n as usize),
            Formula::Max(i, n) => Ok(self.world.active_count(i)? <= *n as usize),
            Formula::MinMax(i, n, m) => {
                let c = self.world.active_count(i)?;
                Ok(c >= *n as usize && c <= *m as usize)
            }
        }
    }

    fn irconn(&self, input: &PortRef, output: &PortRef) -> Result<bool, EvalError> {
        for a in self.world.components(&input.owner)? {
            if !self.world.is_active(a)? {
                continue;
            }
            for b in self.world.components(&output.owner)? {
                if !self.world.is_active(b)? {
                    continue;
                }
                if !self.world.is_connected((a, &input.port), (b, &output.port))? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
