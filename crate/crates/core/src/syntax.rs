//! Abstract syntax shared by datatype, interface, configuration and trace
//! assertions, with the canonical ASCII printer.
//!
//! One term and one state-formula type serve every level; each level accepts a
//! subset of the constructors (see [`crate::typing`]). Trace formulas embed
//! state formulas through [`TraceFormula::State`], and the canonical form keeps
//! every maximal temporal-free subformula inside a single `State` node.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::value::Sort;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    Var(String),
    /// Function application; nullary applications are constants.
    App(String, Vec<Term>),
    Pair(Box<Term>, Box<Term>),
    Set(Vec<Term>),
    /// Port of the interpreted component (interface assertions).
    Port(String),
    /// `v.p`: port `p` of the component bound to `v`.
    PortOf(String, String),
}

impl Term {
    pub fn var(n: &str) -> Self {
        Term::Var(n.to_string())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Self {
        Term::App(f.to_string(), args)
    }

    pub fn pair(a: Term, b: Term) -> Self {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn port_of(v: &str, p: &str) -> Self {
        Term::PortOf(v.to_string(), p.to_string())
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) | Term::Set(args) => {
                for a in args {
                    a.free_vars_into(out);
                }
            }
            Term::Pair(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Term::Port(_) => {}
            Term::PortOf(v, _) => {
                out.insert(v.clone());
            }
        }
    }

    pub fn mentions_ports(&self) -> bool {
        match self {
            Term::Port(_) | Term::PortOf(..) => true,
            Term::Var(_) => false,
            Term::App(_, args) | Term::Set(args) => args.iter().any(Term::mentions_ports),
            Term::Pair(a, b) => a.mentions_ports() || b.mentions_ports(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Connective {
    And,
    Or,
    Implies,
    Iff,
}

impl Connective {
    fn symbol(self) -> &'static str {
        match self {
            Connective::And => "&",
            Connective::Or => "|",
            Connective::Implies => "->",
            Connective::Iff => "<->",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Connective::Iff => 1,
            Connective::Implies => 2,
            Connective::Or => 3,
            Connective::And => 4,
        }
    }

    fn right_assoc(self) -> bool {
        matches!(self, Connective::Implies)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// Range of a quantified variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Domain {
    Sort(Sort),
    /// Component ids interpreted for an interface.
    Interface(String),
    /// Taken from the variable declarations in scope; replaced during resolution.
    Declared,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Sort(s) => write!(f, "{s}"),
            Domain::Interface(i) => write!(f, "{i}"),
            Domain::Declared => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Binder {
    pub var: String,
    pub domain: Domain,
}

impl Binder {
    pub fn sort(var: &str, sort: Sort) -> Self {
        Binder { var: var.to_string(), domain: Domain::Sort(sort) }
    }

    pub fn interface(var: &str, iface: &str) -> Self {
        Binder { var: var.to_string(), domain: Domain::Interface(iface.to_string()) }
    }
}

/// `owner.port`; the owner is a component variable or an interface id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PortRef {
    pub owner: String,
    pub port: String,
}

impl PortRef {
    pub fn new(owner: &str, port: &str) -> Self {
        PortRef { owner: owner.to_string(), port: port.to_string() }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.port)
    }
}

/// State formula: evaluated against one configuration (or one snapshot, or
/// the algebra alone, depending on the constructors it uses).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Formula {
    Bool(bool),
    Pred(String, Vec<Term>),
    Eq(Term, Term),
    Member(Term, Term),
    Not(Box<Formula>),
    Binary(Connective, Box<Formula>, Box<Formula>),
    Quant(Quantifier, Binder, Box<Formula>),
    /// Built-in axiom: the binary predicate has no cycles.
    WellFounded(String),
    Active(String),
    /// `conn(v.p <- w.q)`.
    Conn(PortRef, PortRef),
    /// `irconn(I.p <- J.q)`: every active pair of the two interfaces is connected.
    IrConn(PortRef, PortRef),
    Min(String, u32),
    Max(String, u32),
    MinMax(String, u32, u32),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn binary(c: Connective, a: Formula, b: Formula) -> Self {
        Formula::Binary(c, Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::binary(Connective::And, a, b)
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::binary(Connective::Or, a, b)
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::binary(Connective::Implies, a, b)
    }

    pub fn forall(b: Binder, body: Formula) -> Self {
        Formula::Quant(Quantifier::Forall, b, Box::new(body))
    }

    pub fn exists(b: Binder, body: Formula) -> Self {
        Formula::Quant(Quantifier::Exists, b, Box::new(body))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Self {
        items.into_iter().reduce(Formula::and).unwrap_or(Formula::Bool(true))
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Self {
        items.into_iter().reduce(Formula::or).unwrap_or(Formula::Bool(false))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Bool(_) | Formula::WellFounded(_) => {}
            Formula::IrConn(..) | Formula::Min(..) | Formula::Max(..) | Formula::MinMax(..) => {}
            Formula::Pred(_, args) => {
                for a in args {
                    a.free_vars_into(out);
                }
            }
            Formula::Eq(a, b) | Formula::Member(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Not(f) => f.free_vars_into(out),
            Formula::Binary(_, a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::Quant(_, b, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(&b.var);
                out.extend(inner);
            }
            Formula::Active(v) => {
                out.insert(v.clone());
            }
            Formula::Conn(a, b) => {
                out.insert(a.owner.clone());
                out.insert(b.owner.clone());
            }
        }
    }

    /// True when the formula reads configuration structure or ports.
    pub fn is_configuration_level(&self) -> bool {
        match self {
            Formula::Bool(_) | Formula::WellFounded(_) => false,
            Formula::Pred(_, args) => args.iter().any(Term::mentions_ports),
            Formula::Eq(a, b) | Formula::Member(a, b) => a.mentions_ports() || b.mentions_ports(),
            Formula::Not(f) => f.is_configuration_level(),
            Formula::Binary(_, a, b) => a.is_configuration_level() || b.is_configuration_level(),
            Formula::Quant(_, b, body) => matches!(b.domain, Domain::Interface(_)) || body.is_configuration_level(),
            Formula::Active(_)
            | Formula::Conn(..)
            | Formula::IrConn(..)
            | Formula::Min(..)
            | Formula::Max(..)
            | Formula::MinMax(..) => true,
        }
    }
}

/// Formula over configuration traces.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TraceFormula {
    State(Formula),
    Not(Box<TraceFormula>),
    Binary(Connective, Box<TraceFormula>, Box<TraceFormula>),
    Next(Box<TraceFormula>),
    Eventually(Box<TraceFormula>),
    Globally(Box<TraceFormula>),
    Until(Box<TraceFormula>, Box<TraceFormula>),
    WeakUntil(Box<TraceFormula>, Box<TraceFormula>),
    /// Rigid quantifier: the binding holds for the whole suffix.
    Quant(Quantifier, Binder, Box<TraceFormula>),
}

impl TraceFormula {
    pub fn state(f: Formula) -> Self {
        TraceFormula::State(f)
    }

    /// Negation, folded into a state formula when possible.
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: TraceFormula) -> Self {
        match f {
            TraceFormula::State(s) => TraceFormula::State(Formula::not(s)),
            other => TraceFormula::Not(Box::new(other)),
        }
    }

    /// Binary connective, folded into a state formula when both sides are.
    pub fn binary(c: Connective, a: TraceFormula, b: TraceFormula) -> Self {
        match (a, b) {
            (TraceFormula::State(x), TraceFormula::State(y)) => TraceFormula::State(Formula::binary(c, x, y)),
            (a, b) => TraceFormula::Binary(c, Box::new(a), Box::new(b)),
        }
    }

    pub fn and(a: TraceFormula, b: TraceFormula) -> Self {
        TraceFormula::binary(Connective::And, a, b)
    }

    pub fn implies(a: TraceFormula, b: TraceFormula) -> Self {
        TraceFormula::binary(Connective::Implies, a, b)
    }

    /// Quantifier, folded into a state quantifier when the body is temporal-free.
    pub fn quant(q: Quantifier, b: Binder, body: TraceFormula) -> Self {
        match body {
            TraceFormula::State(s) => TraceFormula::State(Formula::Quant(q, b, Box::new(s))),
            other => TraceFormula::Quant(q, b, Box::new(other)),
        }
    }

    pub fn next(f: TraceFormula) -> Self {
        TraceFormula::Next(Box::new(f))
    }

    pub fn eventually(f: TraceFormula) -> Self {
        TraceFormula::Eventually(Box::new(f))
    }

    pub fn globally(f: TraceFormula) -> Self {
        TraceFormula::Globally(Box::new(f))
    }

    pub fn until(a: TraceFormula, b: TraceFormula) -> Self {
        TraceFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: TraceFormula, b: TraceFormula) -> Self {
        TraceFormula::WeakUntil(Box::new(a), Box::new(b))
    }

    /// Equivalent formula with maximal temporal-free parts inside `State`.
    pub fn canonical(&self) -> TraceFormula {
        match self {
            TraceFormula::State(s) => TraceFormula::State(s.clone()),
            TraceFormula::Not(f) => TraceFormula::not(f.canonical()),
            TraceFormula::Binary(c, a, b) => TraceFormula::binary(*c, a.canonical(), b.canonical()),
            TraceFormula::Next(f) => TraceFormula::next(f.canonical()),
            TraceFormula::Eventually(f) => TraceFormula::eventually(f.canonical()),
            TraceFormula::Globally(f) => TraceFormula::globally(f.canonical()),
            TraceFormula::Until(a, b) => TraceFormula::until(a.canonical(), b.canonical()),
            TraceFormula::WeakUntil(a, b) => TraceFormula::weak_until(a.canonical(), b.canonical()),
            TraceFormula::Quant(q, b, body) => TraceFormula::quant(*q, b.clone(), body.canonical()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            TraceFormula::State(s) => s.free_vars_into(out),
            TraceFormula::Not(f) | TraceFormula::Next(f) | TraceFormula::Eventually(f) | TraceFormula::Globally(f) => {
                f.free_vars_into(out)
            }
            TraceFormula::Binary(_, a, b) | TraceFormula::Until(a, b) | TraceFormula::WeakUntil(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            TraceFormula::Quant(_, b, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(&b.var);
                out.extend(inner);
            }
        }
    }

    /// Nesting depth of operators above state formulas.
    pub fn depth(&self) -> usize {
        match self {
            TraceFormula::State(_) => 0,
            TraceFormula::Not(f)
            | TraceFormula::Next(f)
            | TraceFormula::Eventually(f)
            | TraceFormula::Globally(f)
            | TraceFormula::Quant(_, _, f) => 1 + f.depth(),
            TraceFormula::Binary(_, a, b) | TraceFormula::Until(a, b) | TraceFormula::WeakUntil(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

// Printing. Precedence: quantifiers 0, <-> 1, -> 2, | 3, & 4, U/W 5, unary 6, atoms 7.

const PREC_UNTIL: u8 = 5;
const PREC_UNARY: u8 = 6;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                write!(f, ")")
            }
            Term::Pair(a, b) => write!(f, "({a}, {b})"),
            Term::Set(items) => {
                write!(f, "{{")?;
                write_list(f, items)?;
                write!(f, "}}")
            }
            Term::Port(p) => write!(f, "{p}"),
            Term::PortOf(v, p) => write!(f, "{v}.{p}"),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

fn quantifier_word(q: Quantifier) -> &'static str {
    match q {
        Quantifier::Forall => "forall",
        Quantifier::Exists => "exists",
    }
}

fn write_binder(f: &mut fmt::Formatter<'_>, q: Quantifier, b: &Binder) -> fmt::Result {
    match b.domain {
        Domain::Declared => write!(f, "{} {}. ", quantifier_word(q), b.var),
        _ => write!(f, "{} {}: {}. ", quantifier_word(q), b.var, b.domain),
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, phi: &Formula, ctx: u8) -> fmt::Result {
    match phi {
        Formula::Bool(b) => write!(f, "{b}"),
        Formula::Pred(name, args) => {
            write!(f, "{name}(")?;
            write_list(f, args)?;
            write!(f, ")")
        }
        Formula::Eq(a, b) => write!(f, "{a} = {b}"),
        Formula::Member(a, b) => write!(f, "{a} in {b}"),
        Formula::Not(inner) => {
            write!(f, "!")?;
            write_formula(f, inner, PREC_UNARY)
        }
        Formula::Binary(c, a, b) => {
            let p = c.precedence();
            let (lp, rp) = if c.right_assoc() { (p + 1, p) } else { (p, p + 1) };
            let paren = ctx > p;
            if paren {
                write!(f, "(")?;
            }
            write_formula(f, a, lp)?;
            write!(f, " {} ", c.symbol())?;
            write_formula(f, b, rp)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Formula::Quant(q, b, body) => {
            if ctx > 0 {
                write!(f, "(")?;
            }
            write_binder(f, *q, b)?;
            write_formula(f, body, 0)?;
            if ctx > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Formula::WellFounded(r) => write!(f, "well-founded({r})"),
        Formula::Active(v) => write!(f, "active({v})"),
        Formula::Conn(a, b) => write!(f, "conn({a} <- {b})"),
        Formula::IrConn(a, b) => write!(f, "irconn({a} <- {b})"),
        Formula::Min(i, n) => write!(f, "min({i}, {n})"),
        Formula::Max(i, n) => write!(f, "max({i}, {n})"),
        Formula::MinMax(i, n, m) => write!(f, "minmax({i}, {n}, {m})"),
    }
}

fn write_trace(f: &mut fmt::Formatter<'_>, phi: &TraceFormula, ctx: u8) -> fmt::Result {
    match phi {
        TraceFormula::State(s) => write_formula(f, s, ctx),
        TraceFormula::Not(inner) => {
            write!(f, "!")?;
            write_trace(f, inner, PREC_UNARY)
        }
        TraceFormula::Next(inner) => {
            write!(f, "X ")?;
            write_trace(f, inner, PREC_UNARY)
        }
        TraceFormula::Eventually(inner) => {
            write!(f, "F ")?;
            write_trace(f, inner, PREC_UNARY)
        }
        TraceFormula::Globally(inner) => {
            write!(f, "G ")?;
            write_trace(f, inner, PREC_UNARY)
        }
        TraceFormula::Binary(c, a, b) => {
            let p = c.precedence();
            let (lp, rp) = if c.right_assoc() { (p + 1, p) } else { (p, p + 1) };
            let paren = ctx > p;
            if paren {
                write!(f, "(")?;
            }
            write_trace(f, a, lp)?;
            write!(f, " {} ", c.symbol())?;
            write_trace(f, b, rp)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        TraceFormula::Until(a, b) | TraceFormula::WeakUntil(a, b) => {
            let op = if matches!(phi, TraceFormula::Until(..)) { "U" } else { "W" };
            let paren = ctx > PREC_UNTIL;
            if paren {
                write!(f, "(")?;
            }
            write_trace(f, a, PREC_UNTIL + 1)?;
            write!(f, " {op} ")?;
            write_trace(f, b, PREC_UNTIL)?;
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        TraceFormula::Quant(q, b, body) => {
            if ctx > 0 {
                write!(f, "(")?;
            }
            write_binder(f, *q, b)?;
            write_trace(f, body, 0)?;
            if ctx > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 0)
    }
}

impl fmt::Display for TraceFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_trace(f, self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(e: Term, v: &str, p: &str) -> Formula {
        Formula::Member(e, Term::port_of(v, p))
    }

    #[test]
    fn canonical_folds_state_parts() {
        let a = TraceFormula::Binary(
            Connective::And,
            Box::new(TraceFormula::State(Formula::Active("v".into()))),
            Box::new(TraceFormula::State(Formula::Bool(true))),
        );
        assert!(matches!(a.canonical(), TraceFormula::State(_)));
        let q = TraceFormula::Quant(
            Quantifier::Forall,
            Binder::sort("p", Sort::named("PROB")),
            Box::new(TraceFormula::eventually(TraceFormula::State(Formula::Bool(true)))),
        );
        assert!(matches!(q.canonical(), TraceFormula::Quant(..)));
    }

    #[test]
    fn printer_parenthesizes_by_precedence() {
        let ps = Term::pair(Term::var("p"), Term::var("s"));
        let f = TraceFormula::globally(TraceFormula::implies(
            TraceFormula::State(member(ps.clone(), "bb", "is")),
            TraceFormula::eventually(TraceFormula::State(member(ps, "bb", "os"))),
        ));
        assert_eq!(f.to_string(), "G ((p, s) in bb.is -> F (p, s) in bb.os)");
        let nested = Formula::implies(Formula::implies(Formula::Bool(true), Formula::Bool(false)), Formula::Bool(true));
        assert_eq!(nested.to_string(), "(true -> false) -> true");
        let q = Formula::and(
            Formula::forall(Binder::interface("v", "BB"), Formula::Active("v".into())),
            Formula::Bool(true),
        );
        assert_eq!(q.to_string(), "(forall v: BB. active(v)) & true");
    }

    #[test]
    fn free_vars_respect_binders() {
        let f =
            Formula::forall(Binder::sort("q", Sort::named("PROB")), Formula::Member(Term::var("q"), Term::var("P")));
        assert_eq!(f.free_vars(), ["P".to_string()].into());
    }
}
