//! Sort checking and elaboration of terms and formulas.
//!
//! Elaboration resolves what the parser cannot know: a bare identifier is a
//! variable, a port of the asserted interface, or a constant; a quantifier over
//! an interface name ranges over components; and `port = e` with `e` a single
//! message means `port = {e}`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::Signature;
use crate::interface::{Interface, InterfaceSpec};
use crate::model::PortKind;
use crate::syntax::{Binder, Domain, Formula, Term, TraceFormula};
use crate::value::Sort;

const ANY: &str = "?";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message} (at {path})")]
pub struct TypeError {
    pub message: String,
    pub path: String,
}

/// Type of a variable or term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarType {
    Data(Sort),
    Component(String),
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarType::Data(s) => write!(f, "{s}"),
            VarType::Component(i) => write!(f, "component of {i}"),
        }
    }
}

/// Which constructors are allowed and what ports mean.
#[derive(Clone, Copy)]
pub enum Level<'a> {
    Datatype,
    /// Assertions about one interface; bare port names refer to it.
    Interface(&'a Interface),
    /// Configuration and trace assertions over all interfaces.
    Configuration(&'a InterfaceSpec),
}

/// Checker for one level. Variables are pushed and popped as binders are entered.
pub struct Checker<'a> {
    sig: &'a Signature,
    level: Level<'a>,
    scope: Vec<(String, VarType)>,
    defaults: BTreeMap<String, Domain>,
    path: Vec<String>,
}

fn compatible(a: &Sort, b: &Sort) -> bool {
    match (a, b) {
        (Sort::Named(x), _) if x == ANY => true,
        (_, Sort::Named(y)) if y == ANY => true,
        (Sort::Named(x), Sort::Named(y)) => x == y,
        (Sort::Pair(a1, a2), Sort::Pair(b1, b2)) => compatible(a1, b1) && compatible(a2, b2),
        (Sort::Set(x), Sort::Set(y)) => compatible(x, y),
        _ => false,
    }
}

impl<'a> Checker<'a> {
    pub fn new(sig: &'a Signature, level: Level<'a>) -> Self {
        Checker { sig, level, scope: Vec::new(), defaults: BTreeMap::new(), path: Vec::new() }
    }

    /// Declares a variable for the rest of the check.
    pub fn declare(&mut self, name: &str, ty: VarType) {
        self.scope.push((name.to_string(), ty));
    }

    /// Domain used by quantifiers over `name` that omit one.
    pub fn default_domain(&mut self, name: &str, d: Domain) {
        self.defaults.insert(name.to_string(), d);
    }

    fn binder(&self, b: &mut Binder) -> Result<VarType, TypeError> {
        if b.domain == Domain::Declared {
            match self.defaults.get(&b.var) {
                Some(d) => b.domain = d.clone(),
                None => return self.err(format!("quantified variable {} has no declared sort", b.var)),
            }
        }
        self.domain(&mut b.domain)
    }

    fn lookup(&self, name: &str) -> Option<&VarType> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, TypeError> {
        let path = if self.path.is_empty() { "top".to_string() } else { self.path.join(" > ") };
        Err(TypeError { message: message.into(), path })
    }

    fn nested<T>(&mut self, label: String, f: impl FnOnce(&mut Self) -> Result<T, TypeError>) -> Result<T, TypeError> {
        self.path.push(label);
        let r = f(self);
        self.path.pop();
        r
    }

    fn interfaces(&self) -> Option<&'a InterfaceSpec> {
        match self.level {
            Level::Configuration(s) => Some(s),
            _ => None,
        }
    }

    /// Resolves a domain: a bare sort name naming an interface becomes a component domain.
    pub fn domain(&self, d: &mut Domain) -> Result<VarType, TypeError> {
        if let Domain::Sort(Sort::Named(n)) = d {
            if self.interfaces().is_some_and(|s| s.interfaces.contains_key(n)) && !self.sig.sorts.contains(n) {
                *d = Domain::Interface(n.clone());
            }
        }
        match d {
            Domain::Sort(s) => match self.sig.check_sort(s) {
                Ok(()) => Ok(VarType::Data(s.clone())),
                Err(e) => self.err(e.to_string()),
            },
            Domain::Interface(i) => match self.interfaces() {
                Some(spec) if spec.interfaces.contains_key(i) => Ok(VarType::Component(i.clone())),
                Some(_) => self.err(format!("unknown interface {i}")),
                None => self.err(format!("component quantifier over {i} outside a configuration assertion")),
            },
            Domain::Declared => self.err("quantifier without a domain"),
        }
    }

    fn data(&self, t: VarType, what: &str) -> Result<Sort, TypeError> {
        match t {
            VarType::Data(s) => Ok(s),
            VarType::Component(i) => self.err(format!("{what} is a component of {i}, not a value")),
        }
    }

    /// Elaborates a term and returns its type.
    pub fn term(&mut self, t: &mut Term) -> Result<VarType, TypeError> {
        match t {
            Term::Var(x) => {
                if let Some(ty) = self.lookup(x) {
                    return Ok(ty.clone());
                }
                if let Level::Interface(ifc) = self.level {
                    if ifc.kind_of(x).is_some() {
                        *t = Term::Port(x.clone());
                        return self.term(t);
                    }
                }
                if self.sig.functions.get(x.as_str()).is_some_and(|f| f.args.is_empty()) {
                    *t = Term::App(x.clone(), vec![]);
                    return self.term(t);
                }
                self.err(format!("unknown identifier {x}"))
            }
            Term::App(f, args) => {
                let Some(ty) = self.sig.functions.get(f.as_str()).cloned() else {
                    return self.err(format!("unknown function {f}"));
                };
                if ty.args.len() != args.len() {
                    return self.err(format!("{f} expects {} arguments, got {}", ty.args.len(), args.len()));
                }
                let name = f.clone();
                for (i, (a, want)) in args.iter_mut().zip(&ty.args).enumerate() {
                    self.nested(format!("{name}[{i}]"), |c| {
                        let t = c.term(a)?;
                        let got = c.data(t, "argument")?;
                        if !compatible(&got, want) {
                            return c.err(format!("argument {i} of {name} has sort {got}, expected {want}"));
                        }
                        Ok(())
                    })?;
                }
                Ok(VarType::Data(ty.result))
            }
            Term::Pair(a, b) => {
                let x = self.nested("pair[0]".into(), |c| {
                    let t = c.term(a)?;
                    c.data(t, "pair component")
                })?;
                let y = self.nested("pair[1]".into(), |c| {
                    let t = c.term(b)?;
                    c.data(t, "pair component")
                })?;
                Ok(VarType::Data(Sort::pair(x, y)))
            }
            Term::Set(items) => {
                let mut elem = Sort::named(ANY);
                for (i, a) in items.iter_mut().enumerate() {
                    let s = self.nested(format!("set[{i}]"), |c| {
                        let t = c.term(a)?;
                        c.data(t, "set element")
                    })?;
                    if !compatible(&elem, &s) {
                        return self.err(format!("set literal mixes sorts {elem} and {s}"));
                    }
                    if matches!(&elem, Sort::Named(n) if n == ANY) {
                        elem = s;
                    }
                }
                Ok(VarType::Data(Sort::set(elem)))
            }
            Term::Port(p) => match self.level {
                Level::Interface(ifc) => match ifc.sort_of(p) {
                    Some(s) => Ok(VarType::Data(s.port_term_sort())),
                    None => self.err(format!("unknown port {p}")),
                },
                _ => self.err(format!("port term {p} outside an interface assertion")),
            },
            Term::PortOf(v, p) => {
                let Some(spec) = self.interfaces() else {
                    return self.err(format!("{v}.{p} outside a configuration assertion"));
                };
                match self.lookup(v) {
                    Some(VarType::Component(i)) => {
                        let sort = spec.interfaces.get(i.as_str()).and_then(|f| f.sort_of(p)).cloned();
                        match sort {
                            Some(s) => Ok(VarType::Data(s.port_term_sort())),
                            None => self.err(format!("interface {i} has no port {p}")),
                        }
                    }
                    Some(VarType::Data(_)) => self.err(format!("{v} is not a component variable")),
                    None => self.err(format!("unknown component variable {v}")),
                }
            }
        }
    }

    fn component_var(&self, v: &str) -> Result<String, TypeError> {
        match self.lookup(v) {
            Some(VarType::Component(i)) => Ok(i.clone()),
            Some(VarType::Data(_)) => self.err(format!("{v} is not a component variable")),
            None => self.err(format!("unknown component variable {v}")),
        }
    }

    fn port_kind(&self, iface: &str, port: &str) -> Result<PortKind, TypeError> {
        let spec = self.interfaces().expect("configuration level");
        match spec.interfaces.get(iface) {
            None => self.err(format!("unknown interface {iface}")),
            Some(ifc) => match ifc.kind_of(port) {
                Some(k) => Ok(k),
                None => self.err(format!("interface {iface} has no port {port}")),
            },
        }
    }

    fn config_only(&self, what: &str) -> Result<&'a InterfaceSpec, TypeError> {
        match self.interfaces() {
            Some(s) => Ok(s),
            None => self.err(format!("{what} is only allowed in configuration assertions")),
        }
    }

    fn is_port_term(t: &Term) -> bool {
        matches!(t, Term::Port(_) | Term::PortOf(..))
    }

    /// Elaborates and checks a state formula.
    pub fn formula(&mut self, f: &mut Formula) -> Result<(), TypeError> {
        match f {
            Formula::Bool(_) => Ok(()),
            Formula::Pred(p, args) => {
                let Some(sorts) = self.sig.predicates.get(p.as_str()).cloned() else {
                    return self.err(format!("unknown predicate {p}"));
                };
                if sorts.len() != args.len() {
                    return self.err(format!("{p} expects {} arguments, got {}", sorts.len(), args.len()));
                }
                let name = p.clone();
                for (i, (a, want)) in args.iter_mut().zip(&sorts).enumerate() {
                    self.nested(format!("{name}[{i}]"), |c| {
                        let t = c.term(a)?;
                        let got = c.data(t, "argument")?;
                        if !compatible(&got, want) {
                            return c.err(format!("argument {i} of {name} has sort {got}, expected {want}"));
                        }
                        Ok(())
                    })?;
                }
                Ok(())
            }
            Formula::Eq(a, b) => {
                let x = self.nested("=[0]".into(), |c| c.term(a))?;
                let y = self.nested("=[1]".into(), |c| c.term(b))?;
                match (x, y) {
                    (VarType::Component(_), VarType::Component(_)) => Ok(()),
                    (VarType::Data(x), VarType::Data(y)) => {
                        if compatible(&x, &y) {
                            return Ok(());
                        }
                        if let Sort::Set(inner) = &x {
                            if Self::is_port_term(a) && compatible(inner, &y) {
                                *b = Term::Set(vec![b.clone()]);
                                return Ok(());
                            }
                        }
                        if let Sort::Set(inner) = &y {
                            if Self::is_port_term(b) && compatible(inner, &x) {
                                *a = Term::Set(vec![a.clone()]);
                                return Ok(());
                            }
                        }
                        self.err(format!("cannot compare {x} with {y}"))
                    }
                    (x, y) => self.err(format!("cannot compare {x} with {y}")),
                }
            }
            Formula::Member(e, s) => {
                let x = self.nested("in[0]".into(), |c| {
                    let t = c.term(e)?;
                    c.data(t, "element")
                })?;
                let y = self.nested("in[1]".into(), |c| {
                    let t = c.term(s)?;
                    c.data(t, "set")
                })?;
                match &y {
                    Sort::Set(inner) if compatible(inner, &x) => Ok(()),
                    Sort::Set(inner) => self.err(format!("element of sort {x} tested against set({inner})")),
                    _ => self.err(format!("right side of `in` has sort {y}, not a set")),
                }
            }
            Formula::Not(g) => self.nested("!".into(), |c| c.formula(g)),
            Formula::Binary(op, a, b) => {
                let label = format!("{op:?}");
                self.nested(format!("{label}[0]"), |c| c.formula(a))?;
                self.nested(format!("{label}[1]"), |c| c.formula(b))
            }
            Formula::Quant(_, binder, body) => {
                let ty = self.binder(binder)?;
                self.scope.push((binder.var.clone(), ty));
                let label = format!("{}.", binder.var);
                let r = self.nested(label, |c| c.formula(body));
                self.scope.pop();
                r
            }
            Formula::WellFounded(r) => match self.sig.predicates.get(r.as_str()) {
                Some(s) if s.len() == 2 && s[0] == s[1] => Ok(()),
                Some(_) => self.err(format!("well-founded({r}) needs a binary predicate over one sort")),
                None => self.err(format!("unknown predicate {r}")),
            },
            Formula::Active(v) => {
                self.config_only("active(v)")?;
                self.component_var(v).map(|_| ())
            }
            Formula::Conn(i, o) => {
                self.config_only("conn")?;
                let ii = self.component_var(&i.owner)?;
                let oi = self.component_var(&o.owner)?;
                if self.port_kind(&ii, &i.port)? != PortKind::Input {
                    return self.err(format!("{i} is not an input port"));
                }
                if self.port_kind(&oi, &o.port)? != PortKind::Output {
                    return self.err(format!("{o} is not an output port"));
                }
                Ok(())
            }
            Formula::IrConn(i, o) => {
                self.config_only("irconn")?;
                if self.port_kind(&i.owner, &i.port)? != PortKind::Input {
                    return self.err(format!("{i} is not an input port"));
                }
                if self.port_kind(&o.owner, &o.port)? != PortKind::Output {
                    return self.err(format!("{o} is not an output port"));
                }
                Ok(())
            }
            Formula::Min(i, _) | Formula::Max(i, _) | Formula::MinMax(i, _, _) => {
                let spec = self.config_only("activation bounds")?;
                if !spec.interfaces.contains_key(i.as_str()) {
                    return self.err(format!("unknown interface {i}"));
                }
                Ok(())
            }
        }
    }

    /// Elaborates and checks a trace formula; quantifiers bind rigid variables.
    pub fn trace(&mut self, f: &mut TraceFormula) -> Result<(), TypeError> {
        match f {
            TraceFormula::State(s) => self.formula(s),
            TraceFormula::Not(g) => self.nested("!".into(), |c| c.trace(g)),
            TraceFormula::Next(g) => self.nested("X".into(), |c| c.trace(g)),
            TraceFormula::Eventually(g) => self.nested("F".into(), |c| c.trace(g)),
            TraceFormula::Globally(g) => self.nested("G".into(), |c| c.trace(g)),
            TraceFormula::Binary(op, a, b) => {
                let label = format!("{op:?}");
                self.nested(format!("{label}[0]"), |c| c.trace(a))?;
                self.nested(format!("{label}[1]"), |c| c.trace(b))
            }
            TraceFormula::Until(a, b) | TraceFormula::WeakUntil(a, b) => {
                self.nested("U[0]".into(), |c| c.trace(a))?;
                self.nested("U[1]".into(), |c| c.trace(b))
            }
            TraceFormula::Quant(_, binder, body) => {
                let ty = self.binder(binder)?;
                self.scope.push((binder.var.clone(), ty));
                let label = format!("{}.", binder.var);
                let r = self.nested(label, |c| c.trace(body));
                self.scope.pop();
                r
            }
        }
    }
}

/// Sort of a datatype term under variable declarations.
pub fn typecheck_term(sig: &Signature, vars: &BTreeMap<String, Sort>, t: &Term) -> Result<Sort, TypeError> {
    let mut c = Checker::new(sig, Level::Datatype);
    for (v, s) in vars {
        c.declare(v, VarType::Data(s.clone()));
    }
    let mut t = t.clone();
    match c.term(&mut t)? {
        VarType::Data(s) => Ok(s),
        VarType::Component(i) => c.err(format!("term denotes a component of {i}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FunctionType;
    use crate::interface::PortSpec;
    use crate::syntax::Binder;

    fn sig() -> Signature {
        let mut sig = Signature::default();
        sig.sorts.insert("PROB".into());
        sig.sorts.insert("SOL".into());
        sig.functions
            .insert("solve".into(), FunctionType { args: vec![Sort::named("PROB")], result: Sort::named("SOL") });
        sig.functions.insert("root".into(), FunctionType { args: vec![], result: Sort::named("PROB") });
        sig.predicates.insert("prec".into(), vec![Sort::named("PROB"), Sort::named("PROB")]);
        sig
    }

    #[test]
    fn solve_of_problem_is_a_solution() {
        let vars = BTreeMap::from([("p".to_string(), Sort::named("PROB"))]);
        let t = Term::app("solve", vec![Term::var("p")]);
        assert_eq!(typecheck_term(&sig(), &vars, &t).unwrap(), Sort::named("SOL"));
    }

    #[test]
    fn ill_sorted_argument_reports_path() {
        let vars = BTreeMap::from([("s".to_string(), Sort::named("SOL"))]);
        let t = Term::app("solve", vec![Term::var("s")]);
        let e = typecheck_term(&sig(), &vars, &t).unwrap_err();
        assert!(e.message.contains("expected PROB"), "{e}");
        assert!(e.path.contains("solve[0]"), "{e}");
    }

    #[test]
    fn bare_constant_becomes_application() {
        let s = sig();
        let mut c = Checker::new(&s, Level::Datatype);
        let mut t = Term::var("root");
        assert_eq!(c.term(&mut t).unwrap(), VarType::Data(Sort::named("PROB")));
        assert_eq!(t, Term::app("root", vec![]));
    }

    #[test]
    fn port_equality_with_single_message_is_wrapped() {
        let ps = PortSpec {
            typing: BTreeMap::from([
                ("op".to_string(), Sort::pair(Sort::named("PROB"), Sort::set(Sort::named("PROB")))),
                ("prob".to_string(), Sort::set(Sort::named("PROB"))),
            ]),
        };
        let ifc = Interface::new("KS", &ps, ["prob".into()].into(), Default::default(), ["op".into()].into()).unwrap();
        let s = sig();
        let mut c = Checker::new(&s, Level::Interface(&ifc));
        c.declare("p", VarType::Data(Sort::named("PROB")));
        c.declare("P", VarType::Data(Sort::set(Sort::named("PROB"))));
        let mut f = Formula::implies(
            Formula::Eq(Term::var("op"), Term::pair(Term::var("p"), Term::var("P"))),
            Formula::Member(Term::var("p"), Term::var("prob")),
        );
        c.formula(&mut f).unwrap();
        assert_eq!(f.to_string(), "op = {(p, P)} -> p in prob");
        assert!(matches!(&f, Formula::Binary(_, a, _) if matches!(&**a, Formula::Eq(Term::Port(_), Term::Set(_)))));
    }

    #[test]
    fn interface_name_domain_becomes_component_domain() {
        let ps = PortSpec { typing: BTreeMap::from([("op".to_string(), Sort::set(Sort::named("PROB")))]) };
        let ifc = Interface::new("BB", &ps, Default::default(), Default::default(), ["op".into()].into()).unwrap();
        let mut spec = InterfaceSpec::default();
        spec.interfaces.insert("BB".into(), ifc);
        let s = sig();
        let mut c = Checker::new(&s, Level::Configuration(&spec));
        let mut f = Formula::forall(Binder::sort("v", Sort::named("BB")), Formula::Active("v".into()));
        c.formula(&mut f).unwrap();
        assert!(matches!(&f, Formula::Quant(_, b, _) if b.domain == Domain::Interface("BB".into())));
    }

    #[test]
    fn active_outside_configuration_is_rejected() {
        let s = sig();
        let mut c = Checker::new(&s, Level::Datatype);
        c.declare("v", VarType::Data(Sort::named("PROB")));
        assert!(c.formula(&mut Formula::Active("v".into())).is_err());
    }
}
