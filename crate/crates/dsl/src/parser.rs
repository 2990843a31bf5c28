//! Line-oriented parser for all unit kinds.
//!
//! A unit is a header line, optional `imports` lines, sections introduced by a
//! keyword at the start of a line, and `end`. A line that fails to parse yields
//! one error and parsing resumes at the next line.

use std::collections::BTreeMap;

use archtrace_core::syntax::{Binder, Connective, Domain, Formula, PortRef, Quantifier, Term, TraceFormula};
use archtrace_core::value::{Sort, Value};

use crate::ast::*;
use crate::diagnostics::{Diagnostic, Span};
use crate::lexer::{lex, Tok, Token};

type PResult<T> = Result<T, Diagnostic>;

const TEMPORAL: [&str; 5] = ["X", "F", "G", "U", "W"];

/// Parses one unit. Returns the unit only when there are no errors.
pub fn parse_unit(text: &str) -> (Option<ParsedUnit>, Vec<Diagnostic>) {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(d) => return (None, vec![d]),
    };
    let mut p = Parser { toks, pos: 0, diags: Vec::new(), spans: BTreeMap::new() };
    let unit = p.unit();
    let mut diags = p.diags;
    let name = unit.as_ref().map(|(u, _)| u.name.clone()).unwrap_or_default();
    for d in &mut diags {
        d.unit = name.clone();
    }
    match unit {
        Some((unit, header)) if !diags.iter().any(|d| d.is_error()) => {
            (Some(ParsedUnit { unit, header, spans: p.spans }), diags)
        }
        _ => (None, diags),
    }
}

/// Parses a trace formula on its own, as written in an `axioms` line.
pub fn parse_trace_formula(text: &str) -> PResult<TraceFormula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, diags: Vec::new(), spans: BTreeMap::new() };
    let e = p.expr(0)?;
    p.end_line()?;
    p.expect_eof()?;
    to_trace(&e, p.span())
}

/// Parses a state formula on its own.
pub fn parse_formula(text: &str) -> PResult<Formula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, diags: Vec::new(), spans: BTreeMap::new() };
    let e = p.expr(0)?;
    p.end_line()?;
    p.expect_eof()?;
    to_formula(&e, p.span())
}

#[derive(Clone, Debug)]
enum Expr {
    Name(String),
    Num(u32),
    Bool(bool),
    Call(String, Vec<Expr>),
    Field(String, String),
    Tuple(Vec<Expr>),
    SetLit(Vec<Expr>),
    Not(Box<Expr>),
    Bin(Connective, Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    In(Box<Expr>, Box<Expr>),
    Link(Box<Expr>, Box<Expr>),
    Temporal1(char, Box<Expr>),
    Temporal2(char, Box<Expr>, Box<Expr>),
    Quant(Quantifier, Vec<BinderSyntax>, Box<Expr>),
    WellFounded(String),
}

#[derive(Clone, Debug)]
enum BinderSyntax {
    Typed(String, Option<Sort>),
    In(Vec<String>, Expr),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Sorts,
    Functions,
    Predicates,
    Vars,
    RigidVars,
    Axioms,
    Ports,
    DiagramAxioms,
    Step,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    spans: BTreeMap<String, Span>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error("parse", self.span(), msg))
    }

    fn expect(&mut self, t: &Tok) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().span)
        } else {
            self.err(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.at_word(w) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{w}`, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected a name, found {}", other.describe())),
        }
    }

    fn number(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            other => self.err(format!("expected a number, found {}", other.describe())),
        }
    }

    fn end_line(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            other => self.err(format!("expected end of line, found {}", other.describe())),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        while self.eat(&Tok::Newline) {}
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err(format!("unexpected {} after the formula", self.peek().describe()))
        }
    }

    fn skip_line(&mut self) {
        while !matches!(self.peek(), Tok::Newline | Tok::Eof) {
            self.bump();
        }
        self.eat(&Tok::Newline);
    }

    fn names(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn record(&mut self, key: String, span: Span) {
        self.spans.entry(key).or_insert(span);
    }

    // Units.

    fn unit(&mut self) -> Option<(SourceUnit, Span)> {
        while self.eat(&Tok::Newline) {}
        let header = self.span();
        let kind = match self.peek() {
            Tok::Ident(w) => UnitKind::from_keyword(w),
            _ => None,
        };
        let Some(kind) = kind else {
            let found = self.peek().describe();
            self.diags.push(Diagnostic::error("header", header, format!("expected unit header, found {found}")));
            return None;
        };
        self.bump();
        let name = match self.ident().and_then(|n| self.end_line().map(|_| n)) {
            Ok(n) => n,
            Err(d) => {
                self.diags.push(d);
                return None;
            }
        };
        let mut imports = Vec::new();
        while self.at_word("imports") {
            let span = self.span();
            self.bump();
            match self.names().and_then(|n| self.end_line().map(|_| n)) {
                Ok(ns) => {
                    for n in ns {
                        self.record(format!("import:{n}"), span);
                        imports.push(n);
                    }
                }
                Err(d) => {
                    self.diags.push(d);
                    self.skip_line();
                }
            }
        }
        let body = match kind {
            UnitKind::Datatype => Body::Datatype(self.datatype()),
            UnitKind::Portspec => Body::Portspec(self.portspec()),
            UnitKind::Interface => Body::Interface(self.interface()),
            UnitKind::Constraints => Body::Constraints(self.constraints()),
            UnitKind::Diagram => Body::Diagram(self.diagram()),
            UnitKind::Algebra => Body::Algebra(self.algebra()),
            UnitKind::Trace => Body::Trace(self.trace()),
        };
        if self.at_word("end") {
            self.bump();
            while self.eat(&Tok::Newline) {}
            if *self.peek() != Tok::Eof {
                let d = Diagnostic::error("parse", self.span(), "only one unit per file; text after `end`");
                self.diags.push(d);
            }
        } else {
            self.diags.push(Diagnostic::error("parse", self.span(), "expected `end`"));
        }
        Some((SourceUnit { name, imports, body }, header))
    }

    /// Runs `line` for every line until `end`, recovering at line boundaries.
    fn lines(&mut self, mut line: impl FnMut(&mut Self) -> PResult<()>) {
        loop {
            while self.eat(&Tok::Newline) {}
            if self.at_word("end") || *self.peek() == Tok::Eof {
                return;
            }
            let start = self.pos;
            if let Err(d) = line(self) {
                self.diags.push(d);
                if self.pos == start || !matches!(self.toks[self.pos - 1].tok, Tok::Newline) {
                    self.skip_line();
                }
            }
        }
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let names = self.names()?;
        self.expect(&Tok::Colon)?;
        let sort = self.sort()?;
        Ok(VarDecl { names, sort })
    }

    fn sort(&mut self) -> PResult<Sort> {
        let name = self.ident()?;
        match name.as_str() {
            "set" if *self.peek() == Tok::LParen => {
                self.bump();
                let s = self.sort()?;
                self.expect(&Tok::RParen)?;
                Ok(Sort::set(s))
            }
            "pair" if *self.peek() == Tok::LParen => {
                self.bump();
                let a = self.sort()?;
                self.expect(&Tok::Comma)?;
                let b = self.sort()?;
                self.expect(&Tok::RParen)?;
                Ok(Sort::pair(a, b))
            }
            _ => Ok(Sort::named(name)),
        }
    }

    fn port_entries(&mut self) -> PResult<Vec<PortEntry>> {
        let mut out = Vec::new();
        loop {
            let name = self.ident()?;
            let sort = if self.eat(&Tok::Colon) { Some(self.sort()?) } else { None };
            out.push(PortEntry { name, sort });
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn axiom_line<F>(&mut self, index: usize, conv: fn(&Expr, Span) -> PResult<F>) -> PResult<Axiom<F>> {
        let span = self.span();
        let label = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(l), Tok::Colon) => {
                self.bump();
                self.bump();
                Some(l)
            }
            _ => None,
        };
        let e = self.expr(0)?;
        self.end_line()?;
        self.record(format!("axiom:{index}"), span);
        Ok(Axiom { label, formula: conv(&e, span)? })
    }

    fn datatype(&mut self) -> DatatypeUnit {
        let mut u = DatatypeUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            match p.peek() {
                Tok::Ident(w) if w == "sorts" => {
                    p.bump();
                    section = Section::Sorts;
                    if *p.peek() != Tok::Newline {
                        for s in p.names()? {
                            p.record(format!("sort:{s}"), span);
                            u.sorts.push(s);
                        }
                    }
                    return p.end_line();
                }
                Tok::Ident(w) if w == "functions" => section = Section::Functions,
                Tok::Ident(w) if w == "predicates" => section = Section::Predicates,
                Tok::Ident(w) if w == "vars" => section = Section::Vars,
                Tok::Ident(w) if w == "axioms" => section = Section::Axioms,
                _ => {
                    match section {
                        Section::Sorts => {
                            for s in p.names()? {
                                p.record(format!("sort:{s}"), span);
                                u.sorts.push(s);
                            }
                        }
                        Section::Functions => {
                            let name = p.ident()?;
                            p.expect(&Tok::Colon)?;
                            let mut args = Vec::new();
                            if *p.peek() != Tok::Implies {
                                args.push(p.sort()?);
                                while p.eat(&Tok::Comma) {
                                    args.push(p.sort()?);
                                }
                            }
                            p.expect(&Tok::Implies)?;
                            let result = p.sort()?;
                            p.record(format!("function:{name}"), span);
                            u.functions.push(FunctionDecl { name, args, result });
                        }
                        Section::Predicates => {
                            let name = p.ident()?;
                            p.expect(&Tok::Colon)?;
                            let mut args = vec![p.sort()?];
                            while p.eat(&Tok::Comma) {
                                args.push(p.sort()?);
                            }
                            p.record(format!("predicate:{name}"), span);
                            u.predicates.push(PredicateDecl { name, args });
                        }
                        Section::Vars => {
                            let d = p.var_decl()?;
                            for n in &d.names {
                                p.record(format!("var:{n}"), span);
                            }
                            u.vars.push(d);
                        }
                        Section::Axioms => {
                            let a = p.axiom_line(u.axioms.len(), to_formula)?;
                            u.axioms.push(a);
                            return Ok(());
                        }
                        _ => return p.err("expected a section: sorts, functions, predicates, vars or axioms"),
                    }
                    return p.end_line();
                }
            }
            p.bump();
            p.end_line()
        });
        u
    }

    fn portspec(&mut self) -> PortspecUnit {
        let mut u = PortspecUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            if p.at_word("ports") {
                p.bump();
                section = Section::Ports;
                return p.end_line();
            }
            if section != Section::Ports {
                return p.err("expected `ports`");
            }
            let d = p.var_decl()?;
            for n in &d.names {
                p.record(format!("port:{n}"), span);
            }
            u.ports.push(d);
            p.end_line()
        });
        u
    }

    fn interface(&mut self) -> InterfaceUnit {
        let mut u = InterfaceUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            let kw = match p.peek() {
                Tok::Ident(w) => w.clone(),
                _ => String::new(),
            };
            match kw.as_str() {
                "local" | "input" | "output" => {
                    p.bump();
                    let entries = p.port_entries()?;
                    for e in &entries {
                        p.record(format!("port:{}", e.name), span);
                    }
                    match kw.as_str() {
                        "local" => u.local.extend(entries),
                        "input" => u.input.extend(entries),
                        _ => u.output.extend(entries),
                    }
                    section = Section::None;
                    p.end_line()
                }
                "vars" => {
                    p.bump();
                    section = Section::Vars;
                    p.end_line()
                }
                "axioms" => {
                    p.bump();
                    section = Section::Axioms;
                    p.end_line()
                }
                _ => match section {
                    Section::Vars => {
                        let d = p.var_decl()?;
                        for n in &d.names {
                            p.record(format!("var:{n}"), span);
                        }
                        u.vars.push(d);
                        p.end_line()
                    }
                    Section::Axioms => {
                        let a = p.axiom_line(u.axioms.len(), to_formula)?;
                        u.axioms.push(a);
                        Ok(())
                    }
                    _ => p.err("expected local, input, output, vars or axioms"),
                },
            }
        });
        u
    }

    fn constraints(&mut self) -> ConstraintsUnit {
        let mut u = ConstraintsUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            if p.at_word("rigid") && matches!(p.peek_at(1), Tok::Ident(w) if w == "vars") {
                p.bump();
                p.bump();
                section = Section::RigidVars;
                return p.end_line();
            }
            if p.at_word("vars") {
                p.bump();
                section = Section::Vars;
                return p.end_line();
            }
            if p.at_word("axioms") {
                p.bump();
                section = Section::Axioms;
                return p.end_line();
            }
            match section {
                Section::Vars | Section::RigidVars => {
                    let d = p.var_decl()?;
                    for n in &d.names {
                        p.record(format!("var:{n}"), span);
                    }
                    if section == Section::Vars {
                        u.flexible.push(d);
                    } else {
                        u.rigid.push(d);
                    }
                    p.end_line()
                }
                Section::Axioms => {
                    let a = p.axiom_line(u.axioms.len(), to_trace)?;
                    u.axioms.push(a);
                    Ok(())
                }
                _ => p.err("expected `rigid vars`, `vars` or `axioms`"),
            }
        });
        u
    }

    fn bounds(&mut self) -> PResult<Bounds> {
        self.expect(&Tok::LBrack)?;
        let lo = if let Tok::Num(_) = self.peek() { Some(self.number()?) } else { None };
        let b = if self.eat(&Tok::DotDot) {
            let hi = if let Tok::Num(_) = self.peek() { Some(self.number()?) } else { None };
            if lo.is_none() && hi.is_none() {
                return self.err("`[..]` needs at least one bound");
            }
            Bounds { min: lo, max: hi }
        } else {
            match lo {
                Some(n) => Bounds { min: Some(n), max: Some(n) },
                None => return self.err("expected a number"),
            }
        };
        self.expect(&Tok::RBrack)?;
        Ok(b)
    }

    fn port_ref(&mut self) -> PResult<PortRef> {
        let owner = self.ident()?;
        self.expect(&Tok::Dot)?;
        let port = self.ident()?;
        Ok(PortRef { owner, port })
    }

    fn link(&mut self) -> PResult<(PortRef, PortRef)> {
        let a = self.port_ref()?;
        self.expect(&Tok::Arrow)?;
        let b = self.port_ref()?;
        Ok((a, b))
    }

    fn diagram(&mut self) -> DiagramUnit {
        let mut u = DiagramUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            let kw = match p.peek() {
                Tok::Ident(w) => w.clone(),
                _ => String::new(),
            };
            match kw.as_str() {
                "component" => {
                    p.bump();
                    let first = p.ident()?;
                    let (vars, iface) = if matches!(p.peek(), Tok::Comma | Tok::Colon) {
                        let mut vars = vec![first];
                        while p.eat(&Tok::Comma) {
                            vars.push(p.ident()?);
                        }
                        p.expect(&Tok::Colon)?;
                        (vars, p.ident()?)
                    } else {
                        (Vec::new(), first)
                    };
                    let bounds = if *p.peek() == Tok::LBrack { Some(p.bounds()?) } else { None };
                    p.record(format!("component:{iface}"), span);
                    u.components.push(DiagramComponent {
                        vars,
                        iface,
                        bounds,
                        local: vec![],
                        input: vec![],
                        output: vec![],
                    });
                    section = Section::None;
                    p.end_line()
                }
                "local" | "input" | "output" => {
                    p.bump();
                    let entries = p.port_entries()?;
                    let Some(c) = u.components.last_mut() else {
                        return p.err(format!("`{kw}` outside a component"));
                    };
                    match kw.as_str() {
                        "local" => c.local.extend(entries),
                        "input" => c.input.extend(entries),
                        _ => c.output.extend(entries),
                    }
                    p.end_line()
                }
                "connect" => {
                    p.bump();
                    let l = p.link()?;
                    p.record(format!("connect:{}", u.connections.len()), span);
                    u.connections.push(l);
                    p.end_line()
                }
                "vars" => {
                    p.bump();
                    section = Section::Vars;
                    p.end_line()
                }
                "axioms" => {
                    p.bump();
                    let iface = p.ident()?;
                    u.axioms.push((iface, Vec::new()));
                    section = Section::DiagramAxioms;
                    p.end_line()
                }
                _ => match section {
                    Section::Vars => {
                        let d = p.var_decl()?;
                        u.vars.push(d);
                        p.end_line()
                    }
                    Section::DiagramAxioms => {
                        let n: usize = u.axioms.iter().map(|(_, a)| a.len()).sum();
                        let a = p.axiom_line(n, to_formula)?;
                        u.axioms.last_mut().expect("axioms section").1.push(a);
                        Ok(())
                    }
                    _ => p.err("expected component, connect, vars or axioms"),
                },
            }
        });
        u
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Value::atom(&s))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Value::atom(&n.to_string()))
            }
            Tok::LParen => {
                self.bump();
                let a = self.value()?;
                self.expect(&Tok::Comma)?;
                let b = self.value()?;
                self.expect(&Tok::RParen)?;
                Ok(Value::pair(a, b))
            }
            Tok::LBrace => Ok(Value::set(self.value_list()?)),
            other => self.err(format!("expected a value, found {}", other.describe())),
        }
    }

    /// `{v, ...}` in source order.
    fn value_list(&mut self) -> PResult<Vec<Value>> {
        self.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn value_args(&mut self) -> PResult<Vec<Value>> {
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                args.push(self.value()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(&Tok::Comma)?;
            }
        }
        Ok(args)
    }

    fn algebra(&mut self) -> AlgebraUnit {
        let mut u = AlgebraUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            if p.at_word("carrier") {
                p.bump();
                let s = p.ident()?;
                p.expect(&Tok::Eq)?;
                let vals = p.value_list()?;
                p.record(format!("carrier:{s}"), span);
                u.carriers.push((s, vals));
                section = Section::None;
                return p.end_line();
            }
            if p.at_word("functions") {
                p.bump();
                section = Section::Functions;
                return p.end_line();
            }
            if p.at_word("predicates") {
                p.bump();
                section = Section::Predicates;
                return p.end_line();
            }
            match section {
                Section::Functions => {
                    let f = p.ident()?;
                    let args = p.value_args()?;
                    p.expect(&Tok::Eq)?;
                    let v = p.value()?;
                    p.record(format!("function:{f}:{}", u.functions.len()), span);
                    u.functions.push((f, args, v));
                }
                Section::Predicates => {
                    let name = p.ident()?;
                    let args = p.value_args()?;
                    p.record(format!("predicate:{name}:{}", u.predicates.len()), span);
                    u.predicates.push((name, args));
                }
                _ => return p.err("expected carrier, functions or predicates"),
            }
            p.end_line()
        });
        u
    }

    fn valuations(&mut self) -> PResult<Vec<(String, Vec<Value>)>> {
        let mut out = Vec::new();
        loop {
            let port = self.ident()?;
            let vals = if self.eat(&Tok::Eq) { self.value_list()? } else { Vec::new() };
            out.push((port, vals));
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn trace(&mut self) -> TraceUnit {
        let mut u = TraceUnit::default();
        let mut section = Section::None;
        self.lines(|p| {
            let span = p.span();
            let kw = match p.peek() {
                Tok::Ident(w) => w.clone(),
                _ => String::new(),
            };
            let in_component = section == Section::None && !u.components.is_empty();
            match kw.as_str() {
                "component" if u.steps.is_empty() => {
                    p.bump();
                    let id = p.ident()?;
                    let iface = if p.eat(&Tok::Colon) { Some(p.ident()?) } else { None };
                    p.record(format!("component:{id}"), span);
                    u.components.push(TraceComponent {
                        id,
                        iface,
                        local: vec![],
                        input: vec![],
                        output: vec![],
                        renames: vec![],
                    });
                    p.end_line()
                }
                "local" if in_component => {
                    p.bump();
                    let vals = p.valuations()?;
                    u.components.last_mut().expect("component").local.extend(vals);
                    p.end_line()
                }
                "input" | "output" if in_component => {
                    p.bump();
                    let names = p.names()?;
                    let c = u.components.last_mut().expect("component");
                    if kw == "input" {
                        c.input.extend(names);
                    } else {
                        c.output.extend(names);
                    }
                    p.end_line()
                }
                "rename" if in_component => {
                    p.bump();
                    let a = p.ident()?;
                    p.expect(&Tok::Implies)?;
                    let b = p.ident()?;
                    u.components.last_mut().expect("component").renames.push((a, b));
                    p.end_line()
                }
                "step" => {
                    p.bump();
                    let n = p.number()? as usize;
                    if n != u.steps.len() {
                        return p.err(format!("expected step {}, found step {n}", u.steps.len()));
                    }
                    p.record(format!("step:{n}"), span);
                    u.steps.push(TraceStep { index: n, active: vec![], conns: vec![] });
                    section = Section::Step;
                    p.end_line()
                }
                "active" if section == Section::Step => {
                    p.bump();
                    let id = p.ident()?;
                    p.record(format!("active:{}:{id}", u.steps.len() - 1), span);
                    u.steps.last_mut().expect("step").active.push(ActiveEntry { id, values: vec![] });
                    p.end_line()
                }
                "conn" if section == Section::Step => {
                    p.bump();
                    let l = p.link()?;
                    let s = u.steps.last_mut().expect("step");
                    p.record(format!("conn:{}:{}", s.index, s.conns.len()), span);
                    s.conns.push(l);
                    p.end_line()
                }
                _ if section == Section::Step => {
                    let vals = p.valuations()?;
                    let Some(a) = u.steps.last_mut().expect("step").active.last_mut() else {
                        return p.err("port values must follow an `active` line");
                    };
                    a.values.extend(vals);
                    p.end_line()
                }
                _ => p.err("expected component, step, active, conn or a port valuation"),
            }
        });
        u
    }

    // Formulas.

    fn expr(&mut self, min_bp: u8) -> PResult<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            let (l, r, op): (u8, u8, &str) = match self.peek() {
                Tok::Iff => (1, 2, "<->"),
                Tok::Implies => (2, 2, "->"),
                Tok::Or => (3, 4, "|"),
                Tok::And => (4, 5, "&"),
                Tok::Ident(w) if w == "U" || w == "W" => (5, 5, if w == "U" { "U" } else { "W" }),
                Tok::Eq => (7, 8, "="),
                Tok::Ident(w) if w == "in" => (7, 8, "in"),
                _ => return Ok(lhs),
            };
            if l < min_bp {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.expr(r)?;
            let (a, b) = (Box::new(lhs), Box::new(rhs));
            lhs = match op {
                "<->" => Expr::Bin(Connective::Iff, a, b),
                "->" => Expr::Bin(Connective::Implies, a, b),
                "|" => Expr::Bin(Connective::Or, a, b),
                "&" => Expr::Bin(Connective::And, a, b),
                "U" => Expr::Temporal2('U', a, b),
                "W" => Expr::Temporal2('W', a, b),
                "=" => Expr::Eq(a, b),
                _ => Expr::In(a, b),
            };
            if l == 7 && matches!(self.peek(), Tok::Eq) || l == 7 && self.at_word("in") {
                return self.err("comparisons do not chain; add parentheses");
            }
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            let e = self.expr(0)?;
            let e = if self.eat(&Tok::Arrow) { Expr::Link(Box::new(e), Box::new(self.expr(0)?)) } else { e };
            out.push(e);
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            self.expect(&Tok::Comma)?;
        }
    }

    fn binders(&mut self) -> PResult<Vec<BinderSyntax>> {
        let mut out = Vec::new();
        loop {
            if self.eat(&Tok::LParen) {
                let mut names = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    names.push(self.ident()?);
                }
                self.expect(&Tok::RParen)?;
                self.expect_word("in")?;
                out.push(BinderSyntax::In(names, self.expr(8)?));
            } else {
                let v = self.ident()?;
                if self.eat(&Tok::Colon) {
                    out.push(BinderSyntax::Typed(v, Some(self.sort()?)));
                } else if self.at_word("in") {
                    self.bump();
                    out.push(BinderSyntax::In(vec![v], self.expr(8)?));
                } else {
                    out.push(BinderSyntax::Typed(v, None));
                }
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Period)?;
        Ok(out)
    }

    fn prefix(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Expr::Not(Box::new(self.expr(6)?)))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::WellFounded => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let r = self.ident()?;
                self.expect(&Tok::RParen)?;
                Ok(Expr::WellFounded(r))
            }
            Tok::LParen => {
                self.bump();
                let mut items = vec![self.expr(0)?];
                while self.eat(&Tok::Comma) {
                    items.push(self.expr(0)?);
                }
                self.expect(&Tok::RParen)?;
                Ok(Expr::Tuple(items))
            }
            Tok::LBrace => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        items.push(self.expr(0)?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(Expr::SetLit(items))
            }
            Tok::Ident(w) => {
                match w.as_str() {
                    "forall" | "exists" => {
                        self.bump();
                        let q = if w == "forall" { Quantifier::Forall } else { Quantifier::Exists };
                        let bs = self.binders()?;
                        let body = self.expr(0)?;
                        return Ok(Expr::Quant(q, bs, Box::new(body)));
                    }
                    "not" => {
                        self.bump();
                        return Ok(Expr::Not(Box::new(self.expr(6)?)));
                    }
                    "true" | "false" => {
                        self.bump();
                        return Ok(Expr::Bool(w == "true"));
                    }
                    "X" | "F" | "G" => {
                        self.bump();
                        let c = w.chars().next().expect("nonempty");
                        return Ok(Expr::Temporal1(c, Box::new(self.expr(6)?)));
                    }
                    "U" | "W" | "in" => return self.err(format!("`{w}` needs a left operand")),
                    _ => {}
                }
                self.bump();
                match self.peek() {
                    Tok::LParen => Ok(Expr::Call(w, self.args()?)),
                    Tok::Dot => {
                        self.bump();
                        Ok(Expr::Field(w, self.ident()?))
                    }
                    _ => Ok(Expr::Name(w)),
                }
            }
            other => self.err(format!("expected a formula or term, found {}", other.describe())),
        }
    }
}

fn fail<T>(span: Span, msg: impl Into<String>) -> PResult<T> {
    Err(Diagnostic::error("parse", span, msg))
}

fn name_of(e: &Expr) -> Option<&str> {
    match e {
        Expr::Name(n) => Some(n),
        _ => None,
    }
}

fn port_of(e: &Expr, span: Span) -> PResult<PortRef> {
    match e {
        Expr::Field(o, p) => Ok(PortRef::new(o, p)),
        _ => fail(span, "expected `owner.port`"),
    }
}

fn link_of(args: &[Expr], what: &str, span: Span) -> PResult<(PortRef, PortRef)> {
    match args {
        [Expr::Link(a, b)] => Ok((port_of(a, span)?, port_of(b, span)?)),
        _ => fail(span, format!("{what} expects `v.input <- w.output`")),
    }
}

fn num_of(e: &Expr, span: Span) -> PResult<u32> {
    match e {
        Expr::Num(n) => Ok(*n),
        _ => fail(span, "expected a number"),
    }
}

fn to_term(e: &Expr, span: Span) -> PResult<Term> {
    match e {
        Expr::Name(n) => {
            if TEMPORAL.contains(&n.as_str()) {
                return fail(span, format!("`{n}` is a temporal operator, not a term"));
            }
            Ok(Term::Var(n.clone()))
        }
        Expr::Call(f, args) => Ok(Term::App(f.clone(), args.iter().map(|a| to_term(a, span)).collect::<PResult<_>>()?)),
        Expr::Field(v, p) => Ok(Term::PortOf(v.clone(), p.clone())),
        Expr::Tuple(items) if items.len() == 1 => to_term(&items[0], span),
        Expr::Tuple(items) if items.len() == 2 => Ok(Term::pair(to_term(&items[0], span)?, to_term(&items[1], span)?)),
        Expr::Tuple(_) => fail(span, "only pairs are supported"),
        Expr::SetLit(items) => Ok(Term::Set(items.iter().map(|a| to_term(a, span)).collect::<PResult<_>>()?)),
        _ => fail(span, "expected a term"),
    }
}

fn pattern_term(names: &[String]) -> Term {
    match names {
        [one] => Term::var(one),
        [a, b] => Term::pair(Term::var(a), Term::var(b)),
        _ => Term::Set(vec![]),
    }
}

fn to_formula(e: &Expr, span: Span) -> PResult<Formula> {
    Ok(match e {
        Expr::Bool(b) => Formula::Bool(*b),
        Expr::Not(a) => Formula::not(to_formula(a, span)?),
        Expr::Bin(c, a, b) => Formula::binary(*c, to_formula(a, span)?, to_formula(b, span)?),
        Expr::Eq(a, b) => Formula::Eq(to_term(a, span)?, to_term(b, span)?),
        Expr::In(a, b) => Formula::Member(to_term(a, span)?, to_term(b, span)?),
        Expr::Tuple(items) if items.len() == 1 => to_formula(&items[0], span)?,
        Expr::WellFounded(r) => Formula::WellFounded(r.clone()),
        Expr::Quant(q, binders, body) => {
            let mut f = to_formula(body, span)?;
            for b in binders.iter().rev() {
                f = match b {
                    BinderSyntax::Typed(v, sort) => Formula::Quant(*q, binder(v, sort), Box::new(f)),
                    BinderSyntax::In(names, t) => {
                        check_pattern(names, span)?;
                        let guard = Formula::Member(pattern_term(names), to_term(t, span)?);
                        let mut inner = match q {
                            Quantifier::Forall => Formula::implies(guard, f),
                            Quantifier::Exists => Formula::and(guard, f),
                        };
                        for n in names.iter().rev() {
                            inner = Formula::Quant(*q, binder(n, &None), Box::new(inner));
                        }
                        inner
                    }
                };
            }
            f
        }
        Expr::Call(name, args) => match name.as_str() {
            "active" => match args.as_slice() {
                [a] => {
                    Formula::Active(name_of(a).ok_or(()).or_else(|_| fail(span, "active expects a variable"))?.into())
                }
                _ => return fail(span, "active expects one variable"),
            },
            "conn" => {
                let (a, b) = link_of(args, "conn", span)?;
                Formula::Conn(a, b)
            }
            "irconn" => {
                let (a, b) = link_of(args, "irconn", span)?;
                Formula::IrConn(a, b)
            }
            "min" | "max" => match args.as_slice() {
                [i, n] => {
                    let i = name_of(i).ok_or(()).or_else(|_| fail(span, "expected an interface name"))?.to_string();
                    let n = num_of(n, span)?;
                    if name == "min" {
                        Formula::Min(i, n)
                    } else {
                        Formula::Max(i, n)
                    }
                }
                _ => return fail(span, format!("{name} expects an interface and a number")),
            },
            "minmax" => match args.as_slice() {
                [i, n, m] => Formula::MinMax(
                    name_of(i).ok_or(()).or_else(|_| fail(span, "expected an interface name"))?.into(),
                    num_of(n, span)?,
                    num_of(m, span)?,
                ),
                _ => return fail(span, "minmax expects an interface and two numbers"),
            },
            _ => Formula::Pred(name.clone(), args.iter().map(|a| to_term(a, span)).collect::<PResult<_>>()?),
        },
        Expr::Temporal1(..) | Expr::Temporal2(..) => return fail(span, "temporal operator in a state formula"),
        Expr::Name(n) => return fail(span, format!("expected a formula, found the name `{n}`")),
        _ => return fail(span, "expected a formula"),
    })
}

fn check_pattern(names: &[String], span: Span) -> PResult<()> {
    if names.len() > 2 {
        return fail(span, "patterns bind one name or a pair");
    }
    Ok(())
}

fn binder(v: &str, sort: &Option<Sort>) -> Binder {
    Binder { var: v.to_string(), domain: sort.clone().map(Domain::Sort).unwrap_or(Domain::Declared) }
}

fn to_trace(e: &Expr, span: Span) -> PResult<TraceFormula> {
    Ok(match e {
        Expr::Temporal1(c, a) => {
            let a = to_trace(a, span)?;
            match c {
                'X' => TraceFormula::next(a),
                'F' => TraceFormula::eventually(a),
                _ => TraceFormula::globally(a),
            }
        }
        Expr::Temporal2(c, a, b) => {
            let (a, b) = (to_trace(a, span)?, to_trace(b, span)?);
            if *c == 'U' {
                TraceFormula::until(a, b)
            } else {
                TraceFormula::weak_until(a, b)
            }
        }
        Expr::Not(a) => TraceFormula::not(to_trace(a, span)?),
        Expr::Bin(c, a, b) => TraceFormula::binary(*c, to_trace(a, span)?, to_trace(b, span)?),
        Expr::Tuple(items) if items.len() == 1 => to_trace(&items[0], span)?,
        Expr::Quant(q, binders, body) => {
            let mut f = to_trace(body, span)?;
            for b in binders.iter().rev() {
                f = match b {
                    BinderSyntax::Typed(v, sort) => TraceFormula::quant(*q, binder(v, sort), f),
                    BinderSyntax::In(names, t) => {
                        check_pattern(names, span)?;
                        let guard = TraceFormula::State(Formula::Member(pattern_term(names), to_term(t, span)?));
                        let mut inner = match q {
                            Quantifier::Forall => TraceFormula::implies(guard, f),
                            Quantifier::Exists => TraceFormula::and(guard, f),
                        };
                        for n in names.iter().rev() {
                            inner = TraceFormula::quant(*q, binder(n, &None), inner);
                        }
                        inner
                    }
                };
            }
            f
        }
        other => TraceFormula::State(to_formula(other, span)?),
    })
}
