//! Signatures, finite algebras and datatype specifications.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::eval::{Assignments, Binding, Env, EvalError, Evaluator, PureWorld};
use crate::syntax::{Binder, Domain, Formula, Term};
use crate::value::{Sort, Value};

/// Largest base carrier whose power set is enumerated.
pub const MAX_POWERSET_BASE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("sort {0} is not declared")]
    UndeclaredSort(String),
    #[error("no carrier given for sort {0}")]
    MissingCarrier(String),
    #[error("carrier of sort {0} is empty")]
    EmptyCarrier(String),
    #[error("symbol {0} is declared twice")]
    DuplicateSymbol(String),
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("function {name} has no entry for ({args})")]
    IncompleteFunction { name: String, args: String },
    #[error("{symbol}: value {value} is not in the carrier of {sort}")]
    OutsideCarrier { symbol: String, value: String, sort: Sort },
    #[error("{symbol} expects {expected} arguments, got {got}")]
    Arity { symbol: String, expected: usize, got: usize },
    #[error("carrier of set({sort}) would have 2^{size} elements; base carriers of set sorts are limited to {max}", max = MAX_POWERSET_BASE)]
    CarrierTooLarge { sort: Sort, size: usize },
    #[error("well-founded({0}) needs a binary predicate over a single sort")]
    NotARelation(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionType {
    pub args: Vec<Sort>,
    pub result: Sort,
}

/// Sorts plus typed function and predicate symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub sorts: BTreeSet<String>,
    pub functions: BTreeMap<String, FunctionType>,
    pub predicates: BTreeMap<String, Vec<Sort>>,
}

impl Signature {
    pub fn check_sort(&self, s: &Sort) -> Result<(), AlgebraError> {
        for n in s.names() {
            if !self.sorts.contains(n) {
                return Err(AlgebraError::UndeclaredSort(n.to_string()));
            }
        }
        Ok(())
    }

    /// All symbol sorts declared, no name used for both a function and a predicate.
    pub fn validate(&self) -> Result<(), AlgebraError> {
        for (name, ty) in &self.functions {
            if self.predicates.contains_key(name) {
                return Err(AlgebraError::DuplicateSymbol(name.clone()));
            }
            for s in ty.args.iter().chain(std::iter::once(&ty.result)) {
                self.check_sort(s)?;
            }
        }
        for args in self.predicates.values() {
            for s in args {
                self.check_sort(s)?;
            }
        }
        Ok(())
    }
}

/// Finite interpretation of a signature: carriers plus function and predicate tables.
pub struct Algebra {
    signature: Signature,
    carriers: BTreeMap<String, Arc<[Value]>>,
    functions: BTreeMap<String, BTreeMap<Vec<Value>, Value>>,
    predicates: BTreeMap<String, BTreeSet<Vec<Value>>>,
    cache: RwLock<HashMap<Sort, Arc<[Value]>>>,
}

impl Clone for Algebra {
    fn clone(&self) -> Self {
        Algebra {
            signature: self.signature.clone(),
            carriers: self.carriers.clone(),
            functions: self.functions.clone(),
            predicates: self.predicates.clone(),
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Algebra")
            .field("carriers", &self.carriers)
            .field("functions", &self.functions)
            .field("predicates", &self.predicates)
            .finish()
    }
}

impl Algebra {
    /// Validates carriers and tables against the signature. Function tables
    /// must be total over the product of their argument carriers.
    pub fn new(
        signature: Signature,
        carriers: BTreeMap<String, BTreeSet<Value>>,
        functions: BTreeMap<String, BTreeMap<Vec<Value>, Value>>,
        predicates: BTreeMap<String, BTreeSet<Vec<Value>>>,
    ) -> Result<Self, AlgebraError> {
        signature.validate()?;
        for s in carriers.keys() {
            if !signature.sorts.contains(s) {
                return Err(AlgebraError::UndeclaredSort(s.clone()));
            }
        }
        let mut stored = BTreeMap::new();
        for s in &signature.sorts {
            let c = carriers.get(s).ok_or_else(|| AlgebraError::MissingCarrier(s.clone()))?;
            if c.is_empty() {
                return Err(AlgebraError::EmptyCarrier(s.clone()));
            }
            stored.insert(s.clone(), c.iter().cloned().collect::<Arc<[Value]>>());
        }
        for name in functions.keys().chain(predicates.keys()) {
            if !signature.functions.contains_key(name) && !signature.predicates.contains_key(name) {
                return Err(AlgebraError::UnknownSymbol(name.clone()));
            }
        }
        let alg = Algebra { signature, carriers: stored, functions, predicates, cache: RwLock::new(HashMap::new()) };
        alg.validate_tables()?;
        Ok(alg)
    }

    fn validate_tables(&self) -> Result<(), AlgebraError> {
        for (name, ty) in &self.signature.functions {
            let empty = BTreeMap::new();
            let table = self.functions.get(name).unwrap_or(&empty);
            for (args, result) in table {
                self.check_tuple(name, &ty.args, args)?;
                if !self.contains(&ty.result, result) {
                    return Err(AlgebraError::OutsideCarrier {
                        symbol: name.clone(),
                        value: result.to_string(),
                        sort: ty.result.clone(),
                    });
                }
            }
            let domains: Vec<Arc<[Value]>> = ty.args.iter().map(|s| self.carrier(s)).collect::<Result<_, _>>()?;
            for args in product(&domains) {
                if !table.contains_key(&args) {
                    return Err(AlgebraError::IncompleteFunction { name: name.clone(), args: show_args(&args) });
                }
            }
        }
        for (name, args_sorts) in &self.signature.predicates {
            if let Some(tuples) = self.predicates.get(name) {
                for t in tuples {
                    self.check_tuple(name, args_sorts, t)?;
                }
            }
        }
        Ok(())
    }

    fn check_tuple(&self, symbol: &str, sorts: &[Sort], args: &[Value]) -> Result<(), AlgebraError> {
        if sorts.len() != args.len() {
            return Err(AlgebraError::Arity { symbol: symbol.to_string(), expected: sorts.len(), got: args.len() });
        }
        for (s, v) in sorts.iter().zip(args) {
            if !self.contains(s, v) {
                return Err(AlgebraError::OutsideCarrier {
                    symbol: symbol.to_string(),
                    value: v.to_string(),
                    sort: s.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Elements of a sort, in ascending order. Composite carriers are cached.
    pub fn carrier(&self, sort: &Sort) -> Result<Arc<[Value]>, AlgebraError> {
        if let Sort::Named(n) = sort {
            return self.carriers.get(n).cloned().ok_or_else(|| AlgebraError::UndeclaredSort(n.clone()));
        }
        if let Some(c) = self.cache.read().expect("carrier cache poisoned").get(sort) {
            return Ok(c.clone());
        }
        let built: Arc<[Value]> = match sort {
            Sort::Named(_) => unreachable!(),
            Sort::Pair(a, b) => {
                let ca = self.carrier(a)?;
                let cb = self.carrier(b)?;
                let mut out = Vec::with_capacity(ca.len() * cb.len());
                for x in ca.iter() {
                    for y in cb.iter() {
                        out.push(Value::pair(x.clone(), y.clone()));
                    }
                }
                out.sort();
                out.into()
            }
            Sort::Set(inner) => {
                let base = self.carrier(inner)?;
                if base.len() > MAX_POWERSET_BASE {
                    return Err(AlgebraError::CarrierTooLarge { sort: (**inner).clone(), size: base.len() });
                }
                let mut out = Vec::with_capacity(1 << base.len());
                for mask in 0u32..(1u32 << base.len()) {
                    let items = base.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| v.clone());
                    out.push(Value::set(items));
                }
                out.sort();
                out.into()
            }
        };
        self.cache.write().expect("carrier cache poisoned").insert(sort.clone(), built.clone());
        Ok(built)
    }

    /// Membership of a value in the carrier of a sort, without enumerating it.
    pub fn contains(&self, sort: &Sort, v: &Value) -> bool {
        match (sort, v) {
            (Sort::Named(n), Value::Atom(_)) => self.carriers.get(n).is_some_and(|c| c.binary_search(v).is_ok()),
            (Sort::Pair(a, b), Value::Pair(p)) => self.contains(a, &p.0) && self.contains(b, &p.1),
            (Sort::Set(s), Value::Set(items)) => items.iter().all(|x| self.contains(s, x)),
            _ => false,
        }
    }

    pub fn apply(&self, f: &str, args: &[Value]) -> Option<&Value> {
        self.functions.get(f)?.get(args)
    }

    pub fn holds(&self, p: &str, args: &[Value]) -> bool {
        self.predicates.get(p).is_some_and(|t| t.contains(args))
    }

    pub fn function_table(&self, f: &str) -> Option<&BTreeMap<Vec<Value>, Value>> {
        self.functions.get(f)
    }

    pub fn predicate_table(&self, p: &str) -> Option<&BTreeSet<Vec<Value>>> {
        self.predicates.get(p)
    }

    /// Acyclicity of a binary predicate over one sort (finite well-foundedness).
    pub fn check_well_founded(&self, pred: &str) -> Result<bool, AlgebraError> {
        let sorts = self.signature.predicates.get(pred).ok_or_else(|| AlgebraError::UnknownSymbol(pred.to_string()))?;
        if sorts.len() != 2 || sorts[0] != sorts[1] {
            return Err(AlgebraError::NotARelation(pred.to_string()));
        }
        let mut succ: BTreeMap<&Value, Vec<&Value>> = BTreeMap::new();
        if let Some(tuples) = self.predicates.get(pred) {
            for t in tuples {
                succ.entry(&t[0]).or_default().push(&t[1]);
            }
        }
        Ok(!has_cycle(&succ))
    }
}

fn has_cycle(succ: &BTreeMap<&Value, Vec<&Value>>) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&Value, Mark> = BTreeMap::new();
    for &start in succ.keys() {
        if marks.contains_key(start) {
            continue;
        }
        let mut stack: Vec<(&Value, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some(top) = stack.last_mut() {
            let (node, idx) = *top;
            let next = succ.get(node).and_then(|s| s.get(idx)).copied();
            match next {
                Some(n) => {
                    top.1 += 1;
                    match marks.get(n) {
                        Some(Mark::Open) => return true,
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(n, Mark::Open);
                            stack.push((n, 0));
                        }
                    }
                }
                None => {
                    marks.insert(node, Mark::Done);
                    stack.pop();
                }
            }
        }
    }
    false
}

/// Cartesian product of value lists, in lexicographic order.
pub fn product(domains: &[Arc<[Value]>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for prefix in &out {
            for v in d.iter() {
                let mut t = prefix.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn show_args(args: &[Value]) -> String {
    args.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

/// Datatype specification: signature, variable declarations and axioms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DatatypeSpec {
    pub signature: Signature,
    pub vars: BTreeMap<String, Sort>,
    pub axioms: Vec<(String, Formula)>,
}

/// An axiom that fails, with the first falsifying assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomFailure {
    pub label: String,
    pub assignment: Vec<(String, String)>,
}

/// Value of a datatype term under a total assignment of its variables.
pub fn eval_term(alg: &Algebra, asg: &BTreeMap<String, Value>, t: &Term) -> Result<Value, EvalError> {
    let ev = Evaluator::new(alg, &PureWorld);
    let mut env = Env::from_data(asg);
    ev.term_strict(t, &mut env)
}

/// Truth of a datatype assertion under an assignment of its free variables.
pub fn assertion_holds(alg: &Algebra, asg: &BTreeMap<String, Value>, phi: &Formula) -> Result<bool, EvalError> {
    let ev = Evaluator::new(alg, &PureWorld);
    let mut env = Env::from_data(asg);
    ev.holds(phi, &mut env)
}

/// Axioms that are false under some assignment of their free variables.
pub fn failing_axioms(alg: &Algebra, spec: &DatatypeSpec) -> Result<Vec<AxiomFailure>, EvalError> {
    let ev = Evaluator::new(alg, &PureWorld);
    let mut failures = Vec::new();
    for (label, phi) in &spec.axioms {
        let binders: Vec<Binder> = phi
            .free_vars()
            .into_iter()
            .map(|v| {
                let sort = spec.vars.get(&v).cloned().ok_or_else(|| EvalError::Unbound(v.clone()))?;
                Ok(Binder { var: v, domain: Domain::Sort(sort) })
            })
            .collect::<Result<_, EvalError>>()?;
        let domains = ev.domains(&binders)?;
        let mut env = Env::default();
        for b in &binders {
            env.push(&b.var, Binding::Data(Value::atom("")));
        }
        let base = env.len() - binders.len();
        let mut asg = Assignments::new(&domains);
        while let Some(choice) = asg.next_choice() {
            for (i, b) in choice.iter().enumerate() {
                env.set(base + i, b.clone());
            }
            if !ev.holds(phi, &mut env)? {
                failures.push(AxiomFailure {
                    label: label.clone(),
                    assignment: binders.iter().zip(choice).map(|(b, v)| (b.var.clone(), v.to_string())).collect(),
                });
                break;
            }
        }
    }
    Ok(failures)
}

/// Whether the algebra satisfies every axiom under every assignment.
pub fn models_spec(alg: &Algebra, spec: &DatatypeSpec) -> Result<bool, EvalError> {
    Ok(failing_axioms(alg, spec)?.is_empty())
}
