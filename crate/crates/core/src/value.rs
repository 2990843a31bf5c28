//! Sorts and carrier values.
//!
//! Values are structural: atoms name elements of a declared carrier, pairs and
//! sets are built from the sort constructors `pair(S, T)` and `set(S)`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A sort expression over declared sort names.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    Named(String),
    Pair(Box<Sort>, Box<Sort>),
    Set(Box<Sort>),
}

impl Sort {
    pub fn named(name: impl Into<String>) -> Self {
        Sort::Named(name.into())
    }

    pub fn pair(a: Sort, b: Sort) -> Self {
        Sort::Pair(Box::new(a), Box::new(b))
    }

    pub fn set(s: Sort) -> Self {
        Sort::Set(Box::new(s))
    }

    /// Sort of the messages a port of this declared sort carries.
    ///
    /// `set(T)` ports carry messages of `T`; any other sort carries itself.
    pub fn message_sort(&self) -> &Sort {
        match self {
            Sort::Set(inner) => inner,
            other => other,
        }
    }

    /// Sort of a port term whose port is declared with this sort.
    pub fn port_term_sort(&self) -> Sort {
        Sort::set(self.message_sort().clone())
    }

    /// Declared sort names mentioned by this sort expression.
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Sort::Named(n) => out.push(n),
            Sort::Pair(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Sort::Set(s) => s.collect_names(out),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Named(n) => write!(f, "{n}"),
            Sort::Pair(a, b) => write!(f, "pair({a}, {b})"),
            Sort::Set(s) => write!(f, "set({s})"),
        }
    }
}

/// Set of messages, shared cheaply between valuations and term values.
pub type MessageSet = Arc<BTreeSet<Value>>;

/// An element of some carrier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Atom(Arc<str>),
    Pair(Arc<(Value, Value)>),
    Set(MessageSet),
}

impl Value {
    pub fn atom(name: &str) -> Self {
        Value::Atom(Arc::from(name))
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Arc::new((a, b)))
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Set(Arc::new(items.into_iter().collect()))
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write!(f, "{a}"),
            Value::Pair(p) => write!(f, "({}, {})", p.0, p.1),
            Value::Set(s) => {
                write!(f, "{{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Builds a message set from atom names.
pub fn atoms<'a>(names: impl IntoIterator<Item = &'a str>) -> MessageSet {
    Arc::new(names.into_iter().map(Value::atom).collect())
}

/// Formats a message set as `{a, b}`.
pub fn show_set(set: &BTreeSet<Value>) -> String {
    let items: Vec<String> = set.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}
