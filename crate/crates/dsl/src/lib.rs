//! Textual syntax for specification bundles, algebras and traces.

pub mod ast;
pub mod diagnostics;
pub mod lexer;
pub mod load;
pub mod parser;
pub mod printer;
pub mod resolve;

pub use ast::{ParsedUnit, SourceUnit, UnitKind};
pub use diagnostics::{Diagnostic, Severity, Span};
pub use load::{load_algebra, load_trace};
pub use parser::parse_unit;
pub use printer::print_unit;
pub use resolve::{resolve, Bundle};
