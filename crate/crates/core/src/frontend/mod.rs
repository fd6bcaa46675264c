//! Lexing, parsing, printing and plain-subset validation of `.cloak` sources.

pub mod ast;
pub mod diagnostics;
pub mod lexer;
mod parser;
mod printer;
mod strip;
mod validate;

pub use diagnostics::{line_col, DiagCode, Diagnostic, Severity, Span};
pub use parser::{parse, parse_expression};
pub use printer::{function_header, print_contract, print_expr, print_function, print_param, print_source, print_type, print_var_decl};
pub use strip::{strip_annotations, strip_contract};
pub use validate::{validate_subset, Ty};
