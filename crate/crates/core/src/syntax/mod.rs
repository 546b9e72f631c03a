//! Concrete syntax for annotated Core P4: lexer, recursive-descent parser,
//! AST, pretty printer, and typedef resolution.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod types;

pub use ast::*;
pub use lexer::{lex, Token, TokenKind};
pub use parser::{parse_expr, parse_program};
pub use pretty::{pretty_block, pretty_expr, pretty_program, pretty_stmt};
pub use types::{Direction, FnTy, SecTy, Ty, TypeDefs, TypeError, MAX_BIT_WIDTH};

use std::fmt;

use thiserror::Error;

/// A 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{span}: lex error: {message}")]
    Lex { span: Span, message: String },
    #[error("{span}: parse error: {message}")]
    Parse { span: Span, message: String },
    #[error("{span}: unknown security label `{label}`")]
    UnknownLabel { span: Span, label: String },
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex { span, .. }
            | SyntaxError::Parse { span, .. }
            | SyntaxError::UnknownLabel { span, .. } => *span,
        }
    }
}
