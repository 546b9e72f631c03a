use std::sync::Arc;

use super::{Direction, SecTy, Span};
use crate::lattice::Label;

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    Bit { width: u32, value: u128 },
    Var(String),
    Index(Box<Expr>, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Record(Vec<(String, Expr)>),
    Member(Box<Expr>, String),
    Call(Box<Expr>, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::BitOr => 5,
            BinOp::BitXor => 6,
            BinOp::BitAnd => 7,
            BinOp::Add | BinOp::Sub => 8,
            BinOp::Mul => 9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    /// A call used as a statement. The callee may be a function or a table.
    Call(Expr),
    /// `t.apply();`, sugar for the table call `t()`.
    Apply(Expr),
    Assign(Expr, Expr),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    Block(Block),
    Exit,
    Return(Option<Expr>),
    Decl(Decl),
}

impl Stmt {
    /// True if `exit` or `return` occurs anywhere inside, including in nested
    /// blocks. Function bodies declared inside are not searched.
    pub fn has_exit_or_return(&self) -> bool {
        match &self.kind {
            StmtKind::Exit | StmtKind::Return(_) => true,
            StmtKind::If(_, t, e) => {
                t.has_exit_or_return() || e.as_ref().is_some_and(|e| e.has_exit_or_return())
            }
            StmtKind::Block(b) => b.stmts.iter().any(Stmt::has_exit_or_return),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeclKind {
    Var {
        ty: SecTy,
        name: String,
        init: Option<Expr>,
    },
    Type(TypeDecl),
    Table(Arc<TableDecl>),
    Function(Arc<FunctionDecl>),
}

impl Decl {
    /// The name this declaration binds, if any.
    pub fn name(&self) -> Option<&str> {
        match &self.kind {
            DeclKind::Var { name, .. } => Some(name),
            DeclKind::Type(t) => t.name(),
            DeclKind::Table(t) => Some(&t.name),
            DeclKind::Function(f) => Some(&f.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeDecl {
    pub kind: TypeDeclKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TypeDeclKind {
    Header {
        name: String,
        fields: Vec<FieldDecl>,
    },
    Struct {
        name: String,
        fields: Vec<FieldDecl>,
    },
    Typedef {
        name: String,
        ty: SecTy,
    },
    MatchKind {
        members: Vec<String>,
    },
}

impl TypeDecl {
    pub fn name(&self) -> Option<&str> {
        match &self.kind {
            TypeDeclKind::Header { name, .. }
            | TypeDeclKind::Struct { name, .. }
            | TypeDeclKind::Typedef { name, .. } => Some(name),
            TypeDeclKind::MatchKind { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecl {
    pub ty: SecTy,
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub dir: Direction,
    pub ty: SecTy,
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub is_action: bool,
    /// Explicit `@pc(label)` annotation; inferred when absent.
    pub pc: Option<Label>,
    pub ret: SecTy,
    pub params: Vec<Param>,
    /// Directionless parameters supplied by the control plane.
    pub cp_params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableDecl {
    pub name: String,
    pub keys: Vec<Key>,
    pub actions: Vec<ActionRef>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Key {
    pub expr: Expr,
    pub match_kind: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionRef {
    pub name: String,
    /// Arguments bound in the table declaration, `None` for a bare name.
    pub args: Option<Vec<Expr>>,
    pub span: Span,
}

impl ActionRef {
    pub fn bound_args(&self) -> &[Expr] {
        self.args.as_deref().unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Control {
    pub name: String,
    pub params: Vec<Param>,
    pub decls: Vec<Decl>,
    pub apply: Block,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub type_decls: Vec<TypeDecl>,
    pub control: Control,
}

impl Program {
    /// All statements of the program in source order: the apply block and
    /// every function body, recursively.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk_stmt<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
            out.push(s);
            match &s.kind {
                StmtKind::If(_, t, e) => {
                    walk_stmt(t, out);
                    if let Some(e) = e {
                        walk_stmt(e, out);
                    }
                }
                StmtKind::Block(b) => b.stmts.iter().for_each(|s| walk_stmt(s, out)),
                StmtKind::Decl(d) => walk_decl(d, out),
                _ => {}
            }
        }
        fn walk_decl<'a>(d: &'a Decl, out: &mut Vec<&'a Stmt>) {
            if let DeclKind::Function(f) = &d.kind {
                f.body.stmts.iter().for_each(|s| walk_stmt(s, out));
            }
        }
        let mut out = Vec::new();
        for d in &self.control.decls {
            walk_decl(d, &mut out);
        }
        for s in &self.control.apply.stmts {
            walk_stmt(s, &mut out);
        }
        out
    }
}
