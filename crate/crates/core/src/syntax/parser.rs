//! Recursive-descent parser.
//!
//! ```text
//! program   := type_decl* control
//! type_decl := header X { field* } | struct X { field* } | typedef sectype X ;
//!            | match_kind { id, ... }
//! control   := control X ( params ) { decl* apply block }
//! sectype   := < type , label > ([n])* | type
//! type      := (bool | int | bit<n> | void | X) ([n])*
//! params    := [param, ...] [; cp_param, ...]
//! ```

use std::sync::Arc;

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use super::{Direction, SecTy, Span, SyntaxError, Ty, MAX_BIT_WIDTH};
use crate::lattice::{Label, Lattice};

const KEYWORDS: &[&str] = &[
    "control",
    "apply",
    "action",
    "function",
    "table",
    "if",
    "else",
    "exit",
    "return",
    "header",
    "struct",
    "typedef",
    "match_kind",
    "true",
    "false",
    "bool",
    "int",
    "bit",
    "void",
    "in",
    "inout",
];

/// Parses a whole program. Labels in annotations must belong to `lattice`;
/// unannotated types get its bottom element.
pub fn parse_program(source: &str, lattice: &Lattice) -> Result<Program, SyntaxError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        lattice,
    };
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

/// Parses a single expression; used by tests and the test generator.
pub fn parse_expr(source: &str, lattice: &Lattice) -> Result<Expr, SyntaxError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        lattice,
    };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    lattice: &'a Lattice,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        self.peek_at(0)
    }

    fn peek_at(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn span(&self) -> Span {
        self.peek().span
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_sym_at(&self, n: usize, s: &str) -> bool {
        matches!(&self.peek_at(n).kind, TokenKind::Sym(x) if *x == s)
    }

    fn is_sym(&self, s: &str) -> bool {
        self.is_sym_at(0, s)
    }

    fn is_kw_at(&self, n: usize, k: &str) -> bool {
        matches!(&self.peek_at(n).kind, TokenKind::Ident(x) if x == k)
    }

    fn is_kw(&self, k: &str) -> bool {
        self.is_kw_at(0, k)
    }

    fn is_plain_ident_at(&self, n: usize) -> bool {
        matches!(&self.peek_at(n).kind, TokenKind::Ident(x) if !KEYWORDS.contains(&x.as_str()))
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError::Parse {
            span: self.span(),
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match &self.peek().kind {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Int(v) => format!("`{v}`"),
            TokenKind::Sized { value, width } => format!("`{value}:{width}`"),
            TokenKind::Sym(s) => format!("`{s}`"),
            TokenKind::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<Span> {
        if self.is_sym(s) {
            Ok(self.advance().span)
        } else {
            self.error(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<Span> {
        if self.is_kw(k) {
            Ok(self.advance().span)
        } else {
            self.error(format!("expected `{k}`, found {}", self.describe()))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        if self.is_plain_ident_at(0) {
            match self.advance().kind {
                TokenKind::Ident(s) => Ok(s),
                _ => unreachable!(),
            }
        } else {
            self.error(format!("expected identifier, found {}", self.describe()))
        }
    }

    fn expect_usize(&mut self) -> PResult<usize> {
        match self.peek().kind {
            TokenKind::Int(v) if v <= u32::MAX as u128 => {
                self.advance();
                Ok(v as usize)
            }
            _ => self.error(format!("expected a size, found {}", self.describe())),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            self.error(format!(
                "unexpected {} after end of program",
                self.describe()
            ))
        }
    }

    fn label(&mut self) -> PResult<Label> {
        let span = self.span();
        let name = match &self.peek().kind {
            TokenKind::Ident(s) => s.clone(),
            _ => {
                return self.error(format!(
                    "expected a security label, found {}",
                    self.describe()
                ))
            }
        };
        self.advance();
        self.lattice
            .label(&name)
            .map_err(|_| SyntaxError::UnknownLabel { span, label: name })
    }

    // ---- types ----

    fn sectype(&mut self) -> PResult<SecTy> {
        let mut t = if self.eat_sym("<") {
            let inner = self.ty()?;
            self.expect_sym(",")?;
            let label = self.label()?;
            self.expect_sym(">")?;
            inner.raise(label, self.lattice)
        } else {
            return self.ty();
        };
        while self.is_sym("[") {
            self.advance();
            let n = self.expect_usize()?;
            self.expect_sym("]")?;
            t = SecTy::new(Ty::Stack(Box::new(t), n), self.lattice.bottom());
        }
        Ok(t)
    }

    fn ty(&mut self) -> PResult<SecTy> {
        let bot = self.lattice.bottom();
        let base = if self.eat_kw("bool") {
            Ty::Bool
        } else if self.eat_kw("int") {
            Ty::Int
        } else if self.eat_kw("void") {
            Ty::Unit
        } else if self.is_kw("bit") {
            self.advance();
            self.expect_sym("<")?;
            let span = self.span();
            let w = self.expect_usize()?;
            if w == 0 || w > MAX_BIT_WIDTH as usize {
                return Err(SyntaxError::Parse {
                    span,
                    message: format!("bit width {w} is outside 1..={MAX_BIT_WIDTH}"),
                });
            }
            self.expect_sym(">")?;
            Ty::Bit(w as u32)
        } else if self.is_plain_ident_at(0) {
            Ty::Named(self.expect_ident()?)
        } else if self.is_sym("<") {
            return self.sectype();
        } else {
            return self.error(format!("expected a type, found {}", self.describe()));
        };
        let mut t = SecTy::new(base, bot);
        while self.is_sym("[") {
            self.advance();
            let n = self.expect_usize()?;
            self.expect_sym("]")?;
            t = SecTy::new(Ty::Stack(Box::new(t), n), bot);
        }
        Ok(t)
    }

    // ---- declarations ----

    fn program(&mut self) -> PResult<Program> {
        let mut type_decls = Vec::new();
        while !self.is_kw("control") {
            if self.peek().kind == TokenKind::Eof {
                return self.error("expected a control block");
            }
            type_decls.push(self.type_decl()?);
        }
        let control = self.control()?;
        Ok(Program {
            type_decls,
            control,
        })
    }

    fn starts_type_decl(&self) -> bool {
        ["header", "struct", "typedef", "match_kind"]
            .iter()
            .any(|k| self.is_kw(k))
    }

    fn type_decl(&mut self) -> PResult<TypeDecl> {
        let span = self.span();
        let kind = if self.eat_kw("header") || self.eat_kw("struct") {
            let is_header =
                matches!(&self.toks[self.pos - 1].kind, TokenKind::Ident(k) if k == "header");
            let name = self.expect_ident()?;
            self.expect_sym("{")?;
            let mut fields = Vec::new();
            while !self.eat_sym("}") {
                let fspan = self.span();
                let ty = self.sectype()?;
                let fname = self.expect_ident()?;
                self.expect_sym(";")?;
                fields.push(FieldDecl {
                    ty,
                    name: fname,
                    span: fspan,
                });
            }
            if is_header {
                TypeDeclKind::Header { name, fields }
            } else {
                TypeDeclKind::Struct { name, fields }
            }
        } else if self.eat_kw("typedef") {
            let ty = self.sectype()?;
            let name = self.expect_ident()?;
            self.expect_sym(";")?;
            TypeDeclKind::Typedef { name, ty }
        } else if self.eat_kw("match_kind") {
            self.expect_sym("{")?;
            let mut members = vec![self.expect_ident()?];
            while self.eat_sym(",") {
                if self.is_sym("}") {
                    break;
                }
                members.push(self.expect_ident()?);
            }
            self.expect_sym("}")?;
            TypeDeclKind::MatchKind { members }
        } else {
            return self.error(format!(
                "expected `header`, `struct`, `typedef`, or `match_kind`, found {}",
                self.describe()
            ));
        };
        Ok(TypeDecl { kind, span })
    }

    fn control(&mut self) -> PResult<Control> {
        let span = self.expect_kw("control")?;
        let name = self.expect_ident()?;
        let (params, cp) = self.params()?;
        if let Some(p) = cp.first() {
            return Err(SyntaxError::Parse {
                span: p.span,
                message: "control parameters cannot be control-plane parameters".into(),
            });
        }
        self.expect_sym("{")?;
        let mut decls = Vec::new();
        while !self.is_kw("apply") {
            decls.push(self.decl()?);
        }
        self.advance();
        let apply = self.block()?;
        self.expect_sym("}")?;
        Ok(Control {
            name,
            params,
            decls,
            apply,
            span,
        })
    }

    fn params(&mut self) -> PResult<(Vec<Param>, Vec<Param>)> {
        self.expect_sym("(")?;
        let mut params = Vec::new();
        let mut cp = Vec::new();
        if !self.is_sym(")") && !self.is_sym(";") {
            params.push(self.param(true)?);
            while self.eat_sym(",") {
                params.push(self.param(true)?);
            }
        }
        if self.eat_sym(";") && !self.is_sym(")") {
            cp.push(self.param(false)?);
            while self.eat_sym(",") {
                cp.push(self.param(false)?);
            }
        }
        self.expect_sym(")")?;
        Ok((params, cp))
    }

    fn param(&mut self, directed: bool) -> PResult<Param> {
        let span = self.span();
        let dir = if self.is_kw("in") || self.is_kw("inout") {
            if !directed {
                return self.error("control-plane parameters take no direction");
            }
            if self.advance().kind == TokenKind::Ident("in".into()) {
                Direction::In
            } else {
                Direction::InOut
            }
        } else {
            Direction::In
        };
        let ty = self.sectype()?;
        let name = self.expect_ident()?;
        Ok(Param {
            dir,
            ty,
            name,
            span,
        })
    }

    fn starts_decl(&self) -> bool {
        if self.is_sym("<") || self.is_sym("@") || self.starts_type_decl() {
            return true;
        }
        if ["bool", "int", "bit", "void", "action", "function", "table"]
            .iter()
            .any(|k| self.is_kw(k))
        {
            return true;
        }
        if self.is_plain_ident_at(0) {
            if self.is_plain_ident_at(1) {
                return true;
            }
            // `T[4] x;` declares a stack; `s[4] = ...` indexes one
            let mut n = 1;
            while self.is_sym_at(n, "[")
                && matches!(self.peek_at(n + 1).kind, TokenKind::Int(_))
                && self.is_sym_at(n + 2, "]")
            {
                n += 3;
            }
            return n > 1 && self.is_plain_ident_at(n);
        }
        false
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.span();
        if self.starts_type_decl() {
            return Ok(Decl {
                kind: DeclKind::Type(self.type_decl()?),
                span,
            });
        }
        let mut pc = None;
        if self.eat_sym("@") {
            let at = self.span();
            let ann = self.expect_ident()?;
            if ann != "pc" {
                return Err(SyntaxError::Parse {
                    span: at,
                    message: format!("unknown annotation `@{ann}`"),
                });
            }
            self.expect_sym("(")?;
            pc = Some(self.label()?);
            self.expect_sym(")")?;
            if !self.is_kw("action") && !self.is_kw("function") {
                return self.error("`@pc` must precede an action or function");
            }
        }
        if self.eat_kw("action") {
            let name = self.expect_ident()?;
            let (params, cp_params) = self.params()?;
            let body = self.block()?;
            let f = FunctionDecl {
                name,
                is_action: true,
                pc,
                ret: SecTy::new(Ty::Unit, self.lattice.bottom()),
                params,
                cp_params,
                body,
                span,
            };
            return Ok(Decl {
                kind: DeclKind::Function(Arc::new(f)),
                span,
            });
        }
        if self.eat_kw("function") {
            let ret = self.sectype()?;
            let name = self.expect_ident()?;
            let (params, cp_params) = self.params()?;
            let body = self.block()?;
            let f = FunctionDecl {
                name,
                is_action: false,
                pc,
                ret,
                params,
                cp_params,
                body,
                span,
            };
            return Ok(Decl {
                kind: DeclKind::Function(Arc::new(f)),
                span,
            });
        }
        if self.is_kw("table") {
            return Ok(Decl {
                kind: DeclKind::Table(Arc::new(self.table()?)),
                span,
            });
        }
        let ty = self.sectype()?;
        let name = self.expect_ident()?;
        let init = if self.eat_sym("=") || self.eat_sym(":=") {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect_sym(";")?;
        Ok(Decl {
            kind: DeclKind::Var { ty, name, init },
            span,
        })
    }

    fn table(&mut self) -> PResult<TableDecl> {
        let span = self.expect_kw("table")?;
        let name = self.expect_ident()?;
        self.expect_sym("{")?;
        let mut keys = Vec::new();
        if self.is_kw("key") {
            self.advance();
            self.expect_sym("=")?;
            self.expect_sym("{")?;
            while !self.eat_sym("}") {
                let kspan = self.span();
                let expr = self.expr()?;
                self.expect_sym(":")?;
                let match_kind = self.expect_ident()?;
                self.expect_sym(";")?;
                keys.push(Key {
                    expr,
                    match_kind,
                    span: kspan,
                });
            }
        }
        if !(self.eat_kw("actions") || self.eat_kw("action")) {
            return self.error(format!("expected `actions`, found {}", self.describe()));
        }
        self.expect_sym("=")?;
        self.expect_sym("{")?;
        let mut actions = Vec::new();
        while !self.eat_sym("}") {
            let aspan = self.span();
            let aname = self.expect_ident()?;
            let args = if self.is_sym("(") {
                Some(self.args()?)
            } else {
                None
            };
            self.expect_sym(";")?;
            actions.push(ActionRef {
                name: aname,
                args,
                span: aspan,
            });
        }
        self.expect_sym("}")?;
        Ok(TableDecl {
            name,
            keys,
            actions,
            span,
        })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        let span = self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.eat_sym("}") {
            if self.peek().kind == TokenKind::Eof {
                return self.error("unclosed block");
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts, span })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = if self.is_sym("{") {
            StmtKind::Block(self.block()?)
        } else if self.eat_kw("if") {
            self.expect_sym("(")?;
            let guard = self.expr()?;
            self.expect_sym(")")?;
            let then = self.stmt()?;
            let els = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            StmtKind::If(guard, Box::new(then), els)
        } else if self.eat_kw("exit") {
            self.expect_sym(";")?;
            StmtKind::Exit
        } else if self.eat_kw("return") {
            let e = if self.is_sym(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_sym(";")?;
            StmtKind::Return(e)
        } else if self.starts_decl() {
            StmtKind::Decl(self.decl()?)
        } else {
            let lhs = self.expr()?;
            if self.eat_sym("=") || self.eat_sym(":=") {
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Assign(lhs, rhs)
            } else {
                self.expect_sym(";")?;
                match lhs.kind {
                    ExprKind::Call(callee, args) => match callee.kind {
                        ExprKind::Member(table, m) if m == "apply" && args.is_empty() => {
                            StmtKind::Apply(*table)
                        }
                        kind => StmtKind::Call(Expr {
                            kind: ExprKind::Call(
                                Box::new(Expr {
                                    kind,
                                    span: callee.span,
                                }),
                                args,
                            ),
                            span: lhs.span,
                        }),
                    },
                    _ => {
                        return Err(SyntaxError::Parse {
                            span,
                            message: "expected an assignment or a call".into(),
                        })
                    }
                }
            }
        };
        Ok(Stmt { kind, span })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let op = match &self.peek().kind {
            TokenKind::Sym(s) => match *s {
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "==" => BinOp::Eq,
                "!=" => BinOp::Ne,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                "&&" => BinOp::And,
                "||" => BinOp::Or,
                "&" => BinOp::BitAnd,
                "|" => BinOp::BitOr,
                "^" => BinOp::BitXor,
                _ => return None,
            },
            _ => return None,
        };
        Some(op)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.postfix()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr {
                span: lhs.span,
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            args.push(self.expr()?);
            while self.eat_sym(",") {
                args.push(self.expr()?);
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.eat_sym(".") {
                let field = match &self.peek().kind {
                    TokenKind::Ident(s) => s.clone(),
                    _ => {
                        return self
                            .error(format!("expected a field name, found {}", self.describe()))
                    }
                };
                self.advance();
                e = Expr {
                    span: e.span,
                    kind: ExprKind::Member(Box::new(e), field),
                };
            } else if self.is_sym("[") {
                self.advance();
                let idx = self.expr()?;
                self.expect_sym("]")?;
                e = Expr {
                    span: e.span,
                    kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                };
            } else if self.is_sym("(") {
                let args = self.args()?;
                e = Expr {
                    span: e.span,
                    kind: ExprKind::Call(Box::new(e), args),
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek().kind.clone() {
            TokenKind::Int(v) => {
                self.advance();
                let v = i64::try_from(v).map_err(|_| SyntaxError::Parse {
                    span,
                    message: format!("integer literal {v} does not fit in int"),
                })?;
                ExprKind::Int(v)
            }
            TokenKind::Sized { value, width } => {
                self.advance();
                ExprKind::Bit { width, value }
            }
            TokenKind::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                ExprKind::Bool(s == "true")
            }
            TokenKind::Ident(_) if self.is_plain_ident_at(0) => ExprKind::Var(self.expect_ident()?),
            TokenKind::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            TokenKind::Sym("{") => {
                self.advance();
                let mut fields = Vec::new();
                if !self.is_sym("}") {
                    loop {
                        let f = self.expect_ident()?;
                        self.expect_sym("=")?;
                        fields.push((f, self.expr()?));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym("}")?;
                ExprKind::Record(fields)
            }
            _ => return self.error(format!("expected an expression, found {}", self.describe())),
        };
        Ok(Expr { kind, span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Lattice {
        Lattice::two_point()
    }

    #[test]
    fn annotated_header_field() {
        let lat = two();
        let p = parse_program(
            "header h_t { <bit<8>, high> phys_ttl; bit<8> ttl; }\ncontrol C() { apply {} }",
            &lat,
        )
        .unwrap();
        match &p.type_decls[0].kind {
            TypeDeclKind::Header { fields, .. } => {
                assert_eq!(fields[0].ty, SecTy::new(Ty::Bit(8), lat.top()));
                assert_eq!(fields[1].ty, SecTy::new(Ty::Bit(8), lat.bottom()));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_label_has_span() {
        let err = parse_program("control C(in <bool, up> x) { apply {} }", &two()).unwrap_err();
        assert_eq!(
            err,
            SyntaxError::UnknownLabel {
                span: Span::new(1, 21),
                label: "up".into()
            }
        );
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a + b * c == d && e", &two()).unwrap();
        match e.kind {
            ExprKind::Binary(BinOp::And, l, _) => match l.kind {
                ExprKind::Binary(BinOp::Eq, l, _) => {
                    assert!(matches!(l.kind, ExprKind::Binary(BinOp::Add, _, _)))
                }
                _ => panic!(),
            },
            _ => panic!(),
        }
    }

    #[test]
    fn statements_and_sugar() {
        let src = "control C(inout bit<8>[3] s) {
            table t { key = { s[0]: exact; } actions = { a; b(1:8); } }
            apply {
                t.apply();
                s[1] = 2:8;
                bit<8>[2] u;
                T v;
                if (true) exit; else { return; }
            }
        }";
        let p = parse_program(src, &two()).unwrap();
        let st = &p.control.apply.stmts;
        assert!(matches!(st[0].kind, StmtKind::Apply(_)));
        assert!(matches!(st[1].kind, StmtKind::Assign(_, _)));
        assert!(matches!(st[2].kind, StmtKind::Decl(_)));
        assert!(matches!(st[3].kind, StmtKind::Decl(_)));
        assert!(matches!(st[4].kind, StmtKind::If(_, _, Some(_))));
        assert_eq!(st[4].span, Span::new(8, 17));
    }

    #[test]
    fn action_params_split() {
        let src = "control C() { @pc(high) action a(inout bit<8> x; <bit<32>, high> y) { x = 1:8; } apply {} }";
        let p = parse_program(src, &two()).unwrap();
        match &p.control.decls[0].kind {
            DeclKind::Function(f) => {
                assert_eq!(f.params.len(), 1);
                assert_eq!(f.params[0].dir, Direction::InOut);
                assert_eq!(f.cp_params.len(), 1);
                assert_eq!(f.pc, Some(two().top()));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn errors() {
        assert!(parse_program("control C() { apply { x = ; } }", &two()).is_err());
        assert!(parse_program("header h {}", &two()).is_err());
        assert!(parse_program("control C() { apply {} } extra", &two()).is_err());
        assert!(parse_program("control C(bit<0> x) { apply {} }", &two()).is_err());
        assert!(parse_program("control C() { apply { 99999999999999999999; } }", &two()).is_err());
    }
}
