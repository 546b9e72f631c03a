//! Pretty printer producing parseable concrete syntax. Comments are dropped.

use std::fmt::Write as _;

use super::ast::*;
use super::Direction;
use crate::lattice::Lattice;

pub fn pretty_program(p: &Program, lattice: &Lattice) -> String {
    let mut pp = Printer {
        out: String::new(),
        lattice,
        indent: 0,
    };
    for t in &p.type_decls {
        pp.type_decl(t);
    }
    pp.control(&p.control);
    pp.out
}

pub fn pretty_stmt(s: &Stmt, lattice: &Lattice) -> String {
    let mut pp = Printer {
        out: String::new(),
        lattice,
        indent: 0,
    };
    pp.stmt(s);
    pp.out
}

pub fn pretty_block(b: &Block, lattice: &Lattice) -> String {
    let mut pp = Printer {
        out: String::new(),
        lattice,
        indent: 0,
    };
    pp.block(b);
    pp.out.push('\n');
    pp.out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, parent_prec: u8) {
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bit { width, value } => {
            let _ = write!(out, "{value}:{width}");
        }
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Index(a, i) => {
            write_expr(out, a, u8::MAX);
            out.push('[');
            write_expr(out, i, 0);
            out.push(']');
        }
        ExprKind::Binary(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < parent_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, l, prec);
            let _ = write!(out, " {} ", op.symbol());
            // left-associative: a right operand of equal precedence needs parens
            write_expr(out, r, prec + 1);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Record(fields) => {
            out.push('{');
            for (i, (f, v)) in fields.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                let _ = write!(out, "{f} = ");
                write_expr(out, v, 0);
            }
            out.push_str(if fields.is_empty() { "}" } else { " }" });
        }
        ExprKind::Member(a, f) => {
            write_expr(out, a, u8::MAX);
            let _ = write!(out, ".{f}");
        }
        ExprKind::Call(f, args) => {
            write_expr(out, f, u8::MAX);
            write_args(out, args);
        }
    }
}

fn write_args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, 0);
    }
    out.push(')');
}

struct Printer<'a> {
    out: String,
    lattice: &'a Lattice,
    indent: usize,
}

impl Printer<'_> {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn type_decl(&mut self, t: &TypeDecl) {
        match &t.kind {
            TypeDeclKind::Header { name, fields } | TypeDeclKind::Struct { name, fields } => {
                let kw = if matches!(t.kind, TypeDeclKind::Header { .. }) {
                    "header"
                } else {
                    "struct"
                };
                self.line(&format!("{kw} {name} {{"));
                self.indent += 1;
                for f in fields {
                    let ty = f.ty.show(self.lattice);
                    self.line(&format!("{ty} {};", f.name));
                }
                self.indent -= 1;
                self.line("}");
            }
            TypeDeclKind::Typedef { name, ty } => {
                let ty = ty.show(self.lattice);
                self.line(&format!("typedef {ty} {name};"));
            }
            TypeDeclKind::MatchKind { members } => {
                self.line(&format!("match_kind {{ {} }}", members.join(", ")));
            }
        }
    }

    fn params(&self, params: &[Param], cp: &[Param]) -> String {
        let show = |p: &Param, directed: bool| {
            let ty = p.ty.show(self.lattice);
            if directed && p.dir == Direction::InOut {
                format!("inout {ty} {}", p.name)
            } else {
                format!("{ty} {}", p.name)
            }
        };
        let mut s = params
            .iter()
            .map(|p| show(p, true))
            .collect::<Vec<_>>()
            .join(", ");
        if !cp.is_empty() {
            s.push_str("; ");
            s.push_str(
                &cp.iter()
                    .map(|p| show(p, false))
                    .collect::<Vec<_>>()
                    .join(", "),
            );
        }
        s
    }

    fn control(&mut self, c: &Control) {
        let params = self.params(&c.params, &[]);
        self.line(&format!("control {}({params}) {{", c.name));
        self.indent += 1;
        for d in &c.decls {
            self.decl(d);
        }
        self.open("apply", &c.apply);
        self.indent -= 1;
        self.line("}");
    }

    fn open(&mut self, head: &str, b: &Block) {
        self.line(&format!("{head} {{"));
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
        self.line("}");
    }

    fn decl(&mut self, d: &Decl) {
        match &d.kind {
            DeclKind::Var { ty, name, init } => {
                let ty = ty.show(self.lattice);
                match init {
                    Some(e) => self.line(&format!("{ty} {name} = {};", pretty_expr(e))),
                    None => self.line(&format!("{ty} {name};")),
                }
            }
            DeclKind::Type(t) => self.type_decl(t),
            DeclKind::Function(f) => {
                if let Some(pc) = f.pc {
                    self.line(&format!("@pc({})", self.lattice.name_of(pc)));
                }
                let params = self.params(&f.params, &f.cp_params);
                let head = if f.is_action {
                    format!("action {}({params})", f.name)
                } else {
                    format!("function {} {}({params})", f.ret.show(self.lattice), f.name)
                };
                self.open(&head, &f.body);
            }
            DeclKind::Table(t) => {
                self.line(&format!("table {} {{", t.name));
                self.indent += 1;
                if !t.keys.is_empty() {
                    self.line("key = {");
                    self.indent += 1;
                    for k in &t.keys {
                        self.line(&format!("{}: {};", pretty_expr(&k.expr), k.match_kind));
                    }
                    self.indent -= 1;
                    self.line("}");
                }
                self.line("actions = {");
                self.indent += 1;
                for a in &t.actions {
                    let mut s = a.name.clone();
                    if let Some(args) = &a.args {
                        write_args(&mut s, args);
                    }
                    s.push(';');
                    self.line(&s);
                }
                self.indent -= 1;
                self.line("}");
                self.indent -= 1;
                self.line("}");
            }
        }
    }

    fn block(&mut self, b: &Block) {
        self.out.push_str("{\n");
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push('}');
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Call(e) => self.line(&format!("{};", pretty_expr(e))),
            StmtKind::Apply(t) => self.line(&format!("{}.apply();", pretty_expr(t))),
            StmtKind::Assign(l, r) => {
                self.line(&format!("{} = {};", pretty_expr(l), pretty_expr(r)))
            }
            StmtKind::If(g, t, e) => {
                self.line(&format!("if ({})", pretty_expr(g)));
                self.branch(t);
                if let Some(e) = e {
                    self.line("else");
                    self.branch(e);
                }
            }
            StmtKind::Block(b) => {
                self.line("{");
                self.indent += 1;
                for s in &b.stmts {
                    self.stmt(s);
                }
                self.indent -= 1;
                self.line("}");
            }
            StmtKind::Exit => self.line("exit;"),
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", pretty_expr(e))),
            StmtKind::Decl(d) => self.decl(d),
        }
    }

    fn branch(&mut self, s: &Stmt) {
        if matches!(s.kind, StmtKind::Block(_)) {
            self.stmt(s);
        } else {
            self.indent += 1;
            self.stmt(s);
            self.indent -= 1;
        }
    }
}
