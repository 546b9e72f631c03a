//! IFC type checking for Core P4.
//!
//! Judgements:
//!
//! ```text
//! Γ, Δ ⊢pc e : ⟨τ, χ⟩ goes d
//! Γ, Δ ⊢pc s ⊣ Γ'
//! Γ, Δ ⊢pc decl ⊣ Γ', Δ'
//! ```
//!
//! The checker never stops at the first problem. Every failed premise becomes
//! a [`Diagnostic`] and checking continues with the best type available.
//!
//! Label inference:
//! * binary operators and conditionals use the join of their lower bounds;
//! * a function's pc is the meet of its write effects (assignment targets,
//!   callee pcs, table pcs, and bottom for `exit`/`return`), unless given by
//!   `@pc(label)`;
//! * a table's pc is the meet of its actions' pcs, and every key label must
//!   flow into it.

mod diagnostic;

pub use diagnostic::{Diagnostic, DiagnosticKind, DiagnosticRecord, Rule, Severity, Verdict};

use std::collections::{HashMap, HashSet};

use crate::lattice::{Label, Lattice};
use crate::syntax::*;

/// Γ: variables to security types, plus the distinguished `return` entry
/// that exists only inside function bodies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypeEnv {
    vars: HashMap<String, SecTy>,
    ret: Option<SecTy>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn get(&self, name: &str) -> Option<&SecTy> {
        self.vars.get(name)
    }

    pub fn insert(&mut self, name: &str, ty: SecTy) {
        self.vars.insert(name.to_string(), ty);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn return_type(&self) -> Option<&SecTy> {
        self.ret.as_ref()
    }

    pub fn set_return(&mut self, ty: Option<SecTy>) {
        self.ret = ty;
    }

    /// Variable names in sorted order.
    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.vars.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Flow-violation premises of these rules are not enforced. Used to
    /// mutation-test the corpus harness.
    pub disabled_rules: Vec<Rule>,
    /// Record the typing context of every checked statement.
    pub record_contexts: bool,
}

/// The typing context a statement was checked in.
#[derive(Clone, Debug)]
pub struct StmtContext {
    pub env: TypeEnv,
    pub defs: TypeDefs,
    pub pc: Label,
    pub stmt: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSig {
    pub name: String,
    pub pc: Label,
    pub inferred: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSig {
    pub name: String,
    /// The pc recorded in the table's type.
    pub pc: Label,
    pub key_labels: Vec<Label>,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub verdict: Verdict,
    /// Γ after the control's declarations (control parameters included).
    pub env: TypeEnv,
    pub defs: TypeDefs,
    pub functions: Vec<FunctionSig>,
    pub tables: Vec<TableSig>,
    pub contexts: Vec<StmtContext>,
}

/// Checks a parsed program, running the apply block at `pc`.
pub fn check_program(p: &Program, lattice: &Lattice, pc: Label) -> Verdict {
    check_program_with(p, lattice, pc, &CheckOptions::default()).verdict
}

pub fn check_program_with(
    p: &Program,
    lattice: &Lattice,
    pc: Label,
    opts: &CheckOptions,
) -> Analysis {
    let mut c = Checker::new(lattice, opts);
    let mut env = TypeEnv::new();
    let mut defs = TypeDefs::new();
    let mut scope = Scope::default();
    for t in &p.type_decls {
        c.type_decl(&mut defs, t, &mut scope);
    }
    let mut ctl_scope = Scope::default();
    for param in &p.control.params {
        let ty = c.resolve(&defs, &param.ty, param.span, Rule::TVarDecl);
        if let Some(ty) = &ty {
            if !ty.is_data() {
                c.report(Diagnostic::error(
                    param.span,
                    Rule::TVarDecl,
                    DiagnosticKind::TypeMismatch,
                    format!("control parameter `{}` must have a data type", param.name),
                ));
            }
        }
        c.declare(&mut ctl_scope, &param.name, param.span);
        env.insert(&param.name, ty.unwrap_or_else(|| c.error_ty()));
    }
    for d in &p.control.decls {
        c.decl(&mut env, &mut defs, pc, d, &mut ctl_scope);
    }
    let final_env = env.clone();
    let final_defs = defs.clone();
    c.block_stmts(&mut env, &mut defs, pc, &p.control.apply.stmts);
    let mut diags = std::mem::take(&mut c.diags);
    diags.sort_by_key(|d| d.span);
    Analysis {
        verdict: Verdict::from_diagnostics(diags),
        env: final_env,
        defs: final_defs,
        functions: c.functions,
        tables: c.tables,
        contexts: c.contexts,
    }
}

/// Types one expression: `Γ, Δ ⊢pc e : ⟨τ, χ⟩ goes d`.
pub fn type_expression(
    lattice: &Lattice,
    env: &TypeEnv,
    defs: &TypeDefs,
    pc: Label,
    e: &Expr,
) -> Result<(SecTy, Direction), Vec<Diagnostic>> {
    let opts = CheckOptions::default();
    let mut c = Checker::new(lattice, &opts);
    let r = c.expr(env, defs, pc, e);
    if c.diags.iter().any(Diagnostic::is_error) {
        Err(c.diags)
    } else {
        r.ok_or_default()
    }
}

trait OkOrDefault<T> {
    fn ok_or_default(self) -> Result<T, Vec<Diagnostic>>;
}

impl<T> OkOrDefault<T> for Option<T> {
    fn ok_or_default(self) -> Result<T, Vec<Diagnostic>> {
        self.ok_or_else(Vec::new)
    }
}

/// Checks one statement: `Γ, Δ ⊢pc s ⊣ Γ'`.
pub fn type_statement(
    lattice: &Lattice,
    env: &TypeEnv,
    defs: &TypeDefs,
    pc: Label,
    s: &Stmt,
) -> (TypeEnv, Vec<Diagnostic>) {
    let opts = CheckOptions::default();
    let mut c = Checker::new(lattice, &opts);
    let mut env = env.clone();
    let mut defs = defs.clone();
    c.stmt(&mut env, &mut defs, pc, s, &mut Scope::default());
    (env, c.diags)
}

/// Checks one declaration: `Γ, Δ ⊢pc decl ⊣ Γ', Δ'`.
pub fn type_declaration(
    lattice: &Lattice,
    env: &TypeEnv,
    defs: &TypeDefs,
    pc: Label,
    d: &Decl,
) -> (TypeEnv, TypeDefs, Vec<Diagnostic>) {
    let opts = CheckOptions::default();
    let mut c = Checker::new(lattice, &opts);
    let mut env = env.clone();
    let mut defs = defs.clone();
    c.decl(&mut env, &mut defs, pc, d, &mut Scope::default());
    (env, defs, c.diags)
}

/// Result shape of a binary operator, or `None` if the operands do not fit.
pub fn binop_result(op: BinOp, a: &Ty, b: &Ty) -> Option<Ty> {
    use BinOp::*;
    match op {
        Add | Sub | Mul => match (a, b) {
            (Ty::Int, Ty::Int) => Some(Ty::Int),
            (Ty::Bit(n), Ty::Bit(m)) if n == m => Some(Ty::Bit(*n)),
            _ => None,
        },
        Eq | Ne => match (a, b) {
            (Ty::Bool, Ty::Bool) | (Ty::Int, Ty::Int) => Some(Ty::Bool),
            (Ty::Bit(n), Ty::Bit(m)) if n == m => Some(Ty::Bool),
            _ => None,
        },
        Lt | Le | Gt | Ge => match (a, b) {
            (Ty::Int, Ty::Int) => Some(Ty::Bool),
            (Ty::Bit(n), Ty::Bit(m)) if n == m => Some(Ty::Bool),
            _ => None,
        },
        And | Or => match (a, b) {
            (Ty::Bool, Ty::Bool) => Some(Ty::Bool),
            _ => None,
        },
        BitAnd | BitOr | BitXor => match (a, b) {
            (Ty::Bit(n), Ty::Bit(m)) if n == m => Some(Ty::Bit(*n)),
            _ => None,
        },
    }
}

/// Names declared in the current block, for duplicate detection.
#[derive(Default)]
struct Scope {
    names: HashSet<String>,
}

struct Checker<'a> {
    lat: &'a Lattice,
    opts: &'a CheckOptions,
    diags: Vec<Diagnostic>,
    /// Nonzero while inferring a function's pc; diagnostics are dropped.
    quiet: usize,
    /// Write-effect bounds, one frame per function being inferred.
    effects: Vec<Vec<Label>>,
    functions: Vec<FunctionSig>,
    tables: Vec<TableSig>,
    contexts: Vec<StmtContext>,
}

impl<'a> Checker<'a> {
    fn new(lat: &'a Lattice, opts: &'a CheckOptions) -> Checker<'a> {
        Checker {
            lat,
            opts,
            diags: Vec::new(),
            quiet: 0,
            effects: Vec::new(),
            functions: Vec::new(),
            tables: Vec::new(),
            contexts: Vec::new(),
        }
    }

    fn report(&mut self, d: Diagnostic) {
        if self.quiet > 0 {
            return;
        }
        if d.kind == DiagnosticKind::FlowViolation && self.opts.disabled_rules.contains(&d.rule) {
            return;
        }
        self.diags.push(d);
    }

    fn effect(&mut self, label: Label) {
        if let Some(frame) = self.effects.last_mut() {
            frame.push(label);
        }
    }

    fn name(&self, l: Label) -> String {
        self.lat.name_of(l).to_string()
    }

    /// Reports `found ⋢ required` unless the flow holds. Returns whether it held.
    fn require_flow(
        &mut self,
        found: Label,
        required: Label,
        span: Span,
        rule: Rule,
        what: &str,
    ) -> bool {
        if self.lat.leq(found, required) {
            return true;
        }
        if self.opts.disabled_rules.contains(&rule) {
            return true;
        }
        let (f, r) = (self.name(found), self.name(required));
        self.report(Diagnostic {
            span,
            rule,
            kind: DiagnosticKind::FlowViolation,
            severity: Severity::Error,
            message: format!("{what}: `{f}` may not flow to `{r}`"),
            found_label: Some(f),
            required_label: Some(r),
        });
        false
    }

    fn error_ty(&self) -> SecTy {
        SecTy::new(Ty::Unit, self.lat.bottom())
    }

    fn resolve(&mut self, defs: &TypeDefs, ty: &SecTy, span: Span, rule: Rule) -> Option<SecTy> {
        match defs.resolve(ty, self.lat) {
            Ok(t) => Some(t),
            Err(e) => {
                let kind = match e {
                    TypeError::UnknownTypeName(_) => DiagnosticKind::UnknownTypeName,
                    TypeError::CyclicTypedef(_) => DiagnosticKind::CyclicTypedef,
                };
                self.report(Diagnostic::error(span, rule, kind, e.to_string()));
                None
            }
        }
    }

    fn declare(&mut self, scope: &mut Scope, name: &str, span: Span) {
        if !scope.names.insert(name.to_string()) {
            self.report(Diagnostic::error(
                span,
                Rule::TVarDecl,
                DiagnosticKind::DuplicateName,
                format!("`{name}` is already declared in this scope"),
            ));
        }
    }

    /// Checks that a value of type `src` may be read into a slot of type
    /// `dst`: same shape, and each leaf label flows. Reports one diagnostic
    /// at most.
    fn check_coerce(
        &mut self,
        src: &SecTy,
        dst: &SecTy,
        span: Span,
        rule: Rule,
        mismatch: DiagnosticKind,
        what: &str,
    ) -> bool {
        if !src.same_shape(dst) {
            let msg = format!(
                "{what}: expected `{}`, found `{}`",
                dst.show(self.lat),
                src.show(self.lat)
            );
            self.report(Diagnostic::error(span, rule, mismatch, msg));
            return false;
        }
        let bad = src
            .leaf_pairs(dst)
            .into_iter()
            .find(|(f, r)| !self.lat.leq(*f, *r));
        match bad {
            Some((f, r)) => self.require_flow(f, r, span, rule, what),
            None => true,
        }
    }

    // ---- expressions ----

    fn expr(
        &mut self,
        env: &TypeEnv,
        defs: &TypeDefs,
        pc: Label,
        e: &Expr,
    ) -> Option<(SecTy, Direction)> {
        let bot = self.lat.bottom();
        match &e.kind {
            ExprKind::Bool(_) => Some((SecTy::new(Ty::Bool, bot), Direction::In)),
            ExprKind::Int(_) => Some((SecTy::new(Ty::Int, bot), Direction::In)),
            ExprKind::Bit { width, .. } => Some((SecTy::new(Ty::Bit(*width), bot), Direction::In)),
            ExprKind::Var(x) => match env.get(x) {
                Some(t) => Some((t.clone(), Direction::InOut)),
                None => {
                    self.report(Diagnostic::error(
                        e.span,
                        Rule::TVar,
                        DiagnosticKind::UnknownVariable,
                        format!("unknown variable `{x}`"),
                    ));
                    None
                }
            },
            ExprKind::Index(a, i) => {
                let ta = self.expr(env, defs, pc, a);
                let ti = self.expr(env, defs, pc, i);
                let (ta, da) = ta?;
                let Ty::Stack(elem, _) = &ta.ty else {
                    self.report(Diagnostic::error(
                        a.span,
                        Rule::TIndex,
                        DiagnosticKind::TypeMismatch,
                        format!("indexing a non-stack of type `{}`", ta.show(self.lat)),
                    ));
                    return None;
                };
                if let Some((ti, _)) = ti {
                    if !matches!(ti.ty, Ty::Int | Ty::Bit(32)) {
                        self.report(Diagnostic::error(
                            i.span,
                            Rule::TIndex,
                            DiagnosticKind::TypeMismatch,
                            format!(
                                "stack index must be bit<32> or int, found `{}`",
                                ti.show(self.lat)
                            ),
                        ));
                    } else {
                        let need = elem.meet_leaves(self.lat);
                        self.require_flow(
                            ti.label,
                            need,
                            i.span,
                            Rule::TIndex,
                            "stack index label",
                        );
                    }
                }
                Some(((**elem).clone(), da))
            }
            ExprKind::Binary(op, l, r) => {
                let tl = self.expr(env, defs, pc, l);
                let tr = self.expr(env, defs, pc, r);
                let ((tl, _), (tr, _)) = (tl?, tr?);
                match binop_result(*op, &tl.ty, &tr.ty) {
                    Some(ty) => {
                        let label = self
                            .lat
                            .join(tl.join_leaves(self.lat), tr.join_leaves(self.lat));
                        Some((SecTy::new(ty, label), Direction::In))
                    }
                    None => {
                        self.report(Diagnostic::error(
                            e.span,
                            Rule::TBinOp,
                            DiagnosticKind::TypeMismatch,
                            format!(
                                "operator `{}` does not apply to `{}` and `{}`",
                                op.symbol(),
                                tl.show(self.lat),
                                tr.show(self.lat)
                            ),
                        ));
                        None
                    }
                }
            }
            ExprKind::Record(fields) => {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                let mut ok = true;
                for (f, fe) in fields {
                    if !seen.insert(f.as_str()) {
                        self.report(Diagnostic::error(
                            fe.span,
                            Rule::TRec,
                            DiagnosticKind::DuplicateName,
                            format!("field `{f}` given twice"),
                        ));
                        ok = false;
                    }
                    match self.expr(env, defs, pc, fe) {
                        Some((t, _)) if t.is_data() => out.push((f.clone(), t)),
                        Some((t, _)) => {
                            self.report(Diagnostic::error(
                                fe.span,
                                Rule::TRec,
                                DiagnosticKind::TypeMismatch,
                                format!("record field `{f}` cannot hold `{}`", t.show(self.lat)),
                            ));
                            ok = false;
                        }
                        None => ok = false,
                    }
                }
                ok.then(|| (SecTy::new(Ty::Record(out), bot), Direction::In))
            }
            ExprKind::Member(a, f) => {
                let (ta, da) = self.expr(env, defs, pc, a)?;
                let (fields, rule) = match &ta.ty {
                    Ty::Record(fs) => (fs, Rule::TMemRec),
                    Ty::Header(fs) => (fs, Rule::TMemHdr),
                    _ => {
                        self.report(Diagnostic::error(
                            e.span,
                            Rule::TMemRec,
                            DiagnosticKind::TypeMismatch,
                            format!("`{}` has no fields", ta.show(self.lat)),
                        ));
                        return None;
                    }
                };
                match fields.iter().find(|(n, _)| n == f) {
                    Some((_, t)) => Some((t.clone(), da)),
                    None => {
                        self.report(Diagnostic::error(
                            e.span,
                            rule,
                            DiagnosticKind::UnknownField,
                            format!("no field `{f}`"),
                        ));
                        None
                    }
                }
            }
            ExprKind::Call(callee, args) => {
                let (tf, _) = self.expr(env, defs, pc, callee)?;
                let Ty::Function(fty) = &tf.ty else {
                    let msg = if matches!(tf.ty, Ty::Table(_)) {
                        "a table can only be applied as a statement".to_string()
                    } else {
                        format!("calling a value of type `{}`", tf.show(self.lat))
                    };
                    self.report(Diagnostic::error(
                        e.span,
                        Rule::TCall,
                        DiagnosticKind::NotAFunction,
                        msg,
                    ));
                    return None;
                };
                let fty = (**fty).clone();
                let all: Vec<(Direction, SecTy)> = fty
                    .params
                    .iter()
                    .cloned()
                    .chain(fty.cp_params.iter().map(|t| (Direction::In, t.clone())))
                    .collect();
                self.check_args(env, defs, pc, &all, args, e.span, Rule::TCall);
                self.require_flow(pc, fty.pc, e.span, Rule::TCall, "call context pc");
                self.effect(fty.pc);
                Some((fty.ret.clone(), Direction::In))
            }
        }
    }

    /// Checks arguments against parameters: `in` arguments may be coerced
    /// upward, `inout` arguments must be l-values of exactly the parameter
    /// type.
    #[allow(clippy::too_many_arguments)]
    fn check_args(
        &mut self,
        env: &TypeEnv,
        defs: &TypeDefs,
        pc: Label,
        params: &[(Direction, SecTy)],
        args: &[Expr],
        span: Span,
        rule: Rule,
    ) {
        if params.len() != args.len() {
            self.report(Diagnostic::error(
                span,
                rule,
                DiagnosticKind::ArityMismatch,
                format!("expected {} arguments, found {}", params.len(), args.len()),
            ));
        }
        for ((dir, pty), arg) in params.iter().zip(args) {
            let Some((aty, adir)) = self.expr(env, defs, pc, arg) else {
                continue;
            };
            match dir {
                Direction::In => {
                    self.check_coerce(
                        &aty,
                        pty,
                        arg.span,
                        rule,
                        DiagnosticKind::TypeMismatch,
                        "argument",
                    );
                }
                Direction::InOut => {
                    if adir != Direction::InOut {
                        self.report(Diagnostic::error(
                            arg.span,
                            rule,
                            DiagnosticKind::NotAssignable,
                            "inout argument must be an l-value",
                        ));
                    } else if !aty.same_shape(pty) {
                        self.check_coerce(
                            &aty,
                            pty,
                            arg.span,
                            rule,
                            DiagnosticKind::TypeMismatch,
                            "inout argument",
                        );
                    } else if let Some((f, r)) =
                        aty.leaf_pairs(pty).into_iter().find(|(f, r)| f != r)
                    {
                        if !self.opts.disabled_rules.contains(&Rule::TSubTypeIn) {
                            let (fs, rs) = (self.name(f), self.name(r));
                            self.report(Diagnostic {
                                span: arg.span,
                                rule: Rule::TSubTypeIn,
                                kind: DiagnosticKind::FlowViolation,
                                severity: Severity::Error,
                                message: format!(
                                    "inout argument labelled `{fs}` cannot be passed as `{rs}`; only `in` expressions may change label"
                                ),
                                found_label: Some(fs),
                                required_label: Some(rs),
                            });
                        }
                    }
                }
            }
        }
    }

    // ---- statements ----

    fn block_stmts(&mut self, env: &mut TypeEnv, defs: &mut TypeDefs, pc: Label, stmts: &[Stmt]) {
        let mut scope = Scope::default();
        for s in stmts {
            self.stmt(env, defs, pc, s, &mut scope);
        }
    }

    fn stmt(
        &mut self,
        env: &mut TypeEnv,
        defs: &mut TypeDefs,
        pc: Label,
        s: &Stmt,
        scope: &mut Scope,
    ) {
        if self.opts.record_contexts && self.quiet == 0 {
            self.contexts.push(StmtContext {
                env: env.clone(),
                defs: defs.clone(),
                pc,
                stmt: s.clone(),
            });
        }
        match &s.kind {
            StmtKind::Assign(lhs, rhs) => {
                let tl = self.expr(env, defs, pc, lhs);
                let tr = self.expr(env, defs, pc, rhs);
                let Some((tl, dl)) = tl else { return };
                if dl != Direction::InOut {
                    self.report(Diagnostic::error(
                        lhs.span,
                        Rule::TAssign,
                        DiagnosticKind::NotAssignable,
                        "left side of assignment is not an l-value",
                    ));
                    return;
                }
                if !tl.is_data() {
                    self.report(Diagnostic::error(
                        lhs.span,
                        Rule::TAssign,
                        DiagnosticKind::NotAssignable,
                        format!("cannot assign to a value of type `{}`", tl.show(self.lat)),
                    ));
                    return;
                }
                let target = tl.meet_leaves(self.lat);
                self.effect(target);
                if let Some((tr, _)) = tr {
                    self.check_coerce(
                        &tr,
                        &tl,
                        s.span,
                        Rule::TAssign,
                        DiagnosticKind::TypeMismatch,
                        "assignment",
                    );
                }
                self.require_flow(pc, target, s.span, Rule::TAssign, "assignment under pc");
            }
            StmtKind::Call(call) => {
                let ExprKind::Call(callee, args) = &call.kind else {
                    unreachable!("parser only builds call statements from calls")
                };
                let Some((tc, _)) = self.expr(env, defs, pc, callee) else {
                    return;
                };
                match &tc.ty {
                    Ty::Table(_) => {
                        if !args.is_empty() {
                            self.report(Diagnostic::error(
                                s.span,
                                Rule::TTblCall,
                                DiagnosticKind::ArityMismatch,
                                "table application takes no arguments",
                            ));
                        }
                        self.table_call(&tc, pc, s.span);
                    }
                    _ => {
                        if let Some((ret, _)) = self.expr(env, defs, pc, call) {
                            if ret.ty != Ty::Unit {
                                self.report(Diagnostic {
                                    severity: Severity::Warning,
                                    ..Diagnostic::error(
                                        s.span,
                                        Rule::TFnCallStmt,
                                        DiagnosticKind::DiscardedValue,
                                        format!(
                                            "discarding a value of type `{}`",
                                            ret.show(self.lat)
                                        ),
                                    )
                                });
                            }
                        }
                    }
                }
            }
            StmtKind::Apply(t) => {
                let Some((tt, _)) = self.expr(env, defs, pc, t) else {
                    return;
                };
                if matches!(tt.ty, Ty::Table(_)) {
                    self.table_call(&tt, pc, s.span);
                } else {
                    self.report(Diagnostic::error(
                        t.span,
                        Rule::TTblCall,
                        DiagnosticKind::TypeMismatch,
                        format!("`apply` on a value of type `{}`", tt.show(self.lat)),
                    ));
                }
            }
            StmtKind::If(guard, then, els) => {
                let tg = self.expr(env, defs, pc, guard);
                let mut inner = pc;
                if let Some((tg, _)) = tg {
                    if tg.ty != Ty::Bool {
                        self.report(Diagnostic::error(
                            guard.span,
                            Rule::TCond,
                            DiagnosticKind::TypeMismatch,
                            format!("condition must be bool, found `{}`", tg.show(self.lat)),
                        ));
                    }
                    inner = self.lat.join(tg.label, pc);
                }
                for branch in std::iter::once(then).chain(els) {
                    let mut benv = env.clone();
                    let mut bdefs = defs.clone();
                    self.stmt(&mut benv, &mut bdefs, inner, branch, &mut Scope::default());
                }
            }
            StmtKind::Block(b) => {
                let mut benv = env.clone();
                let mut bdefs = defs.clone();
                self.block_stmts(&mut benv, &mut bdefs, pc, &b.stmts);
            }
            StmtKind::Exit => {
                self.effect(self.lat.bottom());
                self.require_flow(
                    pc,
                    self.lat.bottom(),
                    s.span,
                    Rule::TExit,
                    "exit is only allowed at the bottom pc",
                );
            }
            StmtKind::Return(e) => {
                self.effect(self.lat.bottom());
                let Some(ret) = env.return_type().cloned() else {
                    self.report(Diagnostic::error(
                        s.span,
                        Rule::TReturn,
                        DiagnosticKind::ReturnOutsideFunction,
                        "return outside of a function",
                    ));
                    return;
                };
                self.require_flow(
                    pc,
                    self.lat.bottom(),
                    s.span,
                    Rule::TReturn,
                    "return is only allowed at the bottom pc",
                );
                match e {
                    Some(e) => {
                        if let Some((te, _)) = self.expr(env, defs, pc, e) {
                            self.check_coerce(
                                &te,
                                &ret,
                                e.span,
                                Rule::TReturn,
                                DiagnosticKind::ReturnTypeMismatch,
                                "returned value",
                            );
                        }
                    }
                    None if ret.ty != Ty::Unit => {
                        self.report(Diagnostic::error(
                            s.span,
                            Rule::TReturn,
                            DiagnosticKind::ReturnTypeMismatch,
                            format!("missing return value of type `{}`", ret.show(self.lat)),
                        ));
                    }
                    None => {}
                }
            }
            StmtKind::Decl(d) => self.decl(env, defs, pc, d, scope),
        }
    }

    fn table_call(&mut self, tt: &SecTy, pc: Label, span: Span) {
        let Ty::Table(pc_tbl) = tt.ty else { return };
        self.effect(pc_tbl);
        self.require_flow(pc, pc_tbl, span, Rule::TTblCall, "table applied under pc");
    }

    // ---- declarations ----

    fn type_decl(&mut self, defs: &mut TypeDefs, t: &TypeDecl, scope: &mut Scope) {
        let bot = self.lat.bottom();
        match &t.kind {
            TypeDeclKind::Header { name, fields } | TypeDeclKind::Struct { name, fields } => {
                let is_header = matches!(t.kind, TypeDeclKind::Header { .. });
                self.declare(scope, &format!("type {name}"), t.span);
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for f in fields {
                    if !seen.insert(f.name.as_str()) {
                        self.report(Diagnostic::error(
                            f.span,
                            Rule::TTypedef,
                            DiagnosticKind::DuplicateName,
                            format!("field `{}` declared twice", f.name),
                        ));
                    }
                    let Some(ft) = self.resolve(defs, &f.ty, f.span, Rule::TTypedef) else {
                        continue;
                    };
                    let ok = if is_header {
                        ft.is_scalar()
                    } else {
                        ft.is_data()
                    };
                    if !ok {
                        self.report(Diagnostic::error(
                            f.span,
                            Rule::TTypedef,
                            DiagnosticKind::TypeMismatch,
                            format!(
                                "{} field `{}` cannot have type `{}`",
                                if is_header { "header" } else { "struct" },
                                f.name,
                                ft.show(self.lat)
                            ),
                        ));
                        continue;
                    }
                    out.push((f.name.clone(), ft));
                }
                let ty = if is_header {
                    Ty::Header(out)
                } else {
                    Ty::Record(out)
                };
                defs.define(name, SecTy::new(ty, bot));
            }
            TypeDeclKind::Typedef { name, ty } => {
                self.declare(scope, &format!("type {name}"), t.span);
                if let Some(r) = self.resolve(defs, ty, t.span, Rule::TTypedef) {
                    defs.define(name, r);
                }
            }
            TypeDeclKind::MatchKind { members } => defs.add_match_kinds(members.iter().cloned()),
        }
    }

    fn decl(
        &mut self,
        env: &mut TypeEnv,
        defs: &mut TypeDefs,
        pc: Label,
        d: &Decl,
        scope: &mut Scope,
    ) {
        match &d.kind {
            DeclKind::Type(t) => self.type_decl(defs, t, scope),
            DeclKind::Var { ty, name, init } => {
                let rt = self.resolve(defs, ty, d.span, Rule::TVarDecl);
                if let Some(rt) = &rt {
                    if !rt.is_data() {
                        self.report(Diagnostic::error(
                            d.span,
                            Rule::TVarDecl,
                            DiagnosticKind::TypeMismatch,
                            format!("variable `{name}` cannot have type `{}`", rt.show(self.lat)),
                        ));
                    }
                }
                if let Some(init) = init {
                    let ti = self.expr(env, defs, pc, init);
                    if let (Some(rt), Some((ti, _))) = (&rt, ti) {
                        self.check_coerce(
                            &ti,
                            rt,
                            init.span,
                            Rule::TVarInit,
                            DiagnosticKind::InitializerTypeMismatch,
                            "initializer",
                        );
                    }
                }
                self.declare(scope, name, d.span);
                env.insert(name, rt.unwrap_or_else(|| self.error_ty()));
            }
            DeclKind::Function(f) => self.function(env, defs, f, scope),
            DeclKind::Table(t) => self.table(env, defs, t, scope),
        }
    }

    fn function(
        &mut self,
        env: &mut TypeEnv,
        defs: &TypeDefs,
        f: &FunctionDecl,
        scope: &mut Scope,
    ) {
        let bot = self.lat.bottom();
        let mut body_env = env.clone();
        let mut param_scope = Scope::default();
        let mut params = Vec::new();
        let mut cp_params = Vec::new();
        for (p, is_cp) in f
            .params
            .iter()
            .map(|p| (p, false))
            .chain(f.cp_params.iter().map(|p| (p, true)))
        {
            let t = self.resolve(defs, &p.ty, p.span, Rule::TFuncDecl);
            if let Some(t) = &t {
                if !t.is_data() {
                    self.report(Diagnostic::error(
                        p.span,
                        Rule::TFuncDecl,
                        DiagnosticKind::TypeMismatch,
                        format!(
                            "parameter `{}` cannot have type `{}`",
                            p.name,
                            t.show(self.lat)
                        ),
                    ));
                }
            }
            let t = t.unwrap_or_else(|| self.error_ty());
            self.declare(&mut param_scope, &p.name, p.span);
            body_env.insert(&p.name, t.clone());
            if is_cp {
                cp_params.push(t);
            } else {
                params.push((p.dir, t));
            }
        }
        let ret = self
            .resolve(defs, &f.ret, f.span, Rule::TFuncDecl)
            .unwrap_or_else(|| SecTy::new(Ty::Unit, bot));
        body_env.set_return(Some(ret.clone()));

        let (pc_fn, inferred) = match f.pc {
            Some(pc) => (pc, false),
            None => {
                self.quiet += 1;
                self.effects.push(Vec::new());
                let mut e = body_env.clone();
                let mut d = defs.clone();
                self.block_stmts(&mut e, &mut d, bot, &f.body.stmts);
                let bounds = self.effects.pop().unwrap_or_default();
                self.quiet -= 1;
                (self.lat.meet_all(bounds), true)
            }
        };
        // effects of the body belong to the function, not the enclosing scope
        self.effects.push(Vec::new());
        let mut d = defs.clone();
        self.block_stmts(&mut body_env, &mut d, pc_fn, &f.body.stmts);
        self.effects.pop();

        if self.quiet == 0 {
            self.functions.push(FunctionSig {
                name: f.name.clone(),
                pc: pc_fn,
                inferred,
            });
        }
        self.declare(scope, &f.name, f.span);
        let fty = FnTy {
            params,
            cp_params,
            pc: pc_fn,
            ret,
        };
        env.insert(&f.name, SecTy::new(Ty::Function(Box::new(fty)), bot));
    }

    fn table(&mut self, env: &mut TypeEnv, defs: &TypeDefs, t: &TableDecl, scope: &mut Scope) {
        let bot = self.lat.bottom();
        let mut action_pcs = Vec::new();
        let mut bindings = Vec::new();
        for a in &t.actions {
            match env.get(&a.name).map(|t| &t.ty) {
                Some(Ty::Function(f)) if f.ret.ty == Ty::Unit => {
                    action_pcs.push(f.pc);
                    bindings.push((a, f.params.clone()));
                }
                Some(_) => self.report(Diagnostic::error(
                    a.span,
                    Rule::TTblDecl,
                    DiagnosticKind::NotAnAction,
                    format!("`{}` is not an action", a.name),
                )),
                None => self.report(Diagnostic::error(
                    a.span,
                    Rule::TTblDecl,
                    DiagnosticKind::UnknownVariable,
                    format!("unknown action `{}`", a.name),
                )),
            }
        }
        let pc_a = self.lat.meet_all(action_pcs);
        let pc_tbl = pc_a;
        let mut key_labels = Vec::new();
        let mut violated = false;
        for k in &t.keys {
            if !defs.is_match_kind(&k.match_kind) {
                self.report(Diagnostic::error(
                    k.span,
                    Rule::TTblDecl,
                    DiagnosticKind::UnknownMatchKind,
                    format!("unknown match kind `{}`", k.match_kind),
                ));
            }
            let Some((kt, _)) = self.expr(env, defs, pc_tbl, &k.expr) else {
                continue;
            };
            if !kt.is_data() || (k.match_kind == "lpm" && !matches!(kt.ty, Ty::Bit(_))) {
                self.report(Diagnostic::error(
                    k.span,
                    Rule::TTblDecl,
                    DiagnosticKind::TypeMismatch,
                    format!(
                        "`{}` key cannot have type `{}`",
                        k.match_kind,
                        kt.show(self.lat)
                    ),
                ));
                continue;
            }
            let chi = kt.join_leaves(self.lat);
            key_labels.push(chi);
            if !self.require_flow(
                chi,
                pc_tbl,
                k.span,
                Rule::TTblDecl,
                "table key label exceeds the actions' pc",
            ) {
                violated = true;
            }
        }
        for (a, params) in bindings {
            if a.args.is_none() && !params.is_empty() {
                self.report(Diagnostic::error(
                    a.span,
                    Rule::TTblDecl,
                    DiagnosticKind::ArityMismatch,
                    format!("action `{}` needs {} bound arguments", a.name, params.len()),
                ));
                continue;
            }
            self.check_args(
                env,
                defs,
                pc_tbl,
                &params,
                a.bound_args(),
                a.span,
                Rule::TTblDecl,
            );
        }
        // A rejected table is bound at top so its applications do not repeat
        // the same error.
        let bound = if violated { self.lat.top() } else { pc_tbl };
        if self.quiet == 0 {
            self.tables.push(TableSig {
                name: t.name.clone(),
                pc: bound,
                key_labels,
            });
        }
        self.declare(scope, &t.name, t.span);
        env.insert(&t.name, SecTy::new(Ty::Table(bound), bot));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(src: &str) -> Verdict {
        let lat = Lattice::two_point();
        let p = parse_program(src, &lat).unwrap();
        check_program(&p, &lat, lat.bottom())
    }

    fn rules(v: &Verdict) -> Vec<(Rule, u32)> {
        v.errors().map(|d| (d.rule, d.span.line)).collect()
    }

    #[test]
    fn explicit_flow() {
        let v =
            check("control C(inout <bit<8>, high> h, inout bit<8> l) {\n apply {\n l = h;\n } }");
        assert_eq!(rules(&v), vec![(Rule::TAssign, 3)]);
        assert!(
            check("control C(inout <bit<8>, high> h, inout bit<8> l) { apply { h = l; } }")
                .accepted
        );
    }

    #[test]
    fn implicit_flow() {
        let v = check(
            "control C(inout <bit<8>, high> h, inout bit<8> l) { apply {\n if (h == 1:8) { l = 1:8; } else {} } }",
        );
        assert_eq!(rules(&v), vec![(Rule::TAssign, 2)]);
    }

    #[test]
    fn exit_at_high_pc() {
        let v = check("control C(inout <bool, high> h) { apply { if (h) { exit; } } }");
        assert_eq!(rules(&v), vec![(Rule::TExit, 1)]);
        assert!(check("control C(inout bool l) { apply { if (l) { exit; } } }").accepted);
    }

    #[test]
    fn pc_fn_inference() {
        let lat = Lattice::two_point();
        let src = "control C(inout bit<8> l, inout <bit<8>, high> h) {
            action insecure() { l = 1:8; h = 2:8; }
            action secret() { h = 2:8; }
            action nothing() { }
            function bit<8> f() { return 1:8; }
            apply {} }";
        let p = parse_program(src, &lat).unwrap();
        let a = check_program_with(&p, &lat, lat.bottom(), &CheckOptions::default());
        let pcs: Vec<(&str, &str)> = a
            .functions
            .iter()
            .map(|f| (f.name.as_str(), lat.name_of(f.pc)))
            .collect();
        assert_eq!(
            pcs,
            vec![
                ("insecure", "low"),
                ("secret", "high"),
                ("nothing", "high"),
                ("f", "low")
            ]
        );
    }

    #[test]
    fn call_pc_check() {
        let v = check(
            "control C(inout bit<8> l, inout <bool, high> h) {
            action w() { l = 1:8; }
            apply { if (h) { w(); } } }",
        );
        assert_eq!(rules(&v), vec![(Rule::TCall, 3)]);
    }

    #[test]
    fn table_key_too_high() {
        let v = check(
            "control C(inout bit<8> l, inout <bit<8>, high> h) {
            action w() { l = 1:8; }
            table t {
                key = { h: exact; }
                actions = { w; } }
            apply { t.apply(); } }",
        );
        assert_eq!(rules(&v), vec![(Rule::TTblDecl, 4)]);
    }

    #[test]
    fn table_call_pc() {
        let v = check(
            "control C(inout bit<8> l, inout <bool, high> h) {
            action w() { l = 1:8; }
            table t { key = { l: exact; } actions = { w; } }
            apply { if (h) { t.apply(); } } }",
        );
        assert_eq!(rules(&v), vec![(Rule::TTblCall, 4)]);
    }

    #[test]
    fn inout_argument_must_match_exactly() {
        let v = check(
            "control C(inout bit<8> l) {
            action w(inout <bit<8>, high> x) { x = 1:8; }
            apply { w(l); } }",
        );
        assert_eq!(rules(&v), vec![(Rule::TSubTypeIn, 3)]);
        assert!(
            check(
                "control C(inout bit<8> l) {
            action w(in <bit<8>, high> x) { }
            apply { w(l); } }"
            )
            .accepted
        );
    }

    #[test]
    fn cond_restores_env() {
        let lat = Lattice::two_point();
        let env = TypeEnv::new();
        let s = parse_program("control C() { apply { if (true) { bit<8> x; } } }", &lat)
            .unwrap()
            .control
            .apply
            .stmts[0]
            .clone();
        let (out, diags) = type_statement(&lat, &env, &TypeDefs::new(), lat.bottom(), &s);
        assert!(diags.is_empty());
        assert_eq!(out, env);
    }

    #[test]
    fn binop_label_is_join() {
        let lat = Lattice::two_point();
        let mut env = TypeEnv::new();
        env.insert("l", SecTy::new(Ty::Bit(8), lat.bottom()));
        env.insert("h", SecTy::new(Ty::Bit(8), lat.top()));
        let e = parse_expr("l + h", &lat).unwrap();
        let (t, d) = type_expression(&lat, &env, &TypeDefs::new(), lat.bottom(), &e).unwrap();
        assert_eq!(t, SecTy::new(Ty::Bit(8), lat.top()));
        assert_eq!(d, Direction::In);
        let e = parse_expr("h", &lat).unwrap();
        assert_eq!(
            type_expression(&lat, &env, &TypeDefs::new(), lat.bottom(), &e)
                .unwrap()
                .1,
            Direction::InOut
        );
    }

    #[test]
    fn misc_errors() {
        let v = check("control C(inout bit<8> x) { apply { x = true; y = 1; 3 = x; } }");
        let kinds: Vec<DiagnosticKind> = v.errors().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            vec![
                DiagnosticKind::TypeMismatch,
                DiagnosticKind::UnknownVariable,
                DiagnosticKind::NotAssignable
            ]
        );
        let v = check("control C() { action a() {} action a() {} apply { return; } }");
        let kinds: Vec<DiagnosticKind> = v.errors().map(|d| d.kind).collect();
        assert_eq!(
            kinds,
            vec![
                DiagnosticKind::DuplicateName,
                DiagnosticKind::ReturnOutsideFunction
            ]
        );
    }

    #[test]
    fn recursion_is_rejected() {
        let v = check("control C() { action a() { a(); } apply {} }");
        assert_eq!(
            v.errors().next().unwrap().kind,
            DiagnosticKind::UnknownVariable
        );
    }

    #[test]
    fn discarded_value_warns() {
        let v = check("control C() { function bit<8> f() { return 1:8; } apply { f(); } }");
        assert!(v.accepted);
        assert_eq!(v.diagnostics[0].severity, Severity::Warning);
    }
}
