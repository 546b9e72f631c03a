//! Big-step evaluator for expressions, statements and declarations, with
//! copy-in/copy-out calls and table application through the control plane.
//!
//! The interpreter trusts the checker for labels but validates shapes as it
//! goes, so label-rejected programs can still be run to exhibit leaks.

mod audit;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::lattice::Lattice;
use crate::runtime::{
    apply_binop, dump_value_lines, parse_store_spec, set_path, zero, ClosureParam, ControlPlane,
    CopyMode, Env, FunClosure, Loc, Signal, Store, TableClosure, Value, ValueError,
};
use crate::syntax::{
    Block, Decl, DeclKind, Direction, Expr, ExprKind, FnTy, FunctionDecl, Program, SecTy, Stmt,
    StmtKind, Ty, TypeDecl, TypeDeclKind, TypeDefs, TypeError,
};

pub use audit::AuditState;

/// Derivation depth past which evaluation aborts. Checked programs never
/// come close.
pub const MAX_DEPTH: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("`{0}` is not a closure")]
    NotAClosure(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expression is not an l-value")]
    NotAnLValue,
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("store spec: {0}")]
    StoreSpec(#[from] ValueError),
    #[error("derivation depth exceeded {MAX_DEPTH}")]
    DepthExceeded,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Check the metatheory invariants after every step and record
    /// violations in [`Outcome::violations`].
    pub audit: bool,
}

/// Final state of a run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub store: Store,
    /// ε after the control's parameters and declarations.
    pub env: Env,
    pub defs: TypeDefs,
    pub signal: Signal,
    /// Control parameters in declaration order.
    pub params: Vec<String>,
    pub violations: Vec<String>,
}

impl Outcome {
    pub fn value_of(&self, name: &str) -> Option<&Value> {
        self.env.get(name).and_then(|l| self.store.get(l))
    }

    /// `path = value` lines for every data variable, sorted by name, then a
    /// trailing signal line.
    pub fn dump(&self) -> String {
        let mut lines = Vec::new();
        for name in self.env.names() {
            if let Some(v) = self.value_of(name) {
                dump_value_lines(name, v, &mut lines);
            }
        }
        lines.push(format!("# signal: {}", self.signal));
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

/// A normalized write target: a root variable and a path of fields and
/// concrete indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    pub base: String,
    pub path: Vec<LSeg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LSeg {
    Field(String),
    Index(i128),
}

impl std::fmt::Display for LValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.base)?;
        for s in &self.path {
            match s {
                LSeg::Field(n) => write!(f, ".{n}")?,
                LSeg::Index(i) => write!(f, "[{i}]")?,
            }
        }
        Ok(())
    }
}

/// Non-local exits through expression evaluation.
#[derive(Debug)]
enum Stop {
    Exit,
    Err(EvalError),
}

impl From<EvalError> for Stop {
    fn from(e: EvalError) -> Stop {
        Stop::Err(e)
    }
}

impl From<TypeError> for Stop {
    fn from(e: TypeError) -> Stop {
        Stop::Err(e.into())
    }
}

type Flow<T> = Result<T, Stop>;

fn lift<T>(r: Flow<T>) -> Result<Option<T>, EvalError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Stop::Exit) => Ok(None),
        Err(Stop::Err(e)) => Err(e),
    }
}

fn shape_err<T>(msg: impl Into<String>) -> Flow<T> {
    Err(Stop::Err(EvalError::ShapeMismatch(msg.into())))
}

/// Copy-in result: the parameter bindings and the write-backs to perform
/// after the body.
#[derive(Debug, Clone, Default)]
pub struct CopyIn {
    pub bindings: Vec<(String, Loc)>,
    pub write_backs: Vec<(LValue, Loc)>,
}

pub struct Interpreter<'a> {
    lattice: &'a Lattice,
    cp: &'a ControlPlane,
    store: Store,
    depth: usize,
    audit: Option<AuditState>,
}

impl<'a> Interpreter<'a> {
    pub fn new(lattice: &'a Lattice, cp: &'a ControlPlane, opts: RunOptions) -> Interpreter<'a> {
        Interpreter {
            lattice,
            cp,
            store: Store::new(),
            depth: 0,
            audit: opts.audit.then(AuditState::default),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn into_store(self) -> Store {
        self.store
    }

    pub fn violations(&self) -> &[String] {
        self.audit.as_ref().map_or(&[], |a| &a.violations)
    }

    fn enter(&mut self) -> Result<(), EvalError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(EvalError::DepthExceeded);
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn read_var(&self, env: &Env, defs: &TypeDefs, x: &str) -> Result<Value, EvalError> {
        match env.get(x).and_then(|l| self.store.get(l)) {
            Some(v) => Ok(v.clone()),
            None if defs.is_match_kind(x) => Ok(Value::MatchKind(x.to_string())),
            None => Err(EvalError::UnboundVariable(x.to_string())),
        }
    }

    /// `⟨C, Δ, μ, ε, e⟩ ⇓ ⟨μ′, v⟩`. `None` means a call inside `e` exited.
    pub fn eval_expression(
        &mut self,
        env: &Env,
        defs: &TypeDefs,
        e: &Expr,
    ) -> Result<Option<Value>, EvalError> {
        lift(self.expr(env, defs, e))
    }

    fn expr(&mut self, env: &Env, defs: &TypeDefs, e: &Expr) -> Flow<Value> {
        self.enter()?;
        let r = self.expr_inner(env, defs, e);
        self.leave();
        r
    }

    fn expr_inner(&mut self, env: &Env, defs: &TypeDefs, e: &Expr) -> Flow<Value> {
        Ok(match &e.kind {
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Int(i) => Value::Int(*i),
            ExprKind::Bit { width, value } => Value::bit(*width, *value),
            ExprKind::Var(x) => self.read_var(env, defs, x)?,
            ExprKind::Index(a, i) => {
                let av = self.expr(env, defs, a)?;
                let iv = self.expr(env, defs, i)?;
                let Some(idx) = iv.as_index() else {
                    return shape_err(format!("index `{iv}` is not a number"));
                };
                match av {
                    Value::Stack { elem, mut items } => {
                        if idx >= 0 && (idx as usize) < items.len() {
                            items.swap_remove(idx as usize)
                        } else {
                            zero(&elem)
                        }
                    }
                    v => return shape_err(format!("cannot index `{v}`")),
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lv = self.expr(env, defs, l)?;
                let rv = self.expr(env, defs, r)?;
                match apply_binop(*op, &lv, &rv) {
                    Some(v) => v,
                    None => return shape_err(format!("`{lv} {} {rv}`", op.symbol())),
                }
            }
            ExprKind::Record(fs) => {
                let mut out = Vec::with_capacity(fs.len());
                for (n, fe) in fs {
                    out.push((n.clone(), self.expr(env, defs, fe)?));
                }
                Value::Record(out)
            }
            ExprKind::Member(a, f) => {
                let av = self.expr(env, defs, a)?;
                match av.field(f) {
                    Some(v) => v.clone(),
                    None => return shape_err(format!("no field `{f}` in `{av}`")),
                }
            }
            ExprKind::Call(callee, args) => {
                let cv = self.expr(env, defs, callee)?;
                match cv {
                    Value::Function(clos) => self.call(&clos, env, defs, args, Vec::new())?,
                    Value::Table(t) if args.is_empty() => {
                        self.apply_table(&t, defs)?;
                        Value::Unit
                    }
                    v => return Err(EvalError::NotAClosure(v.to_string()).into()),
                }
            }
        })
    }

    /// `⇓_lval`: normalizes an inout expression, evaluating indices.
    pub fn eval_lvalue(
        &mut self,
        env: &Env,
        defs: &TypeDefs,
        e: &Expr,
    ) -> Result<Option<LValue>, EvalError> {
        lift(self.lvalue(env, defs, e))
    }

    fn lvalue(&mut self, env: &Env, defs: &TypeDefs, e: &Expr) -> Flow<LValue> {
        match &e.kind {
            ExprKind::Var(x) => {
                if env.get(x).is_none() {
                    return Err(EvalError::UnboundVariable(x.clone()).into());
                }
                Ok(LValue {
                    base: x.clone(),
                    path: Vec::new(),
                })
            }
            ExprKind::Member(a, f) => {
                let mut lv = self.lvalue(env, defs, a)?;
                lv.path.push(LSeg::Field(f.clone()));
                Ok(lv)
            }
            ExprKind::Index(a, i) => {
                let mut lv = self.lvalue(env, defs, a)?;
                let iv = self.expr(env, defs, i)?;
                let Some(idx) = iv.as_index() else {
                    return shape_err(format!("index `{iv}` is not a number"));
                };
                lv.path.push(LSeg::Index(idx));
                Ok(lv)
            }
            _ => Err(EvalError::NotAnLValue.into()),
        }
    }

    pub fn read_lvalue(&self, env: &Env, lv: &LValue) -> Result<Value, EvalError> {
        let loc = env
            .get(&lv.base)
            .ok_or_else(|| EvalError::UnboundVariable(lv.base.clone()))?;
        let mut v = self
            .store
            .get(loc)
            .ok_or_else(|| EvalError::UnboundVariable(lv.base.clone()))?;
        for seg in &lv.path {
            v = match (seg, v) {
                (LSeg::Field(f), v) => v
                    .field(f)
                    .ok_or_else(|| EvalError::ShapeMismatch(format!("no field `{f}` in `{lv}`")))?,
                (LSeg::Index(i), Value::Stack { elem, items }) => {
                    match usize::try_from(*i).ok().and_then(|i| items.get(i)) {
                        Some(item) => item,
                        None => return Ok(zero(elem)),
                    }
                }
                (LSeg::Index(_), _) => {
                    return Err(EvalError::ShapeMismatch(format!(
                        "`{lv}` indexes a non-stack"
                    )))
                }
            };
        }
        Ok(v.clone())
    }

    /// `⇓_write`: rebuilds the aggregate at `ε(base)` with the component at
    /// the path replaced. Out-of-bounds index writes leave the store as is.
    pub fn write_lvalue(&mut self, env: &Env, lv: &LValue, v: Value) -> Result<(), EvalError> {
        let loc = env
            .get(&lv.base)
            .ok_or_else(|| EvalError::UnboundVariable(lv.base.clone()))?;
        let mut root = self
            .store
            .get(loc)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(lv.base.clone()))?;
        let snapshot = self.audit.as_ref().map(|_| self.store.clone());
        if write_path(&mut root, &lv.path, v)? {
            self.store.set(loc, root);
        }
        if let (Some(a), Some(before)) = (self.audit.as_mut(), snapshot) {
            a.check_frame(&before, &self.store, loc, lv);
        }
        Ok(())
    }

    /// Copy-in for the parameters of a call: `in` arguments are evaluated,
    /// `inout` and `out` arguments are normalized to l-values and recorded for
    /// write-back. Every parameter gets a fresh location.
    pub fn copy_in_out(
        &mut self,
        env: &Env,
        defs: &TypeDefs,
        params: &[ClosureParam],
        args: &[Expr],
    ) -> Result<Option<CopyIn>, EvalError> {
        lift(self.copy_in(env, defs, params, args))
    }

    fn copy_in(
        &mut self,
        env: &Env,
        defs: &TypeDefs,
        params: &[ClosureParam],
        args: &[Expr],
    ) -> Flow<CopyIn> {
        if params.len() != args.len() {
            return shape_err(format!(
                "{} arguments for {} parameters",
                args.len(),
                params.len()
            ));
        }
        let mut out = CopyIn::default();
        for (p, a) in params.iter().zip(args) {
            let v = match p.mode {
                CopyMode::In => self.expr(env, defs, a)?,
                CopyMode::InOut | CopyMode::Out => {
                    let lv = self.lvalue(env, defs, a)?;
                    let v = if p.mode == CopyMode::InOut {
                        self.read_lvalue(env, &lv)?
                    } else {
                        zero(&p.ty)
                    };
                    out.write_backs.push((lv, Loc(self.store.len())));
                    v
                }
            };
            if !v.conforms(&p.ty) {
                return shape_err(format!(
                    "argument `{v}` does not fit parameter `{}`",
                    p.name
                ));
            }
            let loc = self.store.alloc(v, p.ty.clone());
            out.bindings.push((p.name.clone(), loc));
        }
        Ok(out)
    }

    /// Calls `clos` with source arguments evaluated in `caller` and already
    /// evaluated control-plane arguments.
    fn call(
        &mut self,
        clos: &FunClosure,
        caller: &Env,
        defs: &TypeDefs,
        args: &[Expr],
        cp_args: Vec<Value>,
    ) -> Flow<Value> {
        self.enter()?;
        let r = self.call_inner(clos, caller, defs, args, cp_args);
        self.leave();
        r
    }

    fn call_inner(
        &mut self,
        clos: &FunClosure,
        caller: &Env,
        defs: &TypeDefs,
        args: &[Expr],
        cp_args: Vec<Value>,
    ) -> Flow<Value> {
        let copy = self.copy_in(caller, defs, &clos.params, args)?;
        let mut body_env = clos.env.clone();
        for (n, l) in &copy.bindings {
            body_env.bind(n, *l);
        }
        if cp_args.len() != clos.cp_params.len() {
            return shape_err(format!(
                "`{}` expects {} control-plane arguments",
                clos.decl.name,
                clos.cp_params.len()
            ));
        }
        for (p, v) in clos.cp_params.iter().zip(cp_args) {
            if !v.conforms(&p.ty) {
                return shape_err(format!(
                    "control-plane argument `{v}` does not fit `{}`",
                    p.name
                ));
            }
            let loc = self.store.alloc(v, p.ty.clone());
            body_env.bind(&p.name, loc);
        }
        let mut body_defs = defs.clone();
        let sig = self.block(&mut body_env, &mut body_defs, &clos.decl.body)?;
        for (lv, loc) in &copy.write_backs {
            let v = self
                .store
                .get(*loc)
                .cloned()
                .ok_or(EvalError::NotAnLValue)?;
            self.write_lvalue(caller, lv, v)?;
        }
        match sig {
            Signal::Exit => Err(Stop::Exit),
            Signal::Return(v) => Ok(v),
            Signal::Cont => Ok(zero(&clos.ret)),
        }
    }

    fn apply_table(&mut self, t: &TableClosure, defs: &TypeDefs) -> Flow<()> {
        let mut keys = Vec::with_capacity(t.decl.keys.len());
        for k in &t.decl.keys {
            keys.push(self.expr(&t.env, defs, &k.expr)?);
        }
        let Ok(call) = self.cp.table_match(&t.decl.name, &keys) else {
            return Err(Stop::Exit);
        };
        let Some(aref) = t.decl.actions.iter().find(|a| a.name == call.action) else {
            return Err(EvalError::NotAClosure(call.action.clone()).into());
        };
        let action = match self.read_var(&t.env, defs, &aref.name)? {
            Value::Function(c) => c,
            v => return Err(EvalError::NotAClosure(v.to_string()).into()),
        };
        self.call(&action, &t.env, defs, aref.bound_args(), call.args.clone())?;
        Ok(())
    }

    /// `⟨C, Δ, μ, ε, s⟩ ⇓ ⟨μ′, ε′, sig⟩`.
    pub fn eval_statement(
        &mut self,
        env: &mut Env,
        defs: &mut TypeDefs,
        s: &Stmt,
    ) -> Result<Signal, EvalError> {
        match self.stmt(env, defs, s) {
            Ok(sig) => Ok(sig),
            Err(Stop::Exit) => Ok(Signal::Exit),
            Err(Stop::Err(e)) => Err(e),
        }
    }

    fn stmt(&mut self, env: &mut Env, defs: &mut TypeDefs, s: &Stmt) -> Flow<Signal> {
        self.enter()?;
        let before = self
            .audit
            .as_ref()
            .map(|_| (self.store.clone(), env.clone()));
        let r = self.stmt_inner(env, defs, s);
        if let (Some(a), Some((store, env_before))) = (self.audit.as_mut(), before) {
            a.check_step(&store, &env_before, &self.store, env, s.span);
        }
        self.leave();
        r
    }

    fn stmt_inner(&mut self, env: &mut Env, defs: &mut TypeDefs, s: &Stmt) -> Flow<Signal> {
        match &s.kind {
            StmtKind::Call(e) => {
                self.expr(env, defs, e)?;
                Ok(Signal::Cont)
            }
            StmtKind::Apply(t) => match self.expr(env, defs, t)? {
                Value::Table(t) => {
                    self.apply_table(&t, defs)?;
                    Ok(Signal::Cont)
                }
                v => Err(EvalError::NotAClosure(v.to_string()).into()),
            },
            StmtKind::Assign(l, r) => {
                let lv = self.lvalue(env, defs, l)?;
                let v = self.expr(env, defs, r)?;
                let cur = self.read_lvalue(env, &lv)?;
                if !same_shape(&cur, &v) {
                    return shape_err(format!("cannot assign `{v}` to `{lv}`"));
                }
                self.write_lvalue(env, &lv, v)?;
                Ok(Signal::Cont)
            }
            StmtKind::If(g, t, e) => {
                let take = match self.expr(env, defs, g)? {
                    Value::Bool(b) => b,
                    v => return shape_err(format!("condition `{v}` is not a boolean")),
                };
                let branch = if take { Some(&**t) } else { e.as_deref() };
                match branch {
                    Some(b) => {
                        let (mut env2, mut defs2) = (env.clone(), defs.clone());
                        self.stmt(&mut env2, &mut defs2, b)
                    }
                    None => Ok(Signal::Cont),
                }
            }
            StmtKind::Block(b) => {
                let (mut env2, mut defs2) = (env.clone(), defs.clone());
                self.block(&mut env2, &mut defs2, b)
            }
            StmtKind::Exit => Ok(Signal::Exit),
            StmtKind::Return(None) => Ok(Signal::Return(Value::Unit)),
            StmtKind::Return(Some(e)) => Ok(Signal::Return(self.expr(env, defs, e)?)),
            StmtKind::Decl(d) => {
                self.decl(env, defs, d)?;
                Ok(Signal::Cont)
            }
        }
    }

    /// Runs statements in sequence in the given scope, stopping at the first
    /// `return` or `exit`.
    fn block(&mut self, env: &mut Env, defs: &mut TypeDefs, b: &Block) -> Flow<Signal> {
        for s in &b.stmts {
            match self.stmt(env, defs, s) {
                Ok(Signal::Cont) => {}
                Err(Stop::Exit) => return Ok(Signal::Exit),
                other => return other,
            }
        }
        Ok(Signal::Cont)
    }

    /// `⟨C, Δ, μ, ε, d⟩ ⇓ ⟨Δ′, μ′, ε′, sig⟩`.
    pub fn eval_declaration(
        &mut self,
        env: &mut Env,
        defs: &mut TypeDefs,
        d: &Decl,
    ) -> Result<Signal, EvalError> {
        match self.decl(env, defs, d) {
            Ok(()) => Ok(Signal::Cont),
            Err(Stop::Exit) => Ok(Signal::Exit),
            Err(Stop::Err(e)) => Err(e),
        }
    }

    fn decl(&mut self, env: &mut Env, defs: &mut TypeDefs, d: &Decl) -> Flow<()> {
        match &d.kind {
            DeclKind::Var { ty, name, init } => {
                let ty = defs.resolve(ty, self.lattice)?;
                let v = match init {
                    Some(e) => self.expr(env, defs, e)?,
                    None => zero(&ty),
                };
                if !v.conforms(&ty) {
                    return shape_err(format!("initializer `{v}` does not fit `{name}`"));
                }
                let loc = self.store.alloc(v, ty);
                env.bind(name, loc);
            }
            DeclKind::Type(t) => define_type(defs, t, self.lattice)?,
            DeclKind::Function(f) => {
                let clos = self.closure(env, defs, f)?;
                let ty = SecTy::new(
                    Ty::Function(Box::new(FnTy {
                        params: clos
                            .params
                            .iter()
                            .map(|p| (direction(p.mode), p.ty.clone()))
                            .collect(),
                        cp_params: clos.cp_params.iter().map(|p| p.ty.clone()).collect(),
                        pc: self.lattice.bottom(),
                        ret: clos.ret.clone(),
                    })),
                    self.lattice.bottom(),
                );
                let loc = self.store.alloc(Value::Function(Arc::new(clos)), ty);
                env.bind(&f.name, loc);
            }
            DeclKind::Table(t) => {
                let loc = Loc(self.store.len());
                let clos = TableClosure {
                    loc,
                    env: env.clone(),
                    decl: Arc::clone(t),
                };
                let bot = self.lattice.bottom();
                self.store.alloc(
                    Value::Table(Arc::new(clos)),
                    SecTy::new(Ty::Table(bot), bot),
                );
                env.bind(&t.name, loc);
            }
        }
        Ok(())
    }

    fn closure(
        &self,
        env: &Env,
        defs: &TypeDefs,
        f: &Arc<FunctionDecl>,
    ) -> Result<FunClosure, TypeError> {
        let param = |p: &crate::syntax::Param, mode: CopyMode| {
            Ok(ClosureParam {
                mode,
                name: p.name.clone(),
                ty: defs.resolve(&p.ty, self.lattice)?,
            })
        };
        Ok(FunClosure {
            env: env.clone(),
            params: f
                .params
                .iter()
                .map(|p| param(p, p.dir.into()))
                .collect::<Result<_, TypeError>>()?,
            cp_params: f
                .cp_params
                .iter()
                .map(|p| param(p, CopyMode::In))
                .collect::<Result<_, TypeError>>()?,
            ret: defs.resolve(&f.ret, self.lattice)?,
            decl: Arc::clone(f),
        })
    }
}

fn direction(m: CopyMode) -> Direction {
    match m {
        CopyMode::In => Direction::In,
        CopyMode::InOut | CopyMode::Out => Direction::InOut,
    }
}

/// Extends Δ with a type declaration.
pub fn define_type(defs: &mut TypeDefs, t: &TypeDecl, lattice: &Lattice) -> Result<(), TypeError> {
    let bot = lattice.bottom();
    match &t.kind {
        TypeDeclKind::Header { name, fields } | TypeDeclKind::Struct { name, fields } => {
            let fs = fields
                .iter()
                .map(|f| Ok((f.name.clone(), defs.resolve(&f.ty, lattice)?)))
                .collect::<Result<Vec<_>, TypeError>>()?;
            let ty = if matches!(t.kind, TypeDeclKind::Header { .. }) {
                Ty::Header(fs)
            } else {
                Ty::Record(fs)
            };
            defs.define(name, SecTy::new(ty, bot));
        }
        TypeDeclKind::Typedef { name, ty } => {
            let r = defs.resolve(ty, lattice)?;
            defs.define(name, r);
        }
        TypeDeclKind::MatchKind { members } => defs.add_match_kinds(members.iter().cloned()),
    }
    Ok(())
}

/// Structural shape equality of two data values.
pub fn same_shape(a: &Value, b: &Value) -> bool {
    use Value::*;
    let fields = |x: &[(String, Value)], y: &[(String, Value)]| {
        x.len() == y.len()
            && x.iter()
                .zip(y)
                .all(|((n1, v1), (n2, v2))| n1 == n2 && same_shape(v1, v2))
    };
    match (a, b) {
        (Bool(_), Bool(_)) | (Int(_), Int(_)) | (Unit, Unit) | (MatchKind(_), MatchKind(_)) => true,
        (Bit { width: w1, .. }, Bit { width: w2, .. }) => w1 == w2,
        (Record(x), Record(y)) => fields(x, y),
        (Header { fields: x, .. }, Header { fields: y, .. }) => fields(x, y),
        (Stack { elem: e1, items: x }, Stack { elem: e2, items: y }) => {
            e1.same_shape(e2)
                && x.len() == y.len()
                && x.iter().zip(y).all(|(a, b)| same_shape(a, b))
        }
        _ => false,
    }
}

/// Functional update at `path`. Returns false for an out-of-bounds index,
/// in which case nothing is written.
fn write_path(target: &mut Value, path: &[LSeg], v: Value) -> Result<bool, EvalError> {
    let Some((seg, rest)) = path.split_first() else {
        *target = v;
        return Ok(true);
    };
    match seg {
        LSeg::Field(f) => {
            let slot = target
                .field_mut(f)
                .ok_or_else(|| EvalError::ShapeMismatch(format!("no field `{f}`")))?;
            write_path(slot, rest, v)
        }
        LSeg::Index(i) => match target {
            Value::Stack { items, .. } => {
                match usize::try_from(*i).ok().and_then(|i| items.get_mut(i)) {
                    Some(slot) => write_path(slot, rest, v),
                    None => Ok(false),
                }
            }
            _ => Err(EvalError::ShapeMismatch("index into a non-stack".into())),
        },
    }
}

/// Initial values of the control parameters, by name. Parameters not listed
/// start at their zero value.
pub type InitialValues = BTreeMap<String, Value>;

/// Resolved control parameter types, in declaration order.
pub fn control_param_types(
    p: &Program,
    lattice: &Lattice,
) -> Result<(TypeDefs, Vec<(String, SecTy)>), EvalError> {
    let mut defs = TypeDefs::new();
    for t in &p.type_decls {
        define_type(&mut defs, t, lattice)?;
    }
    let params = p
        .control
        .params
        .iter()
        .map(|pr| Ok((pr.name.clone(), defs.resolve(&pr.ty, lattice)?)))
        .collect::<Result<Vec<_>, TypeError>>()?;
    Ok((defs, params))
}

/// Builds initial parameter values from a store spec.
pub fn initial_values_from_spec(
    p: &Program,
    lattice: &Lattice,
    spec: &str,
) -> Result<InitialValues, EvalError> {
    let (_, params) = control_param_types(p, lattice)?;
    let mut vals: InitialValues = params.iter().map(|(n, t)| (n.clone(), zero(t))).collect();
    for line in parse_store_spec(spec)? {
        let Some((_, ty)) = params.iter().find(|(n, _)| *n == line.root) else {
            return Err(
                ValueError::new(format!("`{}` is not a control parameter", line.root))
                    .at_line(line.line)
                    .into(),
            );
        };
        let slot = vals
            .get_mut(&line.root)
            .expect("every parameter has a value");
        set_path(slot, ty, &line.path, &line.value).map_err(|e| e.at_line(line.line))?;
    }
    Ok(vals)
}

/// Runs the control with parameters initialized from a store spec.
pub fn run_program(
    p: &Program,
    lattice: &Lattice,
    cp: &ControlPlane,
    spec: &str,
    opts: RunOptions,
) -> Result<Outcome, EvalError> {
    let init = initial_values_from_spec(p, lattice, spec)?;
    run_program_with(p, lattice, cp, &init, opts)
}

/// Runs the control: parameters first, then its declarations, then the
/// apply block.
pub fn run_program_with(
    p: &Program,
    lattice: &Lattice,
    cp: &ControlPlane,
    init: &InitialValues,
    opts: RunOptions,
) -> Result<Outcome, EvalError> {
    let (mut defs, params) = control_param_types(p, lattice)?;
    let mut it = Interpreter::new(lattice, cp, opts);
    let mut env = Env::new();
    for (name, ty) in &params {
        let v = init.get(name).cloned().unwrap_or_else(|| zero(ty));
        if !v.conforms(ty) {
            return Err(EvalError::ShapeMismatch(format!(
                "initial value `{v}` does not fit `{name}`"
            )));
        }
        let loc = it.store.alloc(v, ty.clone());
        env.bind(name, loc);
    }
    let mut signal = Signal::Cont;
    for d in &p.control.decls {
        signal = it.eval_declaration(&mut env, &mut defs, d)?;
        if signal != Signal::Cont {
            break;
        }
    }
    if signal == Signal::Cont {
        let (mut apply_env, mut apply_defs) = (env.clone(), defs.clone());
        signal = match it.block(&mut apply_env, &mut apply_defs, &p.control.apply) {
            Ok(s) => s,
            Err(Stop::Exit) => Signal::Exit,
            Err(Stop::Err(e)) => return Err(e),
        };
    }
    let violations = it.violations().to_vec();
    Ok(Outcome {
        store: it.store,
        env,
        defs,
        signal,
        params: params.into_iter().map(|(n, _)| n).collect(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};

    fn run(src: &str, spec: &str) -> Outcome {
        let lat = Lattice::two_point();
        let p = parse_program(src, &lat).unwrap();
        run_program(
            &p,
            &lat,
            &ControlPlane::new(),
            spec,
            RunOptions { audit: true },
        )
        .unwrap()
    }

    #[test]
    fn pure_arithmetic() {
        let lat = Lattice::two_point();
        let cp = ControlPlane::new();
        let mut it = Interpreter::new(&lat, &cp, RunOptions::default());
        let e = parse_expr("3 + 4", &lat).unwrap();
        let v = it
            .eval_expression(&Env::new(), &TypeDefs::new(), &e)
            .unwrap();
        assert_eq!(v, Some(Value::Int(7)));
        assert!(it.store().is_empty());
    }

    #[test]
    fn out_of_bounds_read_is_zero() {
        let o = run(
            "control C(inout bit<8>[4] s, inout bit<8> r) { apply { r = s[5]; } }",
            "s = [1, 2, 3, 4]\nr = 9",
        );
        assert_eq!(o.value_of("r"), Some(&Value::bit(8, 0)));
    }

    #[test]
    fn out_of_bounds_write_is_noop() {
        let o = run(
            "control C(inout bit<8>[2] s, inout bit<8> i) { apply { s[i] = 7:8; } }",
            "s = [1, 2]\ni = 5",
        );
        assert_eq!(
            o.dump(),
            "i = 5:8\ns[0] = 1:8\ns[1] = 2:8\n# signal: cont\n"
        );
    }

    #[test]
    fn call_copies_in_and_out() {
        let o = run(
            "control C(inout bit<8> x, inout bit<8> y) {
                function bit<8> inc(in bit<8> a) { return a + 1:8; }
                action swap(inout bit<8> a, inout bit<8> b) { bit<8> t = a; a = b; b = t; }
                apply { x = inc(9:8); swap(x, y); }
            }",
            "y = 3",
        );
        assert_eq!(o.value_of("x"), Some(&Value::bit(8, 3)));
        assert_eq!(o.value_of("y"), Some(&Value::bit(8, 10)));
        assert!(o.violations.is_empty(), "{:?}", o.violations);
    }

    #[test]
    fn lvalue_index_side_effects() {
        let o = run(
            "control C(inout bit<8>[3] a, inout int n) {
                function int f(inout int k) { k = k + 1; return 2; }
                apply { a[f(n)] = 5:8; }
            }",
            "",
        );
        assert_eq!(
            o.dump(),
            "a[0] = 0:8\na[1] = 0:8\na[2] = 5:8\nn = 1\n# signal: cont\n"
        );
    }

    #[test]
    fn return_stops_the_sequence() {
        let o = run(
            "control C(inout int r, inout bit<8> l) {
                function int f() { { return 1; l = 2:8; } }
                apply { r = f(); }
            }",
            "",
        );
        assert_eq!(o.value_of("r"), Some(&Value::Int(1)));
        assert_eq!(o.value_of("l"), Some(&Value::bit(8, 0)));
    }

    #[test]
    fn closures_see_later_writes() {
        let o = run(
            "control C(inout bit<8> r) {
                bit<8> g = 1:8;
                function bit<8> get() { return g; }
                apply { g = 5:8; r = get(); }
            }",
            "",
        );
        assert_eq!(o.value_of("r"), Some(&Value::bit(8, 5)));
    }

    #[test]
    fn exit_and_empty_apply() {
        let o = run(
            "control C(inout bit<8> x) { apply { exit; x = 1:8; } }",
            "x = 4",
        );
        assert_eq!(o.signal, Signal::Exit);
        assert_eq!(o.value_of("x"), Some(&Value::bit(8, 4)));
        let o = run("control C(inout bit<8> x) { apply { } }", "x = 4");
        assert_eq!(o.signal, Signal::Cont);
        assert_eq!(o.dump(), "x = 4:8\n# signal: cont\n");
    }

    #[test]
    fn exit_inside_action_writes_back() {
        let o = run(
            "control C(inout bit<8> x) {
                action a(inout bit<8> y) { y = 3:8; exit; }
                apply { a(x); x = 9:8; }
            }",
            "",
        );
        assert_eq!(o.signal, Signal::Exit);
        assert_eq!(o.value_of("x"), Some(&Value::bit(8, 3)));
    }

    #[test]
    fn declarations_allocate_fresh_locations() {
        let lat = Lattice::two_point();
        let cp = ControlPlane::new();
        let mut it = Interpreter::new(&lat, &cp, RunOptions::default());
        let (mut env, mut defs) = (Env::new(), TypeDefs::new());
        let p = parse_program("control C() { bit<8> x; bit<8> y = 3:8; apply {} }", &lat).unwrap();
        for d in &p.control.decls {
            it.eval_declaration(&mut env, &mut defs, d).unwrap();
        }
        assert_eq!(env.get("x"), Some(Loc(0)));
        assert_eq!(env.get("y"), Some(Loc(1)));
        assert_eq!(it.store().get(Loc(0)), Some(&Value::bit(8, 0)));
        assert_eq!(it.store().get(Loc(1)), Some(&Value::bit(8, 3)));
    }
}
