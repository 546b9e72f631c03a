use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::lattice::Lattice;
use crate::syntax::{BinOp, Direction, FunctionDecl, SecTy, TableDecl, Ty, TypeDefs, TypeError};

/// A store location. Locations are allocated densely and never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc(pub usize);

/// ε: variables to locations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    map: HashMap<String, Loc>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn get(&self, name: &str) -> Option<Loc> {
        self.map.get(name).copied()
    }

    pub fn bind(&mut self, name: &str, loc: Loc) {
        self.map.insert(name.to_string(), loc);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Sorted variable names.
    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.map.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// True if every binding of `self` is also in `other`, at the same location.
    pub fn is_sub_env_of(&self, other: &Env) -> bool {
        self.map.iter().all(|(k, l)| other.map.get(k) == Some(l))
    }

    pub fn same_domain(&self, other: &Env) -> bool {
        self.map.len() == other.map.len() && self.map.keys().all(|k| other.map.contains_key(k))
    }
}

/// How an argument is passed. `Out` is not expressible in source programs
/// but is supported by the calling convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CopyMode {
    In,
    Out,
    InOut,
}

impl From<Direction> for CopyMode {
    fn from(d: Direction) -> CopyMode {
        match d {
            Direction::In => CopyMode::In,
            Direction::InOut => CopyMode::InOut,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosureParam {
    pub mode: CopyMode,
    pub name: String,
    pub ty: SecTy,
}

/// `clos(ε, params, ret, body)`.
#[derive(Debug)]
pub struct FunClosure {
    pub env: Env,
    pub params: Vec<ClosureParam>,
    pub cp_params: Vec<ClosureParam>,
    pub ret: SecTy,
    pub decl: Arc<FunctionDecl>,
}

/// `table ℓ (ε, keys, actions)`.
#[derive(Debug)]
pub struct TableClosure {
    pub loc: Loc,
    pub env: Env,
    pub decl: Arc<TableDecl>,
}

#[derive(Clone, Debug)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Bit {
        width: u32,
        value: u128,
    },
    Unit,
    Record(Vec<(String, Value)>),
    Header {
        valid: bool,
        fields: Vec<(String, Value)>,
    },
    Stack {
        elem: SecTy,
        items: Vec<Value>,
    },
    MatchKind(String),
    Function(Arc<FunClosure>),
    Table(Arc<TableClosure>),
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        use Value::*;
        match (self, other) {
            (Bool(a), Bool(b)) => a == b,
            (Int(a), Int(b)) => a == b,
            (
                Bit {
                    width: w1,
                    value: v1,
                },
                Bit {
                    width: w2,
                    value: v2,
                },
            ) => w1 == w2 && v1 == v2,
            (Unit, Unit) => true,
            (Record(a), Record(b)) => a == b,
            (
                Header {
                    valid: va,
                    fields: a,
                },
                Header {
                    valid: vb,
                    fields: b,
                },
            ) => va == vb && a == b,
            (Stack { elem: ea, items: a }, Stack { elem: eb, items: b }) => {
                ea.same_shape(eb) && a == b
            }
            (MatchKind(a), MatchKind(b)) => a == b,
            (Function(a), Function(b)) => Arc::ptr_eq(a, b),
            (Table(a), Table(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl Value {
    pub fn bit(width: u32, value: u128) -> Value {
        Value::Bit {
            width,
            value: value & mask(width),
        }
    }

    pub fn is_closure(&self) -> bool {
        matches!(self, Value::Function(_) | Value::Table(_))
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(fs) | Value::Header { fields: fs, .. } => {
                fs.iter().find(|(n, _)| n == name).map(|(_, v)| v)
            }
            _ => None,
        }
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut Value> {
        match self {
            Value::Record(fs) | Value::Header { fields: fs, .. } => {
                fs.iter_mut().find(|(n, _)| n == name).map(|(_, v)| v)
            }
            _ => None,
        }
    }

    /// Integer view of an index value.
    pub fn as_index(&self) -> Option<i128> {
        match self {
            Value::Int(i) => Some(*i as i128),
            Value::Bit { value, .. } => i128::try_from(*value).ok(),
            _ => None,
        }
    }

    /// Shape-level value typing: does this value inhabit `ty`?
    pub fn conforms(&self, ty: &SecTy) -> bool {
        match (self, &ty.ty) {
            (Value::Bool(_), Ty::Bool) | (Value::Int(_), Ty::Int) | (Value::Unit, Ty::Unit) => true,
            (Value::Bit { width, value }, Ty::Bit(w)) => width == w && *value <= mask(*w),
            (Value::Record(vs), Ty::Record(ts)) => fields_conform(vs, ts),
            (Value::Header { valid, fields }, Ty::Header(ts)) => {
                *valid && fields_conform(fields, ts)
            }
            (Value::Stack { elem, items }, Ty::Stack(et, n)) => {
                items.len() == *n && elem.same_shape(et) && items.iter().all(|v| v.conforms(et))
            }
            (Value::MatchKind(m), Ty::MatchKind(ms)) => ms.contains(m),
            (Value::Function(c), Ty::Function(f)) => {
                c.params.len() == f.params.len()
                    && c.cp_params.len() == f.cp_params.len()
                    && c.params
                        .iter()
                        .zip(&f.params)
                        .all(|(p, (d, t))| p.mode == CopyMode::from(*d) && p.ty.same_shape(t))
                    && c.ret.same_shape(&f.ret)
            }
            (Value::Table(_), Ty::Table(_)) => true,
            _ => false,
        }
    }
}

fn fields_conform(vs: &[(String, Value)], ts: &[(String, SecTy)]) -> bool {
    vs.len() == ts.len()
        && vs
            .iter()
            .zip(ts)
            .all(|((vn, v), (tn, t))| vn == tn && v.conforms(t))
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bit { width, value } => write!(f, "{value}:{width}"),
            Value::Unit => f.write_str("()"),
            Value::Record(fs) | Value::Header { fields: fs, .. } => {
                f.write_str("{")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    write!(f, "{}{n} = {v}", if i == 0 { " " } else { ", " })?;
                }
                f.write_str(if fs.is_empty() { "}" } else { " }" })
            }
            Value::Stack { items, .. } => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::MatchKind(m) => f.write_str(m),
            Value::Function(c) => write!(f, "<function {}>", c.decl.name),
            Value::Table(t) => write!(f, "<table {}>", t.decl.name),
        }
    }
}

/// `init_Δ τ`: the canonical zero of a type.
pub fn init_value(defs: &TypeDefs, ty: &SecTy, lattice: &Lattice) -> Result<Value, TypeError> {
    Ok(zero(&defs.resolve(ty, lattice)?))
}

/// Reads past the end of a stack yield `havoc(τ)`, fixed to the zero value.
pub fn havoc_value(defs: &TypeDefs, ty: &SecTy, lattice: &Lattice) -> Result<Value, TypeError> {
    init_value(defs, ty, lattice)
}

/// Zero value of an already-resolved type.
pub fn zero(ty: &SecTy) -> Value {
    match &ty.ty {
        Ty::Bool => Value::Bool(false),
        Ty::Int => Value::Int(0),
        Ty::Bit(w) => Value::Bit {
            width: *w,
            value: 0,
        },
        Ty::Record(fs) => Value::Record(fs.iter().map(|(n, t)| (n.clone(), zero(t))).collect()),
        Ty::Header(fs) => Value::Header {
            valid: true,
            fields: fs.iter().map(|(n, t)| (n.clone(), zero(t))).collect(),
        },
        Ty::Stack(e, n) => Value::Stack {
            elem: (**e).clone(),
            items: (0..*n).map(|_| zero(e)).collect(),
        },
        Ty::MatchKind(ms) => Value::MatchKind(ms.first().cloned().unwrap_or_default()),
        Ty::Unit | Ty::Table(_) | Ty::Function(_) | Ty::Named(_) => Value::Unit,
    }
}

/// 𝔼(⊕, v₁, v₂). Ints wrap at 64 bits; bits wrap modulo 2ⁿ and compare unsigned.
pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Option<Value> {
    use BinOp::*;
    use Value::{Bit, Bool, Int};
    Some(match (op, a, b) {
        (Add, Int(x), Int(y)) => Int(x.wrapping_add(*y)),
        (Sub, Int(x), Int(y)) => Int(x.wrapping_sub(*y)),
        (Mul, Int(x), Int(y)) => Int(x.wrapping_mul(*y)),
        (Lt, Int(x), Int(y)) => Bool(x < y),
        (Le, Int(x), Int(y)) => Bool(x <= y),
        (Gt, Int(x), Int(y)) => Bool(x > y),
        (Ge, Int(x), Int(y)) => Bool(x >= y),
        (Eq, Int(x), Int(y)) => Bool(x == y),
        (Ne, Int(x), Int(y)) => Bool(x != y),
        (
            op,
            Bit { width: w, value: x },
            Bit {
                width: w2,
                value: y,
            },
        ) if w == w2 => {
            let w = *w;
            match op {
                Add => Value::bit(w, x.wrapping_add(*y)),
                Sub => Value::bit(w, x.wrapping_sub(*y)),
                Mul => Value::bit(w, x.wrapping_mul(*y)),
                BitAnd => Value::bit(w, x & y),
                BitOr => Value::bit(w, x | y),
                BitXor => Value::bit(w, x ^ y),
                Lt => Bool(x < y),
                Le => Bool(x <= y),
                Gt => Bool(x > y),
                Ge => Bool(x >= y),
                Eq => Bool(x == y),
                Ne => Bool(x != y),
                And | Or => return None,
            }
        }
        (And, Bool(x), Bool(y)) => Bool(*x && *y),
        (Or, Bool(x), Bool(y)) => Bool(*x || *y),
        (Eq, Bool(x), Bool(y)) => Bool(x == y),
        (Ne, Bool(x), Bool(y)) => Bool(x != y),
        _ => return None,
    })
}
