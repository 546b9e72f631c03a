//! Security types `⟨τ, χ⟩` and the typedef context Δ.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::lattice::{Label, Lattice};

pub const MAX_BIT_WIDTH: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    InOut,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::InOut => "inout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Bool,
    Int,
    Bit(u32),
    Unit,
    Record(Vec<(String, SecTy)>),
    Header(Vec<(String, SecTy)>),
    Stack(Box<SecTy>, usize),
    MatchKind(Vec<String>),
    Table(Label),
    Function(Box<FnTy>),
    /// A typedef, header, or struct name; removed by [`TypeDefs::resolve`].
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FnTy {
    pub params: Vec<(Direction, SecTy)>,
    pub cp_params: Vec<SecTy>,
    pub pc: Label,
    pub ret: SecTy,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SecTy {
    pub ty: Ty,
    pub label: Label,
}

impl SecTy {
    pub fn new(ty: Ty, label: Label) -> SecTy {
        SecTy { ty, label }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.ty, Ty::Bool | Ty::Int | Ty::Bit(_))
    }

    /// Data types are the ones that can be stored in headers, records,
    /// stacks, and control parameters.
    pub fn is_data(&self) -> bool {
        match &self.ty {
            Ty::Bool | Ty::Int | Ty::Bit(_) => true,
            Ty::Record(fs) | Ty::Header(fs) => fs.iter().all(|(_, t)| t.is_data()),
            Ty::Stack(e, _) => e.is_data(),
            _ => false,
        }
    }

    /// Labels of all scalar leaves. Non-data types count as a single leaf
    /// carrying the outer label.
    pub fn leaves(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Label>) {
        match &self.ty {
            Ty::Record(fs) | Ty::Header(fs) => fs.iter().for_each(|(_, t)| t.collect_leaves(out)),
            Ty::Stack(e, _) => e.collect_leaves(out),
            _ => out.push(self.label),
        }
    }

    /// Join of all leaf labels: the sensitivity of reading the whole value.
    pub fn join_leaves(&self, lattice: &Lattice) -> Label {
        lattice.join_all(self.leaves())
    }

    /// Meet of all leaf labels: the lowest location a whole-value write touches.
    pub fn meet_leaves(&self, lattice: &Lattice) -> Label {
        lattice.meet_all(self.leaves())
    }

    /// Joins `label` into every leaf. Aggregates keep their outer label.
    pub fn raise(&self, label: Label, lattice: &Lattice) -> SecTy {
        let ty = match &self.ty {
            Ty::Record(fs) => Ty::Record(raise_fields(fs, label, lattice)),
            Ty::Header(fs) => Ty::Header(raise_fields(fs, label, lattice)),
            Ty::Stack(e, n) => Ty::Stack(Box::new(e.raise(label, lattice)), *n),
            _ => return SecTy::new(self.ty.clone(), lattice.join(self.label, label)),
        };
        SecTy::new(ty, self.label)
    }

    /// Shape equality: everything but labels.
    pub fn same_shape(&self, other: &SecTy) -> bool {
        match (&self.ty, &other.ty) {
            (Ty::Record(a), Ty::Record(b)) | (Ty::Header(a), Ty::Header(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((fa, ta), (fb, tb))| fa == fb && ta.same_shape(tb))
            }
            (Ty::Stack(a, n), Ty::Stack(b, m)) => n == m && a.same_shape(b),
            (Ty::Function(a), Ty::Function(b)) => a == b,
            (a, b) => a == b,
        }
    }

    /// Same shape and every leaf of `self` flows to the matching leaf of
    /// `target`.
    pub fn flows_to(&self, target: &SecTy, lattice: &Lattice) -> bool {
        if !self.same_shape(target) {
            return false;
        }
        match (&self.ty, &target.ty) {
            (Ty::Record(a), Ty::Record(b)) | (Ty::Header(a), Ty::Header(b)) => a
                .iter()
                .zip(b)
                .all(|((_, ta), (_, tb))| ta.flows_to(tb, lattice)),
            (Ty::Stack(a, _), Ty::Stack(b, _)) => a.flows_to(b, lattice),
            _ => lattice.leq(self.label, target.label),
        }
    }

    /// Pairs of (source leaf label, target leaf label) for two types of the
    /// same shape.
    pub fn leaf_pairs(&self, target: &SecTy) -> Vec<(Label, Label)> {
        self.leaves().into_iter().zip(target.leaves()).collect()
    }

    /// Renders the type in concrete syntax, writing labels that differ from
    /// bottom.
    pub fn show(&self, lattice: &Lattice) -> String {
        let mut s = String::new();
        write_ty(&mut s, self, lattice);
        s
    }
}

fn raise_fields(fs: &[(String, SecTy)], label: Label, lattice: &Lattice) -> Vec<(String, SecTy)> {
    fs.iter()
        .map(|(n, t)| (n.clone(), t.raise(label, lattice)))
        .collect()
}

fn write_ty(out: &mut String, t: &SecTy, lattice: &Lattice) {
    let labelled = t.label != lattice.bottom();
    if labelled {
        out.push('<');
    }
    match &t.ty {
        Ty::Bool => out.push_str("bool"),
        Ty::Int => out.push_str("int"),
        Ty::Bit(w) => {
            let _ = write!(out, "bit<{w}>");
        }
        Ty::Unit => out.push_str("void"),
        Ty::Record(fs) | Ty::Header(fs) => {
            out.push_str(if matches!(t.ty, Ty::Record(_)) {
                "struct { "
            } else {
                "header { "
            });
            for (n, ft) in fs {
                write_ty(out, ft, lattice);
                let _ = write!(out, " {n}; ");
            }
            out.push('}');
        }
        Ty::Stack(e, n) => {
            write_ty(out, e, lattice);
            let _ = write!(out, "[{n}]");
        }
        Ty::MatchKind(ms) => {
            let _ = write!(out, "match_kind {{ {} }}", ms.join(", "));
        }
        Ty::Table(pc) => {
            let _ = write!(out, "table({})", lattice.name_of(*pc));
        }
        Ty::Function(f) => {
            out.push('(');
            for (i, (d, p)) in f.params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} ", d.keyword());
                write_ty(out, p, lattice);
            }
            if !f.cp_params.is_empty() {
                out.push_str("; ");
                for (i, p) in f.cp_params.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_ty(out, p, lattice);
                }
            }
            let _ = write!(out, ") -{}-> ", lattice.name_of(f.pc));
            write_ty(out, &f.ret, lattice);
        }
        Ty::Named(n) => out.push_str(n),
    }
    if labelled {
        let _ = write!(out, ", {}>", lattice.name_of(t.label));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unknown type name `{0}`")]
    UnknownTypeName(String),
    #[error("cyclic typedef through `{0}`")]
    CyclicTypedef(String),
}

/// Δ: type names to (unresolved) definitions, plus declared match kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeDefs {
    defs: HashMap<String, SecTy>,
    match_kinds: BTreeSet<String>,
}

impl Default for TypeDefs {
    fn default() -> Self {
        TypeDefs::new()
    }
}

impl TypeDefs {
    /// An empty context with the built-in match kinds `exact` and `lpm`.
    pub fn new() -> TypeDefs {
        TypeDefs {
            defs: HashMap::new(),
            match_kinds: ["exact", "lpm"].iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn define(&mut self, name: &str, ty: SecTy) {
        self.defs.insert(name.to_string(), ty);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&SecTy> {
        self.defs.get(name)
    }

    pub fn add_match_kinds<I: IntoIterator<Item = String>>(&mut self, members: I) {
        self.match_kinds.extend(members);
    }

    pub fn is_match_kind(&self, name: &str) -> bool {
        self.match_kinds.contains(name)
    }

    /// Unfolds every type name in `ty`, recursively through fields, stack
    /// elements, and function signatures. An outer label on a name is joined
    /// into the definition.
    pub fn resolve(&self, ty: &SecTy, lattice: &Lattice) -> Result<SecTy, TypeError> {
        self.resolve_in(ty, lattice, &mut Vec::new())
    }

    fn resolve_in(
        &self,
        ty: &SecTy,
        lattice: &Lattice,
        visiting: &mut Vec<String>,
    ) -> Result<SecTy, TypeError> {
        let fields = |fs: &[(String, SecTy)], visiting: &mut Vec<String>| {
            fs.iter()
                .map(|(n, t)| Ok((n.clone(), self.resolve_in(t, lattice, visiting)?)))
                .collect::<Result<Vec<_>, TypeError>>()
        };
        let ty_out = match &ty.ty {
            Ty::Named(name) => {
                if visiting.contains(name) {
                    return Err(TypeError::CyclicTypedef(name.clone()));
                }
                let def = self
                    .defs
                    .get(name)
                    .ok_or_else(|| TypeError::UnknownTypeName(name.clone()))?;
                visiting.push(name.clone());
                let resolved = self.resolve_in(def, lattice, visiting);
                visiting.pop();
                return Ok(resolved?.raise(ty.label, lattice));
            }
            Ty::Record(fs) => Ty::Record(fields(fs, visiting)?),
            Ty::Header(fs) => Ty::Header(fields(fs, visiting)?),
            Ty::Stack(e, n) => Ty::Stack(Box::new(self.resolve_in(e, lattice, visiting)?), *n),
            Ty::Function(f) => {
                let params = f
                    .params
                    .iter()
                    .map(|(d, p)| Ok((*d, self.resolve_in(p, lattice, visiting)?)))
                    .collect::<Result<Vec<_>, TypeError>>()?;
                let cp_params = f
                    .cp_params
                    .iter()
                    .map(|p| self.resolve_in(p, lattice, visiting))
                    .collect::<Result<Vec<_>, TypeError>>()?;
                Ty::Function(Box::new(FnTy {
                    params,
                    cp_params,
                    pc: f.pc,
                    ret: self.resolve_in(&f.ret, lattice, visiting)?,
                }))
            }
            other => other.clone(),
        };
        Ok(SecTy::new(ty_out, ty.label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit(w: u32, l: Label) -> SecTy {
        SecTy::new(Ty::Bit(w), l)
    }

    #[test]
    fn resolve_single_and_chain() {
        let lat = Lattice::two_point();
        let low = lat.bottom();
        let mut d = TypeDefs::new();
        d.define("T", bit(8, low));
        let t = SecTy::new(Ty::Named("T".into()), low);
        assert_eq!(d.resolve(&t, &lat).unwrap(), bit(8, low));

        let mut d = TypeDefs::new();
        d.define("T", SecTy::new(Ty::Named("U".into()), low));
        d.define("U", SecTy::new(Ty::Int, low));
        assert_eq!(d.resolve(&t, &lat).unwrap(), SecTy::new(Ty::Int, low));
    }

    #[test]
    fn resolve_base_is_fixed_point() {
        let lat = Lattice::two_point();
        let b = SecTy::new(Ty::Bool, lat.top());
        assert_eq!(TypeDefs::new().resolve(&b, &lat).unwrap(), b);
    }

    #[test]
    fn resolve_cycle_and_unknown() {
        let lat = Lattice::two_point();
        let low = lat.bottom();
        let mut d = TypeDefs::new();
        d.define("T", SecTy::new(Ty::Named("U".into()), low));
        d.define("U", SecTy::new(Ty::Named("T".into()), low));
        let t = SecTy::new(Ty::Named("T".into()), low);
        assert!(matches!(
            d.resolve(&t, &lat),
            Err(TypeError::CyclicTypedef(_))
        ));
        let x = SecTy::new(Ty::Named("X".into()), low);
        assert_eq!(
            d.resolve(&x, &lat),
            Err(TypeError::UnknownTypeName("X".into()))
        );
    }

    #[test]
    fn annotated_aggregate_raises_leaves() {
        let lat = Lattice::diamond();
        let a = lat.label("A").unwrap();
        let bot = lat.bottom();
        let mut d = TypeDefs::new();
        d.define(
            "alice_t",
            SecTy::new(Ty::Header(vec![("val".into(), bit(32, bot))]), bot),
        );
        let r = d
            .resolve(&SecTy::new(Ty::Named("alice_t".into()), a), &lat)
            .unwrap();
        assert_eq!(r.label, bot);
        assert_eq!(r.leaves(), vec![a]);
    }

    #[test]
    fn flows_component_wise() {
        let lat = Lattice::two_point();
        let (lo, hi) = (lat.bottom(), lat.top());
        let rec = |a, b| {
            SecTy::new(
                Ty::Record(vec![("x".into(), bit(8, a)), ("y".into(), bit(8, b))]),
                lo,
            )
        };
        assert!(rec(lo, lo).flows_to(&rec(lo, hi), &lat));
        assert!(!rec(hi, lo).flows_to(&rec(lo, hi), &lat));
        assert!(!bit(8, lo).flows_to(&bit(16, hi), &lat));
        assert_eq!(rec(lo, hi).meet_leaves(&lat), lo);
        assert_eq!(rec(lo, hi).join_leaves(&lat), hi);
    }
}
