//! Text syntax for values and store specs.
//!
//! Scalars: `true`, `-3`, `7:8` (bit<8>), `0xff`, `10.0.0.1` (bit<32>).
//! Aggregates: `{ f = v, ... }` for records and headers, `[v, ...]` for stacks.
//! Omitted fields and trailing stack elements are zero.
//!
//! A store spec is a list of `path = value` lines, where a path is a
//! variable followed by `.field` and `[index]` steps. `#` starts a comment.

use std::fmt;

use thiserror::Error;

use super::value::{mask, zero, Value};
use crate::syntax::{SecTy, Ty};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ValueError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ValueError {
    pub fn new(message: impl Into<String>) -> ValueError {
        ValueError {
            line: None,
            message: message.into(),
        }
    }

    pub fn at_line(mut self, line: usize) -> ValueError {
        self.line.get_or_insert(line);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open(char),
    Close(char),
    Comma,
    Eq,
    Atom(String),
}

fn tokenize(s: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut atom = String::new();
    let flush = |atom: &mut String, out: &mut Vec<Tok>| {
        if !atom.is_empty() {
            out.push(Tok::Atom(std::mem::take(atom)));
        }
    };
    for c in s.chars() {
        match c {
            '{' | '[' => {
                flush(&mut atom, &mut out);
                out.push(Tok::Open(c));
            }
            '}' | ']' => {
                flush(&mut atom, &mut out);
                out.push(Tok::Close(c));
            }
            ',' => {
                flush(&mut atom, &mut out);
                out.push(Tok::Comma);
            }
            '=' => {
                flush(&mut atom, &mut out);
                out.push(Tok::Eq);
            }
            c if c.is_whitespace() => flush(&mut atom, &mut out),
            c => atom.push(c),
        }
    }
    flush(&mut atom, &mut out);
    out
}

/// Parses `text` as a value of the resolved type `ty`.
pub fn parse_value(text: &str, ty: &SecTy) -> Result<Value, ValueError> {
    let toks = tokenize(text);
    let mut p = ValueParser { toks, pos: 0 };
    let v = p.value(ty)?;
    if p.pos != p.toks.len() {
        return Err(ValueError::new(format!("trailing input in value `{text}`")));
    }
    Ok(v)
}

struct ValueParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl ValueParser {
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expect(&mut self, t: Tok) -> Result<(), ValueError> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(ValueError::new(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn value(&mut self, ty: &SecTy) -> Result<Value, ValueError> {
        match &ty.ty {
            Ty::Record(fs) => Ok(Value::Record(self.fields(fs)?)),
            Ty::Header(fs) => Ok(Value::Header {
                valid: true,
                fields: self.fields(fs)?,
            }),
            Ty::Stack(elem, n) => {
                self.expect(Tok::Open('['))?;
                let mut items = Vec::new();
                if self.peek() != Some(&Tok::Close(']')) {
                    loop {
                        items.push(self.value(elem)?);
                        match self.next() {
                            Some(Tok::Comma) => continue,
                            Some(Tok::Close(']')) => break,
                            t => {
                                return Err(ValueError::new(format!(
                                    "expected `,` or `]`, found {t:?}"
                                )))
                            }
                        }
                    }
                } else {
                    self.pos += 1;
                }
                if items.len() > *n {
                    return Err(ValueError::new(format!(
                        "{} elements for a stack of size {n}",
                        items.len()
                    )));
                }
                while items.len() < *n {
                    items.push(zero(elem));
                }
                Ok(Value::Stack {
                    elem: (**elem).clone(),
                    items,
                })
            }
            _ => match self.next() {
                Some(Tok::Atom(a)) => parse_scalar(&a, ty),
                t => Err(ValueError::new(format!("expected a scalar, found {t:?}"))),
            },
        }
    }

    fn fields(&mut self, fs: &[(String, SecTy)]) -> Result<Vec<(String, Value)>, ValueError> {
        self.expect(Tok::Open('{'))?;
        let mut vals: Vec<Option<Value>> = vec![None; fs.len()];
        if self.peek() == Some(&Tok::Close('}')) {
            self.pos += 1;
        } else {
            loop {
                let name = match self.next() {
                    Some(Tok::Atom(a)) => a,
                    t => {
                        return Err(ValueError::new(format!(
                            "expected a field name, found {t:?}"
                        )))
                    }
                };
                let i = fs
                    .iter()
                    .position(|(n, _)| *n == name)
                    .ok_or_else(|| ValueError::new(format!("unknown field `{name}`")))?;
                self.expect(Tok::Eq)?;
                let v = self.value(&fs[i].1)?;
                if vals[i].replace(v).is_some() {
                    return Err(ValueError::new(format!("field `{name}` given twice")));
                }
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::Close('}')) => break,
                    t => {
                        return Err(ValueError::new(format!(
                            "expected `,` or `}}`, found {t:?}"
                        )))
                    }
                }
            }
        }
        Ok(fs
            .iter()
            .zip(vals)
            .map(|((n, t), v)| (n.clone(), v.unwrap_or_else(|| zero(t))))
            .collect())
    }
}

fn parse_u128(s: &str) -> Option<u128> {
    if let Some(h) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u128::from_str_radix(h, 16).ok()
    } else if let Some(b) = s.strip_prefix("0b") {
        u128::from_str_radix(b, 2).ok()
    } else if s.contains('.') {
        let parts: Vec<&str> = s.split('.').collect();
        if parts.len() != 4 {
            return None;
        }
        let mut v = 0u128;
        for p in parts {
            v = (v << 8) | p.parse::<u8>().ok()? as u128;
        }
        Some(v)
    } else {
        s.parse().ok()
    }
}

fn parse_scalar(a: &str, ty: &SecTy) -> Result<Value, ValueError> {
    let bad = || ValueError::new(format!("`{a}` is not a value of type {:?}", ty.ty));
    match &ty.ty {
        Ty::Bool => match a {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(bad()),
        },
        Ty::Int => {
            let (neg, digits) = match a.strip_prefix('-') {
                Some(d) => (true, d),
                None => (false, a),
            };
            let mag = parse_u128(digits).ok_or_else(bad)?;
            let v = if neg { -(mag as i128) } else { mag as i128 };
            i64::try_from(v).map(Value::Int).map_err(|_| bad())
        }
        Ty::Bit(w) => {
            let (digits, width) = match a.rsplit_once(':') {
                Some((d, wtxt)) => (d, Some(wtxt.parse::<u32>().map_err(|_| bad())?)),
                None => (a, None),
            };
            if let Some(width) = width {
                if width != *w {
                    return Err(ValueError::new(format!(
                        "`{a}` has width {width}, expected {w}"
                    )));
                }
            }
            let v = parse_u128(digits).ok_or_else(bad)?;
            if v > mask(*w) {
                return Err(ValueError::new(format!("`{a}` does not fit in bit<{w}>")));
            }
            Ok(Value::Bit {
                width: *w,
                value: v,
            })
        }
        Ty::Unit if a == "()" => Ok(Value::Unit),
        Ty::MatchKind(ms) if ms.iter().any(|m| m == a) => Ok(Value::MatchKind(a.to_string())),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSeg {
    Field(String),
    Index(usize),
}

impl fmt::Display for PathSeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathSeg::Field(n) => write!(f, ".{n}"),
            PathSeg::Index(i) => write!(f, "[{i}]"),
        }
    }
}

/// One `path = value` line of a store spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreLine {
    pub line: usize,
    pub root: String,
    pub path: Vec<PathSeg>,
    pub value: String,
}

fn parse_path(s: &str) -> Option<(String, Vec<PathSeg>)> {
    let s = s.trim();
    let ident_end = s.find(['.', '[']).unwrap_or(s.len());
    let root = &s[..ident_end];
    let is_ident = |t: &str| {
        !t.is_empty()
            && t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !t.starts_with(|c: char| c.is_ascii_digit())
    };
    if !is_ident(root) {
        return None;
    }
    let mut rest = &s[ident_end..];
    let mut path = Vec::new();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('.') {
            let end = r.find(['.', '[']).unwrap_or(r.len());
            if !is_ident(&r[..end]) {
                return None;
            }
            path.push(PathSeg::Field(r[..end].to_string()));
            rest = &r[end..];
        } else {
            let r = rest.strip_prefix('[')?;
            let end = r.find(']')?;
            path.push(PathSeg::Index(r[..end].trim().parse().ok()?));
            rest = &r[end + 1..];
        }
    }
    Some((root.to_string(), path))
}

pub fn parse_store_spec(src: &str) -> Result<Vec<StoreLine>, ValueError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| ValueError::new("expected `path = value`").at_line(i + 1))?;
        let (root, path) = parse_path(lhs)
            .ok_or_else(|| ValueError::new(format!("bad path `{}`", lhs.trim())).at_line(i + 1))?;
        out.push(StoreLine {
            line: i + 1,
            root,
            path,
            value: rhs.trim().to_string(),
        });
    }
    Ok(out)
}

/// Overwrites the component of `target` at `path` with `text` parsed at the
/// component's type.
pub fn set_path(
    target: &mut Value,
    ty: &SecTy,
    path: &[PathSeg],
    text: &str,
) -> Result<(), ValueError> {
    let Some((seg, rest)) = path.split_first() else {
        *target = parse_value(text, ty)?;
        return Ok(());
    };
    match (seg, &ty.ty, target) {
        (PathSeg::Field(f), Ty::Record(fts) | Ty::Header(fts), v) => {
            let fty = fts
                .iter()
                .find(|(n, _)| n == f)
                .map(|(_, t)| t)
                .ok_or_else(|| ValueError::new(format!("unknown field `{f}`")))?;
            let slot = v
                .field_mut(f)
                .ok_or_else(|| ValueError::new(format!("unknown field `{f}`")))?;
            set_path(slot, fty, rest, text)
        }
        (PathSeg::Index(i), Ty::Stack(elem, _), Value::Stack { items, .. }) => {
            let slot = items
                .get_mut(*i)
                .ok_or_else(|| ValueError::new(format!("index {i} out of bounds")))?;
            set_path(slot, elem, rest, text)
        }
        (seg, _, _) => Err(ValueError::new(format!(
            "`{seg}` does not apply to {:?}",
            ty.ty
        ))),
    }
}

/// Flattens a value into `path = leaf` lines. Closures are skipped.
pub fn dump_value_lines(path: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Record(fs) | Value::Header { fields: fs, .. } if !fs.is_empty() => {
            for (n, fv) in fs {
                dump_value_lines(&format!("{path}.{n}"), fv, out);
            }
        }
        Value::Stack { items, .. } if !items.is_empty() => {
            for (i, iv) in items.iter().enumerate() {
                dump_value_lines(&format!("{path}[{i}]"), iv, out);
            }
        }
        Value::Function(_) | Value::Table(_) => {}
        v => out.push(format!("{path} = {v}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn bit(w: u32) -> SecTy {
        SecTy::new(Ty::Bit(w), Lattice::two_point().bottom())
    }

    #[test]
    fn scalars() {
        assert_eq!(parse_value("7:8", &bit(8)).unwrap(), Value::bit(8, 7));
        assert_eq!(parse_value("0xff", &bit(8)).unwrap(), Value::bit(8, 255));
        assert_eq!(
            parse_value("10.0.0.1", &bit(32)).unwrap(),
            Value::bit(32, 0x0a00_0001)
        );
        assert!(parse_value("256", &bit(8)).is_err());
        assert!(parse_value("7:9", &bit(8)).is_err());
        let int = SecTy::new(Ty::Int, Lattice::two_point().bottom());
        assert_eq!(parse_value("-12", &int).unwrap(), Value::Int(-12));
    }

    #[test]
    fn aggregates_round_trip() {
        let bot = Lattice::two_point().bottom();
        let rec = SecTy::new(
            Ty::Record(vec![
                ("a".into(), bit(4)),
                ("s".into(), SecTy::new(Ty::Stack(Box::new(bit(2)), 3), bot)),
            ]),
            bot,
        );
        let v = parse_value("{ s = [1, 3] }", &rec).unwrap();
        assert_eq!(v.field("a"), Some(&Value::bit(4, 0)));
        assert_eq!(parse_value(&v.to_string(), &rec).unwrap(), v);
        let mut lines = Vec::new();
        dump_value_lines("r", &v, &mut lines);
        assert_eq!(
            lines,
            ["r.a = 0:4", "r.s[0] = 1:2", "r.s[1] = 3:2", "r.s[2] = 0:2"]
        );
    }

    #[test]
    fn store_spec_paths() {
        let spec = parse_store_spec("# c\nhdr.ipv4.ttl = 5:8\ns[2] = 1 # x\n").unwrap();
        assert_eq!(spec.len(), 2);
        assert_eq!(spec[0].root, "hdr");
        assert_eq!(
            spec[0].path,
            vec![PathSeg::Field("ipv4".into()), PathSeg::Field("ttl".into())]
        );
        assert_eq!(spec[1].path, vec![PathSeg::Index(2)]);
        assert!(parse_store_spec("1x = 3").is_err());
    }
}
