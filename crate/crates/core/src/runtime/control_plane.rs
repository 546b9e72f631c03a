//! Control-plane entries: parsing, validation against the program, and
//! lookup.
//!
//! ```text
//! # comment
//! fetch_from_cache: 7:8 -> cache_hit(99:32)
//! ipv4_lpm: 10.0.0.0/8 -> drop()
//! default fetch_from_cache -> cache_miss()
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::text::parse_value;
use super::value::{mask, Value};
use crate::lattice::Lattice;
use crate::syntax::{DeclKind, Program, SecTy, Ty};
use crate::typechecker::{check_program_with, type_expression, CheckOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Exact(Value),
    Lpm {
        value: u128,
        width: u32,
        prefix: u32,
    },
}

impl Pattern {
    pub fn matches(&self, key: &Value) -> bool {
        match (self, key) {
            (Pattern::Exact(v), k) => v == k,
            (
                Pattern::Lpm {
                    value,
                    width,
                    prefix,
                },
                Value::Bit {
                    width: kw,
                    value: kv,
                },
            ) => {
                if width != kw {
                    return false;
                }
                let host = width - prefix;
                let m = if host >= 128 {
                    0
                } else {
                    mask(*width) & !mask(host)
                };
                (value & m) == (kv & m)
            }
            _ => false,
        }
    }

    fn prefix_len(&self) -> u32 {
        match self {
            Pattern::Exact(_) => 0,
            Pattern::Lpm { prefix, .. } => *prefix,
        }
    }

    fn show(&self) -> String {
        match self {
            Pattern::Exact(v) => v.to_string(),
            Pattern::Lpm {
                value,
                width,
                prefix,
            } => format!("{value}:{width}/{prefix}"),
        }
    }
}

/// An action name with its control-plane arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionCall {
    pub action: String,
    pub args: Vec<Value>,
}

impl ActionCall {
    fn show(&self) -> String {
        let args: Vec<String> = self.args.iter().map(Value::to_string).collect();
        format!("{}({})", self.action, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub patterns: Vec<Pattern>,
    pub action: ActionCall,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TableEntries {
    pub entries: Vec<Entry>,
    pub default: Option<ActionCall>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no entry matched and no default action is installed")]
pub struct MatchFailure;

/// 𝒞. Immutable for the duration of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlPlane {
    tables: BTreeMap<String, TableEntries>,
}

impl ControlPlane {
    pub fn new() -> ControlPlane {
        ControlPlane::default()
    }

    pub fn table(&self, name: &str) -> Option<&TableEntries> {
        self.tables.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = (&str, &TableEntries)> {
        self.tables.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn insert(&mut self, table: &str, entry: Entry) {
        self.tables
            .entry(table.to_string())
            .or_default()
            .entries
            .push(entry);
    }

    pub fn set_default(&mut self, table: &str, action: ActionCall) {
        self.tables.entry(table.to_string()).or_default().default = Some(action);
    }

    /// Exact keys compare bit for bit, lpm keys by prefix. Among matching
    /// entries the longest total prefix wins, then the earliest entry.
    pub fn table_match(&self, table: &str, keys: &[Value]) -> Result<&ActionCall, MatchFailure> {
        let t = self.tables.get(table).ok_or(MatchFailure)?;
        let mut best: Option<(u32, &Entry)> = None;
        for e in &t.entries {
            if e.patterns.len() != keys.len()
                || !e.patterns.iter().zip(keys).all(|(p, k)| p.matches(k))
            {
                continue;
            }
            let score = e.patterns.iter().map(Pattern::prefix_len).sum();
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, e));
            }
        }
        match best {
            Some((_, e)) => Ok(&e.action),
            None => t.default.as_ref().ok_or(MatchFailure),
        }
    }

    /// Entries-file text; `load_entries` of the output rebuilds `self`.
    pub fn to_source(&self) -> String {
        let mut s = String::new();
        for (name, t) in &self.tables {
            for e in &t.entries {
                let pats: Vec<String> = e.patterns.iter().map(Pattern::show).collect();
                let _ = writeln!(s, "{name}: {} -> {}", pats.join(", "), e.action.show());
            }
            if let Some(d) = &t.default {
                let _ = writeln!(s, "default {name} -> {}", d.show());
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntriesError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown table `{table}`")]
    UnknownTable { line: usize, table: String },
    #[error("line {line}: `{action}` is not an action of table `{table}`")]
    UnknownAction {
        line: usize,
        table: String,
        action: String,
    },
    #[error("line {line}: {message}")]
    ArgumentTypeMismatch { line: usize, message: String },
    #[error("cannot type table `{table}`: {message}")]
    Program { table: String, message: String },
}

#[derive(Debug)]
struct TableInfo {
    keys: Vec<(SecTy, String)>,
    /// action name to control-plane parameter types
    actions: Vec<(String, Vec<SecTy>)>,
}

fn table_infos(
    program: &Program,
    lattice: &Lattice,
) -> Result<BTreeMap<String, TableInfo>, EntriesError> {
    let analysis = check_program_with(program, lattice, lattice.bottom(), &CheckOptions::default());
    let (env, defs) = (&analysis.env, &analysis.defs);
    let mut out = BTreeMap::new();
    for d in &program.control.decls {
        let DeclKind::Table(t) = &d.kind else {
            continue;
        };
        let err = |message: String| EntriesError::Program {
            table: t.name.clone(),
            message,
        };
        let mut keys = Vec::new();
        for k in &t.keys {
            let (ty, _) = type_expression(lattice, env, defs, lattice.top(), &k.expr)
                .map_err(|ds| err(ds.first().map(|d| d.message.clone()).unwrap_or_default()))?;
            keys.push((ty, k.match_kind.clone()));
        }
        let mut actions = Vec::new();
        for a in &t.actions {
            let Some(SecTy {
                ty: Ty::Function(f),
                ..
            }) = env.get(&a.name)
            else {
                return Err(err(format!("`{}` is not a function", a.name)));
            };
            let cps = f
                .cp_params
                .iter()
                .map(|p| defs.resolve(p, lattice))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(e.to_string()))?;
            actions.push((a.name.clone(), cps));
        }
        out.insert(t.name.clone(), TableInfo { keys, actions });
    }
    Ok(out)
}

/// Splits on commas that are not nested in brackets.
fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '{' | '[' | '(' => depth += 1,
            '}' | ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

fn parse_call(
    line: usize,
    table: &str,
    text: &str,
    info: &TableInfo,
) -> Result<ActionCall, EntriesError> {
    let text = text.trim();
    let (name, args) = match text.find('(') {
        Some(i) => {
            let inner = text[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| EntriesError::Parse {
                    line,
                    message: format!("unclosed argument list in `{text}`"),
                })?;
            (text[..i].trim(), split_top(inner))
        }
        None => (text, Vec::new()),
    };
    let (_, cps) = info
        .actions
        .iter()
        .find(|(a, _)| a == name)
        .ok_or_else(|| EntriesError::UnknownAction {
            line,
            table: table.to_string(),
            action: name.to_string(),
        })?;
    if args.len() != cps.len() {
        return Err(EntriesError::ArgumentTypeMismatch {
            line,
            message: format!(
                "`{name}` takes {} control-plane arguments, got {}",
                cps.len(),
                args.len()
            ),
        });
    }
    let args = args
        .iter()
        .zip(cps)
        .map(|(a, ty)| {
            parse_value(a, ty).map_err(|e| EntriesError::ArgumentTypeMismatch {
                line,
                message: e.message,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(ActionCall {
        action: name.to_string(),
        args,
    })
}

fn parse_pattern(line: usize, text: &str, ty: &SecTy, kind: &str) -> Result<Pattern, EntriesError> {
    let bad = |message: String| EntriesError::ArgumentTypeMismatch { line, message };
    match kind {
        "lpm" => {
            let Ty::Bit(w) = ty.ty else {
                return Err(bad("lpm keys must be bit<n>".into()));
            };
            let (v, p) = text
                .split_once('/')
                .ok_or_else(|| bad(format!("lpm pattern `{text}` needs a `/prefix`")))?;
            let prefix: u32 = p
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad prefix length `{p}`")))?;
            if prefix > w {
                return Err(bad(format!("prefix /{prefix} is longer than {w} bits")));
            }
            let Value::Bit { value, .. } = parse_value(v, ty).map_err(|e| bad(e.message))? else {
                unreachable!("bit type parses to a bit value")
            };
            Ok(Pattern::Lpm {
                value,
                width: w,
                prefix,
            })
        }
        "exact" => parse_value(text, ty)
            .map(Pattern::Exact)
            .map_err(|e| bad(e.message)),
        other => Err(bad(format!("unsupported match kind `{other}`"))),
    }
}

/// Parses and validates an entries file against the program's tables.
pub fn load_entries(
    source: &str,
    program: &Program,
    lattice: &Lattice,
) -> Result<ControlPlane, EntriesError> {
    let infos = table_infos(program, lattice)?;
    let mut cp = ControlPlane::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |message: &str| EntriesError::Parse {
            line,
            message: message.to_string(),
        };
        let (lhs, rhs) = text
            .split_once("->")
            .ok_or_else(|| parse_err("expected `->`"))?;
        let lookup = |name: &str| {
            infos.get(name).ok_or_else(|| EntriesError::UnknownTable {
                line,
                table: name.to_string(),
            })
        };
        if let Some(name) = lhs.trim().strip_prefix("default ") {
            let name = name.trim();
            let info = lookup(name)?;
            cp.set_default(name, parse_call(line, name, rhs, info)?);
            continue;
        }
        let (name, pats) = lhs
            .split_once(':')
            .ok_or_else(|| parse_err("expected `table: patterns`"))?;
        let name = name.trim();
        let info = lookup(name)?;
        let pats = split_top(pats);
        if pats.len() != info.keys.len() {
            return Err(EntriesError::ArgumentTypeMismatch {
                line,
                message: format!(
                    "table `{name}` has {} keys, entry has {} patterns",
                    info.keys.len(),
                    pats.len()
                ),
            });
        }
        let patterns = pats
            .iter()
            .zip(&info.keys)
            .map(|(p, (ty, kind))| parse_pattern(line, p, ty, kind))
            .collect::<Result<_, _>>()?;
        let action = parse_call(line, name, rhs, info)?;
        cp.insert(name, Entry { patterns, action });
    }
    Ok(cp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    const SRC: &str = "control C(inout bit<8> q, inout bit<32> ip, inout <bit<32>, low> out_v) {
        action hit(; bit<32> v) { out_v = v; }
        action drop() { exit; }
        table cache { key = { q: exact; } actions = { hit; drop; } }
        table route { key = { ip: lpm; } actions = { hit; drop; } }
        apply { cache.apply(); }
    }";

    fn setup() -> (Program, Lattice) {
        let lat = Lattice::two_point();
        (parse_program(SRC, &lat).unwrap(), lat)
    }

    #[test]
    fn exact_entry_and_default() {
        let (p, lat) = setup();
        let cp = load_entries(
            "cache: 7:8 -> hit(99:32)\ndefault cache -> drop()",
            &p,
            &lat,
        )
        .unwrap();
        let a = cp.table_match("cache", &[Value::bit(8, 7)]).unwrap();
        assert_eq!(a.action, "hit");
        assert_eq!(a.args, vec![Value::bit(32, 99)]);
        assert_eq!(
            cp.table_match("cache", &[Value::bit(8, 8)]).unwrap().action,
            "drop"
        );
    }

    #[test]
    fn longest_prefix_wins() {
        let (p, lat) = setup();
        let cp = load_entries(
            "route: 10.0.0.0/8 -> hit(8)\nroute: 10.1.0.0/16 -> hit(16)\nroute: 0.0.0.0/0 -> drop()",
            &p,
            &lat,
        )
        .unwrap();
        let a = cp
            .table_match("route", &[Value::bit(32, 0x0a01_0203)])
            .unwrap();
        assert_eq!(a.args, vec![Value::bit(32, 16)]);
        let a = cp
            .table_match("route", &[Value::bit(32, 0x0a02_0203)])
            .unwrap();
        assert_eq!(a.args, vec![Value::bit(32, 8)]);
        assert_eq!(
            cp.table_match("route", &[Value::bit(32, 1)])
                .unwrap()
                .action,
            "drop"
        );
        match &cp.table("route").unwrap().entries[0].patterns[0] {
            Pattern::Lpm { prefix, .. } => assert_eq!(*prefix, 8),
            p => panic!("{p:?}"),
        }
    }

    #[test]
    fn rejects_bad_entries() {
        let (p, lat) = setup();
        assert!(matches!(
            load_entries("cache: 7:8 -> nope()", &p, &lat),
            Err(EntriesError::UnknownAction { .. })
        ));
        assert!(matches!(
            load_entries("nope: 7:8 -> drop()", &p, &lat),
            Err(EntriesError::UnknownTable { .. })
        ));
        assert!(matches!(
            load_entries("cache: 7:8 -> hit(true)", &p, &lat),
            Err(EntriesError::ArgumentTypeMismatch { .. })
        ));
        assert!(matches!(
            load_entries("cache: 7:8 -> hit()", &p, &lat),
            Err(EntriesError::ArgumentTypeMismatch { .. })
        ));
        assert!(matches!(
            load_entries("cache 7:8 hit()", &p, &lat),
            Err(EntriesError::Parse { .. })
        ));
    }

    #[test]
    fn no_match_is_failure() {
        let (p, lat) = setup();
        let cp = load_entries("cache: 7:8 -> drop()", &p, &lat).unwrap();
        assert_eq!(
            cp.table_match("cache", &[Value::bit(8, 1)]),
            Err(MatchFailure)
        );
        assert_eq!(
            cp.table_match("route", &[Value::bit(32, 1)]),
            Err(MatchFailure)
        );
    }

    #[test]
    fn serialize_round_trip() {
        let (p, lat) = setup();
        let cp = load_entries(
            "cache: 7:8 -> hit(1)\nroute: 10.0.0.0/8 -> drop()\ndefault route -> hit(3)",
            &p,
            &lat,
        )
        .unwrap();
        assert_eq!(load_entries(&cp.to_source(), &p, &lat).unwrap(), cp);
    }
}
