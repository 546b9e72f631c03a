//! Random well-typed programs over the two-point lattice.
//!
//! Programs are built so the checker accepts them at pc `low`: every
//! expression is generated under an upper bound on its label, and every
//! write is only emitted when the current pc and the value both flow into
//! the target. The output is source text plus matching table entries, so
//! it exercises the whole pipeline including the parser.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nesting limit for statements and expressions.
pub const MAX_DEPTH: usize = 4;
/// Upper bound on control parameters plus locals.
pub const MAX_VARS: usize = 8;

/// A generated program together with control-plane entries for its tables.
/// Every table has a default action.
#[derive(Debug, Clone)]
pub struct Generated {
    pub seed: u64,
    pub source: String,
    pub entries: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Bit8,
    Bool,
    Int,
    Hdr,
    Stack,
}

#[derive(Debug, Clone)]
struct Var {
    name: String,
    kind: Kind,
    high: bool,
}

fn label(high: bool) -> &'static str {
    if high {
        "high"
    } else {
        "low"
    }
}

fn ty_text(kind: Kind, high: bool) -> String {
    let l = label(high);
    match kind {
        Kind::Bit8 => format!("<bit<8>, {l}>"),
        Kind::Bool => format!("<bool, {l}>"),
        Kind::Int => format!("<int, {l}>"),
        Kind::Hdr => format!("<h_t, {l}>"),
        Kind::Stack => format!("<bit<8>, {l}>[3]"),
    }
}

struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<Var>,
    locals: usize,
    out: String,
}

impl Gen {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn pick(&mut self, kind: Kind, max_high: bool) -> Option<Var> {
        let c: Vec<&Var> = self
            .vars
            .iter()
            .filter(|v| v.kind == kind && (max_high || !v.high))
            .collect();
        c.choose(&mut self.rng).map(|v| (*v).clone())
    }

    fn bit8(&mut self, max_high: bool, pc_high: bool, depth: usize) -> String {
        let leaf = depth >= MAX_DEPTH;
        match self.rng.gen_range(0..if leaf { 4 } else { 8 }) {
            0 => format!("{}:8", self.rng.gen_range(0..256u32)),
            1 => match self.pick(Kind::Bit8, max_high) {
                Some(v) => v.name,
                None => format!("{}:8", self.rng.gen_range(0..256u32)),
            },
            2 => match self.pick(Kind::Hdr, max_high) {
                Some(v) => format!("{}.a", v.name),
                None => "7:8".to_string(),
            },
            3 => match self.pick(Kind::Stack, max_high) {
                Some(v) if leaf => format!("{}[{}]", v.name, self.rng.gen_range(0..4)),
                Some(v) => {
                    let idx = self.int(v.high, depth + 1);
                    format!("{}[{idx}]", v.name)
                }
                None => "1:8".to_string(),
            },
            4 if !pc_high => {
                let a = self.bit8(false, pc_high, depth + 1);
                let b = self.bit8(false, pc_high, depth + 1);
                format!("f_low({a}, {b})")
            }
            5 if !pc_high && max_high => {
                let a = self.bit8(true, pc_high, depth + 1);
                format!("f_high({a})")
            }
            _ => {
                let op = *["+", "-", "*", "&", "|", "^"]
                    .choose(&mut self.rng)
                    .unwrap();
                let a = self.bit8(max_high, pc_high, depth + 1);
                let b = self.bit8(max_high, pc_high, depth + 1);
                format!("({a} {op} {b})")
            }
        }
    }

    fn boolean(&mut self, max_high: bool, pc_high: bool, depth: usize) -> String {
        let leaf = depth >= MAX_DEPTH;
        match self.rng.gen_range(0..if leaf { 3 } else { 6 }) {
            0 => if self.chance(0.5) { "true" } else { "false" }.to_string(),
            1 => match self.pick(Kind::Bool, max_high) {
                Some(v) => v.name,
                None => "true".to_string(),
            },
            2 => match self.pick(Kind::Hdr, max_high) {
                Some(v) => format!("{}.b", v.name),
                None => "false".to_string(),
            },
            3 => {
                let op = *["==", "!=", "<", "<=", ">", ">="]
                    .choose(&mut self.rng)
                    .unwrap();
                let a = self.bit8(max_high, pc_high, depth + 1);
                let b = self.bit8(max_high, pc_high, depth + 1);
                format!("({a} {op} {b})")
            }
            4 => {
                let op = *["==", "<", ">="].choose(&mut self.rng).unwrap();
                let a = self.int(max_high, depth + 1);
                let b = self.int(max_high, depth + 1);
                format!("({a} {op} {b})")
            }
            _ => {
                let op = *["&&", "||"].choose(&mut self.rng).unwrap();
                let a = self.boolean(max_high, pc_high, depth + 1);
                let b = self.boolean(max_high, pc_high, depth + 1);
                format!("({a} {op} {b})")
            }
        }
    }

    fn int(&mut self, max_high: bool, depth: usize) -> String {
        let leaf = depth >= MAX_DEPTH;
        match self.rng.gen_range(0..if leaf { 2 } else { 3 }) {
            0 => self.rng.gen_range(0..5).to_string(),
            1 => match self.pick(Kind::Int, max_high) {
                Some(v) => v.name,
                None => "2".to_string(),
            },
            _ => {
                let op = *["+", "-", "*"].choose(&mut self.rng).unwrap();
                let a = self.int(max_high, depth + 1);
                let b = self.int(max_high, depth + 1);
                format!("({a} {op} {b})")
            }
        }
    }

    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    /// Emits an assignment to some variable the pc may write, if any.
    fn assign(&mut self, pc_high: bool, indent: usize, depth: usize) {
        let targets: Vec<Var> = self
            .vars
            .iter()
            .filter(|v| v.high || !pc_high)
            .cloned()
            .collect();
        let Some(t) = targets.choose(&mut self.rng).cloned() else {
            return;
        };
        let text = match t.kind {
            Kind::Bit8 => format!("{} = {};", t.name, self.bit8(t.high, pc_high, depth)),
            Kind::Bool => format!("{} = {};", t.name, self.boolean(t.high, pc_high, depth)),
            Kind::Int => format!("{} = {};", t.name, self.int(t.high, depth)),
            Kind::Hdr => match self.rng.gen_range(0..3) {
                0 => format!("{}.a = {};", t.name, self.bit8(t.high, pc_high, depth)),
                1 => format!("{}.b = {};", t.name, self.boolean(t.high, pc_high, depth)),
                _ => match self.pick(Kind::Hdr, t.high) {
                    Some(src) => format!("{} = {};", t.name, src.name),
                    None => format!("{}.a = 0:8;", t.name),
                },
            },
            Kind::Stack => {
                let k = self.rng.gen_range(0..4);
                format!("{}[{k}] = {};", t.name, self.bit8(t.high, pc_high, depth))
            }
        };
        self.line(indent, &text);
    }

    /// An l-value of type `bit<8>` labelled exactly `high`.
    fn bit8_lvalue(&mut self, high: bool) -> Option<String> {
        let c: Vec<Var> = self
            .vars
            .iter()
            .filter(|v| v.high == high && matches!(v.kind, Kind::Bit8 | Kind::Hdr | Kind::Stack))
            .cloned()
            .collect();
        let v = c.choose(&mut self.rng)?.clone();
        Some(match v.kind {
            Kind::Hdr => format!("{}.a", v.name),
            Kind::Stack => format!("{}[{}]", v.name, self.rng.gen_range(0..4)),
            _ => v.name,
        })
    }

    fn stmt(&mut self, pc_high: bool, indent: usize, depth: usize) {
        let leaf = depth >= MAX_DEPTH;
        match self.rng.gen_range(0..if leaf { 5 } else { 9 }) {
            0 | 1 => self.assign(pc_high, indent, depth),
            2 => {
                if let Some(lv) = self.bit8_lvalue(true) {
                    self.line(indent, &format!("a_high({lv});"));
                }
                if !pc_high {
                    if let Some(lv) = self.bit8_lvalue(false) {
                        self.line(indent, &format!("a_low({lv});"));
                    }
                }
            }
            3 => {
                if pc_high || self.chance(0.5) {
                    self.line(indent, "t_hi.apply();");
                } else {
                    self.line(indent, "t_lo.apply();");
                }
            }
            4 => {
                if !pc_high && self.chance(0.15) {
                    self.line(indent, "exit;");
                } else {
                    self.assign(pc_high, indent, depth);
                }
            }
            5 | 6 => {
                let guard_high = self.chance(0.5);
                let g = self.boolean(guard_high, pc_high, depth + 1);
                let inner = pc_high || guard_high;
                self.line(indent, &format!("if ({g}) {{"));
                self.stmts(inner, indent + 1, depth + 1);
                if self.chance(0.6) {
                    self.line(indent, "} else {");
                    self.stmts(inner, indent + 1, depth + 1);
                }
                self.line(indent, "}");
            }
            _ => {
                let saved = self.vars.len();
                self.line(indent, "{");
                if self.vars.len() < MAX_VARS {
                    let kind = *[Kind::Bit8, Kind::Bool, Kind::Int]
                        .choose(&mut self.rng)
                        .unwrap();
                    let high = self.chance(0.5);
                    let init = match kind {
                        Kind::Bit8 => self.bit8(high, pc_high, depth + 1),
                        Kind::Bool => self.boolean(high, pc_high, depth + 1),
                        _ => self.int(high, depth + 1),
                    };
                    let name = format!("t{}", self.locals);
                    self.locals += 1;
                    self.line(
                        indent + 1,
                        &format!("{} {name} = {init};", ty_text(kind, high)),
                    );
                    self.vars.push(Var { name, kind, high });
                }
                self.stmts(pc_high, indent + 1, depth + 1);
                self.vars.truncate(saved);
                self.line(indent, "}");
            }
        }
    }

    fn stmts(&mut self, pc_high: bool, indent: usize, depth: usize) {
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.stmt(pc_high, indent, depth);
        }
    }
}

/// Generates one program from `seed`. The same seed always yields the same
/// text.
pub fn generate(seed: u64) -> Generated {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        vars: vec![
            Var {
                name: "v0".into(),
                kind: Kind::Bit8,
                high: false,
            },
            Var {
                name: "v1".into(),
                kind: Kind::Bit8,
                high: true,
            },
        ],
        locals: 0,
        out: String::new(),
    };
    let extra = g.rng.gen_range(0..=4);
    for i in 0..extra {
        let kind = *[Kind::Bit8, Kind::Bool, Kind::Int, Kind::Hdr, Kind::Stack]
            .choose(&mut g.rng)
            .unwrap();
        let high = g.chance(0.5);
        g.vars.push(Var {
            name: format!("v{}", i + 2),
            kind,
            high,
        });
    }
    let params: Vec<String> = g
        .vars
        .iter()
        .map(|v| format!("inout {} {}", ty_text(v.kind, v.high), v.name))
        .collect();

    g.line(0, "header h_t { bit<8> a; bool b; }");
    g.line(0, "");
    g.line(0, &format!("control Gen({}) {{", params.join(", ")));
    for decl in [
        "function bit<8> f_low(in bit<8> x, in bit<8> y) { return x + y; }",
        "function <bit<8>, high> f_high(in <bit<8>, high> x) { return x ^ 5:8; }",
        "action a_low(inout bit<8> x) { x = x + 1:8; }",
        "action a_high(inout <bit<8>, high> x) { x = x * 3:8; }",
        "action set_l(; bit<8> c) { v0 = c; }",
        "action set_h(; <bit<8>, high> c) { v1 = v1 + c; }",
        "table t_lo { key = { v0: exact; } actions = { set_l; set_h; } }",
        "table t_hi { key = { v1: exact; } actions = { set_h; } }",
    ] {
        g.line(1, decl);
    }
    g.line(1, "apply {");
    let n = g.rng.gen_range(2..=5);
    for _ in 0..n {
        g.stmt(false, 2, 1);
    }
    g.line(1, "}");
    g.line(0, "}");

    let mut entries = String::new();
    for _ in 0..g.rng.gen_range(0..4) {
        let k = g.rng.gen_range(0..8u32);
        let c = g.rng.gen_range(0..256u32);
        let act = if g.chance(0.5) { "set_l" } else { "set_h" };
        entries.push_str(&format!("t_lo: {k}:8 -> {act}({c})\n"));
    }
    entries.push_str(&format!(
        "default t_lo -> set_l({})\n",
        g.rng.gen_range(0..256u32)
    ));
    for _ in 0..g.rng.gen_range(0..3) {
        let k = g.rng.gen_range(0..8u32);
        entries.push_str(&format!(
            "t_hi: {k}:8 -> set_h({})\n",
            g.rng.gen_range(0..256u32)
        ));
    }
    // Both tables get a default. A missed lookup without one ends the run
    // with exit, and on the high-keyed table that would let the key decide
    // the signal.
    entries.push_str(&format!(
        "default t_hi -> set_h({})\n",
        g.rng.gen_range(0..256u32)
    ));
    Generated {
        seed,
        source: g.out,
        entries,
    }
}

/// A fresh seed from the operating system, for callers that want variety.
pub fn random_seed() -> u64 {
    rand::thread_rng().next_u64()
}
