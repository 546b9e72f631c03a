//! Finite security lattices.
//!
//! A lattice is declared by its elements, a bottom and a top element, and a
//! set of cover pairs `a <= b`. The reflexive-transitive closure of the cover
//! pairs is computed once at load time, after which `leq`, `join` and `meet`
//! are table lookups.
//!
//! ```text
//! # diamond
//! elements: bot A B top
//! bottom: bot
//! top: top
//! order: bot <= A
//! order: bot <= B
//! order: A <= top
//! order: B <= top
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Upper bound on the number of lattice elements.
pub const MAX_ELEMENTS: usize = 256;

/// An element of a [`Lattice`], stored as an index into the lattice's
/// element list. Labels are only meaningful relative to the lattice that
/// produced them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(u16);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("unknown security label `{0}`")]
    UnknownLabel(String),
    #[error("lattice file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("not a lattice: {0}")]
    NotALattice(String),
}

#[derive(Clone, Debug)]
pub struct Lattice {
    name: String,
    names: Vec<String>,
    index: HashMap<String, Label>,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<Label>>,
    meet: Vec<Vec<Label>>,
    bottom: Label,
    top: Label,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.leq == other.leq
            && self.bottom == other.bottom
            && self.top == other.top
    }
}

impl Eq for Lattice {}

impl Lattice {
    /// `{low, high}` with `low ⊑ high`.
    pub fn two_point() -> Lattice {
        Lattice::from_cover_pairs(
            "two-point",
            &["low", "high"],
            "low",
            "high",
            &[("low", "high")],
        )
        .expect("built-in two-point lattice is valid")
    }

    /// `{bot, A, B, top}` with `A` and `B` incomparable.
    pub fn diamond() -> Lattice {
        Lattice::from_cover_pairs(
            "diamond",
            &["bot", "A", "B", "top"],
            "bot",
            "top",
            &[("bot", "A"), ("bot", "B"), ("A", "top"), ("B", "top")],
        )
        .expect("built-in diamond lattice is valid")
    }

    /// Looks up one of the built-in lattices by name.
    pub fn builtin(name: &str) -> Option<Lattice> {
        match name {
            "two-point" => Some(Lattice::two_point()),
            "diamond" => Some(Lattice::diamond()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["two-point", "diamond"]
    }

    /// Builds and validates a lattice from its cover pairs.
    #[allow(clippy::needless_range_loop)]
    pub fn from_cover_pairs<S: AsRef<str>>(
        name: &str,
        elements: &[S],
        bottom: &str,
        top: &str,
        pairs: &[(S, S)],
    ) -> Result<Lattice, LatticeError> {
        let names: Vec<String> = elements.iter().map(|e| e.as_ref().to_string()).collect();
        if names.is_empty() {
            return Err(LatticeError::NotALattice("no elements".into()));
        }
        if names.len() > MAX_ELEMENTS {
            return Err(LatticeError::NotALattice(format!(
                "{} elements exceeds the limit of {MAX_ELEMENTS}",
                names.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), Label(i as u16)).is_some() {
                return Err(LatticeError::NotALattice(format!(
                    "element `{n}` declared twice"
                )));
            }
        }
        let lookup = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| LatticeError::UnknownLabel(n.to_string()))
        };
        let bottom = lookup(bottom)?;
        let top = lookup(top)?;

        let n = names.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in pairs {
            let a = lookup(a.as_ref())?;
            let b = lookup(b.as_ref())?;
            leq[a.index()][b.index()] = true;
        }
        // Warshall
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }

        for i in 0..n {
            for j in (i + 1)..n {
                if leq[i][j] && leq[j][i] {
                    return Err(LatticeError::NotALattice(format!(
                        "order is cyclic: `{}` and `{}` are below each other",
                        names[i], names[j]
                    )));
                }
            }
        }
        for i in 0..n {
            if !leq[bottom.index()][i] {
                return Err(LatticeError::NotALattice(format!(
                    "declared bottom `{}` is not below `{}`",
                    names[bottom.index()],
                    names[i]
                )));
            }
            if !leq[i][top.index()] {
                return Err(LatticeError::NotALattice(format!(
                    "`{}` is not below declared top `{}`",
                    names[i],
                    names[top.index()]
                )));
            }
        }

        let mut join = vec![vec![bottom; n]; n];
        let mut meet = vec![vec![bottom; n]; n];
        for i in 0..n {
            for j in 0..n {
                let upper: Vec<usize> = (0..n).filter(|&k| leq[i][k] && leq[j][k]).collect();
                let least = upper
                    .iter()
                    .copied()
                    .find(|&u| upper.iter().all(|&v| leq[u][v]))
                    .ok_or_else(|| {
                        LatticeError::NotALattice(format!(
                            "`{}` and `{}` have no least upper bound",
                            names[i], names[j]
                        ))
                    })?;
                join[i][j] = Label(least as u16);

                let lower: Vec<usize> = (0..n).filter(|&k| leq[k][i] && leq[k][j]).collect();
                let greatest = lower
                    .iter()
                    .copied()
                    .find(|&u| lower.iter().all(|&v| leq[v][u]))
                    .ok_or_else(|| {
                        LatticeError::NotALattice(format!(
                            "`{}` and `{}` have no greatest lower bound",
                            names[i], names[j]
                        ))
                    })?;
                meet[i][j] = Label(greatest as u16);
            }
        }

        Ok(Lattice {
            name: name.to_string(),
            names,
            index,
            leq,
            join,
            meet,
            bottom,
            top,
        })
    }

    /// Parses the line-oriented lattice file format.
    pub fn parse(name: &str, source: &str) -> Result<Lattice, LatticeError> {
        let mut elements: Option<Vec<String>> = None;
        let mut bottom: Option<String> = None;
        let mut top: Option<String> = None;
        let mut pairs = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| LatticeError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `key: value`"))?;
            let rest = rest.trim();
            match key.trim() {
                "elements" => {
                    if elements.is_some() {
                        return Err(err("duplicate `elements` line"));
                    }
                    let list: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                    if let Some(bad) = list.iter().find(|e| !is_identifier(e)) {
                        return Err(err(&format!("`{bad}` is not an identifier")));
                    }
                    elements = Some(list);
                }
                "bottom" | "top" => {
                    if !is_identifier(rest) {
                        return Err(err(&format!("`{rest}` is not an identifier")));
                    }
                    let slot = if key.trim() == "bottom" {
                        &mut bottom
                    } else {
                        &mut top
                    };
                    if slot.is_some() {
                        return Err(err(&format!("duplicate `{}` line", key.trim())));
                    }
                    *slot = Some(rest.to_string());
                }
                "order" => {
                    let (a, b) = rest
                        .split_once("<=")
                        .ok_or_else(|| err("expected `order: a <= b`"))?;
                    let (a, b) = (a.trim(), b.trim());
                    if !is_identifier(a) || !is_identifier(b) {
                        return Err(err("order operands must be identifiers"));
                    }
                    pairs.push((a.to_string(), b.to_string()));
                }
                other => return Err(err(&format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| LatticeError::Parse {
            line: 0,
            message: format!("missing `{what}` line"),
        };
        let elements = elements.ok_or_else(|| missing("elements"))?;
        let bottom = bottom.ok_or_else(|| missing("bottom"))?;
        let top = top.ok_or_else(|| missing("top"))?;
        Lattice::from_cover_pairs(name, &elements, &bottom, &top, &pairs)
    }

    /// Serializes the lattice as a file whose order lines list the full
    /// closure (minus reflexive pairs).
    pub fn to_source(&self) -> String {
        let mut out = format!(
            "elements: {}\nbottom: {}\ntop: {}\n",
            self.names.join(" "),
            self.names[self.bottom.index()],
            self.names[self.top.index()]
        );
        for a in self.elements() {
            for b in self.elements() {
                if a != b && self.leq(a, b) {
                    out.push_str(&format!(
                        "order: {} <= {}\n",
                        self.name_of(a),
                        self.name_of(b)
                    ));
                }
            }
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn bottom(&self) -> Label {
        self.bottom
    }

    pub fn top(&self) -> Label {
        self.top
    }

    pub fn elements(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.names.len()).map(|i| Label(i as u16))
    }

    pub fn label(&self, name: &str) -> Result<Label, LatticeError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| LatticeError::UnknownLabel(name.to_string()))
    }

    pub fn name_of(&self, label: Label) -> &str {
        &self.names[label.index()]
    }

    pub fn leq(&self, a: Label, b: Label) -> bool {
        self.leq[a.index()][b.index()]
    }

    pub fn join(&self, a: Label, b: Label) -> Label {
        self.join[a.index()][b.index()]
    }

    pub fn meet(&self, a: Label, b: Label) -> Label {
        self.meet[a.index()][b.index()]
    }

    pub fn join_all(&self, labels: impl IntoIterator<Item = Label>) -> Label {
        labels
            .into_iter()
            .fold(self.bottom, |acc, l| self.join(acc, l))
    }

    pub fn meet_all(&self, labels: impl IntoIterator<Item = Label>) -> Label {
        labels
            .into_iter()
            .fold(self.top, |acc, l| self.meet(acc, l))
    }

    pub fn leq_named(&self, a: &str, b: &str) -> Result<bool, LatticeError> {
        Ok(self.leq(self.label(a)?, self.label(b)?))
    }

    pub fn join_named(&self, a: &str, b: &str) -> Result<&str, LatticeError> {
        Ok(self.name_of(self.join(self.label(a)?, self.label(b)?)))
    }

    pub fn meet_named(&self, a: &str, b: &str) -> Result<&str, LatticeError> {
        Ok(self.name_of(self.meet(self.label(a)?, self.label(b)?)))
    }

    /// Wraps a label for display.
    pub fn show(&self, label: Label) -> LabelName<'_> {
        LabelName {
            lattice: self,
            label,
        }
    }
}

pub struct LabelName<'a> {
    lattice: &'a Lattice,
    label: Label,
}

impl fmt::Display for LabelName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.lattice.name_of(self.label))
    }
}

/// Resolves a `--lattice` argument: a built-in name or a path to a lattice file.
pub fn load_lattice(spec: &str) -> Result<Lattice, LoadError> {
    if let Some(l) = Lattice::builtin(spec) {
        return Ok(l);
    }
    let source = std::fs::read_to_string(spec).map_err(|e| LoadError::Io(spec.to_string(), e))?;
    let name = std::path::Path::new(spec)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(spec);
    Ok(Lattice::parse(name, &source)?)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read lattice file `{0}`: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
