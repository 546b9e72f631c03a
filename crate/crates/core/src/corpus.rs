//! The case-study programs with their expected verdicts, control-plane
//! entries and store specs.
//!
//! The files live in the repository's `corpus/` directory and are also
//! compiled into the library, so [`list_cases`] works without a checkout.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::interpreter::{initial_values_from_spec, EvalError};
use crate::lattice::{Label, Lattice};
use crate::ni::{check_noninterference, Counterexample, Harness, NiConfig};
use crate::runtime::{load_entries, ControlPlane, EntriesError, Value};
use crate::syntax::{parse_program, Program, SyntaxError};
use crate::typechecker::{check_program_with, CheckOptions, Rule, Verdict};

macro_rules! embed {
    ($($f:literal),* $(,)?) => {
        &[$(($f, include_str!(concat!("../../../corpus/", $f)))),*]
    };
}

static EMBEDDED: &[(&str, &str)] = embed!(
    "cases.toml",
    "topology-fixed.p4s",
    "topology-buggy.p4s",
    "topology.entries",
    "topology.store",
    "d2r-fixed.p4s",
    "d2r-buggy.p4s",
    "d2r.entries",
    "d2r.store",
    "cache-fixed.p4s",
    "cache-buggy.p4s",
    "cache.entries",
    "cache.store",
    "app-fixed.p4s",
    "app-buggy.p4s",
    "app-fixed.entries",
    "app-buggy.entries",
    "app.store",
    "isolation-alice-fixed.p4s",
    "isolation-alice-buggy.p4s",
    "isolation-alice-fixed.entries",
    "isolation-alice-buggy.entries",
    "isolation-bob.p4s",
    "isolation-bob.entries",
    "isolation.store",
);

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExpectedDiagnostic {
    pub rule: String,
    pub line: u32,
}

/// A dynamic leak the buggy variant is known to exhibit: varying `vary`
/// alone changes `variable` as seen by `observer`.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExpectedLeak {
    pub observer: String,
    pub variable: String,
    pub vary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Accept,
    Reject,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    case: Vec<CaseEntry>,
}

#[derive(Debug, Deserialize)]
struct CaseEntry {
    name: String,
    source: String,
    lattice: String,
    pc: String,
    entries: String,
    store: String,
    expect: Expect,
    #[serde(default)]
    diagnostics: Vec<ExpectedDiagnostic>,
    observers: Vec<String>,
    leak: Option<ExpectedLeak>,
}

#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub name: String,
    pub file: String,
    pub source: String,
    pub lattice: String,
    pub pc: String,
    pub expect: Expect,
    pub diagnostics: Vec<ExpectedDiagnostic>,
    pub entries: String,
    pub store: String,
    pub observers: Vec<String>,
    pub leak: Option<ExpectedLeak>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("cases.toml: {0}")]
    Manifest(#[from] toml::de::Error),
    #[error("missing corpus file `{0}`")]
    Missing(String),
    #[error("case `{0}`: {1}")]
    Invalid(String, String),
    #[error("no cases found")]
    Empty,
}

/// Golden data for one case: accept, or reject with exactly these
/// (rule, line) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictSkeleton {
    pub accepted: bool,
    pub diagnostics: Vec<(String, u32)>,
}

impl VerdictSkeleton {
    pub fn of(v: &Verdict) -> VerdictSkeleton {
        let mut diagnostics: Vec<(String, u32)> = v
            .errors()
            .map(|d| (d.rule.name().to_string(), d.span.line))
            .collect();
        diagnostics.sort();
        VerdictSkeleton {
            accepted: v.accepted,
            diagnostics,
        }
    }
}

pub fn expected_verdict(case: &CorpusCase) -> VerdictSkeleton {
    let mut diagnostics: Vec<(String, u32)> = case
        .diagnostics
        .iter()
        .map(|d| (d.rule.clone(), d.line))
        .collect();
    diagnostics.sort();
    VerdictSkeleton {
        accepted: case.expect == Expect::Accept,
        diagnostics,
    }
}

fn build_cases(
    read: impl Fn(&str) -> Result<String, CorpusError>,
) -> Result<Vec<CorpusCase>, CorpusError> {
    let manifest: Manifest = toml::from_str(&read("cases.toml")?)?;
    let mut out = Vec::new();
    for c in manifest.case {
        let invalid = |m: &str| CorpusError::Invalid(c.name.clone(), m.to_string());
        if c.expect == Expect::Reject && c.diagnostics.is_empty() {
            return Err(invalid("a rejected case must name its diagnostics"));
        }
        if c.expect == Expect::Accept && c.observers.is_empty() {
            return Err(invalid("an accepted case needs at least one observer"));
        }
        for d in &c.diagnostics {
            if Rule::from_name(&d.rule).is_none() {
                return Err(invalid(&format!("unknown rule `{}`", d.rule)));
            }
        }
        out.push(CorpusCase {
            source: read(&c.source)?,
            entries: read(&c.entries)?,
            store: read(&c.store)?,
            file: c.source,
            name: c.name,
            lattice: c.lattice,
            pc: c.pc,
            expect: c.expect,
            diagnostics: c.diagnostics,
            observers: c.observers,
            leak: c.leak,
        });
    }
    if out.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(out)
}

/// The built-in cases.
pub fn list_cases() -> Vec<CorpusCase> {
    let files: BTreeMap<&str, &str> = EMBEDDED.iter().copied().collect();
    build_cases(|f| {
        files
            .get(f)
            .map(|s| s.to_string())
            .ok_or_else(|| CorpusError::Missing(f.to_string()))
    })
    .expect("embedded corpus is well formed")
}

pub fn lookup(name: &str) -> Option<CorpusCase> {
    list_cases().into_iter().find(|c| c.name == name)
}

/// Reads the cases of a corpus directory holding a `cases.toml`.
pub fn load_dir(dir: &Path) -> Result<Vec<CorpusCase>, CorpusError> {
    if !dir.join("cases.toml").exists() {
        return Err(CorpusError::Empty);
    }
    build_cases(|f| {
        let p = dir.join(f);
        std::fs::read_to_string(&p).map_err(|e| CorpusError::Io(p.display().to_string(), e))
    })
}

/// A case parsed and ready to check or run.
pub struct LoadedCase {
    pub lattice: Lattice,
    pub pc: Label,
    pub program: Program,
    pub cp: ControlPlane,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("lattice: {0}")]
    Lattice(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Entries(#[from] EntriesError),
}

impl CorpusCase {
    pub fn load(&self) -> Result<LoadedCase, LoadError> {
        let lattice = Lattice::builtin(&self.lattice)
            .ok_or_else(|| LoadError::Lattice(self.lattice.clone()))?;
        let pc = lattice
            .label(&self.pc)
            .map_err(|e| LoadError::Lattice(e.to_string()))?;
        let program = parse_program(&self.source, &lattice)?;
        let cp = load_entries(&self.entries, &program, &lattice)?;
        Ok(LoadedCase {
            lattice,
            pc,
            program,
            cp,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct CaseOptions {
    pub disabled_rules: Vec<Rule>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub name: String,
    pub expected: VerdictSkeleton,
    pub actual: Option<VerdictSkeleton>,
    /// (observer, failures) for each NI run on an accepted case.
    pub ni: Vec<(String, Vec<Counterexample>)>,
    pub leak_found: Option<bool>,
    pub error: Option<String>,
}

impl CaseReport {
    pub fn verdict_ok(&self) -> bool {
        self.actual.as_ref() == Some(&self.expected)
    }

    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.verdict_ok()
            && self.ni.iter().all(|(_, f)| f.is_empty())
            && self.leak_found != Some(false)
    }
}

/// Builds the leak-witness pair: the case's store spec, and the same spec
/// with the `vary` parameter perturbed.
pub fn leak_pair(
    loaded: &LoadedCase,
    case: &CorpusCase,
    vary: &str,
) -> Result<(String, String), EvalError> {
    let init = initial_values_from_spec(&loaded.program, &loaded.lattice, &case.store)?;
    let v = init
        .get(vary)
        .ok_or_else(|| EvalError::UnboundVariable(vary.to_string()))?;
    let flipped = match v {
        Value::Bit { width, value } => Value::bit(*width, value ^ 1),
        Value::Int(i) => Value::Int(i ^ 1),
        Value::Bool(b) => Value::Bool(!b),
        _ => return Err(EvalError::ShapeMismatch(format!("cannot perturb `{vary}`"))),
    };
    let b = format!("{}\n{vary} = {flipped}\n", case.store);
    Ok((case.store.clone(), b))
}

/// Checks the verdict, runs the NI suite on accepted cases at every
/// lattice element, and replays the recorded leak of buggy cases.
pub fn run_case(case: &CorpusCase, opts: &CaseOptions) -> CaseReport {
    let mut report = CaseReport {
        name: case.name.clone(),
        expected: expected_verdict(case),
        actual: None,
        ni: Vec::new(),
        leak_found: None,
        error: None,
    };
    let loaded = match case.load() {
        Ok(l) => l,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let check_opts = CheckOptions {
        disabled_rules: opts.disabled_rules.clone(),
        record_contexts: false,
    };
    let analysis = check_program_with(&loaded.program, &loaded.lattice, loaded.pc, &check_opts);
    report.actual = Some(VerdictSkeleton::of(&analysis.verdict));
    if analysis.verdict.accepted && opts.trials > 0 {
        for l in loaded.lattice.elements() {
            let cfg = NiConfig {
                trials: opts.trials,
                seed: opts.seed,
                ..NiConfig::new(l)
            };
            match check_noninterference(&loaded.program, &loaded.lattice, &loaded.cp, &cfg) {
                Ok(r) => report
                    .ni
                    .push((loaded.lattice.name_of(l).to_string(), r.failures)),
                Err(e) => report.error = Some(e.to_string()),
            }
        }
    }
    if let Some(leak) = &case.leak {
        let found = (|| -> Result<bool, EvalError> {
            let l = loaded
                .lattice
                .label(&leak.observer)
                .map_err(|e| EvalError::UnboundVariable(e.to_string()))?;
            let (a, b) = leak_pair(&loaded, case, &leak.vary)?;
            let h = Harness::new(&loaded.program, &loaded.lattice, &loaded.cp)?;
            Ok(h.replay(l, &a, &b)?.and_then(|c| c.variable).as_deref()
                == Some(leak.variable.as_str()))
        })();
        match found {
            Ok(f) => report.leak_found = Some(f),
            Err(e) => report.error = Some(e.to_string()),
        }
    }
    report
}
