//! Command-line front end: `check`, `run`, `nicheck` and `corpus`.
//!
//! Every command writes to caller-supplied streams and returns a process
//! exit code, so the whole tool can be driven in-process by tests.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use p4ifc::corpus::{self, CaseOptions, CaseReport, CorpusCase};
use p4ifc::runtime::load_entries;
use p4ifc::{
    check_noninterference, check_program, load_lattice, parse_program, run_program, ControlPlane,
    Diagnostic, EvalError, Label, Lattice, NiConfig, Program, Rule, RunOptions, Signal,
};

/// Accepted, or no NI failures.
pub const EXIT_OK: i32 = 0;
/// Rejected program, NI failure, or an `exit` signal from `run`.
pub const EXIT_FAIL: i32 = 1;
/// Bad arguments, unreadable files, malformed inputs.
pub const EXIT_USAGE: i32 = 2;
/// Interpreter error on a program that should not produce one.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "p4ifc",
    version,
    about = "Information-flow checker and interpreter for Core P4"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Type-check a program and print its diagnostics.
    Check {
        #[command(flatten)]
        input: Input,
        /// Print one JSON object per diagnostic instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a program on a control plane and initial store.
    Run {
        #[command(flatten)]
        input: Input,
        /// Table entries file.
        #[arg(long)]
        entries: Option<PathBuf>,
        /// Initial store file.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Run even if the checker rejects the program.
        #[arg(long)]
        unchecked: bool,
        /// Check runtime invariants after every step.
        #[arg(long)]
        audit: bool,
    },
    /// Test non-interference by running pairs of observer-equivalent stores.
    Nicheck {
        #[command(flatten)]
        input: Input,
        /// Observer level; defaults to the bottom element.
        #[arg(long)]
        observer: Option<String>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Table entries file.
        #[arg(long)]
        entries: Option<PathBuf>,
        /// Test even if the checker rejects the program.
        #[arg(long)]
        unchecked: bool,
    },
    /// Run every corpus case against its expected verdict and NI suite.
    Corpus {
        /// Directory with a cases.toml manifest; the bundled corpus by default.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Switch off a checker rule, e.g. T-TblDecl.
        #[arg(long = "disable-rule", value_name = "RULE")]
        disable_rule: Vec<String>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
pub struct Input {
    /// Program file, or the name of a bundled corpus case.
    pub file: String,
    /// Built-in lattice name or lattice file.
    #[arg(long)]
    pub lattice: Option<String>,
    /// Starting pc label; defaults to the bottom element.
    #[arg(long)]
    pub pc: Option<String>,
}

/// A failure that ends a command with a specific status.
struct Fail {
    code: i32,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Fail {
        Fail {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

type CmdResult = Result<i32, Fail>;

/// Output sinks plus the colour setting.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub color: bool,
}

impl Io<'_> {
    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn diagnostic(&mut self, file: &str, d: &Diagnostic) {
        let text = format!("{file}:{d}");
        let line = if d.is_error() {
            self.paint("31", &text)
        } else {
            self.paint("33", &text)
        };
        let _ = writeln!(self.out, "{line}");
    }
}

/// Colour from `P4IFC_COLOR`, else on when stdout is a terminal.
pub fn color_from_env() -> bool {
    match std::env::var("P4IFC_COLOR").as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => std::io::stdout().is_terminal(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, io: &mut Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(io.err, "{text}")
            } else {
                write!(io.out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check { input, json } => cmd_check(&input, json, io),
        Command::Run {
            input,
            entries,
            store,
            unchecked,
            audit,
        } => cmd_run(
            &input,
            entries.as_deref(),
            store.as_deref(),
            unchecked,
            audit,
            io,
        ),
        Command::Nicheck {
            input,
            observer,
            trials,
            seed,
            entries,
            unchecked,
        } => cmd_nicheck(
            &input,
            observer.as_deref(),
            trials,
            seed,
            entries.as_deref(),
            unchecked,
            io,
        ),
        Command::Corpus {
            dir,
            disable_rule,
            trials,
            seed,
        } => cmd_corpus(dir.as_deref(), &disable_rule, trials, seed, io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.err, "p4ifc: {}", f.message);
            f.code
        }
    }
}

/// A program with its lattice, pc and defaults from the corpus, if the
/// input named a bundled case.
struct Loaded {
    file: String,
    lattice: Lattice,
    pc: Label,
    program: Result<Program, p4ifc::SyntaxError>,
    case: Option<CorpusCase>,
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn load(input: &Input) -> Result<Loaded, Fail> {
    let path = Path::new(&input.file);
    let (source, case) = if path.exists() {
        (read(path)?, None)
    } else if let Some(c) = corpus::lookup(&input.file) {
        (c.source.clone(), Some(c))
    } else {
        return Err(Fail::usage(format!(
            "{}: no such file or corpus case",
            input.file
        )));
    };
    let lat_name = input
        .lattice
        .clone()
        .or_else(|| case.as_ref().map(|c| c.lattice.clone()))
        .unwrap_or_else(|| "two-point".to_string());
    let lattice = load_lattice(&lat_name).map_err(|e| Fail::usage(e.to_string()))?;
    let pc = match input
        .pc
        .clone()
        .or_else(|| case.as_ref().map(|c| c.pc.clone()))
    {
        Some(name) => lattice
            .label(&name)
            .map_err(|e| Fail::usage(e.to_string()))?,
        None => lattice.bottom(),
    };
    let program = parse_program(&source, &lattice);
    Ok(Loaded {
        file: input.file.clone(),
        lattice,
        pc,
        program,
        case,
    })
}

/// Returns the program if it parses and either type-checks or `unchecked`
/// is set; otherwise prints why and yields the failing status.
fn checked_program<'a>(l: &'a Loaded, unchecked: bool, io: &mut Io) -> Result<&'a Program, i32> {
    let program = match &l.program {
        Ok(p) => p,
        Err(e) => {
            io.diagnostic(&l.file, &Diagnostic::from_syntax(e));
            return Err(EXIT_FAIL);
        }
    };
    if unchecked {
        return Ok(program);
    }
    let v = check_program(program, &l.lattice, l.pc);
    if v.accepted {
        return Ok(program);
    }
    for d in &v.diagnostics {
        io.diagnostic(&l.file, d);
    }
    let _ = writeln!(
        io.err,
        "p4ifc: {} is rejected by the checker; pass --unchecked to run it anyway",
        l.file
    );
    Err(EXIT_FAIL)
}

fn control_plane(
    l: &Loaded,
    program: &Program,
    entries: Option<&Path>,
) -> Result<ControlPlane, Fail> {
    let text = match (entries, &l.case) {
        (Some(p), _) => read(p)?,
        (None, Some(c)) => c.entries.clone(),
        (None, None) => return Ok(ControlPlane::new()),
    };
    load_entries(&text, program, &l.lattice).map_err(|e| Fail::usage(format!("entries: {e}")))
}

fn eval_failure(e: EvalError) -> Fail {
    match e {
        EvalError::StoreSpec(e) => Fail::usage(format!("store: {e}")),
        other => Fail {
            code: EXIT_INTERNAL,
            message: format!("evaluation failed: {other}"),
        },
    }
}

fn cmd_check(input: &Input, json: bool, io: &mut Io) -> CmdResult {
    let l = load(input)?;
    let diags = match &l.program {
        Ok(p) => check_program(p, &l.lattice, l.pc).diagnostics,
        Err(e) => vec![Diagnostic::from_syntax(e)],
    };
    let accepted = !diags.iter().any(Diagnostic::is_error);
    if json {
        for d in &diags {
            let rec = serde_json::to_string(&d.to_record(&l.file)).map_err(|e| Fail {
                code: EXIT_INTERNAL,
                message: e.to_string(),
            })?;
            let _ = writeln!(io.out, "{rec}");
        }
    } else {
        for d in &diags {
            io.diagnostic(&l.file, d);
        }
        let errors = diags.iter().filter(|d| d.is_error()).count();
        let status = if accepted {
            io.paint("32", "accepted")
        } else {
            io.paint(
                "31",
                &format!(
                    "rejected ({errors} error{})",
                    if errors == 1 { "" } else { "s" }
                ),
            )
        };
        let _ = writeln!(io.out, "{}: {status}", l.file);
    }
    Ok(if accepted { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_run(
    input: &Input,
    entries: Option<&Path>,
    store: Option<&Path>,
    unchecked: bool,
    audit: bool,
    io: &mut Io,
) -> CmdResult {
    let l = load(input)?;
    let program = match checked_program(&l, unchecked, io) {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    let cp = control_plane(&l, program, entries)?;
    let spec = match (store, &l.case) {
        (Some(p), _) => read(p)?,
        (None, Some(c)) => c.store.clone(),
        (None, None) => String::new(),
    };
    let outcome =
        run_program(program, &l.lattice, &cp, &spec, RunOptions { audit }).map_err(eval_failure)?;
    let _ = write!(io.out, "{}", outcome.dump());
    for v in &outcome.violations {
        let _ = writeln!(io.err, "audit: {v}");
    }
    if !outcome.violations.is_empty() {
        return Ok(EXIT_INTERNAL);
    }
    Ok(if outcome.signal == Signal::Exit {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

fn cmd_nicheck(
    input: &Input,
    observer: Option<&str>,
    trials: usize,
    seed: u64,
    entries: Option<&Path>,
    unchecked: bool,
    io: &mut Io,
) -> CmdResult {
    let l = load(input)?;
    let observer = match observer {
        Some(name) => l
            .lattice
            .label(name)
            .map_err(|e| Fail::usage(e.to_string()))?,
        None => l.lattice.bottom(),
    };
    let program = match checked_program(&l, unchecked, io) {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    let cp = control_plane(&l, program, entries)?;
    let cfg = NiConfig {
        trials,
        seed,
        ..NiConfig::new(observer)
    };
    let report = check_noninterference(program, &l.lattice, &cp, &cfg).map_err(eval_failure)?;
    let mut failures = report.failures.clone();
    failures.sort_by_key(|c| c.trial);
    let _ = writeln!(
        io.out,
        "{}: observer {}, {} trials, seed {}: {} failure{}",
        l.file,
        report.observer,
        report.trials,
        report.seed,
        failures.len(),
        if failures.len() == 1 { "" } else { "s" }
    );
    for c in &failures {
        let what = match (&c.variable, c.signal) {
            (Some(v), _) => format!("variable {v}"),
            (None, true) => "signal".to_string(),
            (None, false) => "invariant".to_string(),
        };
        let _ = writeln!(
            io.out,
            "trial {}: {what} differs: {} vs {}",
            c.trial, c.value_a, c.value_b
        );
        let _ = writeln!(io.out, "  store a: {}", one_line(&c.store_spec_a));
        let _ = writeln!(io.out, "  store b: {}", one_line(&c.store_spec_b));
    }
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn one_line(spec: &str) -> String {
    spec.lines()
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("; ")
}

fn describe(r: &CaseReport) -> String {
    if let Some(e) = &r.error {
        return e.clone();
    }
    let mut why = Vec::new();
    if !r.verdict_ok() {
        let show = |s: &corpus::VerdictSkeleton| {
            if s.accepted {
                "accept".to_string()
            } else {
                let d: Vec<String> = s
                    .diagnostics
                    .iter()
                    .map(|(r, l)| format!("{r}@{l}"))
                    .collect();
                format!("reject [{}]", d.join(", "))
            }
        };
        let actual = r.actual.as_ref().map_or("nothing".to_string(), show);
        why.push(format!("expected {}, got {actual}", show(&r.expected)));
    }
    for (obs, f) in &r.ni {
        if !f.is_empty() {
            why.push(format!("{} NI failure(s) at observer {obs}", f.len()));
        }
    }
    if r.leak_found == Some(false) {
        why.push("recorded leak not reproduced".to_string());
    }
    why.join("; ")
}

fn cmd_corpus(
    dir: Option<&Path>,
    disabled: &[String],
    trials: usize,
    seed: u64,
    io: &mut Io,
) -> CmdResult {
    let cases = match dir {
        Some(d) => corpus::load_dir(d).map_err(|e| Fail::usage(format!("{}: {e}", d.display())))?,
        None => corpus::list_cases(),
    };
    let disabled_rules = disabled
        .iter()
        .map(|n| Rule::from_name(n).ok_or_else(|| Fail::usage(format!("unknown rule `{n}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = CaseOptions {
        disabled_rules,
        trials,
        seed,
    };
    let mut failed = 0;
    for case in &cases {
        let r = corpus::run_case(case, &opts);
        if r.passed() {
            let _ = writeln!(io.out, "{} {}", io.paint("32", "ok  "), r.name);
        } else {
            failed += 1;
            let _ = writeln!(
                io.out,
                "{} {}: {}",
                io.paint("31", "FAIL"),
                r.name,
                describe(&r)
            );
        }
    }
    let _ = writeln!(
        io.out,
        "{} of {} cases passed",
        cases.len() - failed,
        cases.len()
    );
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAIL })
}
