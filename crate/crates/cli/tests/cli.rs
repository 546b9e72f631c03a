use std::path::PathBuf;
use std::process::{Command, Output};

use p4ifc::typechecker::DiagnosticRecord;
use p4ifc_cli::{run_cli, Io};

fn corpus(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(file)
        .to_string_lossy()
        .into_owned()
}

fn p4ifc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_p4ifc"))
        .args(args)
        .env("P4IFC_COLOR", "0")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_fixed_and_buggy() {
    let ok = p4ifc(&[
        "check",
        &corpus("topology-fixed.p4s"),
        "--lattice",
        "two-point",
        "--pc",
        "low",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("accepted"));

    let bad = p4ifc(&["check", &corpus("topology-buggy.p4s")]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    assert_eq!(out.matches("error[T-Assign]").count(), 1, "{out}");
    assert!(out.contains(":39:9:"));
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(p4ifc(&["check", "missing.p4s"]).status.code(), Some(2));
    assert_eq!(p4ifc(&["check"]).status.code(), Some(2));
    assert_eq!(p4ifc(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        p4ifc(&["check", "topology-fixed", "--pc", "secret"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        p4ifc(&["check", "topology-fixed", "--lattice", "/no/such/lattice"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(p4ifc(&["--help"]).status.code(), Some(0));
}

#[test]
fn syntax_errors_are_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(&dir, "bad.p4s", "control C() {\n  apply { x = ; }\n}\n");
    let o = p4ifc(&["check", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("bad.p4s:2:"), "{}", stdout(&o));
}

#[test]
fn json_lines_round_trip() {
    let o = p4ifc(&[
        "check",
        &corpus("isolation-alice-buggy.p4s"),
        "--lattice",
        "diamond",
        "--pc",
        "A",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let records: Vec<DiagnosticRecord> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let lines: Vec<(String, u32)> = records
        .iter()
        .map(|r| (r.rule.name().to_string(), r.line))
        .collect();
    assert_eq!(
        lines,
        vec![("T-Assign".to_string(), 19), ("T-TblDecl".to_string(), 23)]
    );
    for (r, line) in records.iter().zip(text.lines()) {
        let again = r.to_diagnostic().to_record(&r.file);
        assert_eq!(&again, r);
        assert_eq!(serde_json::to_string(&again).unwrap(), line);
    }
}

#[test]
fn run_cache_hit() {
    let o = p4ifc(&["run", "cache-fixed"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("hdr.resp.hit = true"), "{out}");
    assert!(out.ends_with("# signal: cont\n"));
}

#[test]
fn run_empty_apply_echoes_store() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write_temp(
        &dir,
        "p.p4s",
        "control C(inout bit<8> x, inout <bool, high> b) { apply { } }\n",
    );
    let store = write_temp(&dir, "s.store", "x = 42\nb = true\n");
    let o = p4ifc(&["run", &prog, "--store", &store]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "b = true\nx = 42:8\n# signal: cont\n");
}

#[test]
fn run_match_failure_exits() {
    let dir = tempfile::tempdir().unwrap();
    let prog = write_temp(
        &dir,
        "p.p4s",
        "control C(inout bit<8> x) {\n    action set(; bit<8> v) { x = v; }\n    table t { key = { x: exact; } actions = { set; } }\n    apply { t.apply(); x = 9:8; }\n}\n",
    );
    let entries = write_temp(&dir, "e.entries", "t: 1:8 -> set(5)\n");
    let hit = write_temp(&dir, "hit.store", "x = 1\n");
    let miss = write_temp(&dir, "miss.store", "x = 2\n");

    let o = p4ifc(&["run", &prog, "--entries", &entries, "--store", &hit]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("x = 9:8"));

    let o = p4ifc(&["run", &prog, "--entries", &entries, "--store", &miss]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "x = 2:8\n# signal: exit\n");
}

#[test]
fn run_and_nicheck_refuse_rejected_programs() {
    assert_eq!(p4ifc(&["run", "topology-buggy"]).status.code(), Some(1));
    assert_eq!(p4ifc(&["nicheck", "topology-buggy"]).status.code(), Some(1));
    assert_eq!(
        p4ifc(&["run", "topology-buggy", "--unchecked"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn bad_store_and_entries_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let store = write_temp(&dir, "s.store", "nonsense = 1\n");
    assert_eq!(
        p4ifc(&["run", "cache-fixed", "--store", &store])
            .status
            .code(),
        Some(2)
    );
    let entries = write_temp(&dir, "e.entries", "no_table: 1 -> x()\n");
    assert_eq!(
        p4ifc(&["run", "cache-fixed", "--entries", &entries])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn nicheck_examples() {
    let o = p4ifc(&[
        "nicheck",
        "topology-fixed",
        "--observer",
        "low",
        "--trials",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(": 0 failures"));

    let o = p4ifc(&[
        "nicheck",
        "topology-buggy",
        "--unchecked",
        "--observer",
        "low",
        "--trials",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("variable hdr.ipv4.ttl differs"));

    let o = p4ifc(&["nicheck", "isolation-bob", "--observer", "A"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn nicheck_output_is_reproducible() {
    let args = [
        "nicheck",
        "topology-buggy",
        "--unchecked",
        "--trials",
        "30",
        "--seed",
        "11",
    ];
    let a = p4ifc(&args);
    let b = p4ifc(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = p4ifc(&[
        "nicheck",
        "topology-buggy",
        "--unchecked",
        "--trials",
        "30",
        "--seed",
        "12",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn corpus_command() {
    let o = p4ifc(&["corpus", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("11 of 11 cases passed"));

    let o = p4ifc(&["corpus", "--trials", "10", "--disable-rule", "T-TblDecl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL cache-buggy"));

    let empty = tempfile::tempdir().unwrap();
    let o = p4ifc(&["corpus", "--dir", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(
        p4ifc(&["corpus", "--disable-rule", "T-Nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn corpus_from_directory() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let o = p4ifc(&["corpus", "--dir", dir.to_str().unwrap(), "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn color_follows_env() {
    let plain = p4ifc(&["check", "topology-buggy"]);
    assert!(!stdout(&plain).contains('\x1b'));
    let colored = Command::new(env!("CARGO_BIN_EXE_p4ifc"))
        .args(["check", "topology-buggy"])
        .env("P4IFC_COLOR", "1")
        .output()
        .unwrap();
    assert!(stdout(&colored).contains("\x1b[31m"));
}

#[test]
fn in_process_matches_binary() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(
        ["p4ifc", "check", "d2r-buggy"],
        &mut Io {
            out: &mut out,
            err: &mut err,
            color: false,
        },
    );
    assert_eq!(code, 1);
    let bin = p4ifc(&["check", "d2r-buggy"]);
    assert_eq!(out, bin.stdout);
}
