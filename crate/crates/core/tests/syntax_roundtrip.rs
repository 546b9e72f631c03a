use p4ifc::corpus;
use p4ifc::syntax::pretty_program;
use p4ifc::{check_program, check_program_with, parse_program, CheckOptions, Lattice};
use proptest::prelude::*;

#[test]
fn corpus_pretty_round_trip() {
    for case in corpus::list_cases() {
        let lat = Lattice::builtin(&case.lattice).unwrap();
        let p = parse_program(&case.source, &lat).unwrap();
        let once = pretty_program(&p, &lat);
        let reparsed =
            parse_program(&once, &lat).unwrap_or_else(|e| panic!("{}: {e}\n{once}", case.name));
        assert_eq!(once, pretty_program(&reparsed, &lat), "{}", case.name);

        // Printing must not change the verdict, only the line numbers.
        let pc = lat.label(&case.pc).unwrap();
        let a = check_program(&p, &lat, pc);
        let b = check_program(&reparsed, &lat, pc);
        assert_eq!(a.accepted, b.accepted, "{}", case.name);
        let rules = |v: &p4ifc::Verdict| v.diagnostics.iter().map(|d| d.rule).collect::<Vec<_>>();
        assert_eq!(rules(&a), rules(&b), "{}", case.name);
    }
}

#[test]
fn resolve_is_idempotent_on_corpus_types() {
    for case in corpus::list_cases() {
        let lat = Lattice::builtin(&case.lattice).unwrap();
        let p = parse_program(&case.source, &lat).unwrap();
        let a = check_program_with(&p, &lat, lat.bottom(), &CheckOptions::default());
        for name in a.env.names() {
            let t = a.env.get(name).unwrap();
            let once = a.defs.resolve(t, &lat).unwrap();
            let twice = a.defs.resolve(&once, &lat).unwrap();
            assert_eq!(once, twice, "{}: {name}", case.name);
        }
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let lat = Lattice::two_point();
    let err = parse_program("control C() {\n  apply { x = ; }\n}", &lat).unwrap_err();
    assert_eq!(err.span().line, 2);
    assert!(parse_program("control C() { apply { <bit<8>, secret> x; } }", &lat).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        let lat = Lattice::two_point();
        let g = p4ifc::testgen::generate(seed);
        let p = parse_program(&g.source, &lat).unwrap();
        let once = pretty_program(&p, &lat);
        let q = parse_program(&once, &lat).unwrap();
        prop_assert_eq!(&once, &pretty_program(&q, &lat));
        prop_assert!(check_program(&q, &lat, lat.bottom()).accepted);
    }
}
