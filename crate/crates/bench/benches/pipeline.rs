use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use p4ifc::{
    check_noninterference, check_program, parse_program, run_program, NiConfig, RunOptions,
};
use p4ifc_bench::loaded_cases;

fn parse_and_check(c: &mut Criterion) {
    let mut g = c.benchmark_group("check");
    for (case, l) in loaded_cases() {
        g.bench_with_input(BenchmarkId::from_parameter(&case.name), &case, |b, case| {
            b.iter(|| {
                let p = parse_program(&case.source, &l.lattice).unwrap();
                check_program(&p, &l.lattice, l.pc)
            })
        });
    }
    g.finish();
}

fn interpret(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    for (case, l) in loaded_cases() {
        for audit in [false, true] {
            let id = format!("{}{}", case.name, if audit { "/audit" } else { "" });
            g.bench_function(id, |b| {
                b.iter(|| {
                    run_program(
                        &l.program,
                        &l.lattice,
                        &l.cp,
                        &case.store,
                        RunOptions { audit },
                    )
                    .unwrap()
                })
            });
        }
    }
    g.finish();
}

fn noninterference(c: &mut Criterion) {
    let mut g = c.benchmark_group("nicheck");
    g.sample_size(10);
    for (case, l) in loaded_cases()
        .into_iter()
        .filter(|(c, _)| c.name.ends_with("fixed"))
    {
        let cfg = NiConfig {
            trials: 200,
            ..NiConfig::new(l.lattice.bottom())
        };
        g.bench_function(&case.name, |b| {
            b.iter(|| check_noninterference(&l.program, &l.lattice, &l.cp, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, parse_and_check, interpret, noninterference);
criterion_main!(benches);
