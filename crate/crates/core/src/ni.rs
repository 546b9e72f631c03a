//! Dual-execution non-interference testing.
//!
//! Each trial draws a pair of initial states that agree on every leaf an
//! observer at level `l` can see, runs the program on both, and compares
//! the final states at `l`, the signals, and domain monotonicity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::interpreter::{
    control_param_types, initial_values_from_spec, run_program_with, EvalError, InitialValues,
    Outcome, RunOptions,
};
use crate::lattice::{Label, Lattice};
use crate::runtime::{dump_value_lines, ControlPlane, Signal, Value};
use crate::syntax::{Program, SecTy, Ty};
use crate::typechecker::{check_program_with, CheckOptions, TypeEnv};

#[derive(Debug, Clone)]
pub struct NiConfig {
    pub observer: Label,
    pub trials: usize,
    pub seed: u64,
    /// Also run the interpreter's invariant audit and report its violations.
    pub audit: bool,
}

impl NiConfig {
    pub fn new(observer: Label) -> NiConfig {
        NiConfig {
            observer,
            trials: 200,
            seed: 0,
            audit: true,
        }
    }
}

/// One witnessed violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    /// The disagreeing variable path, or `None` when the signals disagree or
    /// an invariant failed.
    pub variable: Option<String>,
    pub signal: bool,
    pub value_a: String,
    pub value_b: String,
    pub store_spec_a: String,
    pub store_spec_b: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NiReport {
    pub program: String,
    pub observer: String,
    pub trials: usize,
    pub seed: u64,
    pub failures: Vec<Counterexample>,
}

impl NiReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A disagreement between two values at a path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub path: String,
    pub value_a: String,
    pub value_b: String,
}

/// Value non-interference at level `l`: components whose label flows to `l`
/// must be equal. Closures are compared by the domain of their environment.
pub fn values_low_equivalent(
    lattice: &Lattice,
    l: Label,
    ty: &SecTy,
    outer: Label,
    path: &str,
    a: &Value,
    b: &Value,
) -> Result<(), Disagreement> {
    let label = lattice.join(outer, ty.label);
    let differ = || Disagreement {
        path: path.to_string(),
        value_a: a.to_string(),
        value_b: b.to_string(),
    };
    match (&ty.ty, a, b) {
        (
            Ty::Record(ts) | Ty::Header(ts),
            Value::Record(fa) | Value::Header { fields: fa, .. },
            Value::Record(fb) | Value::Header { fields: fb, .. },
        ) => {
            if fa.len() != ts.len() || fb.len() != ts.len() {
                return Err(differ());
            }
            for ((n, t), ((_, va), (_, vb))) in ts.iter().zip(fa.iter().zip(fb)) {
                values_low_equivalent(lattice, l, t, label, &format!("{path}.{n}"), va, vb)?;
            }
            Ok(())
        }
        (Ty::Stack(et, _), Value::Stack { items: ia, .. }, Value::Stack { items: ib, .. }) => {
            if ia.len() != ib.len() {
                return Err(differ());
            }
            for (i, (va, vb)) in ia.iter().zip(ib).enumerate() {
                values_low_equivalent(lattice, l, et, label, &format!("{path}[{i}]"), va, vb)?;
            }
            Ok(())
        }
        (_, Value::Function(ca), Value::Function(cb)) => {
            if ca.env.same_domain(&cb.env) {
                Ok(())
            } else {
                Err(differ())
            }
        }
        (_, Value::Table(ta), Value::Table(tb)) => {
            if ta.env.same_domain(&tb.env) && ta.loc == tb.loc {
                Ok(())
            } else {
                Err(differ())
            }
        }
        _ => {
            if !lattice.leq(label, l) || a == b {
                Ok(())
            } else {
                Err(differ())
            }
        }
    }
}

/// Final-state equivalence at `l` over the variables of Γ.
pub fn low_equivalent(
    lattice: &Lattice,
    l: Label,
    gamma: &TypeEnv,
    a: &Outcome,
    b: &Outcome,
) -> Result<(), Disagreement> {
    if !a.env.same_domain(&b.env) {
        return Err(Disagreement {
            path: "<environment>".into(),
            value_a: a.env.names().join(","),
            value_b: b.env.names().join(","),
        });
    }
    for name in gamma.names() {
        let (Some(va), Some(vb)) = (a.value_of(name), b.value_of(name)) else {
            continue;
        };
        let ty = gamma.get(name).expect("name comes from gamma");
        values_low_equivalent(lattice, l, ty, lattice.bottom(), name, va, vb)?;
    }
    Ok(())
}

fn random_scalar(ty: &Ty, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Ty::Bool => Value::Bool(rng.gen()),
        Ty::Int => Value::Int(rng.gen_range(-(1i64 << 31)..(1i64 << 31))),
        Ty::Bit(w) => Value::bit(*w, rng.gen::<u128>()),
        Ty::MatchKind(ms) if !ms.is_empty() => {
            Value::MatchKind(ms[rng.gen_range(0..ms.len())].clone())
        }
        _ => Value::Unit,
    }
}

/// Draws a pair of values of `ty`: leaves visible at `l` are shared, the rest
/// are drawn independently.
fn random_pair(
    lattice: &Lattice,
    l: Label,
    ty: &SecTy,
    outer: Label,
    rng: &mut ChaCha8Rng,
) -> (Value, Value) {
    let label = lattice.join(outer, ty.label);
    let fields = |ts: &[(String, SecTy)], rng: &mut ChaCha8Rng| {
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        for (n, t) in ts {
            let (a, b) = random_pair(lattice, l, t, label, rng);
            fa.push((n.clone(), a));
            fb.push((n.clone(), b));
        }
        (fa, fb)
    };
    match &ty.ty {
        Ty::Record(ts) => {
            let (a, b) = fields(ts, rng);
            (Value::Record(a), Value::Record(b))
        }
        Ty::Header(ts) => {
            let (a, b) = fields(ts, rng);
            (
                Value::Header {
                    valid: true,
                    fields: a,
                },
                Value::Header {
                    valid: true,
                    fields: b,
                },
            )
        }
        Ty::Stack(et, n) => {
            let (mut ia, mut ib) = (Vec::new(), Vec::new());
            for _ in 0..*n {
                let (a, b) = random_pair(lattice, l, et, label, rng);
                ia.push(a);
                ib.push(b);
            }
            let elem = (**et).clone();
            (
                Value::Stack {
                    elem: elem.clone(),
                    items: ia,
                },
                Value::Stack { elem, items: ib },
            )
        }
        t => {
            let a = random_scalar(t, rng);
            let b = if lattice.leq(label, l) {
                a.clone()
            } else {
                random_scalar(t, rng)
            };
            (a, b)
        }
    }
}

/// A seeded pair of initial parameter valuations that agree below `l`.
pub fn generate_state_pair(
    lattice: &Lattice,
    params: &[(String, SecTy)],
    l: Label,
    rng: &mut ChaCha8Rng,
) -> (InitialValues, InitialValues) {
    let (mut a, mut b) = (InitialValues::new(), InitialValues::new());
    for (name, ty) in params {
        let (va, vb) = random_pair(lattice, l, ty, lattice.bottom(), rng);
        a.insert(name.clone(), va);
        b.insert(name.clone(), vb);
    }
    (a, b)
}

/// Renders initial values as a replayable store spec.
pub fn store_spec(params: &[(String, SecTy)], vals: &InitialValues) -> String {
    let mut lines = Vec::new();
    for (name, _) in params {
        if let Some(v) = vals.get(name) {
            dump_value_lines(name, v, &mut lines);
        }
    }
    lines.join("\n")
}

/// Everything a trial needs besides its inputs.
pub struct Harness<'a> {
    pub program: &'a Program,
    pub lattice: &'a Lattice,
    pub cp: &'a ControlPlane,
    /// Γ after the control's declarations.
    pub gamma: TypeEnv,
    pub params: Vec<(String, SecTy)>,
}

impl<'a> Harness<'a> {
    pub fn new(
        program: &'a Program,
        lattice: &'a Lattice,
        cp: &'a ControlPlane,
    ) -> Result<Harness<'a>, EvalError> {
        let analysis =
            check_program_with(program, lattice, lattice.bottom(), &CheckOptions::default());
        let (_, params) = control_param_types(program, lattice)?;
        Ok(Harness {
            program,
            lattice,
            cp,
            gamma: analysis.env,
            params,
        })
    }

    /// Runs both states and returns the first observed violation, if any.
    pub fn compare(
        &self,
        l: Label,
        a: &InitialValues,
        b: &InitialValues,
        audit: bool,
    ) -> Option<Counterexample> {
        let opts = RunOptions { audit };
        let spec_a = store_spec(&self.params, a);
        let spec_b = store_spec(&self.params, b);
        let cx = |variable: Option<String>, signal: bool, value_a: String, value_b: String| {
            Counterexample {
                trial: 0,
                variable,
                signal,
                value_a,
                value_b,
                store_spec_a: spec_a.clone(),
                store_spec_b: spec_b.clone(),
            }
        };
        let ra = run_program_with(self.program, self.lattice, self.cp, a, opts);
        let rb = run_program_with(self.program, self.lattice, self.cp, b, opts);
        let (oa, ob) = match (ra, rb) {
            (Ok(oa), Ok(ob)) => (oa, ob),
            (ra, rb) => {
                let show = |r: Result<Outcome, EvalError>| match r {
                    Ok(o) => o.signal.to_string(),
                    Err(e) => format!("error: {e}"),
                };
                return Some(cx(None, false, show(ra), show(rb)));
            }
        };
        for o in [&oa, &ob] {
            if let Some(v) = o.violations.first() {
                return Some(cx(None, false, v.clone(), String::new()));
            }
            if o.store.len() < self.params.len()
                || !self.params.iter().all(|(n, _)| o.env.get(n).is_some())
            {
                return Some(cx(None, false, "domain shrank".into(), String::new()));
            }
        }
        let signals_agree = match (&oa.signal, &ob.signal) {
            (Signal::Return(va), Signal::Return(vb)) => va == vb,
            (sa, sb) => sa.same_form(sb),
        };
        if !signals_agree {
            return Some(cx(None, true, oa.signal.to_string(), ob.signal.to_string()));
        }
        low_equivalent(self.lattice, l, &self.gamma, &oa, &ob)
            .err()
            .map(|d| cx(Some(d.path), false, d.value_a, d.value_b))
    }

    /// Replays two recorded store specs.
    pub fn replay(
        &self,
        l: Label,
        spec_a: &str,
        spec_b: &str,
    ) -> Result<Option<Counterexample>, EvalError> {
        let a = initial_values_from_spec(self.program, self.lattice, spec_a)?;
        let b = initial_values_from_spec(self.program, self.lattice, spec_b)?;
        Ok(self.compare(l, &a, &b, false))
    }

    /// Checks that the generated pair really agrees below `l`.
    fn pair_is_low_equivalent(&self, l: Label, a: &InitialValues, b: &InitialValues) -> bool {
        self.params
            .iter()
            .all(|(n, ty)| match (a.get(n), b.get(n)) {
                (Some(va), Some(vb)) => {
                    values_low_equivalent(self.lattice, l, ty, self.lattice.bottom(), n, va, vb)
                        .is_ok()
                }
                _ => false,
            })
    }

    pub fn trial(&self, cfg: &NiConfig, trial: usize) -> Option<Counterexample> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial as u64);
        let (a, b) = generate_state_pair(self.lattice, &self.params, cfg.observer, &mut rng);
        if !self.pair_is_low_equivalent(cfg.observer, &a, &b) {
            return Some(Counterexample {
                trial,
                variable: None,
                signal: false,
                value_a: "generated pair is not low-equivalent".into(),
                value_b: String::new(),
                store_spec_a: store_spec(&self.params, &a),
                store_spec_b: store_spec(&self.params, &b),
            });
        }
        self.compare(cfg.observer, &a, &b, cfg.audit).map(|mut c| {
            c.trial = trial;
            c
        })
    }
}

/// Runs `cfg.trials` seeded trials. Trial `i` draws from stream `i` of the
/// master seed, so results do not depend on scheduling.
pub fn check_noninterference(
    program: &Program,
    lattice: &Lattice,
    cp: &ControlPlane,
    cfg: &NiConfig,
) -> Result<NiReport, EvalError> {
    let h = Harness::new(program, lattice, cp)?;
    let failures: Vec<Counterexample> = (0..cfg.trials)
        .into_par_iter()
        .filter_map(|t| h.trial(cfg, t))
        .collect();
    Ok(NiReport {
        program: program.control.name.clone(),
        observer: lattice.name_of(cfg.observer).to_string(),
        trials: cfg.trials,
        seed: cfg.seed,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn report(src: &str, l: &str) -> NiReport {
        let lat = Lattice::two_point();
        let p = parse_program(src, &lat).unwrap();
        let cfg = NiConfig {
            trials: 50,
            ..NiConfig::new(lat.label(l).unwrap())
        };
        check_noninterference(&p, &lat, &ControlPlane::new(), &cfg).unwrap()
    }

    #[test]
    fn secure_program_passes() {
        let r = report(
            "control C(inout <bit<8>, high> h, inout bit<8> l) { apply { h = l + h; if (h == 0:8) { h = 1:8; } } }",
            "low",
        );
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn explicit_leak_is_found() {
        let r = report(
            "control C(inout <bit<8>, high> h, inout bit<8> l) { apply { l = h; } }",
            "low",
        );
        assert!(!r.passed());
        assert_eq!(r.failures[0].variable.as_deref(), Some("l"));
    }

    #[test]
    fn implicit_leak_is_found() {
        let r = report(
            "control C(inout <bool, high> h, inout bool l) { apply { if (h) { l = true; } else { l = false; } } }",
            "low",
        );
        assert!(!r.passed());
    }

    #[test]
    fn observer_high_sees_everything_consistently() {
        let r = report(
            "control C(inout <bit<8>, high> h, inout bit<8> l) { apply { l = h; } }",
            "high",
        );
        assert!(r.passed());
    }

    #[test]
    fn pairs_agree_below_observer() {
        let lat = Lattice::two_point();
        let low = lat.label("low").unwrap();
        let high = lat.label("high").unwrap();
        let params = vec![
            ("h".to_string(), SecTy::new(Ty::Bit(8), high)),
            ("x".to_string(), SecTy::new(Ty::Bit(8), low)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut differed = false;
        for _ in 0..20 {
            let (a, b) = generate_state_pair(&lat, &params, low, &mut rng);
            assert_eq!(a["x"], b["x"]);
            differed |= a["h"] != b["h"];
        }
        assert!(differed);
        let (a, b) = generate_state_pair(&lat, &[], low, &mut rng);
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn reports_are_reproducible() {
        let src = "control C(inout <bit<8>, high> h, inout bit<8> l) { apply { l = h; } }";
        let a = report(src, "low");
        let b = report(src, "low");
        assert_eq!(a.failures, b.failures);
    }
}
