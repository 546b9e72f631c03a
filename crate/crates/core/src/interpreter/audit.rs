//! Runtime checks of the metatheory: domain monotonicity, closure
//! immutability, the frame property of writes, and preservation.

use super::LValue;
use crate::runtime::{Env, Loc, Store};
use crate::syntax::Span;

#[derive(Debug, Clone, Default)]
pub struct AuditState {
    pub violations: Vec<String>,
}

impl AuditState {
    /// A write through `lv` may change only the cell of its base variable.
    pub(super) fn check_frame(&mut self, before: &Store, after: &Store, target: Loc, lv: &LValue) {
        if before.len() != after.len() {
            self.violations
                .push(format!("write to `{lv}` allocated locations"));
        }
        for ((l, a), (_, b)) in before.cells().zip(after.cells()) {
            if l != target && a.value != b.value {
                self.violations
                    .push(format!("write to `{lv}` changed location {}", l.0));
            }
        }
    }

    pub(super) fn check_step(
        &mut self,
        store0: &Store,
        env0: &Env,
        store1: &Store,
        env1: &Env,
        span: Span,
    ) {
        if store1.len() < store0.len() {
            self.violations.push(format!("{span}: store domain shrank"));
        }
        if !env0.names().iter().all(|n| env1.get(n).is_some()) {
            self.violations
                .push(format!("{span}: environment domain shrank"));
        }
        for ((l, a), (_, b)) in store0.cells().zip(store1.cells()) {
            if a.value.is_closure() && a.value != b.value {
                self.violations.push(format!(
                    "{span}: closure at location {} was overwritten",
                    l.0
                ));
            }
        }
        for (l, c) in store1.cells() {
            if !c.value.conforms(&c.ty) {
                self.violations.push(format!(
                    "{span}: location {} holds `{}`, ill-typed",
                    l.0, c.value
                ));
            }
        }
    }
}
