//! Security-typed Core P4: lattice, parser, IFC checker, big-step
//! interpreter, and a dual-execution non-interference harness.
//!
//! The usual pipeline:
//!
//! ```
//! use p4ifc::{Lattice, parse_program, check_program};
//!
//! let lattice = Lattice::two_point();
//! let src = "control C(inout <bit<8>, high> h, inout bit<8> l) { apply { h = l; } }";
//! let program = parse_program(src, &lattice).unwrap();
//! let verdict = check_program(&program, &lattice, lattice.bottom());
//! assert!(verdict.accepted);
//! ```

pub mod corpus;
pub mod interpreter;
pub mod lattice;
pub mod ni;
pub mod runtime;
pub mod syntax;
pub mod testgen;
pub mod typechecker;

pub use interpreter::{run_program, EvalError, Outcome, RunOptions};
pub use lattice::{load_lattice, Label, Lattice, LatticeError};
pub use ni::{check_noninterference, NiConfig, NiReport};
pub use runtime::{ControlPlane, Signal, Store, Value};
pub use syntax::{parse_program, Direction, Program, SecTy, Span, SyntaxError, Ty, TypeDefs};
pub use typechecker::{
    check_program, check_program_with, Analysis, CheckOptions, Diagnostic, Rule, Verdict,
};
