//! Value model, store μ, environment ε, control plane and the text formats
//! for values, store specs and table entries.

mod control_plane;
mod store;
mod text;
mod value;

pub use control_plane::{
    load_entries, ActionCall, ControlPlane, EntriesError, Entry, MatchFailure, Pattern,
    TableEntries,
};
pub use store::{Cell, Signal, Store};
pub use text::{
    dump_value_lines, parse_store_spec, parse_value, set_path, PathSeg, StoreLine, ValueError,
};
pub use value::{
    apply_binop, havoc_value, init_value, mask, zero, ClosureParam, CopyMode, Env, FunClosure, Loc,
    TableClosure, Value,
};
