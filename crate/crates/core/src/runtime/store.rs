use std::fmt;

use super::value::{Loc, Value};
use crate::syntax::SecTy;

/// A store cell remembers the type it was allocated at, which gives the
/// store typing Ξ for free.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: Value,
    pub ty: SecTy,
}

/// μ: locations to values. Locations are handed out by a counter and never
/// reused, so `dom(μ)` only grows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Store {
    cells: Vec<Cell>,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    pub fn alloc(&mut self, value: Value, ty: SecTy) -> Loc {
        self.cells.push(Cell { value, ty });
        Loc(self.cells.len() - 1)
    }

    pub fn get(&self, loc: Loc) -> Option<&Value> {
        self.cells.get(loc.0).map(|c| &c.value)
    }

    pub fn cell(&self, loc: Loc) -> Option<&Cell> {
        self.cells.get(loc.0)
    }

    pub fn set(&mut self, loc: Loc, value: Value) -> bool {
        match self.cells.get_mut(loc.0) {
            Some(c) => {
                c.value = value;
                true
            }
            None => false,
        }
    }

    /// Number of allocated locations; also the next fresh location.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = (Loc, &Cell)> {
        self.cells.iter().enumerate().map(|(i, c)| (Loc(i), c))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Cont,
    Return(Value),
    Exit,
}

impl Signal {
    pub fn name(&self) -> &'static str {
        match self {
            Signal::Cont => "cont",
            Signal::Return(_) => "return",
            Signal::Exit => "exit",
        }
    }

    pub fn same_form(&self, other: &Signal) -> bool {
        self.name() == other.name()
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Return(v) if *v != Value::Unit => write!(f, "return {v}"),
            s => f.write_str(s.name()),
        }
    }
}
