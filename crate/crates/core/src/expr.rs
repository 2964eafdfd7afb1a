//! Core abstract syntax.
//!
//! Variables are resolved when a program is elaborated: locals become slot
//! indices into a flat frame laid out as `params ++ captured`, globals become
//! indices into the program's global table.

use std::sync::Arc;

use crate::prim::Prim;
use crate::value::{BlameLabel, Label, LamId, Name, SourcePos, Value};

#[derive(Clone, Debug)]
pub enum Expr {
    Prim(Prim),
    /// A literal: an integer, `()` or a quoted list of literals.
    Lit(Value),
    Lam(Arc<Lambda>),
    Var(Var),
    App(Box<Expr>, Vec<Expr>),
    If0(Box<Expr>, Box<Expr>, Box<Expr>),
    TermC(Box<Expr>, BlameLabel),
}

#[derive(Clone, Debug)]
pub struct Var {
    pub name: Name,
    pub slot: VarSlot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarSlot {
    Local(u32),
    Global(u32),
}

#[derive(Debug)]
pub struct Lambda {
    pub id: LamId,
    pub label: Label,
    pub pos: SourcePos,
    pub params: Vec<Name>,
    /// Free locals of the body, copied from the enclosing frame at creation.
    /// Capture `i` lives in slot `params.len() + i`.
    pub captures: Vec<Capture>,
    pub body: Expr,
}

impl Lambda {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn frame_size(&self) -> usize {
        self.captures.len() + self.params.len()
    }
}

#[derive(Clone, Debug)]
pub struct Capture {
    pub name: Name,
    /// Slot in the frame of the enclosing `λ` (or top level).
    pub from: u32,
}

#[derive(Clone, Debug)]
pub struct Global {
    pub name: Name,
    pub pos: SourcePos,
    pub expr: Expr,
}

/// Argument sorts accepted by `(assume (f (natural x) …))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamSort {
    Natural,
    Integer,
    List,
    Any,
}

#[derive(Clone, Debug)]
pub struct Assumption {
    pub function: Name,
    pub params: Vec<(Name, ParamSort)>,
    pub pos: SourcePos,
}

#[derive(Debug)]
pub struct Program {
    /// File stem used in labels.
    pub source: Arc<str>,
    pub globals: Vec<Global>,
    /// Top-level expressions, evaluated in order.
    pub main: Vec<Expr>,
    pub assumptions: Vec<Assumption>,
    /// Every `λ` in the program, indexed by [`LamId`].
    pub lambdas: Vec<Arc<Lambda>>,
}

impl Program {
    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| &*g.name == name)
    }

    pub fn lambda(&self, id: LamId) -> &Arc<Lambda> {
        &self.lambdas[id.0 as usize]
    }

    pub fn assumption(&self, function: &str) -> Option<&Assumption> {
        self.assumptions.iter().find(|a| &*a.function == function)
    }

    pub fn lambda_by_label(&self, label: &str) -> Option<&Arc<Lambda>> {
        self.lambdas.iter().find(|l| l.label.as_str() == label)
    }
}
