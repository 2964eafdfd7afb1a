//! Runtime values, closures and closure identity.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;

use crate::expr::Lambda;
use crate::prim::Prim;

pub type Name = Arc<str>;

/// Program-unique identity of a `λ` form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LamId(pub u32);

/// Printable, position-derived name of a `λ` form, e.g. `ack:1` or `fig2:7:14`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub Arc<str>);

impl Label {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SourcePos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// The party blamed when a termination contract is violated.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BlameLabel {
    /// Synthetic party used by whole-program monitoring outside any contract.
    Program,
    Contract {
        source: Arc<str>,
        pos: SourcePos,
        tag: Option<Arc<str>>,
    },
}

impl BlameLabel {
    pub fn contract(source: impl Into<Arc<str>>, pos: SourcePos, tag: Option<&str>) -> Self {
        BlameLabel::Contract {
            source: source.into(),
            pos,
            tag: tag.map(Arc::from),
        }
    }
}

impl fmt::Display for BlameLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlameLabel::Program => f.write_str("program"),
            BlameLabel::Contract { tag: Some(t), .. } => f.write_str(t),
            BlameLabel::Contract { source, pos, .. } => write!(f, "{source}:{pos}"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Value {
    Prim(Prim),
    Int(BigInt),
    Nil,
    Pair(Arc<PairCell>),
    Clo(Arc<Closure>),
    /// A closure guarded by a termination contract. Only closures are wrapped.
    TermClo(Arc<Closure>, BlameLabel),
}

#[derive(Debug)]
pub struct PairCell {
    pub car: Value,
    pub cdr: Value,
}

// Long cdr chains would otherwise drop recursively and exhaust the stack.
impl Drop for PairCell {
    fn drop(&mut self) {
        let mut next = std::mem::replace(&mut self.cdr, Value::Nil);
        while let Value::Pair(cell) = next {
            match Arc::try_unwrap(cell) {
                Ok(mut cell) => next = std::mem::replace(&mut cell.cdr, Value::Nil),
                Err(_) => break,
            }
        }
    }
}

impl Value {
    pub fn int(n: impl Into<BigInt>) -> Value {
        Value::Int(n.into())
    }

    pub fn cons(car: Value, cdr: Value) -> Value {
        Value::Pair(Arc::new(PairCell { car, cdr }))
    }

    /// Proper list from the given elements.
    pub fn list<I>(items: I) -> Value
    where
        I: IntoIterator<Item = Value>,
        I::IntoIter: DoubleEndedIterator,
    {
        items
            .into_iter()
            .rev()
            .fold(Value::Nil, |tail, head| Value::cons(head, tail))
    }

    pub fn bool(b: bool) -> Value {
        // 0 is "true" so that `if0` takes its first branch.
        Value::int(if b { 0 } else { 1 })
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Value::Int(n) if n.sign() == num_bigint::Sign::NoSign)
    }

    pub fn is_procedure(&self) -> bool {
        matches!(self, Value::Prim(_) | Value::Clo(_) | Value::TermClo(..))
    }

    /// First-order data: integers, `()` and pairs of first-order data.
    pub fn is_datum(&self) -> bool {
        let mut stack = vec![self];
        while let Some(v) = stack.pop() {
            match v {
                Value::Int(_) | Value::Nil => {}
                Value::Pair(cell) => {
                    stack.push(&cell.car);
                    stack.push(&cell.cdr);
                }
                _ => return false,
            }
        }
        true
    }

    /// Number of value nodes, counting each integer limb.
    pub fn size(&self) -> u64 {
        let mut stack = vec![self];
        let mut n = 0u64;
        while let Some(v) = stack.pop() {
            match v {
                Value::Int(i) => n += limbs(i),
                Value::Pair(cell) => {
                    n += 1;
                    stack.push(&cell.car);
                    stack.push(&cell.cdr);
                }
                _ => n += 1,
            }
        }
        n
    }

    /// Elements of a proper list, or `None` for anything else.
    pub fn list_items(&self) -> Option<Vec<Value>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Value::Nil => return Some(out),
                Value::Pair(cell) => {
                    out.push(cell.car.clone());
                    cur = &cell.cdr;
                }
                _ => return None,
            }
        }
    }
}

pub(crate) fn limbs(n: &BigInt) -> u64 {
    (n.bits() / 64 + 1).max(1)
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::int(n)
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        structurally_equal(self, other)
    }
}

impl Eq for Value {}

/// Structural equality; closures are equal when they come from the same `λ`
/// and their captured environments are equal.
fn structurally_equal(a: &Value, b: &Value) -> bool {
    let mut stack: Vec<(&Value, &Value)> = vec![(a, b)];
    while let Some((a, b)) = stack.pop() {
        match (a, b) {
            (Value::Prim(x), Value::Prim(y)) => {
                if x != y {
                    return false;
                }
            }
            (Value::Int(x), Value::Int(y)) => {
                if x != y {
                    return false;
                }
            }
            (Value::Nil, Value::Nil) => {}
            (Value::Pair(x), Value::Pair(y)) => {
                if !Arc::ptr_eq(x, y) {
                    // Popped first, so heads are compared before long tails.
                    stack.push((&x.cdr, &y.cdr));
                    stack.push((&x.car, &y.car));
                }
            }
            (Value::Clo(x), Value::Clo(y)) => {
                if !push_closures(&mut stack, x, y) {
                    return false;
                }
            }
            (Value::TermClo(x, bx), Value::TermClo(y, by)) => {
                if bx != by || !push_closures(&mut stack, x, y) {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

fn push_closures<'a>(
    stack: &mut Vec<(&'a Value, &'a Value)>,
    x: &'a Arc<Closure>,
    y: &'a Arc<Closure>,
) -> bool {
    if Arc::ptr_eq(x, y) {
        return true;
    }
    if x.lambda.id != y.lambda.id || x.hash != y.hash || x.captured.len() != y.captured.len() {
        return false;
    }
    stack.extend(x.captured.iter().zip(y.captured.iter()));
    true
}

// Hashing visits a bounded prefix of the value; equal values still hash equally.
const HASH_BUDGET: u32 = 48;

fn hash_bounded<H: Hasher>(v: &Value, state: &mut H, budget: &mut u32) {
    if *budget == 0 {
        return;
    }
    *budget -= 1;
    match v {
        Value::Prim(p) => {
            0u8.hash(state);
            p.hash(state);
        }
        Value::Int(n) => {
            1u8.hash(state);
            n.hash(state);
        }
        Value::Nil => 2u8.hash(state),
        Value::Pair(cell) => {
            3u8.hash(state);
            hash_bounded(&cell.car, state, budget);
            hash_bounded(&cell.cdr, state, budget);
        }
        Value::Clo(c) => {
            4u8.hash(state);
            c.hash.hash(state);
        }
        Value::TermClo(c, _) => {
            5u8.hash(state);
            c.hash.hash(state);
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut budget = HASH_BUDGET;
        hash_bounded(self, state, &mut budget);
    }
}

/// A flat closure: the `λ` plus the values of its free local variables, in
/// the order given by [`Lambda::captures`].
pub struct Closure {
    pub lambda: Arc<Lambda>,
    pub captured: Box<[Value]>,
    hash: u64,
}

impl Closure {
    pub fn new(lambda: Arc<Lambda>, captured: Box<[Value]>) -> Closure {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        lambda.id.hash(&mut h);
        for v in captured.iter() {
            v.hash(&mut h);
        }
        Closure {
            hash: h.finish(),
            lambda,
            captured,
        }
    }

    pub fn label(&self) -> &Label {
        &self.lambda.label
    }

    pub fn arity(&self) -> usize {
        self.lambda.params.len()
    }
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Closure")
            .field("label", &self.lambda.label)
            .field("captured", &self.captured)
            .finish()
    }
}

/// Exact identity of a closure for indexing the size-change table.
///
/// Two keys are equal iff the closures are structurally identical: same `λ`
/// and element-wise equal captured values. Globals are resolved by name at
/// call time and never captured, so they are not part of the key.
#[derive(Clone)]
pub struct ClosureKey(Arc<Closure>);

impl ClosureKey {
    pub fn closure(&self) -> &Arc<Closure> {
        &self.0
    }

    pub fn label(&self) -> &Label {
        self.0.label()
    }
}

pub fn closure_key(c: &Arc<Closure>) -> ClosureKey {
    ClosureKey(Arc::clone(c))
}

impl PartialEq for ClosureKey {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        structurally_equal(&Value::Clo(self.0.clone()), &Value::Clo(other.0.clone()))
    }
}

impl Eq for ClosureKey {}

impl Hash for ClosureKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl fmt::Debug for ClosureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosureKey({})", self.0.label())
    }
}
