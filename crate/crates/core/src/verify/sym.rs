//! Symbolic values, path conditions and the order-entailment engine.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::expr::Lambda;
use crate::order::{precedes, SizeRelation};
use crate::prim::Prim;
use crate::value::{Name, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Int,
    List,
    Any,
}

/// A fresh unknown. Identity is the id; the name is for display.
#[derive(Clone, Debug)]
pub struct Atom {
    pub id: u32,
    pub sort: Sort,
    pub name: Name,
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SymValue {
    Atom(Atom),
    /// A known datum or primitive.
    Lit(Value),
    /// A primitive application that could not be folded.
    Op(Prim, Rc<[SymValue]>),
    /// A closure whose code is known.
    Closure(Rc<SymClosure>),
    /// A procedure about which nothing is known.
    Opaque(u32),
}

#[derive(Debug)]
pub struct SymClosure {
    pub lambda: Arc<Lambda>,
    pub captured: Vec<SymValue>,
}

impl PartialEq for SymClosure {
    fn eq(&self, other: &Self) -> bool {
        self.lambda.id == other.lambda.id && self.captured == other.captured
    }
}

impl Eq for SymClosure {}

impl Hash for SymClosure {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lambda.id.hash(state);
        self.captured.hash(state);
    }
}

impl SymValue {
    pub fn int(n: impl Into<BigInt>) -> SymValue {
        SymValue::Lit(Value::int(n))
    }

    pub fn op(p: Prim, args: Vec<SymValue>) -> SymValue {
        SymValue::Op(p, args.into())
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            SymValue::Lit(v) => v.as_int(),
            _ => None,
        }
    }

    pub fn is_procedure(&self) -> bool {
        match self {
            SymValue::Closure(_) | SymValue::Opaque(_) => true,
            SymValue::Lit(v) => v.is_procedure(),
            _ => false,
        }
    }

    pub fn atoms(&self, out: &mut BTreeSet<u32>) {
        match self {
            SymValue::Atom(a) => {
                out.insert(a.id);
            }
            SymValue::Op(_, args) => args.iter().for_each(|a| a.atoms(out)),
            SymValue::Closure(c) => c.captured.iter().for_each(|a| a.atoms(out)),
            SymValue::Lit(_) | SymValue::Opaque(_) => {}
        }
    }

    fn atom_set(&self) -> BTreeSet<u32> {
        let mut s = BTreeSet::new();
        self.atoms(&mut s);
        s
    }
}

impl fmt::Display for SymValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymValue::Atom(a) => f.write_str(&a.name),
            SymValue::Lit(v) => write!(f, "{v}"),
            SymValue::Op(p, args) => {
                write!(f, "({}", p.name())?;
                for a in args.iter() {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            SymValue::Closure(c) => write!(f, "#<closure:{}>", c.lambda.label),
            SymValue::Opaque(_) => f.write_str("#<procedure>"),
        }
    }
}

/// `coef·x + offset` for at most one integer atom `x`; `coef` is ±1, or 0
/// for a constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lin {
    pub atom: Option<u32>,
    pub coef: i32,
    pub offset: BigInt,
}

impl Lin {
    fn constant(c: BigInt) -> Lin {
        Lin {
            atom: None,
            coef: 0,
            offset: c,
        }
    }

    fn add(self, other: Lin, sign: i32) -> Option<Lin> {
        let offset = if sign > 0 {
            self.offset + other.offset
        } else {
            self.offset - other.offset
        };
        let (atom, coef) = match (self.atom, other.atom) {
            (None, None) => (None, 0),
            (Some(x), None) => (Some(x), self.coef),
            (None, Some(y)) => (Some(y), sign * other.coef),
            (Some(x), Some(y)) if x == y => {
                let c = self.coef + sign * other.coef;
                match c {
                    0 => (None, 0),
                    1 | -1 => (Some(x), c),
                    _ => return None,
                }
            }
            _ => return None,
        };
        Some(Lin { atom, coef, offset })
    }

    fn at(&self, x: &BigInt) -> BigInt {
        match self.coef {
            0 => self.offset.clone(),
            1 => x + &self.offset,
            _ => &self.offset - x,
        }
    }
}

/// Integers in `[lo, hi]` minus `holes`. Bounds are kept off holes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Domain {
    pub lo: Option<BigInt>,
    pub hi: Option<BigInt>,
    pub holes: BTreeSet<BigInt>,
}

impl Domain {
    pub fn contains(&self, v: &BigInt) -> bool {
        self.lo.as_ref().is_none_or(|lo| v >= lo)
            && self.hi.as_ref().is_none_or(|hi| v <= hi)
            && !self.holes.contains(v)
    }

    pub fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(lo), Some(hi)) if lo > hi)
    }

    fn normalize(&mut self) {
        if let Some(lo) = self.lo.as_mut() {
            while self.holes.contains(lo) {
                *lo += 1;
            }
        }
        if let Some(hi) = self.hi.as_mut() {
            while self.holes.contains(hi) {
                *hi -= 1;
            }
        }
        let (lo, hi) = (self.lo.clone(), self.hi.clone());
        self.holes.retain(|h| {
            lo.as_ref().is_none_or(|lo| h > lo) && hi.as_ref().is_none_or(|hi| h < hi)
        });
    }

    fn at_least(&mut self, v: BigInt) {
        if self.lo.as_ref().is_none_or(|lo| &v > lo) {
            self.lo = Some(v);
        }
        self.normalize();
    }

    fn at_most(&mut self, v: BigInt) {
        if self.hi.as_ref().is_none_or(|hi| &v < hi) {
            self.hi = Some(v);
        }
        self.normalize();
    }

    fn exclude(&mut self, v: BigInt) {
        self.holes.insert(v);
        self.normalize();
    }

    fn nearest_below(&self, mut v: BigInt) -> Option<BigInt> {
        while self.holes.contains(&v) {
            v -= 1;
        }
        self.contains(&v).then_some(v)
    }

    fn nearest_above(&self, mut v: BigInt) -> Option<BigInt> {
        while self.holes.contains(&v) {
            v += 1;
        }
        self.contains(&v).then_some(v)
    }

    /// Whether `g(x) > 0` for every `x` in the domain, where `g` is piecewise
    /// linear with kinks only at `kinks`.
    fn forall_positive(&self, kinks: &[BigInt], g: impl Fn(&BigInt) -> BigInt) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut points: Vec<BigInt> = Vec::new();
        points.extend(self.lo.iter().cloned());
        points.extend(self.hi.iter().cloned());
        for h in &self.holes {
            points.extend(self.nearest_below(h - 1));
            points.extend(self.nearest_above(h + 1));
        }
        points.extend(kinks.iter().filter(|k| self.contains(k)).cloned());
        if points.iter().any(|p| !g(p).is_positive()) {
            return false;
        }
        let mut far = BigInt::zero();
        for p in points.iter().chain(kinks) {
            far = far.max(p.abs());
        }
        far += 2;
        if self.hi.is_none() {
            let x = far.clone();
            let (a, b) = (g(&x), g(&(&x + 1)));
            if !a.is_positive() || b < a {
                return false;
            }
        }
        if self.lo.is_none() {
            let x = -far;
            let (a, b) = (g(&x), g(&(&x - 1)));
            if !a.is_positive() || b < a {
                return false;
            }
        }
        true
    }
}

/// A proposition in a path condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prop {
    Eq0(SymValue),
    Ne0(SymValue),
    Ge0(SymValue),
    Pair(SymValue),
    Nil(SymValue),
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Eq0(s) => write!(f, "(= {s} 0)"),
            Prop::Ne0(s) => write!(f, "(≠ {s} 0)"),
            Prop::Ge0(s) => write!(f, "(≥ {s} 0)"),
            Prop::Pair(s) => write!(f, "(pair {s})"),
            Prop::Nil(s) => write!(f, "(nil {s})"),
        }
    }
}

/// Facts known on one symbolic path.
#[derive(Clone, Debug, Default)]
pub struct PathCond {
    /// Integer atoms and their domains.
    ints: HashMap<u32, Domain>,
    /// Structural facts: `true` for a pair, `false` for `()`.
    shapes: HashMap<SymValue, bool>,
    props: Vec<Prop>,
}

impl PathCond {
    pub fn props(&self) -> &[Prop] {
        &self.props
    }

    pub fn is_int(&self, s: &SymValue) -> bool {
        match s {
            SymValue::Atom(a) => a.sort == Sort::Int || self.ints.contains_key(&a.id),
            SymValue::Lit(v) => v.as_int().is_some(),
            SymValue::Op(p, _) => matches!(
                p,
                Prim::Add
                    | Prim::Sub
                    | Prim::Mul
                    | Prim::Quotient
                    | Prim::Remainder
                    | Prim::NumEq
                    | Prim::Lt
                    | Prim::Gt
                    | Prim::Le
                    | Prim::Ge
                    | Prim::IsEmpty
                    | Prim::IsCons
                    | Prim::IsZero
                    | Prim::Not
            ),
            _ => false,
        }
    }

    /// Records that an atom of unknown sort held an integer.
    pub fn mark_int(&mut self, s: &SymValue) {
        if let SymValue::Atom(a) = s {
            self.ints.entry(a.id).or_default();
        }
    }

    pub fn domain(&self, atom: u32) -> Domain {
        self.ints.get(&atom).cloned().unwrap_or_default()
    }

    pub fn linear(&self, s: &SymValue) -> Option<Lin> {
        match s {
            SymValue::Lit(v) => v.as_int().map(|n| Lin::constant(n.clone())),
            SymValue::Atom(a) if self.is_int(s) => Some(Lin {
                atom: Some(a.id),
                coef: 1,
                offset: BigInt::zero(),
            }),
            SymValue::Op(Prim::Add, args) if args.len() == 2 => {
                self.linear(&args[0])?.add(self.linear(&args[1])?, 1)
            }
            SymValue::Op(Prim::Sub, args) if args.len() == 2 => {
                self.linear(&args[0])?.add(self.linear(&args[1])?, -1)
            }
            SymValue::Op(Prim::Sub, args) if args.len() == 1 => {
                Lin::constant(BigInt::zero()).add(self.linear(&args[0])?, -1)
            }
            _ => None,
        }
    }

    /// Possible values of a linear term, as a domain.
    fn range(&self, l: &Lin) -> Domain {
        match (l.atom, l.coef) {
            (Some(x), 1) => {
                let d = self.domain(x);
                Domain {
                    lo: d.lo.map(|v| v + &l.offset),
                    hi: d.hi.map(|v| v + &l.offset),
                    holes: d.holes.iter().map(|h| h + &l.offset).collect(),
                }
            }
            (Some(x), _) => {
                let d = self.domain(x);
                Domain {
                    lo: d.hi.map(|v| &l.offset - v),
                    hi: d.lo.map(|v| &l.offset - v),
                    holes: d.holes.iter().map(|h| &l.offset - h).collect(),
                }
            }
            (None, _) => Domain {
                lo: Some(l.offset.clone()),
                hi: Some(l.offset.clone()),
                holes: BTreeSet::new(),
            },
        }
    }

    pub fn range_of(&self, s: &SymValue) -> Option<Domain> {
        self.linear(s).map(|l| self.range(&l))
    }

    /// Interval bounds of an integer term, including the non-linear ones
    /// the linear view gives up on.
    pub fn bounds(&self, s: &SymValue) -> (Option<BigInt>, Option<BigInt>) {
        if let Some(d) = self.range_of(s) {
            return (d.lo, d.hi);
        }
        let SymValue::Op(p, args) = s else {
            return (None, None);
        };
        let pos_lit = |i: usize| args.get(i).and_then(|a| a.as_int()).filter(|c| c.is_positive());
        match (p, args.len()) {
            (Prim::Add, 2) => {
                let ((a, b), (c, d)) = (self.bounds(&args[0]), self.bounds(&args[1]));
                (a.zip(c).map(|(x, y)| x + y), b.zip(d).map(|(x, y)| x + y))
            }
            (Prim::Sub, 2) => {
                if let SymValue::Op(Prim::Quotient, q) = &args[1] {
                    if q[0] == args[0] {
                        if let Some(c) = q[1].as_int().filter(|c| c > &&BigInt::one()) {
                            // t - t/c is non-decreasing in t for t ≥ 0
                            let f = |t: BigInt| &t - &t / c;
                            let (lo, hi) = self.bounds(&args[0]);
                            if lo.as_ref().is_some_and(|lo| !lo.is_negative()) {
                                return (lo.map(f), hi.map(f));
                            }
                        }
                    }
                }
                let ((a, b), (c, d)) = (self.bounds(&args[0]), self.bounds(&args[1]));
                (a.zip(d).map(|(x, y)| x - y), b.zip(c).map(|(x, y)| x - y))
            }
            (Prim::Mul, 2) => {
                let ((a, b), (c, d)) = (self.bounds(&args[0]), self.bounds(&args[1]));
                match (a, c) {
                    (Some(a), Some(c)) if !a.is_negative() && !c.is_negative() => {
                        (Some(a * c), b.zip(d).map(|(x, y)| x * y))
                    }
                    _ => (None, None),
                }
            }
            (Prim::Quotient, 2) => match pos_lit(1) {
                // truncating division by a positive constant is monotone
                Some(c) => {
                    let (lo, hi) = self.bounds(&args[0]);
                    (lo.map(|x| x / c), hi.map(|x| x / c))
                }
                None => (None, None),
            },
            (Prim::Remainder, 2) => match (pos_lit(1), self.bounds(&args[0]).0) {
                (Some(c), Some(lo)) if !lo.is_negative() => (Some(BigInt::zero()), Some(c - 1)),
                _ => (None, None),
            },
            _ => (None, None),
        }
    }

    /// Decides `s = 0` when the facts force it either way.
    pub fn decide_zero(&self, s: &SymValue) -> Option<bool> {
        let zero = BigInt::zero();
        if let Some(d) = self.range_of(s) {
            return if !d.contains(&zero) {
                Some(false)
            } else if d.lo.as_ref() == Some(&zero) && d.hi.as_ref() == Some(&zero) {
                Some(true)
            } else {
                None
            };
        }
        match self.bounds(s) {
            (Some(lo), _) if lo.is_positive() => Some(false),
            (_, Some(hi)) if hi.is_negative() => Some(false),
            (Some(lo), Some(hi)) if lo.is_zero() && hi.is_zero() => Some(true),
            _ => None,
        }
    }

    /// Decides `s ≥ 0` when the facts force it either way.
    pub fn decide_nonneg(&self, s: &SymValue) -> Option<bool> {
        match self.bounds(s) {
            (Some(lo), _) if !lo.is_negative() => Some(true),
            (_, Some(hi)) if hi.is_negative() => Some(false),
            _ => None,
        }
    }

    pub fn pair_fact(&self, s: &SymValue) -> Option<bool> {
        match s {
            SymValue::Lit(v) => Some(matches!(v, Value::Pair(_))),
            SymValue::Op(Prim::Cons, _) => Some(true),
            SymValue::Closure(_) | SymValue::Opaque(_) => Some(false),
            _ if self.is_int(s) => Some(false),
            _ => self.shapes.get(s).copied(),
        }
    }

    /// Whether `s` is known to be a proper list.
    pub fn is_listish(&self, s: &SymValue) -> bool {
        match s {
            SymValue::Atom(a) => a.sort == Sort::List,
            SymValue::Lit(v) => v.list_items().is_some(),
            SymValue::Op(Prim::Cons, args) => self.is_listish(&args[1]),
            SymValue::Op(Prim::Cdr, args) => self.is_listish(&args[0]),
            _ => false,
        }
    }

    /// Adds a proposition; `false` when the path becomes infeasible.
    pub fn assume(&mut self, p: Prop) -> bool {
        let ok = match &p {
            Prop::Eq0(s) | Prop::Ne0(s) | Prop::Ge0(s) => self.assume_int(&p, s),
            Prop::Pair(s) => self.assume_shape(s, true),
            Prop::Nil(s) => self.assume_shape(s, false),
        };
        if ok && !self.props.contains(&p) {
            self.props.push(p);
        }
        ok
    }

    fn assume_shape(&mut self, s: &SymValue, pair: bool) -> bool {
        match self.pair_fact(s) {
            Some(known) => known == pair,
            None => {
                self.shapes.insert(s.clone(), pair);
                true
            }
        }
    }

    fn assume_int(&mut self, p: &Prop, s: &SymValue) -> bool {
        if let (Prop::Eq0(_), SymValue::Atom(_)) = (p, s) {
            self.mark_int(s);
        }
        let Some(l) = self.linear(s) else {
            return match p {
                Prop::Eq0(_) => self.decide_zero(s) != Some(false),
                Prop::Ne0(_) => self.decide_zero(s) != Some(true),
                _ => self.decide_nonneg(s) != Some(false),
            };
        };
        let Some(x) = l.atom else {
            return match p {
                Prop::Eq0(_) => l.offset.is_zero(),
                Prop::Ne0(_) => !l.offset.is_zero(),
                _ => !l.offset.is_negative(),
            };
        };
        // coef·x + offset ⋈ 0, with coef = ±1
        let root = if l.coef == 1 {
            -l.offset.clone()
        } else {
            l.offset.clone()
        };
        let d = self.ints.entry(x).or_default();
        match p {
            Prop::Eq0(_) => {
                d.at_least(root.clone());
                d.at_most(root);
            }
            Prop::Ne0(_) => d.exclude(root),
            _ if l.coef == 1 => d.at_least(root),
            _ => d.at_most(root),
        }
        !d.is_empty()
    }
}

/// Relates `newer` to `older` where the facts force it: `StrictlyLess` only
/// if every instantiation satisfying `phi` has `newer ≺ older`, `Equal` only
/// if every one has `newer ⪯ older`.
///
/// Arcs are derived only between terms that share an atom (or between two
/// closed literals), so a parameter is never related to an unrelated
/// constant.
pub fn entails_order(phi: &PathCond, older: &SymValue, newer: &SymValue) -> SizeRelation {
    if older == newer {
        return SizeRelation::Equal;
    }
    if newer.is_procedure() || older.is_procedure() {
        return SizeRelation::Unknown;
    }
    let (na, oa) = (newer.atom_set(), older.atom_set());
    if na.is_empty() && oa.is_empty() {
        return match (newer, older) {
            (SymValue::Lit(n), SymValue::Lit(o)) if precedes(n, o) => SizeRelation::StrictlyLess,
            _ => SizeRelation::Unknown,
        };
    }
    if na.is_disjoint(&oa) {
        return SizeRelation::Unknown;
    }
    if let Some(r) = linear_order(phi, older, newer) {
        return r;
    }
    if quotient_below(phi, older, newer) {
        return SizeRelation::StrictlyLess;
    }
    if structurally_below(phi, newer, older) {
        return SizeRelation::StrictlyLess;
    }
    SizeRelation::Unknown
}

fn linear_order(phi: &PathCond, older: &SymValue, newer: &SymValue) -> Option<SizeRelation> {
    let (o, n) = (phi.linear(older)?, phi.linear(newer)?);
    let x = match (o.atom, n.atom) {
        (Some(x), Some(y)) if x == y && o.coef == 1 && n.coef == 1 => x,
        _ => return Some(SizeRelation::Unknown),
    };
    if o.offset == n.offset {
        return Some(SizeRelation::Equal);
    }
    let kinks = [-o.offset.clone(), -n.offset.clone()];
    let strict = phi
        .domain(x)
        .forall_positive(&kinks, |v| o.at(v).abs() - n.at(v).abs());
    Some(if strict {
        SizeRelation::StrictlyLess
    } else {
        SizeRelation::Unknown
    })
}

/// `(quotient t c)` and `(- t (quotient t c))` against `t`, for `|c| ≥ 2`.
fn quotient_below(phi: &PathCond, older: &SymValue, newer: &SymValue) -> bool {
    let Some(o) = phi.linear(older) else {
        return false;
    };
    let same = |t: &SymValue| phi.linear(t).is_some_and(|l| l == o);
    let divisor = |args: &[SymValue]| args[1].as_int().filter(|c| c.abs() >= BigInt::from(2)).cloned();
    let range = phi.range(&o);
    match newer {
        SymValue::Op(Prim::Quotient, args) if same(&args[0]) && divisor(args).is_some() => {
            !range.contains(&BigInt::zero())
        }
        SymValue::Op(Prim::Sub, args) if args.len() == 2 && same(&args[0]) => match &args[1] {
            SymValue::Op(Prim::Quotient, q) if same(&q[0]) => match divisor(q) {
                Some(c) if c.is_positive() => range.lo.as_ref().is_some_and(|lo| lo >= &c),
                _ => false,
            },
            _ => false,
        },
        _ => false,
    }
}

/// `newer` is reached from `older` by at least one `car`/`cdr` of a known pair,
/// or is a component of a `cons` that `older` denotes.
fn structurally_below(phi: &PathCond, newer: &SymValue, older: &SymValue) -> bool {
    if let SymValue::Op(Prim::Cons, parts) = older {
        if parts
            .iter()
            .any(|p| p == newer || structurally_below(phi, newer, p))
        {
            return true;
        }
    }
    match newer {
        SymValue::Op(Prim::Car | Prim::Cdr, args) => {
            let t = &args[0];
            phi.pair_fact(t) == Some(true) && (t == older || structurally_below(phi, t, older))
        }
        _ => false,
    }
}

/// Abstraction of a symbolic value used to key and generalize activations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Bottom,
    NonZeroNat,
    Nat,
    Int,
    Nil,
    ConsList,
    List,
    Pair,
    Fn,
    Any,
}

const SHAPES: [Shape; 10] = [
    Shape::Bottom,
    Shape::NonZeroNat,
    Shape::Nat,
    Shape::Int,
    Shape::Nil,
    Shape::ConsList,
    Shape::List,
    Shape::Pair,
    Shape::Fn,
    Shape::Any,
];

impl Shape {
    pub fn leq(self, other: Shape) -> bool {
        use Shape::*;
        self == other
            || self == Bottom
            || other == Any
            || matches!(
                (self, other),
                (NonZeroNat, Nat)
                    | (NonZeroNat, Int)
                    | (Nat, Int)
                    | (Nil, List)
                    | (ConsList, List)
                    | (ConsList, Pair)
            )
    }

    pub fn join(self, other: Shape) -> Shape {
        SHAPES
            .into_iter()
            .find(|s| self.leq(*s) && other.leq(*s))
            .unwrap_or(Shape::Any)
    }
}

fn int_shape(d: &Domain) -> Shape {
    match &d.lo {
        Some(lo) if lo.is_positive() => Shape::NonZeroNat,
        Some(lo) if lo.is_zero() => Shape::Nat,
        _ => Shape::Int,
    }
}

pub fn shape_of(phi: &PathCond, s: &SymValue) -> Shape {
    if let Some(d) = phi.range_of(s) {
        return int_shape(&d);
    }
    if phi.is_int(s) {
        if let (Some(lo), _) = phi.bounds(s) {
            if !lo.is_negative() {
                return int_shape(&Domain { lo: Some(lo), hi: None, holes: BTreeSet::new() });
            }
        }
    }
    let structural = |base: Shape| match phi.pair_fact(s) {
        Some(true) if base == Shape::List => Shape::ConsList,
        Some(true) => Shape::Pair,
        Some(false) => Shape::Nil,
        None => base,
    };
    match s {
        SymValue::Lit(v) => match v {
            Value::Nil => Shape::Nil,
            Value::Pair(_) if v.list_items().is_some() => Shape::ConsList,
            Value::Pair(_) => Shape::Pair,
            _ if v.is_procedure() => Shape::Fn,
            _ => Shape::Any,
        },
        SymValue::Closure(_) | SymValue::Opaque(_) => Shape::Fn,
        SymValue::Atom(a) => match a.sort {
            Sort::List => structural(Shape::List),
            _ => structural(Shape::Any),
        },
        SymValue::Op(p, args) => {
            let nat = |i: usize| shape_of(phi, &args[i]).leq(Shape::Nat);
            let pos = |i: usize| shape_of(phi, &args[i]).leq(Shape::NonZeroNat);
            let pos_lit = |i: usize| args[i].as_int().is_some_and(|c| c.is_positive());
            match p {
                Prim::Add if nat(0) && nat(1) => {
                    if pos(0) || pos(1) {
                        Shape::NonZeroNat
                    } else {
                        Shape::Nat
                    }
                }
                Prim::Mul if nat(0) && nat(1) => {
                    if pos(0) && pos(1) {
                        Shape::NonZeroNat
                    } else {
                        Shape::Nat
                    }
                }
                Prim::Quotient | Prim::Remainder if nat(0) && pos_lit(1) => Shape::Nat,
                Prim::Add | Prim::Sub | Prim::Mul | Prim::Quotient | Prim::Remainder => Shape::Int,
                Prim::NumEq
                | Prim::Lt
                | Prim::Gt
                | Prim::Le
                | Prim::Ge
                | Prim::IsEmpty
                | Prim::IsCons
                | Prim::IsZero
                | Prim::Not => Shape::Nat,
                Prim::Cons => match shape_of(phi, &args[1]) {
                    Shape::Nil | Shape::List | Shape::ConsList => Shape::ConsList,
                    _ => Shape::Pair,
                },
                Prim::Cdr if phi.is_listish(&args[0]) => structural(Shape::List),
                _ => structural(Shape::Any),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(id: u32, name: &str) -> SymValue {
        SymValue::Atom(Atom {
            id,
            sort: Sort::Int,
            name: name.into(),
        })
    }

    #[test]
    fn decrement_needs_positive() {
        let m = atom(0, "m");
        let m1 = SymValue::op(Prim::Sub, vec![m.clone(), SymValue::int(1)]);
        let mut phi = PathCond::default();
        assert_eq!(entails_order(&phi, &m, &m1), SizeRelation::Unknown);
        assert!(phi.assume(Prop::Ge0(m.clone())));
        assert!(phi.assume(Prop::Ne0(m.clone())));
        assert_eq!(entails_order(&phi, &m, &m1), SizeRelation::StrictlyLess);
        assert_eq!(entails_order(&phi, &m, &m), SizeRelation::Equal);
    }

    #[test]
    fn contradictions_prune() {
        let m = atom(0, "m");
        let mut phi = PathCond::default();
        assert!(phi.assume(Prop::Ge0(m.clone())));
        assert!(phi.assume(Prop::Ne0(m.clone())));
        assert!(!phi.clone().assume(Prop::Eq0(m.clone())));
        let neg = SymValue::op(Prim::Sub, vec![SymValue::int(0), m.clone()]);
        assert!(!phi.assume(Prop::Ge0(neg)));
    }

    #[test]
    fn structural_descent() {
        let l = SymValue::Atom(Atom {
            id: 3,
            sort: Sort::List,
            name: "l".into(),
        });
        let cdr = SymValue::op(Prim::Cdr, vec![l.clone()]);
        let mut phi = PathCond::default();
        assert_eq!(entails_order(&phi, &l, &cdr), SizeRelation::Unknown);
        phi.assume(Prop::Pair(l.clone()));
        assert_eq!(entails_order(&phi, &l, &cdr), SizeRelation::StrictlyLess);
        assert_eq!(shape_of(&phi, &cdr), Shape::List);
        assert_eq!(shape_of(&phi, &l), Shape::ConsList);
    }

    #[test]
    fn unrelated_terms_stay_unknown() {
        let (m, n) = (atom(0, "m"), atom(1, "n"));
        let mut phi = PathCond::default();
        phi.assume(Prop::Ge0(m.clone()));
        phi.assume(Prop::Ne0(m.clone()));
        assert_eq!(entails_order(&phi, &m, &SymValue::int(0)), SizeRelation::Unknown);
        assert_eq!(entails_order(&phi, &n, &m), SizeRelation::Unknown);
    }

    #[test]
    fn halving() {
        let n = atom(0, "n");
        let q = SymValue::op(Prim::Quotient, vec![n.clone(), SymValue::int(2)]);
        let rest = SymValue::op(Prim::Sub, vec![n.clone(), q.clone()]);
        let mut phi = PathCond::default();
        phi.assume(Prop::Ge0(n.clone()));
        assert_eq!(entails_order(&phi, &n, &rest), SizeRelation::Unknown);
        phi.assume(Prop::Ne0(n.clone()));
        assert_eq!(entails_order(&phi, &n, &q), SizeRelation::StrictlyLess);
        phi.assume(Prop::Ne0(SymValue::op(Prim::Sub, vec![n.clone(), SymValue::int(1)])));
        assert_eq!(entails_order(&phi, &n, &rest), SizeRelation::StrictlyLess);
    }

    #[test]
    fn shape_lattice() {
        assert_eq!(Shape::Nil.join(Shape::ConsList), Shape::List);
        assert_eq!(Shape::Nil.join(Shape::Pair), Shape::Any);
        assert_eq!(Shape::NonZeroNat.join(Shape::Nat), Shape::Nat);
        assert_eq!(Shape::Bottom.join(Shape::Fn), Shape::Fn);
        for a in SHAPES {
            for b in SHAPES {
                let j = a.join(b);
                assert!(a.leq(j) && b.leq(j));
                assert_eq!(j, b.join(a));
            }
        }
    }
}
