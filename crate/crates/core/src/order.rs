//! The well-founded partial order on values used to decide descent.
//!
//! Integers are ordered by magnitude; a value is below any pair that has a
//! component it is below-or-equal to; `()` is below every pair. Closures and
//! primitives are incomparable to everything.

use crate::value::Value;

/// Outcome of comparing a new argument against an old one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SizeRelation {
    StrictlyLess,
    Equal,
    Unknown,
}

/// A pluggable order for size-change monitoring.
///
/// Implementations must be a strict partial order with no infinite descending
/// chains; the monitor cannot check this and relies on it for termination.
pub trait ValueOrder: Send + Sync {
    /// Strict order `a ≺ b`.
    fn precedes(&self, a: &Value, b: &Value) -> bool;

    /// Relates `new` to `old`; `work` accumulates an abstract cost.
    fn relate(&self, new: &Value, old: &Value, work: &mut u64) -> SizeRelation {
        *work += 1;
        if self.precedes(new, old) {
            SizeRelation::StrictlyLess
        } else if new == old {
            SizeRelation::Equal
        } else {
            SizeRelation::Unknown
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultOrder;

impl ValueOrder for DefaultOrder {
    fn precedes(&self, a: &Value, b: &Value) -> bool {
        let mut work = 0;
        precedes_counted(a, b, &mut work)
    }

    fn relate(&self, new: &Value, old: &Value, work: &mut u64) -> SizeRelation {
        if precedes_counted(new, old, work) {
            SizeRelation::StrictlyLess
        } else {
            *work += 1;
            if new == old {
                SizeRelation::Equal
            } else {
                SizeRelation::Unknown
            }
        }
    }
}

/// `a ≺ b` under the default order.
pub fn precedes(a: &Value, b: &Value) -> bool {
    let mut work = 0;
    precedes_counted(a, b, &mut work)
}

/// `a ⪯ b`: `a ≺ b` or structural equality.
pub fn precedes_eq(a: &Value, b: &Value) -> bool {
    a == b || precedes(a, b)
}

fn precedes_counted(a: &Value, b: &Value, work: &mut u64) -> bool {
    if matches!(a, Value::Prim(_) | Value::Clo(_) | Value::TermClo(..)) {
        return false;
    }
    // a ≺ b iff some node s reachable from b through pair fields satisfies:
    // s is a proper component equal to a, or a and s are integers with
    // |a| < |s|, or a is () and s is a pair.
    let mut stack = vec![b];
    while let Some(s) = stack.pop() {
        *work += 1;
        match s {
            Value::Int(n) => {
                if let Value::Int(m) = a {
                    if m.magnitude() < n.magnitude() {
                        return true;
                    }
                }
            }
            Value::Pair(cell) => {
                if matches!(a, Value::Nil) {
                    return true;
                }
                *work += 2;
                if *a == cell.car || *a == cell.cdr {
                    return true;
                }
                stack.push(&cell.car);
                stack.push(&cell.cdr);
            }
            _ => {}
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prim::Prim;

    fn i(n: i64) -> Value {
        Value::int(n)
    }

    #[test]
    fn integers_by_magnitude() {
        assert!(precedes(&i(3), &i(-5)));
        assert!(!precedes(&i(2), &i(2)));
        assert!(!precedes(&i(-5), &i(3)));
        assert!(precedes_eq(&i(2), &i(2)));
        assert!(precedes_eq(&i(0), &i(1)));
    }

    #[test]
    fn components_below_pairs() {
        let l = Value::cons(i(1), Value::Nil);
        assert!(precedes(&i(1), &l));
        // 0 ≺ 1 ⪯ car
        assert!(precedes(&i(0), &l));
        assert!(precedes(&Value::Nil, &l));
        let l2 = Value::cons(i(2), l.clone());
        assert!(precedes(&l, &l2));
        assert!(!precedes(&l2, &l));
        // no clause puts a pair below an integer
        assert!(!precedes_eq(&l, &i(7)));
        assert!(!precedes(&Value::Nil, &i(3)));
        assert!(!precedes(&i(3), &Value::Nil));
    }

    #[test]
    fn procedures_incomparable() {
        let p = Value::Prim(Prim::Add);
        assert!(!precedes(&p, &Value::cons(p.clone(), Value::Nil)));
        assert!(!precedes(&i(0), &p));
    }

    #[test]
    fn long_lists_do_not_overflow() {
        let long = Value::list((0..200_000).map(Value::int));
        let tail = match &long {
            Value::Pair(c) => c.cdr.clone(),
            _ => unreachable!(),
        };
        assert!(precedes(&tail, &long));
        assert!(!precedes(&long, &tail));
    }
}
