//! The primitive whitelist. Every primitive is total or fails with a
//! run-time error, so primitive applications never touch the size-change
//! table.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::value::{limbs, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Quotient,
    Remainder,
    NumEq,
    Lt,
    Gt,
    Le,
    Ge,
    Cons,
    Car,
    Cdr,
    IsEmpty,
    IsCons,
    IsZero,
    Not,
    List,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Exactly(k) => write!(f, "{k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
        }
    }
}

const NAMES: &[(&str, Prim)] = &[
    ("+", Prim::Add),
    ("-", Prim::Sub),
    ("*", Prim::Mul),
    ("quotient", Prim::Quotient),
    ("remainder", Prim::Remainder),
    ("=", Prim::NumEq),
    ("char=?", Prim::NumEq),
    ("<", Prim::Lt),
    (">", Prim::Gt),
    ("<=", Prim::Le),
    (">=", Prim::Ge),
    ("cons", Prim::Cons),
    ("car", Prim::Car),
    ("first", Prim::Car),
    ("cdr", Prim::Cdr),
    ("rest", Prim::Cdr),
    ("empty?", Prim::IsEmpty),
    ("null?", Prim::IsEmpty),
    ("cons?", Prim::IsCons),
    ("pair?", Prim::IsCons),
    ("zero?", Prim::IsZero),
    ("not", Prim::Not),
    ("list", Prim::List),
    ("error", Prim::Error),
];

impl Prim {
    pub fn from_name(name: &str) -> Option<Prim> {
        NAMES.iter().find(|(n, _)| *n == name).map(|&(_, p)| p)
    }

    /// Canonical surface name.
    pub fn name(self) -> &'static str {
        NAMES.iter().find(|(_, p)| *p == self).map(|(n, _)| *n).unwrap()
    }

    pub fn arity(self) -> Arity {
        use Prim::*;
        match self {
            Add | Mul | List => Arity::AtLeast(0),
            Sub => Arity::AtLeast(1),
            Error => Arity::AtLeast(0),
            Car | Cdr | IsEmpty | IsCons | IsZero | Not => Arity::Exactly(1),
            Quotient | Remainder | NumEq | Lt | Gt | Le | Ge | Cons => Arity::Exactly(2),
        }
    }

    /// Predicates answer 0 for true and 1 for false.
    pub fn is_predicate(self) -> bool {
        use Prim::*;
        matches!(
            self,
            NumEq | Lt | Gt | Le | Ge | IsEmpty | IsCons | IsZero | Not
        )
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrimErrorKind {
    Arity,
    Domain,
    User,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{prim}: {message}")]
pub struct PrimError {
    pub prim: Prim,
    pub kind: PrimErrorKind,
    pub message: String,
}

fn domain(prim: Prim, message: impl Into<String>) -> PrimError {
    PrimError {
        prim,
        kind: PrimErrorKind::Domain,
        message: message.into(),
    }
}

fn ints(prim: Prim, args: &[Value]) -> Result<Vec<&BigInt>, PrimError> {
    args.iter()
        .map(|a| {
            a.as_int()
                .ok_or_else(|| domain(prim, "expects integer arguments"))
        })
        .collect()
}

/// Applies a primitive. Returns the result and the amount of work done,
/// measured in integer limbs touched (at least one unit).
pub fn apply(prim: Prim, args: &[Value]) -> Result<(Value, u64), PrimError> {
    if !prim.arity().accepts(args.len()) {
        return Err(PrimError {
            prim,
            kind: PrimErrorKind::Arity,
            message: format!("expects {} arguments, got {}", prim.arity(), args.len()),
        });
    }
    use Prim::*;
    let out = match prim {
        Add => {
            let xs = ints(prim, args)?;
            let work = xs.iter().map(|x| limbs(x)).sum::<u64>();
            let sum = xs.into_iter().fold(BigInt::zero(), |acc, x| acc + x);
            (Value::Int(sum), work)
        }
        Sub => {
            let xs = ints(prim, args)?;
            let work = xs.iter().map(|x| limbs(x)).sum::<u64>();
            let v = if xs.len() == 1 {
                -xs[0]
            } else {
                xs[1..].iter().fold(xs[0].clone(), |acc, x| acc - *x)
            };
            (Value::Int(v), work)
        }
        Mul => {
            let xs = ints(prim, args)?;
            let mut work = 0u64;
            let mut acc = BigInt::one();
            for x in xs {
                work += limbs(&acc) * limbs(x);
                acc *= x;
            }
            (Value::Int(acc), work)
        }
        Quotient | Remainder => {
            let xs = ints(prim, args)?;
            if xs[1].is_zero() {
                return Err(domain(prim, "division by zero"));
            }
            let work = limbs(xs[0]) * limbs(xs[1]);
            // Truncating division, matching Scheme's quotient/remainder.
            let (q, r) = xs[0].div_rem(xs[1]);
            (Value::Int(if prim == Quotient { q } else { r }), work)
        }
        NumEq | Lt | Gt | Le | Ge => {
            let xs = ints(prim, args)?;
            let work = limbs(xs[0]).max(limbs(xs[1]));
            let r = match prim {
                NumEq => xs[0] == xs[1],
                Lt => xs[0] < xs[1],
                Gt => xs[0] > xs[1],
                Le => xs[0] <= xs[1],
                _ => xs[0] >= xs[1],
            };
            (Value::bool(r), work)
        }
        Cons => (Value::cons(args[0].clone(), args[1].clone()), 1),
        Car | Cdr => match &args[0] {
            Value::Pair(cell) => (
                if prim == Car {
                    cell.car.clone()
                } else {
                    cell.cdr.clone()
                },
                1,
            ),
            _ => return Err(domain(prim, "expects a pair")),
        },
        IsEmpty => (Value::bool(matches!(args[0], Value::Nil)), 1),
        IsCons => (Value::bool(matches!(args[0], Value::Pair(_))), 1),
        IsZero => match &args[0] {
            Value::Int(n) => (Value::bool(n.is_zero()), 1),
            _ => return Err(domain(prim, "expects an integer")),
        },
        Not => (Value::bool(!args[0].is_zero()), 1),
        List => (Value::list(args.iter().cloned()), args.len().max(1) as u64),
        Error => {
            let shown: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            return Err(PrimError {
                prim,
                kind: PrimErrorKind::User,
                message: shown.join(" "),
            });
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: Prim, args: &[i64]) -> Result<Value, PrimError> {
        let args: Vec<Value> = args.iter().map(|&n| Value::int(n)).collect();
        apply(p, &args).map(|(v, _)| v)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(run(Prim::Add, &[1, 2]).unwrap(), Value::int(3));
        assert_eq!(run(Prim::Add, &[]).unwrap(), Value::int(0));
        assert_eq!(run(Prim::Sub, &[5]).unwrap(), Value::int(-5));
        assert_eq!(run(Prim::Sub, &[5, 2, 1]).unwrap(), Value::int(2));
        assert_eq!(run(Prim::Mul, &[3, 4]).unwrap(), Value::int(12));
        assert_eq!(run(Prim::Quotient, &[-7, 2]).unwrap(), Value::int(-3));
        assert_eq!(run(Prim::Remainder, &[-7, 2]).unwrap(), Value::int(-1));
    }

    #[test]
    fn predicates_use_zero_for_true() {
        assert_eq!(run(Prim::NumEq, &[2, 2]).unwrap(), Value::int(0));
        assert_eq!(run(Prim::Lt, &[3, 2]).unwrap(), Value::int(1));
        assert_eq!(run(Prim::IsZero, &[0]).unwrap(), Value::int(0));
        assert_eq!(run(Prim::Not, &[0]).unwrap(), Value::int(1));
        assert_eq!(run(Prim::Not, &[1]).unwrap(), Value::int(0));
    }

    #[test]
    fn domain_and_arity_errors() {
        let e = run(Prim::Quotient, &[1, 0]).unwrap_err();
        assert_eq!(e.kind, PrimErrorKind::Domain);
        let e = run(Prim::Car, &[1]).unwrap_err();
        assert_eq!(e.kind, PrimErrorKind::Domain);
        let e = run(Prim::Cons, &[1]).unwrap_err();
        assert_eq!(e.kind, PrimErrorKind::Arity);
        let e = apply(Prim::Add, &[Value::Nil]).unwrap_err();
        assert_eq!(e.kind, PrimErrorKind::Domain);
    }

    #[test]
    fn list_predicates() {
        let l = Value::list([Value::int(1)]);
        assert_eq!(apply(Prim::IsCons, std::slice::from_ref(&l)).unwrap().0, Value::int(0));
        assert_eq!(apply(Prim::IsEmpty, &[l]).unwrap().0, Value::int(1));
        assert_eq!(apply(Prim::IsEmpty, &[Value::Nil]).unwrap().0, Value::int(0));
    }

    #[test]
    fn names_round_trip() {
        for p in [Prim::Add, Prim::Car, Prim::IsEmpty, Prim::Error] {
            assert_eq!(Prim::from_name(p.name()), Some(p));
        }
        assert_eq!(Prim::from_name("null?"), Some(Prim::IsEmpty));
        assert_eq!(Prim::from_name("frob"), None);
    }
}
