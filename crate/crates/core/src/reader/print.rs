use std::fmt::{self, Write};

use crate::value::Value;

/// Renders a value. Data print as s-expressions that read back as the same
/// quoted literal; procedures print as `#<closure:label>`,
/// `#<term/c:label>` or `#<primitive:name>`.
pub fn print_value(v: &Value) -> String {
    v.to_string()
}

fn write_value(v: &Value, f: &mut impl Write) -> fmt::Result {
    match v {
        Value::Int(n) => write!(f, "{n}"),
        Value::Nil => f.write_str("()"),
        Value::Prim(p) => write!(f, "#<primitive:{p}>"),
        Value::Clo(c) => write!(f, "#<closure:{}>", c.label()),
        Value::TermClo(c, _) => write!(f, "#<term/c:{}>", c.label()),
        Value::Pair(_) => {
            f.write_char('(')?;
            let mut cur = v;
            let mut first = true;
            loop {
                match cur {
                    Value::Pair(cell) => {
                        if !first {
                            f.write_char(' ')?;
                        }
                        first = false;
                        write_value(&cell.car, f)?;
                        cur = &cell.cdr;
                    }
                    Value::Nil => break,
                    other => {
                        f.write_str(" . ")?;
                        write_value(other, f)?;
                        break;
                    }
                }
            }
            f.write_char(')')
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_value(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prim::Prim;

    #[test]
    fn data() {
        assert_eq!(print_value(&Value::int(3)), "3");
        assert_eq!(print_value(&Value::list([Value::int(2), Value::int(1)])), "(2 1)");
        assert_eq!(print_value(&Value::Nil), "()");
        assert_eq!(
            print_value(&Value::cons(Value::int(1), Value::int(-2))),
            "(1 . -2)"
        );
        assert_eq!(
            print_value(&Value::list([Value::Nil, Value::list([Value::int(4)])])),
            "(() (4))"
        );
        assert_eq!(print_value(&Value::Prim(Prim::Add)), "#<primitive:+>");
    }
}
