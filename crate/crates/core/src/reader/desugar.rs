//! Elaboration of surface forms into core [`Expr`] programs.

use std::collections::HashMap;
use std::sync::Arc;

use crate::expr::{Assumption, Capture, Expr, Global, Lambda, ParamSort, Program, Var, VarSlot};
use crate::prim::Prim;
use crate::reader::sexp::{Form, FormKind};
use crate::value::{BlameLabel, Label, LamId, Name, SourcePos, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {message}")]
pub struct DesugarError {
    pub pos: SourcePos,
    pub message: String,
}

fn fail<T>(pos: SourcePos, message: impl Into<String>) -> Result<T, DesugarError> {
    Err(DesugarError {
        pos,
        message: message.into(),
    })
}

const SPECIAL: &[&str] = &[
    "define",
    "lambda",
    "λ",
    "\\",
    "let",
    "let*",
    "if",
    "if0",
    "cond",
    "and",
    "or",
    "quote",
    "terminating/c",
    "term/c",
    "assume",
];

struct Scope {
    params: Vec<Name>,
    captures: Vec<Capture>,
}

struct Elaborator<'a> {
    source: Arc<str>,
    globals: &'a HashMap<Name, u32>,
    scopes: Vec<Scope>,
    lambdas: Vec<Arc<Lambda>>,
    labels: Option<&'a HashMap<SourcePos, Label>>,
    positions: Vec<SourcePos>,
}

impl Elaborator<'_> {
    fn resolve_local(&mut self, name: &str, depth: usize) -> Option<u32> {
        let scope = &self.scopes[depth];
        if let Some(i) = scope.params.iter().rposition(|p| &**p == name) {
            return Some(i as u32);
        }
        let arity = scope.params.len();
        if let Some(i) = scope.captures.iter().position(|c| &*c.name == name) {
            return Some((arity + i) as u32);
        }
        if depth == 0 {
            return None;
        }
        let from = self.resolve_local(name, depth - 1)?;
        let scope = &mut self.scopes[depth];
        scope.captures.push(Capture {
            name: Arc::from(name),
            from,
        });
        Some((arity + scope.captures.len() - 1) as u32)
    }

    fn is_local(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| {
            s.params.iter().any(|p| &**p == name) || s.captures.iter().any(|c| &*c.name == name)
        })
    }

    fn variable(&mut self, name: &Name, pos: SourcePos) -> Result<Expr, DesugarError> {
        if !self.scopes.is_empty() {
            if let Some(slot) = self.resolve_local(name, self.scopes.len() - 1) {
                return Ok(Expr::Var(Var {
                    name: name.clone(),
                    slot: VarSlot::Local(slot),
                }));
            }
        }
        if let Some(&idx) = self.globals.get(name) {
            return Ok(Expr::Var(Var {
                name: name.clone(),
                slot: VarSlot::Global(idx),
            }));
        }
        if let Some(p) = Prim::from_name(name) {
            return Ok(Expr::Prim(p));
        }
        if matches!(&**name, "empty" | "null") {
            return Ok(Expr::Lit(Value::Nil));
        }
        if SPECIAL.contains(&&**name) {
            return fail(pos, format!("bad syntax: {name} used as a variable"));
        }
        fail(pos, format!("unbound variable {name}"))
    }

    fn expr(&mut self, f: &Form) -> Result<Expr, DesugarError> {
        match &f.kind {
            FormKind::Int(n) => Ok(Expr::Lit(Value::Int(n.clone()))),
            FormKind::Char(c) => Ok(Expr::Lit(Value::int(*c))),
            FormKind::Bool(b) => Ok(Expr::Lit(Value::bool(*b))),
            FormKind::Str(s) => Ok(Expr::Lit(string_value(s))),
            FormKind::Quote(q) => Ok(Expr::Lit(datum(q)?)),
            FormKind::Sym(name) => self.variable(name, f.pos),
            FormKind::List(items) => {
                let Some(head) = items.first() else {
                    return fail(f.pos, "empty application");
                };
                if let Some(h) = head.sym() {
                    if SPECIAL.contains(&h) && !self.is_local(h) {
                        return self.special(h, f, &items[1..]);
                    }
                }
                let fun = self.expr(head)?;
                let args = items[1..]
                    .iter()
                    .map(|a| self.expr(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Expr::App(Box::new(fun), args))
            }
        }
    }

    fn special(&mut self, head: &str, f: &Form, rest: &[Form]) -> Result<Expr, DesugarError> {
        let pos = f.pos;
        match head {
            "define" | "assume" => fail(pos, format!("{head} is only allowed at top level")),
            "lambda" | "λ" | "\\" => {
                let [params, body] = rest else {
                    return fail(pos, "expected (lambda (param ...) body)");
                };
                let params = param_list(params)?;
                self.lambda(pos, params, body)
            }
            "let" => {
                let [bindings, body] = rest else {
                    return fail(pos, "expected (let ([name expr] ...) body)");
                };
                let bindings = binding_list(bindings)?;
                let args = bindings
                    .iter()
                    .map(|(_, e, _)| self.expr(e))
                    .collect::<Result<Vec<_>, _>>()?;
                let names: Vec<Name> = bindings.iter().map(|(n, _, _)| n.clone()).collect();
                let fun = self.lambda(pos, names, body)?;
                Ok(Expr::App(Box::new(fun), args))
            }
            "let*" => {
                let [bindings, body] = rest else {
                    return fail(pos, "expected (let* ([name expr] ...) body)");
                };
                let bindings = binding_list(bindings)?;
                self.let_star(pos, &bindings, body)
            }
            "if" | "if0" => {
                let [c, t, e] = rest else {
                    return fail(pos, format!("expected ({head} test then else)"));
                };
                Ok(Expr::If0(
                    Box::new(self.expr(c)?),
                    Box::new(self.expr(t)?),
                    Box::new(self.expr(e)?),
                ))
            }
            "cond" => self.cond(rest),
            "and" => self.and_or(true, rest),
            "or" => self.and_or(false, rest),
            "quote" => {
                let [q] = rest else {
                    return fail(pos, "expected (quote datum)");
                };
                Ok(Expr::Lit(datum(q)?))
            }
            "terminating/c" | "term/c" => {
                let (body, tag) = match rest {
                    [body] => (body, None),
                    [body, Form {
                        kind: FormKind::Str(s),
                        ..
                    }] => (body, Some(s.as_str())),
                    _ => return fail(pos, format!("expected ({head} expr [\"label\"])")),
                };
                let blame = BlameLabel::contract(self.source.clone(), pos, tag);
                Ok(Expr::TermC(Box::new(self.expr(body)?), blame))
            }
            _ => unreachable!("unhandled special form {head}"),
        }
    }

    fn let_star(
        &mut self,
        pos: SourcePos,
        bindings: &[(Name, &Form, SourcePos)],
        body: &Form,
    ) -> Result<Expr, DesugarError> {
        match bindings.split_first() {
            None => self.expr(body),
            Some(((name, e, _), rest)) => {
                let arg = self.expr(e)?;
                self.scopes.push(Scope {
                    params: vec![name.clone()],
                    captures: Vec::new(),
                });
                let inner_pos = rest.first().map(|b| b.2);
                let inner = match inner_pos {
                    Some(p) => self.let_star(p, rest, body),
                    None => self.expr(body),
                };
                let scope = self.scopes.pop().expect("scope pushed above");
                let fun = self.finish_lambda(pos, scope, inner?);
                Ok(Expr::App(Box::new(fun), vec![arg]))
            }
        }
    }

    fn cond(&mut self, clauses: &[Form]) -> Result<Expr, DesugarError> {
        let Some((first, rest)) = clauses.split_first() else {
            // Falling off the end of a cond is a run-time error.
            return Ok(Expr::App(
                Box::new(Expr::Prim(Prim::Error)),
                vec![Expr::Lit(string_value("cond: no clause matched"))],
            ));
        };
        let Some([test, body]) = first.list().and_then(|l| <&[Form; 2]>::try_from(l).ok()) else {
            return fail(first.pos, "expected [test expr] clause");
        };
        if test.sym() == Some("else") && !self.is_local("else") {
            if !rest.is_empty() {
                return fail(first.pos, "else clause must be last");
            }
            return self.expr(body);
        }
        Ok(Expr::If0(
            Box::new(self.expr(test)?),
            Box::new(self.expr(body)?),
            Box::new(self.cond(rest)?),
        ))
    }

    fn and_or(&mut self, is_and: bool, args: &[Form]) -> Result<Expr, DesugarError> {
        match args {
            [] => Ok(Expr::Lit(Value::bool(is_and))),
            [only] => self.expr(only),
            [first, rest @ ..] => {
                let test = Box::new(self.expr(first)?);
                let rest = Box::new(self.and_or(is_and, rest)?);
                Ok(if is_and {
                    Expr::If0(test, rest, Box::new(Expr::Lit(Value::bool(false))))
                } else {
                    Expr::If0(test, Box::new(Expr::Lit(Value::bool(true))), rest)
                })
            }
        }
    }

    fn lambda(&mut self, pos: SourcePos, params: Vec<Name>, body: &Form) -> Result<Expr, DesugarError> {
        check_distinct(&params, pos)?;
        self.scopes.push(Scope {
            params,
            captures: Vec::new(),
        });
        let body = self.expr(body);
        let scope = self.scopes.pop().expect("scope pushed above");
        Ok(self.finish_lambda(pos, scope, body?))
    }

    fn finish_lambda(&mut self, pos: SourcePos, scope: Scope, body: Expr) -> Expr {
        let id = LamId(self.lambdas.len() as u32);
        self.positions.push(pos);
        let label = match self.labels {
            Some(labels) => labels[&pos].clone(),
            None => Label(Arc::from("")),
        };
        let lam = Arc::new(Lambda {
            id,
            label,
            pos,
            params: scope.params,
            captures: scope.captures,
            body,
        });
        self.lambdas.push(lam.clone());
        Expr::Lam(lam)
    }
}

fn check_distinct(names: &[Name], pos: SourcePos) -> Result<(), DesugarError> {
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return fail(pos, format!("duplicate parameter {n}"));
        }
    }
    Ok(())
}

fn param_list(f: &Form) -> Result<Vec<Name>, DesugarError> {
    let Some(items) = f.list() else {
        return fail(f.pos, "expected a parameter list");
    };
    items
        .iter()
        .map(|p| match &p.kind {
            FormKind::Sym(s) => Ok(s.clone()),
            _ => fail(p.pos, "parameter must be a symbol"),
        })
        .collect()
}

fn binding_list(f: &Form) -> Result<Vec<(Name, &Form, SourcePos)>, DesugarError> {
    let Some(items) = f.list() else {
        return fail(f.pos, "expected a binding list");
    };
    items
        .iter()
        .map(|b| match b.list() {
            Some([name, e]) => match name.sym() {
                Some(n) => Ok((Arc::from(n), e, b.pos)),
                None => fail(name.pos, "binding name must be a symbol"),
            },
            _ => fail(b.pos, "expected [name expr]"),
        })
        .collect()
}

/// Strings denote lists of character codes.
pub fn string_value(s: &str) -> Value {
    Value::list(s.chars().map(|c| Value::int(c as u32)).collect::<Vec<_>>())
}

/// Converts quoted data to a value. Symbols are not data in this language.
pub fn datum(f: &Form) -> Result<Value, DesugarError> {
    match &f.kind {
        FormKind::Int(n) => Ok(Value::Int(n.clone())),
        FormKind::Char(c) => Ok(Value::int(*c)),
        FormKind::Bool(b) => Ok(Value::bool(*b)),
        FormKind::Str(s) => Ok(string_value(s)),
        FormKind::List(items) => {
            let (elems, tail) = match items.iter().position(|i| i.sym() == Some(".")) {
                Some(dot) if dot + 2 == items.len() && dot > 0 => {
                    (&items[..dot], datum(&items[dot + 1])?)
                }
                Some(_) => return fail(f.pos, "malformed dotted list"),
                None => (&items[..], Value::Nil),
            };
            let mut out = tail;
            for e in elems.iter().rev() {
                out = Value::cons(datum(e)?, out);
            }
            Ok(out)
        }
        FormKind::Sym(s) => fail(f.pos, format!("quoted symbol {s} is not supported")),
        FormKind::Quote(_) => fail(f.pos, "nested quote is not supported"),
    }
}

fn sort(name: &str, pos: SourcePos) -> Result<ParamSort, DesugarError> {
    match name {
        "natural" | "nat" => Ok(ParamSort::Natural),
        "integer" | "int" => Ok(ParamSort::Integer),
        "list" => Ok(ParamSort::List),
        "any" => Ok(ParamSort::Any),
        _ => fail(pos, format!("unknown sort {name}")),
    }
}

fn assumption(f: &Form, globals: &HashMap<Name, u32>) -> Result<Assumption, DesugarError> {
    let rest = &f.list().expect("assume is a list")[1..];
    let Some(sig) = rest.first().and_then(Form::list).filter(|_| rest.len() == 1) else {
        return fail(f.pos, "expected (assume (f (sort x) ...))");
    };
    let Some((fname, params)) = sig.split_first() else {
        return fail(f.pos, "expected (assume (f (sort x) ...))");
    };
    let Some(fname) = fname.sym() else {
        return fail(fname.pos, "expected a function name");
    };
    if !globals.contains_key(fname) {
        return fail(f.pos, format!("assume names unknown function {fname}"));
    }
    let params = params
        .iter()
        .map(|p| match (&p.kind, p.list()) {
            (FormKind::Sym(x), _) => Ok((x.clone(), ParamSort::Any)),
            (_, Some([s, x])) => match (s.sym(), x.sym()) {
                (Some(s), Some(x)) => Ok((Arc::from(x), sort(s, p.pos)?)),
                _ => fail(p.pos, "expected (sort name)"),
            },
            _ => fail(p.pos, "expected (sort name)"),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Assumption {
        function: Arc::from(fname),
        params,
        pos: f.pos,
    })
}

enum TopForm<'a> {
    Define {
        name: Name,
        pos: SourcePos,
        /// `(define (f x ...) body)`: parameters and body.
        function: Option<(Vec<Name>, &'a Form)>,
        value: Option<&'a Form>,
    },
    Assume(&'a Form),
    Expr(&'a Form),
}

fn classify(f: &Form) -> Result<TopForm<'_>, DesugarError> {
    match f.head() {
        Some("define") => {
            let rest = &f.list().expect("head implies list")[1..];
            match rest {
                [target, body] => match &target.kind {
                    FormKind::Sym(name) => Ok(TopForm::Define {
                        name: name.clone(),
                        pos: f.pos,
                        function: None,
                        value: Some(body),
                    }),
                    FormKind::List(sig) => {
                        let Some((name, params)) = sig.split_first() else {
                            return fail(target.pos, "expected (define (name param ...) body)");
                        };
                        let Some(name) = name.sym() else {
                            return fail(name.pos, "function name must be a symbol");
                        };
                        let params = params
                            .iter()
                            .map(|p| match p.sym() {
                                Some(s) => Ok(Arc::from(s)),
                                None => fail(p.pos, "parameter must be a symbol"),
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(TopForm::Define {
                            name: Arc::from(name),
                            pos: f.pos,
                            function: Some((params, body)),
                            value: None,
                        })
                    }
                    _ => fail(target.pos, "expected a name to define"),
                },
                _ => fail(f.pos, "expected (define name expr) or (define (name param ...) body)"),
            }
        }
        Some("assume") => Ok(TopForm::Assume(f)),
        _ => Ok(TopForm::Expr(f)),
    }
}

fn elaborate(
    source: &Arc<str>,
    tops: &[TopForm<'_>],
    globals: &HashMap<Name, u32>,
    labels: Option<&HashMap<SourcePos, Label>>,
) -> Result<(Program, Vec<SourcePos>), DesugarError> {
    let mut el = Elaborator {
        source: source.clone(),
        globals,
        scopes: Vec::new(),
        lambdas: Vec::new(),
        labels,
        positions: Vec::new(),
    };
    let mut program = Program {
        source: source.clone(),
        globals: Vec::new(),
        main: Vec::new(),
        assumptions: Vec::new(),
        lambdas: Vec::new(),
    };
    for top in tops {
        match top {
            TopForm::Define {
                name,
                pos,
                function,
                value,
            } => {
                let expr = match (function, value) {
                    (Some((params, body)), _) => el.lambda(*pos, params.clone(), body)?,
                    (None, Some(v)) => el.expr(v)?,
                    (None, None) => unreachable!(),
                };
                program.globals.push(Global {
                    name: name.clone(),
                    pos: *pos,
                    expr,
                });
            }
            TopForm::Assume(f) => program.assumptions.push(assumption(f, globals)?),
            TopForm::Expr(f) => program.main.push(el.expr(f)?),
        }
    }
    program.lambdas = el.lambdas;
    Ok((program, el.positions))
}

/// Elaborates top-level forms. `source` is the file stem used in `λ` labels
/// and default blame labels.
///
/// A `λ` is labelled `source:line` when it is the only `λ`-introducing form on
/// its line and `source:line:col` otherwise. `lambda`, function `define`,
/// `let` and each `let*` binding introduce a `λ`.
pub fn desugar(source: &str, forms: &[Form]) -> Result<Program, DesugarError> {
    let source: Arc<str> = Arc::from(source);
    let tops = forms.iter().map(classify).collect::<Result<Vec<_>, _>>()?;
    let mut globals = HashMap::new();
    for top in &tops {
        if let TopForm::Define { name, pos, .. } = top {
            if globals.contains_key(name) {
                return fail(*pos, format!("duplicate definition of {name}"));
            }
            let idx = globals.len() as u32;
            globals.insert(name.clone(), idx);
        }
    }
    let (_, positions) = elaborate(&source, &tops, &globals, None)?;
    let mut per_line: HashMap<u32, usize> = HashMap::new();
    for p in &positions {
        *per_line.entry(p.line).or_default() += 1;
    }
    let labels: HashMap<SourcePos, Label> = positions
        .iter()
        .map(|p| {
            let text = if per_line[&p.line] == 1 {
                format!("{source}:{}", p.line)
            } else {
                format!("{source}:{}:{}", p.line, p.col)
            };
            (*p, Label(Arc::from(text)))
        })
        .collect();
    let (program, _) = elaborate(&source, &tops, &globals, Some(&labels))?;
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reader::sexp::read_program;

    fn load(text: &str) -> Result<Program, DesugarError> {
        desugar("t", &read_program(text).unwrap())
    }

    #[test]
    fn function_define() {
        let p = load("(define (id x) x)").unwrap();
        assert_eq!(p.globals.len(), 1);
        let Expr::Lam(lam) = &p.globals[0].expr else {
            panic!("expected a lambda");
        };
        assert_eq!(lam.label.as_str(), "t:1");
        assert_eq!(lam.params.len(), 1);
        assert!(matches!(
            lam.body,
            Expr::Var(Var {
                slot: VarSlot::Local(0),
                ..
            })
        ));
    }

    #[test]
    fn quoted_list_is_literal() {
        let p = load("'(2 1)").unwrap();
        match &p.main[0] {
            Expr::Lit(v) => assert_eq!(*v, Value::list([Value::int(2), Value::int(1)])),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn captures_thread_through_nested_lambdas() {
        let p = load("(define (f a b) (lambda (x) (lambda (y) (+ a y))))").unwrap();
        let outer = p.lambda_by_label("t:1:1").unwrap();
        let Expr::Lam(mid) = &outer.body else { panic!() };
        assert_eq!(mid.captures.len(), 1);
        assert_eq!(mid.captures[0].from, 0);
        let Expr::Lam(inner) = &mid.body else { panic!() };
        assert_eq!(inner.captures.len(), 1);
        // `a` sits after `x` in the middle frame.
        assert_eq!(inner.captures[0].from, 1);
    }

    #[test]
    fn labels_use_column_only_when_needed() {
        let p = load("(define (f x)\n  (lambda (y) y))\n(define g (lambda (z) ((lambda (w) w) z)))").unwrap();
        let mut labels: Vec<&str> = p.lambdas.iter().map(|l| l.label.as_str()).collect();
        labels.sort();
        assert_eq!(labels, ["t:1", "t:2", "t:3:11", "t:3:24"]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = load("(define (f x) y)").unwrap_err();
        assert_eq!(e.pos, SourcePos { line: 1, col: 15 });
        assert!(e.message.contains("unbound"));
        let e = load("(define x 1)\n(define x 2)").unwrap_err();
        assert_eq!(e.pos.line, 2);
        assert!(load("(lambda (x))").is_err());
        assert!(load("(if 1 2)").is_err());
    }

    #[test]
    fn cond_and_or_expand_to_if0() {
        let p = load("(cond [(= 1 2) 3] [else 4])").unwrap();
        assert!(matches!(p.main[0], Expr::If0(..)));
        let p = load("(and 0 1)").unwrap();
        assert!(matches!(p.main[0], Expr::If0(..)));
    }

    #[test]
    fn locals_shadow_globals_and_prims() {
        let p = load("(define (f car) (car 1))").unwrap();
        let Expr::Lam(l) = &p.globals[0].expr else { panic!() };
        let Expr::App(fun, _) = &l.body else { panic!() };
        assert!(matches!(**fun, Expr::Var(Var { slot: VarSlot::Local(0), .. })));
    }

    #[test]
    fn term_c_labels() {
        let p = load("(term/c (lambda (x) x) \"mine\")\n(terminating/c (lambda (x) x))").unwrap();
        match (&p.main[0], &p.main[1]) {
            (Expr::TermC(_, a), Expr::TermC(_, b)) => {
                assert_eq!(a.to_string(), "mine");
                assert_eq!(b.to_string(), "t:2:1");
            }
            _ => panic!(),
        }
    }

    #[test]
    fn assumptions() {
        let p = load("(define (ack m n) 0)\n(assume (ack (natural m) (natural n)))").unwrap();
        let a = p.assumption("ack").unwrap();
        assert_eq!(a.params[1].1, ParamSort::Natural);
        assert!(load("(assume (nope (natural m)))").is_err());
    }
}
