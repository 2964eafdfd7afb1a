//! Symbolic exploration: inlines non-recursive calls, generalizes recursive
//! ones to abstract states keyed by argument shapes, and collects one
//! size-change graph per recursive call site.

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use crate::expr::{Expr, Lambda, Program, VarSlot};
use crate::prim::{self, Prim};
use crate::scgraph::{build_graph, SCGraph};
use crate::value::{LamId, Name, Value};

use super::sym::{
    entails_order, shape_of, Atom, PathCond, Prop, Shape, Sort, SymClosure, SymValue,
};
use super::{CallSite, UnknownReason};

/// Symbolic evaluation steps allowed per pass.
const STEP_BUDGET: u64 = 2_000_000;
/// Passes allowed for return shapes to stabilize.
const MAX_PASSES: usize = 64;

pub(crate) enum Abort {
    Unsupported(String),
    Fuel,
}

impl From<Abort> for UnknownReason {
    fn from(a: Abort) -> Self {
        match a {
            Abort::Unsupported(why) => UnknownReason::Unsupported(why),
            Abort::Fuel => UnknownReason::Fuel,
        }
    }
}

type Outcomes = Vec<(SymValue, PathCond)>;

struct Activation {
    lam: LamId,
    args: Vec<SymValue>,
}

/// A generalized activation: the `λ` plus shapes of its captured values and
/// arguments, and the join of the shapes it may return.
struct AbsState {
    lambda: Arc<Lambda>,
    captured: Vec<Shape>,
    args: Vec<Shape>,
    ret: Shape,
}

#[derive(Clone)]
enum GlobalVal {
    Pending,
    Done(SymValue),
}

pub(crate) struct Exploration {
    pub sites: Vec<CallSite>,
    /// Sites whose graphs miss an arc between terms sharing an atom.
    pub gaps: Vec<bool>,
}

pub(crate) struct Explorer<'p> {
    program: &'p Program,
    fuel: usize,
    next_id: u32,
    globals: Vec<Option<GlobalVal>>,
    states: Vec<AbsState>,
    by_lambda: HashMap<LamId, Vec<usize>>,
    changed: bool,
    steps: u64,
    sites: Vec<CallSite>,
    gaps: Vec<bool>,
}

impl<'p> Explorer<'p> {
    pub fn new(program: &'p Program, fuel: usize) -> Explorer<'p> {
        Explorer {
            program,
            fuel: fuel.max(1),
            next_id: 0,
            globals: vec![None; program.globals.len()],
            states: Vec::new(),
            by_lambda: HashMap::new(),
            changed: false,
            steps: 0,
            sites: Vec::new(),
            gaps: Vec::new(),
        }
    }

    /// The symbolic value of a global, evaluated once.
    pub fn global(&mut self, index: usize) -> Result<SymValue, Abort> {
        match &self.globals[index] {
            Some(GlobalVal::Done(v)) => return Ok(v.clone()),
            Some(GlobalVal::Pending) => return Ok(self.opaque()),
            None => {}
        }
        self.globals[index] = Some(GlobalVal::Pending);
        let expr = &self.program.globals[index].expr;
        let v = match expr {
            Expr::Lam(l) => SymValue::Closure(Rc::new(SymClosure {
                lambda: l.clone(),
                captured: Vec::new(),
            })),
            _ => {
                let mut stack = Vec::new();
                let mut out = self.eval(expr, &[], PathCond::default(), &mut stack)?;
                match (out.len(), out.pop()) {
                    (1, Some((v, _))) => v,
                    _ => self.opaque(),
                }
            }
        };
        self.globals[index] = Some(GlobalVal::Done(v.clone()));
        Ok(v)
    }

    /// Explores `entry` applied to arguments of the given shapes until the
    /// return shapes of all abstract states are stable.
    pub fn explore(
        &mut self,
        entry: &Rc<SymClosure>,
        shapes: &[Shape],
    ) -> Result<Exploration, Abort> {
        for _ in 0..MAX_PASSES {
            self.changed = false;
            self.steps = 0;
            self.sites.clear();
            self.gaps.clear();
            let lam = &entry.lambda;
            let mut phi = PathCond::default();
            let args: Vec<SymValue> = shapes
                .iter()
                .zip(&lam.params)
                .map(|(s, name)| self.fresh(*s, name, &mut phi))
                .collect();
            self.enter(entry, args, phi)?;
            let mut i = 0;
            while i < self.states.len() {
                self.analyze(i)?;
                i += 1;
            }
            if !self.changed {
                return Ok(Exploration {
                    sites: std::mem::take(&mut self.sites),
                    gaps: std::mem::take(&mut self.gaps),
                });
            }
        }
        Err(Abort::Fuel)
    }

    fn analyze(&mut self, index: usize) -> Result<(), Abort> {
        let st = &self.states[index];
        let lambda = st.lambda.clone();
        let (cap_shapes, arg_shapes) = (st.captured.clone(), st.args.clone());
        let mut phi = PathCond::default();
        let captured: Vec<SymValue> = cap_shapes
            .iter()
            .zip(&lambda.captures)
            .map(|(s, c)| self.fresh(*s, &c.name, &mut phi))
            .collect();
        let args: Vec<SymValue> = arg_shapes
            .iter()
            .zip(&lambda.params)
            .map(|(s, name)| self.fresh(*s, name, &mut phi))
            .collect();
        let clo = Rc::new(SymClosure { lambda, captured });
        let outcomes = self.enter(&clo, args, phi)?;
        let ret = outcomes
            .iter()
            .fold(Shape::Bottom, |acc, (v, phi)| acc.join(shape_of(phi, v)));
        let st = &mut self.states[index];
        let joined = st.ret.join(ret);
        if joined != st.ret {
            st.ret = joined;
            self.changed = true;
        }
        Ok(())
    }

    /// Evaluates a closure body with its activation as the only one on the
    /// stack.
    fn enter(
        &mut self,
        clo: &Rc<SymClosure>,
        args: Vec<SymValue>,
        phi: PathCond,
    ) -> Result<Outcomes, Abort> {
        let mut stack = vec![Activation {
            lam: clo.lambda.id,
            args: args.clone(),
        }];
        let mut frame = args;
        frame.extend(clo.captured.iter().cloned());
        self.eval(&clo.lambda.body, &frame, phi, &mut stack)
    }

    fn fresh_id(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id
    }

    fn opaque(&mut self) -> SymValue {
        SymValue::Opaque(self.fresh_id())
    }

    fn atom(&mut self, sort: Sort, name: &Name) -> SymValue {
        SymValue::Atom(Atom {
            id: self.fresh_id(),
            sort,
            name: name.clone(),
        })
    }

    /// A fresh value of the given shape; its facts are added to `phi`.
    fn fresh(&mut self, shape: Shape, name: &Name, phi: &mut PathCond) -> SymValue {
        match shape {
            Shape::Nil => SymValue::Lit(Value::Nil),
            Shape::Fn => self.opaque(),
            Shape::NonZeroNat | Shape::Nat | Shape::Int => {
                let x = self.atom(Sort::Int, name);
                if shape != Shape::Int {
                    phi.assume(Prop::Ge0(x.clone()));
                }
                if shape == Shape::NonZeroNat {
                    phi.assume(Prop::Ne0(x.clone()));
                }
                x
            }
            Shape::ConsList | Shape::List => {
                let x = self.atom(Sort::List, name);
                if shape == Shape::ConsList {
                    phi.assume(Prop::Pair(x.clone()));
                }
                x
            }
            Shape::Pair => {
                let x = self.atom(Sort::Any, name);
                phi.assume(Prop::Pair(x.clone()));
                x
            }
            Shape::Any | Shape::Bottom => self.atom(Sort::Any, name),
        }
    }

    fn tick(&mut self) -> Result<(), Abort> {
        self.steps += 1;
        if self.steps > STEP_BUDGET {
            Err(Abort::Fuel)
        } else {
            Ok(())
        }
    }

    fn eval(
        &mut self,
        expr: &Expr,
        frame: &[SymValue],
        phi: PathCond,
        stack: &mut Vec<Activation>,
    ) -> Result<Outcomes, Abort> {
        self.tick()?;
        match expr {
            Expr::Prim(p) => Ok(vec![(SymValue::Lit(Value::Prim(*p)), phi)]),
            Expr::Lit(v) => Ok(vec![(SymValue::Lit(v.clone()), phi)]),
            Expr::Lam(l) => {
                let captured = l
                    .captures
                    .iter()
                    .map(|c| frame[c.from as usize].clone())
                    .collect();
                let clo = SymClosure {
                    lambda: l.clone(),
                    captured,
                };
                Ok(vec![(SymValue::Closure(Rc::new(clo)), phi)])
            }
            Expr::Var(v) => {
                let val = match v.slot {
                    VarSlot::Local(i) => frame[i as usize].clone(),
                    VarSlot::Global(i) => self.global(i as usize)?,
                };
                Ok(vec![(val, phi)])
            }
            Expr::TermC(e, _) => self.eval(e, frame, phi, stack),
            Expr::If0(c, t, e) => {
                let mut out = Vec::new();
                for (cv, phi) in self.eval(c, frame, phi, stack)? {
                    let (yes, no) = branch(&cv, &phi);
                    if let Some(phi) = yes {
                        out.extend(self.eval(t, frame, phi, stack)?);
                    }
                    if let Some(phi) = no {
                        out.extend(self.eval(e, frame, phi, stack)?);
                    }
                }
                Ok(out)
            }
            Expr::App(f, args) => {
                let mut partial: Vec<(Vec<SymValue>, PathCond)> = self
                    .eval(f, frame, phi, stack)?
                    .into_iter()
                    .map(|(v, phi)| (vec![v], phi))
                    .collect();
                for a in args {
                    let mut next = Vec::new();
                    for (vals, phi) in partial {
                        for (v, phi) in self.eval(a, frame, phi, stack)? {
                            let mut vals = vals.clone();
                            vals.push(v);
                            next.push((vals, phi));
                        }
                    }
                    partial = next;
                }
                let mut out = Vec::new();
                for (mut vals, phi) in partial {
                    let fv = vals.remove(0);
                    out.extend(self.apply(fv, vals, phi, stack)?);
                }
                Ok(out)
            }
        }
    }

    fn apply(
        &mut self,
        f: SymValue,
        args: Vec<SymValue>,
        phi: PathCond,
        stack: &mut Vec<Activation>,
    ) -> Result<Outcomes, Abort> {
        match f {
            SymValue::Lit(Value::Prim(p)) => Ok(apply_prim(p, args, phi)),
            SymValue::Closure(clo) => {
                if clo.lambda.arity() != args.len() {
                    return Ok(Vec::new());
                }
                self.call(&clo, args, phi, stack)
            }
            SymValue::Lit(_) => Ok(Vec::new()),
            SymValue::Atom(a) if a.sort != Sort::Any => Ok(Vec::new()),
            _ => Err(Abort::Unsupported(format!(
                "application of an unknown procedure {f}"
            ))),
        }
    }

    fn call(
        &mut self,
        clo: &Rc<SymClosure>,
        args: Vec<SymValue>,
        mut phi: PathCond,
        stack: &mut Vec<Activation>,
    ) -> Result<Outcomes, Abort> {
        let lam = &clo.lambda;
        let Some(act) = stack.iter().rev().find(|a| a.lam == lam.id) else {
            stack.push(Activation {
                lam: lam.id,
                args: args.clone(),
            });
            let mut frame = args;
            frame.extend(clo.captured.iter().cloned());
            let out = self.eval(&lam.body, &frame, phi, stack);
            stack.pop();
            return out;
        };
        let graph = build_graph(&act.args, &args, |new, old| entails_order(&phi, old, new))
            .expect("arity checked by the caller");
        let gap = has_gap(&phi, &act.args, &args, &graph);
        let caller = stack
            .last()
            .map(|a| self.program.lambda(a.lam).label.clone())
            .unwrap_or_else(|| lam.label.clone());
        self.record(CallSite {
            target: lam.label.clone(),
            caller,
            args: args.iter().map(ToString::to_string).collect(),
            path: phi.props().iter().map(ToString::to_string).collect(),
            graph,
        }, gap);

        let cap: Vec<Shape> = clo.captured.iter().map(|v| shape_of(&phi, v)).collect();
        let arg: Vec<Shape> = args.iter().map(|v| shape_of(&phi, v)).collect();
        let st = self.request(lam, cap, arg);
        let ret = self.states[st].ret;
        if ret == Shape::Bottom {
            return Ok(Vec::new());
        }
        let name: Name = Arc::from(format!("{}#{}", lam.label, st));
        let v = self.fresh(ret, &name, &mut phi);
        Ok(vec![(v, phi)])
    }

    fn record(&mut self, site: CallSite, gap: bool) {
        if let Some(i) = self
            .sites
            .iter()
            .position(|s| s.target == site.target && s.graph == site.graph)
        {
            self.gaps[i] |= gap;
            return;
        }
        self.sites.push(site);
        self.gaps.push(gap);
    }

    /// Finds or creates the abstract state for a recursive call. A state
    /// whose shapes cover the request is reused; past `fuel` states per `λ`
    /// the request is widened to cover every existing state.
    fn request(&mut self, lambda: &Arc<Lambda>, captured: Vec<Shape>, args: Vec<Shape>) -> usize {
        let covers = |st: &AbsState, cap: &[Shape], arg: &[Shape]| {
            cap.iter().zip(&st.captured).all(|(a, b)| a.leq(*b))
                && arg.iter().zip(&st.args).all(|(a, b)| a.leq(*b))
        };
        let ids = self.by_lambda.entry(lambda.id).or_default().clone();
        if let Some(&i) = ids
            .iter()
            .find(|&&i| covers(&self.states[i], &captured, &args))
        {
            return i;
        }
        let (mut cap, mut arg) = (captured, args);
        if ids.len() >= self.fuel {
            for &i in &ids {
                let st = &self.states[i];
                cap = cap.iter().zip(&st.captured).map(|(a, b)| a.join(*b)).collect();
                arg = arg.iter().zip(&st.args).map(|(a, b)| a.join(*b)).collect();
            }
            if let Some(&i) = ids.iter().find(|&&i| covers(&self.states[i], &cap, &arg)) {
                return i;
            }
        }
        self.states.push(AbsState {
            lambda: lambda.clone(),
            captured: cap,
            args: arg,
            ret: Shape::Bottom,
        });
        self.changed = true;
        let i = self.states.len() - 1;
        self.by_lambda.entry(lambda.id).or_default().push(i);
        i
    }
}

/// Whether some missing arc relates integer terms that share an atom but
/// fall outside the linear rules, so that a stronger entailment engine might
/// have found it.
fn has_gap(phi: &PathCond, old: &[SymValue], new: &[SymValue], g: &SCGraph) -> bool {
    old.iter().enumerate().any(|(i, o)| {
        new.iter().enumerate().any(|(j, n)| {
            if g.get(i, j).is_some() || !(phi.is_int(o) || phi.is_int(n)) {
                return false;
            }
            if phi.linear(o).is_some() && phi.linear(n).is_some() {
                return false;
            }
            let (mut a, mut b) = (Default::default(), Default::default());
            o.atoms(&mut a);
            n.atoms(&mut b);
            !a.is_disjoint(&b)
        })
    })
}

/// Path conditions for the zero and non-zero outcomes of a test, `None`
/// where the outcome is impossible.
fn branch(c: &SymValue, phi: &PathCond) -> (Option<PathCond>, Option<PathCond>) {
    match c {
        SymValue::Lit(v) => {
            if v.is_zero() {
                (Some(phi.clone()), None)
            } else {
                (None, Some(phi.clone()))
            }
        }
        SymValue::Closure(_) | SymValue::Opaque(_) => (None, Some(phi.clone())),
        _ => {
            let mut yes = phi.clone();
            let mut no = phi.clone();
            let ok_yes = assume_truth(&mut yes, c, true);
            let ok_no = assume_truth(&mut no, c, false);
            (ok_yes.then_some(yes), ok_no.then_some(no))
        }
    }
}

/// Adds the facts implied by `c` evaluating to zero (`zero`) or not.
fn assume_truth(phi: &mut PathCond, c: &SymValue, zero: bool) -> bool {
    let diff = |a: &SymValue, b: &SymValue| SymValue::op(Prim::Sub, vec![a.clone(), b.clone()]);
    let one = SymValue::int(1);
    match c {
        SymValue::Op(Prim::Not, a) => assume_truth(phi, &a[0], !zero),
        SymValue::Op(Prim::IsEmpty | Prim::IsCons, a) => {
            let t = &a[0];
            let pair = matches!(c, SymValue::Op(Prim::IsCons, _)) == zero;
            if pair {
                phi.assume(Prop::Pair(t.clone()))
            } else if zero || phi.is_listish(t) {
                phi.assume(Prop::Nil(t.clone()))
            } else {
                true
            }
        }
        SymValue::Op(Prim::IsZero, a) => {
            if zero {
                phi.assume(Prop::Eq0(a[0].clone()))
            } else {
                phi.assume(Prop::Ne0(a[0].clone()))
            }
        }
        SymValue::Op(Prim::NumEq, a) => {
            let d = diff(&a[0], &a[1]);
            if zero {
                phi.assume(Prop::Eq0(d))
            } else {
                phi.assume(Prop::Ne0(d))
            }
        }
        SymValue::Op(p @ (Prim::Lt | Prim::Gt | Prim::Le | Prim::Ge), a) => {
            // a < b ⟺ b - a - 1 ≥ 0; a ≤ b ⟺ b - a ≥ 0
            let (lo, hi) = match p {
                Prim::Lt | Prim::Le => (&a[0], &a[1]),
                _ => (&a[1], &a[0]),
            };
            let strict = matches!(p, Prim::Lt | Prim::Gt);
            let prop = match (zero, strict) {
                (true, true) => diff(&diff(hi, lo), &one),
                (true, false) => diff(hi, lo),
                (false, true) => diff(lo, hi),
                (false, false) => diff(&diff(lo, hi), &one),
            };
            phi.assume(Prop::Ge0(prop))
        }
        _ => {
            if zero {
                phi.assume(Prop::Eq0(c.clone()))
            } else {
                phi.assume(Prop::Ne0(c.clone()))
            }
        }
    }
}

fn all_lits(args: &[SymValue]) -> Option<Vec<Value>> {
    args.iter()
        .map(|a| match a {
            SymValue::Lit(v) => Some(v.clone()),
            _ => None,
        })
        .collect()
}

/// Requires an integer argument; `false` when it cannot be one.
fn want_int(phi: &mut PathCond, a: &SymValue) -> bool {
    match a {
        SymValue::Lit(v) => v.as_int().is_some(),
        SymValue::Atom(at) => match at.sort {
            Sort::Int => true,
            Sort::List => false,
            Sort::Any => {
                if phi.pair_fact(a) == Some(true) {
                    return false;
                }
                phi.mark_int(a);
                true
            }
        },
        SymValue::Op(Prim::Cons, _) | SymValue::Closure(_) | SymValue::Opaque(_) => false,
        _ => phi.pair_fact(a) != Some(true),
    }
}

fn apply_prim(p: Prim, args: Vec<SymValue>, mut phi: PathCond) -> Outcomes {
    if !p.arity().accepts(args.len()) || p == Prim::Error {
        return Vec::new();
    }
    if let Some(vals) = all_lits(&args) {
        return match prim::apply(p, &vals) {
            Ok((v, _)) => vec![(SymValue::Lit(v), phi)],
            Err(_) => Vec::new(),
        };
    }
    let bool_lit = |b: bool| SymValue::Lit(Value::bool(b));
    let v = match p {
        Prim::Add | Prim::Sub | Prim::Mul | Prim::Quotient | Prim::Remainder => {
            if !args.iter().all(|a| want_int(&mut phi, a)) {
                return Vec::new();
            }
            if matches!(p, Prim::Quotient | Prim::Remainder) && !phi.assume(Prop::Ne0(args[1].clone())) {
                return Vec::new();
            }
            SymValue::op(p, args)
        }
        Prim::NumEq | Prim::Lt | Prim::Gt | Prim::Le | Prim::Ge | Prim::IsZero => {
            if !args.iter().all(|a| want_int(&mut phi, a)) {
                return Vec::new();
            }
            let test = SymValue::op(p, args);
            let (yes, no) = branch(&test, &phi);
            match (yes, no) {
                (Some(_), None) => bool_lit(true),
                (None, Some(_)) => bool_lit(false),
                (None, None) => return Vec::new(),
                _ => test,
            }
        }
        Prim::Not => match &args[0] {
            SymValue::Closure(_) | SymValue::Opaque(_) => bool_lit(true),
            _ => SymValue::op(p, args),
        },
        Prim::IsEmpty | Prim::IsCons => match phi.pair_fact(&args[0]) {
            Some(pair) => match (p, &args[0]) {
                (Prim::IsEmpty, SymValue::Lit(Value::Nil)) => bool_lit(true),
                (Prim::IsEmpty, _) if pair => bool_lit(false),
                (Prim::IsCons, _) => bool_lit(pair),
                _ => SymValue::op(p, args),
            },
            None => SymValue::op(p, args),
        },
        Prim::Cons => SymValue::op(p, args),
        Prim::List => args.into_iter().rev().fold(SymValue::Lit(Value::Nil), |tail, head| {
            SymValue::op(Prim::Cons, vec![head, tail])
        }),
        Prim::Car | Prim::Cdr => {
            let t = &args[0];
            if let SymValue::Op(Prim::Cons, parts) = t {
                let i = usize::from(p == Prim::Cdr);
                return vec![(parts[i].clone(), phi)];
            }
            if !phi.assume(Prop::Pair(t.clone())) {
                return Vec::new();
            }
            SymValue::op(p, args)
        }
        Prim::Error => unreachable!("handled above"),
    };
    vec![(v, phi)]
}

/// Shapes of a precondition's declared sorts.
pub(crate) fn sort_shape(sort: crate::expr::ParamSort) -> Shape {
    use crate::expr::ParamSort;
    match sort {
        ParamSort::Natural => Shape::Nat,
        ParamSort::Integer => Shape::Int,
        ParamSort::List => Shape::List,
        ParamSort::Any => Shape::Any,
    }
}
