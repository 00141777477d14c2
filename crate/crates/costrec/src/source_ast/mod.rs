//! Source language: types, shape functors, expressions and runtime values.
//!
//! Inductive types are written `mu t. F` where `F` is a [`Shape`]; the
//! recursion variable is a dedicated node rather than an ordinary type
//! variable, so substituting into a shape can never capture anything.

mod parser;
mod pretty;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

pub use parser::{parse_expr, parse_expr_in, parse_program, parse_type, Decl, ParseError, Program, Span, TypeDecl};
pub use pretty::{pretty_expr, pretty_program, pretty_type, pretty_value, value_to_expr, TypeNames};

/// Source-language types.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SrcType {
    Var(String),
    Unit,
    Prod(Box<SrcType>, Box<SrcType>),
    Sum(Box<SrcType>, Box<SrcType>),
    Arrow(Box<SrcType>, Box<SrcType>),
    Susp(Box<SrcType>),
    Mu(Rc<Shape>),
}

/// Shape functors: the body `F` of `mu t. F`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Shape {
    T,
    Const(SrcType),
    Prod(Box<Shape>, Box<Shape>),
    Sum(Box<Shape>, Box<Shape>),
    /// `σ -> F`; the domain never mentions `t`.
    Arrow(SrcType, Box<Shape>),
}

/// A prenex type scheme `∀ᾱ. σ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypeScheme {
    pub vars: Vec<String>,
    pub body: SrcType,
}

impl SrcType {
    pub fn var(name: &str) -> Self {
        SrcType::Var(name.to_string())
    }
    pub fn prod(a: SrcType, b: SrcType) -> Self {
        SrcType::Prod(Box::new(a), Box::new(b))
    }
    pub fn sum(a: SrcType, b: SrcType) -> Self {
        SrcType::Sum(Box::new(a), Box::new(b))
    }
    pub fn arrow(a: SrcType, b: SrcType) -> Self {
        SrcType::Arrow(Box::new(a), Box::new(b))
    }
    pub fn susp(a: SrcType) -> Self {
        SrcType::Susp(Box::new(a))
    }
    pub fn mu(f: Shape) -> Self {
        SrcType::Mu(Rc::new(f))
    }

    pub fn bool() -> Self {
        SrcType::sum(SrcType::Unit, SrcType::Unit)
    }
    pub fn order() -> Self {
        SrcType::sum(SrcType::bool(), SrcType::Unit)
    }
    pub fn nat() -> Self {
        SrcType::mu(Shape::sum(Shape::Const(SrcType::Unit), Shape::T))
    }
    pub fn list(elem: SrcType) -> Self {
        SrcType::mu(Shape::sum(Shape::Const(SrcType::Unit), Shape::prod(Shape::Const(elem), Shape::T)))
    }
    pub fn tree(elem: SrcType) -> Self {
        SrcType::mu(Shape::sum(
            Shape::Const(SrcType::Unit),
            Shape::prod(Shape::Const(elem), Shape::prod(Shape::T, Shape::T)),
        ))
    }

    /// The shape functor of an inductive type.
    pub fn as_mu(&self) -> Option<&Shape> {
        match self {
            SrcType::Mu(f) => Some(f),
            _ => None,
        }
    }

    /// `F[δ]` for an inductive `δ = mu t. F`.
    pub fn unfold(&self) -> Option<SrcType> {
        self.as_mu().map(|f| subst_shape(f, self))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            SrcType::Var(a) => {
                out.insert(a.clone());
            }
            SrcType::Unit => {}
            SrcType::Prod(a, b) | SrcType::Sum(a, b) | SrcType::Arrow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            SrcType::Susp(a) => a.collect_vars(out),
            SrcType::Mu(f) => f.collect_vars(out),
        }
    }

    /// Simultaneous substitution of types for type variables.
    pub fn subst(&self, map: &BTreeMap<String, SrcType>) -> SrcType {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            SrcType::Var(a) => map.get(a).cloned().unwrap_or_else(|| self.clone()),
            SrcType::Unit => SrcType::Unit,
            SrcType::Prod(a, b) => SrcType::prod(a.subst(map), b.subst(map)),
            SrcType::Sum(a, b) => SrcType::sum(a.subst(map), b.subst(map)),
            SrcType::Arrow(a, b) => SrcType::arrow(a.subst(map), b.subst(map)),
            SrcType::Susp(a) => SrcType::susp(a.subst(map)),
            SrcType::Mu(f) => SrcType::mu(f.subst_vars(map)),
        }
    }

    pub fn subst_one(&self, var: &str, ty: &SrcType) -> SrcType {
        let mut map = BTreeMap::new();
        map.insert(var.to_string(), ty.clone());
        self.subst(&map)
    }

    /// First-order types: no arrows or suspensions anywhere, including inside
    /// datatypes.
    pub fn is_observable(&self) -> bool {
        match self {
            SrcType::Var(_) | SrcType::Unit => true,
            SrcType::Prod(a, b) | SrcType::Sum(a, b) => a.is_observable() && b.is_observable(),
            SrcType::Arrow(..) | SrcType::Susp(_) => false,
            SrcType::Mu(f) => f.is_observable(),
        }
    }
}

impl Shape {
    pub fn prod(a: Shape, b: Shape) -> Self {
        Shape::Prod(Box::new(a), Box::new(b))
    }
    pub fn sum(a: Shape, b: Shape) -> Self {
        Shape::Sum(Box::new(a), Box::new(b))
    }
    pub fn arrow(dom: SrcType, body: Shape) -> Self {
        Shape::Arrow(dom, Box::new(body))
    }

    pub fn mentions_t(&self) -> bool {
        match self {
            Shape::T => true,
            Shape::Const(_) => false,
            Shape::Prod(a, b) | Shape::Sum(a, b) => a.mentions_t() || b.mentions_t(),
            Shape::Arrow(_, b) => b.mentions_t(),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Shape::T => {}
            Shape::Const(s) => s.collect_vars(out),
            Shape::Prod(a, b) | Shape::Sum(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Shape::Arrow(d, b) => {
                d.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn subst_vars(&self, map: &BTreeMap<String, SrcType>) -> Shape {
        match self {
            Shape::T => Shape::T,
            Shape::Const(s) => Shape::Const(s.subst(map)),
            Shape::Prod(a, b) => Shape::prod(a.subst_vars(map), b.subst_vars(map)),
            Shape::Sum(a, b) => Shape::sum(a.subst_vars(map), b.subst_vars(map)),
            Shape::Arrow(d, b) => Shape::arrow(d.subst(map), b.subst_vars(map)),
        }
    }

    fn is_observable(&self) -> bool {
        match self {
            Shape::T => true,
            Shape::Const(s) => s.is_observable(),
            Shape::Prod(a, b) | Shape::Sum(a, b) => a.is_observable() && b.is_observable(),
            Shape::Arrow(..) => false,
        }
    }

    /// Reads a type as a shape, turning occurrences of the variable `t`
    /// into the recursion node. Fails if `t` occurs somewhere the shape
    /// grammar does not allow it.
    pub fn from_type(ty: &SrcType, t: &str) -> Result<Shape, String> {
        if !ty.free_vars().contains(t) {
            return Ok(Shape::Const(ty.clone()));
        }
        match ty {
            SrcType::Var(a) if a == t => Ok(Shape::T),
            SrcType::Prod(a, b) => Ok(Shape::prod(Shape::from_type(a, t)?, Shape::from_type(b, t)?)),
            SrcType::Sum(a, b) => Ok(Shape::sum(Shape::from_type(a, t)?, Shape::from_type(b, t)?)),
            SrcType::Arrow(d, b) => {
                if d.free_vars().contains(t) {
                    return Err(format!("recursion variable `{t}` may not occur in a function domain"));
                }
                Ok(Shape::arrow((**d).clone(), Shape::from_type(b, t)?))
            }
            SrcType::Mu(_) => Err(format!("nested inductive type refers to the outer recursion variable `{t}`")),
            SrcType::Susp(_) => Err(format!("recursion variable `{t}` may not occur under susp")),
            SrcType::Var(_) | SrcType::Unit => unreachable!("no occurrence of t"),
        }
    }
}

/// `F[σ]`: replace the recursion node of `F` by `σ`.
pub fn subst_shape(f: &Shape, ty: &SrcType) -> SrcType {
    match f {
        Shape::T => ty.clone(),
        Shape::Const(s) => s.clone(),
        Shape::Prod(a, b) => SrcType::prod(subst_shape(a, ty), subst_shape(b, ty)),
        Shape::Sum(a, b) => SrcType::sum(subst_shape(a, ty), subst_shape(b, ty)),
        Shape::Arrow(d, b) => SrcType::arrow(d.clone(), subst_shape(b, ty)),
    }
}

impl TypeScheme {
    pub fn mono(body: SrcType) -> Self {
        TypeScheme { vars: Vec::new(), body }
    }

    pub fn instantiate(&self, args: &[SrcType]) -> Option<SrcType> {
        if args.len() != self.vars.len() {
            return None;
        }
        let map: BTreeMap<String, SrcType> = self.vars.iter().cloned().zip(args.iter().cloned()).collect();
        Some(self.body.subst(&map))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut fv = self.body.free_vars();
        for v in &self.vars {
            fv.remove(v);
        }
        fv
    }
}

/// Expressions. Children are reference counted so closures can share code.
#[derive(Clone, PartialEq, Debug)]
pub enum Expr {
    /// A variable, optionally with an explicit instantiation `x[σ, ...]`.
    Var(String, Option<Vec<SrcType>>),
    Unit,
    Pair(Rc<Expr>, Rc<Expr>),
    Proj(u8, Rc<Expr>),
    /// `inj_i` annotated with the full sum type.
    Inj(u8, SrcType, Rc<Expr>),
    Case(Rc<Expr>, String, Rc<Expr>, String, Rc<Expr>),
    Lam(String, SrcType, Rc<Expr>),
    App(Rc<Expr>, Rc<Expr>),
    Delay(Rc<Expr>),
    Force(Rc<Expr>),
    Cons(SrcType, Rc<Expr>),
    Dest(SrcType, Rc<Expr>),
    Fold {
        ty: SrcType,
        scrut: Rc<Expr>,
        binder: String,
        body: Rc<Expr>,
        result: SrcType,
    },
    Let(String, Rc<Expr>, Rc<Expr>),
    /// `map_F(y.v', e)`: produced only while evaluating folds over arrow shapes.
    Map {
        shape: Shape,
        binder: String,
        fun: Value,
        arg: Rc<Expr>,
    },
    /// `mapv_F(y.v', v)`.
    MapV {
        shape: Shape,
        binder: String,
        fun: Value,
        arg: Value,
    },
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string(), None)
    }

    /// True if no `map`/`mapv` node occurs.
    pub fn is_core(&self) -> bool {
        match self {
            Expr::Var(..) | Expr::Unit => true,
            Expr::Pair(a, b) | Expr::App(a, b) | Expr::Let(_, a, b) => a.is_core() && b.is_core(),
            Expr::Proj(_, e)
            | Expr::Inj(_, _, e)
            | Expr::Lam(_, _, e)
            | Expr::Delay(e)
            | Expr::Force(e)
            | Expr::Cons(_, e)
            | Expr::Dest(_, e) => e.is_core(),
            Expr::Case(e, _, a, _, b) => e.is_core() && a.is_core() && b.is_core(),
            Expr::Fold { scrut, body, .. } => scrut.is_core() && body.is_core(),
            Expr::Map { .. } | Expr::MapV { .. } => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let under = |bound: &mut Vec<String>, out: &mut BTreeSet<String>, x: &str, e: &Expr| {
            bound.push(x.to_string());
            e.collect_free(bound, out);
            bound.pop();
        };
        match self {
            Expr::Var(x, _) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Expr::Unit => {}
            Expr::Pair(a, b) | Expr::App(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::Proj(_, e)
            | Expr::Inj(_, _, e)
            | Expr::Delay(e)
            | Expr::Force(e)
            | Expr::Cons(_, e)
            | Expr::Dest(_, e) => e.collect_free(bound, out),
            Expr::Lam(x, _, e) => under(bound, out, x, e),
            Expr::Case(e, x0, e0, x1, e1) => {
                e.collect_free(bound, out);
                under(bound, out, x0, e0);
                under(bound, out, x1, e1);
            }
            Expr::Fold { scrut, binder, body, .. } => {
                scrut.collect_free(bound, out);
                under(bound, out, binder, body);
            }
            Expr::Let(x, e0, e1) => {
                e0.collect_free(bound, out);
                under(bound, out, x, e1);
            }
            Expr::Map { binder, fun, arg, .. } => {
                arg.collect_free(bound, out);
                bound.push(binder.clone());
                fun.collect_free(bound, out);
                bound.pop();
            }
            Expr::MapV { binder, fun, arg, .. } => {
                arg.collect_free(bound, out);
                bound.push(binder.clone());
                fun.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every identifier mentioned anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(x, _) => {
                out.insert(x.clone());
            }
            Expr::Unit => {}
            Expr::Pair(a, b) | Expr::App(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Expr::Proj(_, e)
            | Expr::Inj(_, _, e)
            | Expr::Delay(e)
            | Expr::Force(e)
            | Expr::Cons(_, e)
            | Expr::Dest(_, e) => e.all_names(out),
            Expr::Lam(x, _, e) => {
                out.insert(x.clone());
                e.all_names(out);
            }
            Expr::Case(e, x0, e0, x1, e1) => {
                e.all_names(out);
                out.insert(x0.clone());
                out.insert(x1.clone());
                e0.all_names(out);
                e1.all_names(out);
            }
            Expr::Fold { scrut, binder, body, .. } => {
                scrut.all_names(out);
                out.insert(binder.clone());
                body.all_names(out);
            }
            Expr::Let(x, e0, e1) => {
                out.insert(x.clone());
                e0.all_names(out);
                e1.all_names(out);
            }
            Expr::Map { binder, arg, .. } => {
                out.insert(binder.clone());
                arg.all_names(out);
            }
            Expr::MapV { binder, .. } => {
                out.insert(binder.clone());
            }
        }
    }

    /// Substitutes `rep` for free occurrences of `x`. The caller guarantees
    /// that no binder in `self` captures a free variable of `rep`.
    pub fn subst_var(&self, x: &str, rep: &Expr) -> Expr {
        let go = |e: &Rc<Expr>| Rc::new(e.subst_var(x, rep));
        let under = |y: &str, e: &Rc<Expr>| if y == x { e.clone() } else { go(e) };
        match self {
            Expr::Var(y, _) if y == x => rep.clone(),
            Expr::Var(..) | Expr::Unit => self.clone(),
            Expr::Pair(a, b) => Expr::Pair(go(a), go(b)),
            Expr::App(a, b) => Expr::App(go(a), go(b)),
            Expr::Proj(i, e) => Expr::Proj(*i, go(e)),
            Expr::Inj(i, t, e) => Expr::Inj(*i, t.clone(), go(e)),
            Expr::Delay(e) => Expr::Delay(go(e)),
            Expr::Force(e) => Expr::Force(go(e)),
            Expr::Cons(t, e) => Expr::Cons(t.clone(), go(e)),
            Expr::Dest(t, e) => Expr::Dest(t.clone(), go(e)),
            Expr::Lam(y, t, e) => Expr::Lam(y.clone(), t.clone(), under(y, e)),
            Expr::Case(e, x0, e0, x1, e1) => Expr::Case(go(e), x0.clone(), under(x0, e0), x1.clone(), under(x1, e1)),
            Expr::Fold { ty, scrut, binder, body, result } => Expr::Fold {
                ty: ty.clone(),
                scrut: go(scrut),
                binder: binder.clone(),
                body: under(binder, body),
                result: result.clone(),
            },
            Expr::Let(y, e0, e1) => Expr::Let(y.clone(), go(e0), under(y, e1)),
            Expr::Map { shape, binder, fun, arg } => {
                Expr::Map { shape: shape.clone(), binder: binder.clone(), fun: fun.clone(), arg: go(arg) }
            }
            Expr::MapV { .. } => self.clone(),
        }
    }
}

/// Runtime values.
#[derive(Clone, PartialEq, Debug)]
pub enum Value {
    Var(String),
    Unit,
    Pair(Rc<Value>, Rc<Value>),
    Inj(u8, Rc<Value>),
    Lam(Rc<LamClosure>),
    Delay(Rc<DelayClosure>),
    Cons(SrcType, Rc<Value>),
}

#[derive(Clone, PartialEq, Debug)]
pub struct LamClosure {
    pub param: String,
    pub ann: SrcType,
    pub body: Rc<Expr>,
    pub env: ValueEnv,
}

#[derive(Clone, PartialEq, Debug)]
pub struct DelayClosure {
    pub body: Rc<Expr>,
    pub env: ValueEnv,
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Rc::new(a), Rc::new(b))
    }
    pub fn inj(i: u8, v: Value) -> Self {
        Value::Inj(i, Rc::new(v))
    }
    pub fn cons(ty: SrcType, v: Value) -> Self {
        Value::Cons(ty, Rc::new(v))
    }

    pub fn nat(n: u64) -> Self {
        let mut v = Value::cons(SrcType::nat(), Value::inj(0, Value::Unit));
        for _ in 0..n {
            v = Value::cons(SrcType::nat(), Value::inj(1, v));
        }
        v
    }

    pub fn bool(b: bool) -> Self {
        Value::inj(u8::from(b), Value::Unit)
    }

    /// Reads a value of type `nat` back as a number.
    pub fn as_nat(&self) -> Option<u64> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                Value::Cons(_, inner) => match &**inner {
                    Value::Inj(0, u) if **u == Value::Unit => return Some(n),
                    Value::Inj(1, next) => {
                        n += 1;
                        cur = next;
                    }
                    _ => return None,
                },
                _ => return None,
            }
        }
    }

    /// Number of inductive-type constructors in a first-order value.
    pub fn constructor_count(&self) -> u64 {
        match self {
            Value::Var(_) | Value::Unit | Value::Lam(_) | Value::Delay(_) => 0,
            Value::Pair(a, b) => a.constructor_count() + b.constructor_count(),
            Value::Inj(_, v) => v.constructor_count(),
            Value::Cons(_, v) => 1 + v.constructor_count(),
        }
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Value::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Value::Unit => {}
            Value::Pair(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Value::Inj(_, v) | Value::Cons(_, v) => v.collect_free(bound, out),
            Value::Lam(c) => {
                let mut inner = BTreeSet::new();
                let mut b = vec![c.param.clone()];
                c.body.collect_free(&mut b, &mut inner);
                for x in inner {
                    if c.env.lookup(&x).is_none() && !bound.contains(&x) {
                        out.insert(x);
                    }
                }
            }
            Value::Delay(c) => {
                let mut inner = BTreeSet::new();
                c.body.collect_free(&mut Vec::new(), &mut inner);
                for x in inner {
                    if c.env.lookup(&x).is_none() && !bound.contains(&x) {
                        out.insert(x);
                    }
                }
            }
        }
    }
}

/// Persistent value environment. Extension shares the tail, so closures
/// capture environments in constant time.
#[derive(Clone, Default)]
pub struct ValueEnv(Option<Rc<EnvNode>>);

struct EnvNode {
    name: String,
    value: Value,
    next: ValueEnv,
}

impl ValueEnv {
    pub fn new() -> Self {
        ValueEnv(None)
    }

    pub fn extend(&self, name: &str, value: Value) -> Self {
        ValueEnv(Some(Rc::new(EnvNode { name: name.to_string(), value, next: self.clone() })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }

    /// Visible bindings, innermost first, shadowed entries removed.
    pub fn bindings(&self) -> Vec<(&str, &Value)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut cur = &self.0;
        while let Some(node) = cur {
            if seen.insert(node.name.as_str()) {
                out.push((node.name.as_str(), &node.value));
            }
            cur = &node.next.0;
        }
        out
    }
}

impl PartialEq for ValueEnv {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.bindings(), other.bindings());
        a.len() == b.len() && a.iter().all(|(n, v)| other.lookup(n).is_some_and(|w| w == *v))
    }
}

impl fmt::Debug for ValueEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.bindings()).finish()
    }
}

impl Drop for ValueEnv {
    fn drop(&mut self) {
        // Unlink long chains iteratively to keep drop from recursing.
        let mut cur = self.0.take();
        while let Some(node) = cur {
            match Rc::try_unwrap(node) {
                Ok(mut inner) => cur = inner.next.0.take(),
                Err(_) => break,
            }
        }
    }
}

/// Free term variables of a value (variables of closures not covered by
/// their environments).
pub fn value_free_vars(v: &Value) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    v.collect_free(&mut Vec::new(), &mut out);
    out
}

impl fmt::Display for SrcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_type(self, &TypeNames::builtin()))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self, &TypeNames::builtin()))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_value(self))
    }
}
