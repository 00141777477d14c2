//! The recurrence language: a predicatively polymorphic lambda calculus with
//! a cost type `C`, inductive types and explicit folds.

mod pretty;
mod simplify;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

pub use pretty::{pretty_rec_expr, pretty_rec_type};
pub use simplify::{simplify, simplify_with_budget, SimplifyStats, DEFAULT_SIMPLIFY_BUDGET};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RecType {
    Var(String),
    C,
    Unit,
    Prod(Rc<RecType>, Rc<RecType>),
    Sum(Rc<RecType>, Rc<RecType>),
    Arrow(Rc<RecType>, Rc<RecType>),
    Mu(Rc<RecShape>),
    Forall(String, Rc<RecType>),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RecShape {
    T,
    Const(RecType),
    Prod(Rc<RecShape>, Rc<RecShape>),
    Sum(Rc<RecShape>, Rc<RecShape>),
    Arrow(RecType, Rc<RecShape>),
}

impl RecType {
    pub fn prod(a: RecType, b: RecType) -> Self {
        RecType::Prod(Rc::new(a), Rc::new(b))
    }
    pub fn sum(a: RecType, b: RecType) -> Self {
        RecType::Sum(Rc::new(a), Rc::new(b))
    }
    pub fn arrow(a: RecType, b: RecType) -> Self {
        RecType::Arrow(Rc::new(a), Rc::new(b))
    }
    pub fn mu(f: RecShape) -> Self {
        RecType::Mu(Rc::new(f))
    }
    pub fn forall(a: &str, body: RecType) -> Self {
        RecType::Forall(a.to_string(), Rc::new(body))
    }
    pub fn var(a: &str) -> Self {
        RecType::Var(a.to_string())
    }

    /// `C × τ`, the type of complexities.
    pub fn complexity(t: RecType) -> Self {
        RecType::prod(RecType::C, t)
    }

    pub fn bool() -> Self {
        RecType::sum(RecType::Unit, RecType::Unit)
    }
    pub fn nat() -> Self {
        RecType::mu(RecShape::sum(RecShape::Const(RecType::Unit), RecShape::T))
    }
    pub fn list(a: RecType) -> Self {
        RecType::mu(RecShape::sum(RecShape::Const(RecType::Unit), RecShape::prod(RecShape::Const(a), RecShape::T)))
    }
    pub fn tree(a: RecType) -> Self {
        RecType::mu(RecShape::sum(
            RecShape::Const(RecType::Unit),
            RecShape::prod(RecShape::Const(a), RecShape::prod(RecShape::T, RecShape::T)),
        ))
    }

    pub fn as_mu(&self) -> Option<&Rc<RecShape>> {
        match self {
            RecType::Mu(f) => Some(f),
            _ => None,
        }
    }

    /// `F[δ]` for `δ = mu t. F`.
    pub fn unfold(&self) -> Option<RecType> {
        self.as_mu().map(|f| f.apply(self))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            RecType::Forall(..) => false,
            RecType::Var(_) | RecType::C | RecType::Unit => true,
            RecType::Prod(a, b) | RecType::Sum(a, b) | RecType::Arrow(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            RecType::Mu(f) => f.is_quantifier_free(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            RecType::Var(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            RecType::C | RecType::Unit => {}
            RecType::Prod(a, b) | RecType::Sum(a, b) | RecType::Arrow(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            RecType::Mu(f) => f.collect_free(bound, out),
            RecType::Forall(a, body) => {
                bound.push(a.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Capture-avoiding simultaneous substitution.
    pub fn subst(&self, map: &BTreeMap<String, RecType>) -> RecType {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            RecType::Var(a) => map.get(a).cloned().unwrap_or_else(|| self.clone()),
            RecType::C | RecType::Unit => self.clone(),
            RecType::Prod(a, b) => RecType::prod(a.subst(map), b.subst(map)),
            RecType::Sum(a, b) => RecType::sum(a.subst(map), b.subst(map)),
            RecType::Arrow(a, b) => RecType::arrow(a.subst(map), b.subst(map)),
            RecType::Mu(f) => RecType::mu(f.subst(map)),
            RecType::Forall(a, body) => {
                let mut inner = map.clone();
                inner.remove(a);
                let captured = inner.values().any(|t| t.free_vars().contains(a));
                if captured {
                    let mut avoid: BTreeSet<String> = body.free_vars();
                    for t in inner.values() {
                        avoid.extend(t.free_vars());
                    }
                    let fresh = fresh_name(a, &avoid);
                    inner.insert(a.clone(), RecType::Var(fresh.clone()));
                    RecType::forall(&fresh, body.subst(&inner))
                } else {
                    RecType::forall(a, body.subst(&inner))
                }
            }
        }
    }

    pub fn subst_one(&self, a: &str, t: &RecType) -> RecType {
        let mut m = BTreeMap::new();
        m.insert(a.to_string(), t.clone());
        self.subst(&m)
    }

    /// Equality up to renaming of bound type variables.
    pub fn alpha_eq(&self, other: &RecType) -> bool {
        fn go(a: &RecType, b: &RecType, env: &mut Vec<(String, String)>) -> bool {
            match (a, b) {
                (RecType::Var(x), RecType::Var(y)) => {
                    for (p, q) in env.iter().rev() {
                        if p == x || q == y {
                            return p == x && q == y;
                        }
                    }
                    x == y
                }
                (RecType::C, RecType::C) | (RecType::Unit, RecType::Unit) => true,
                (RecType::Prod(a0, a1), RecType::Prod(b0, b1))
                | (RecType::Sum(a0, a1), RecType::Sum(b0, b1))
                | (RecType::Arrow(a0, a1), RecType::Arrow(b0, b1)) => go(a0, b0, env) && go(a1, b1, env),
                (RecType::Mu(f), RecType::Mu(g)) => {
                    if !env.is_empty() {
                        let t = RecType::var("%t");
                        go(&f.apply(&t), &g.apply(&t), env)
                    } else {
                        f == g
                    }
                }
                (RecType::Forall(x, a), RecType::Forall(y, b)) => {
                    env.push((x.clone(), y.clone()));
                    let r = go(a, b, env);
                    env.pop();
                    r
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Splits `∀ᾱ. ρ` into its quantified variables and body.
    pub fn strip_foralls(&self) -> (Vec<String>, &RecType) {
        let mut vars = Vec::new();
        let mut cur = self;
        while let RecType::Forall(a, body) = cur {
            vars.push(a.clone());
            cur = body;
        }
        (vars, cur)
    }
}

impl RecShape {
    pub fn prod(a: RecShape, b: RecShape) -> Self {
        RecShape::Prod(Rc::new(a), Rc::new(b))
    }
    pub fn sum(a: RecShape, b: RecShape) -> Self {
        RecShape::Sum(Rc::new(a), Rc::new(b))
    }

    /// `F[σ]`.
    pub fn apply(&self, ty: &RecType) -> RecType {
        match self {
            RecShape::T => ty.clone(),
            RecShape::Const(s) => s.clone(),
            RecShape::Prod(a, b) => RecType::prod(a.apply(ty), b.apply(ty)),
            RecShape::Sum(a, b) => RecType::sum(a.apply(ty), b.apply(ty)),
            RecShape::Arrow(d, b) => RecType::arrow(d.clone(), b.apply(ty)),
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, RecType>) -> RecShape {
        match self {
            RecShape::T => RecShape::T,
            RecShape::Const(s) => RecShape::Const(s.subst(map)),
            RecShape::Prod(a, b) => RecShape::prod(a.subst(map), b.subst(map)),
            RecShape::Sum(a, b) => RecShape::sum(a.subst(map), b.subst(map)),
            RecShape::Arrow(d, b) => RecShape::Arrow(d.subst(map), Rc::new(b.subst(map))),
        }
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            RecShape::T => {}
            RecShape::Const(s) => s.collect_free(bound, out),
            RecShape::Prod(a, b) | RecShape::Sum(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            RecShape::Arrow(d, b) => {
                d.collect_free(bound, out);
                b.collect_free(bound, out);
            }
        }
    }

    fn is_quantifier_free(&self) -> bool {
        match self {
            RecShape::T => true,
            RecShape::Const(s) => s.is_quantifier_free(),
            RecShape::Prod(a, b) | RecShape::Sum(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            RecShape::Arrow(d, b) => d.is_quantifier_free() && b.is_quantifier_free(),
        }
    }

    /// True when the shape uses only sums, products, constants and `t`.
    pub fn is_polynomial(&self) -> bool {
        match self {
            RecShape::T | RecShape::Const(_) => true,
            RecShape::Prod(a, b) | RecShape::Sum(a, b) => a.is_polynomial() && b.is_polynomial(),
            RecShape::Arrow(..) => false,
        }
    }
}

pub(crate) fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    (0..)
        .map(|i| if i == 0 { stem.to_string() } else { format!("{stem}{i}") })
        .find(|c| !avoid.contains(c))
        .expect("unbounded supply of names")
}

pub type R = Rc<RecExpr>;

#[derive(Clone, PartialEq, Debug)]
pub enum RecExpr {
    Var(String),
    Zero,
    One,
    Plus(R, R),
    Unit,
    Pair(R, R),
    Proj(u8, R),
    /// Injection annotated with the full sum type.
    Inj(u8, RecType, R),
    Case(R, String, RecType, R, String, RecType, R),
    Lam(String, RecType, R),
    App(R, R),
    /// `Λα. e`, optionally recording the type of `e`.
    TyLam(String, Option<RecType>, R),
    TyApp(R, RecType),
    Cons(RecType, R),
    Dest(RecType, R),
    /// `fold_δ e' (x : F[σ]) e` with `σ` stored as `result`.
    Fold {
        ty: RecType,
        scrut: R,
        binder: String,
        result: RecType,
        body: R,
    },
}

impl RecExpr {
    pub fn var(x: &str) -> R {
        Rc::new(RecExpr::Var(x.to_string()))
    }
    pub fn pair(a: R, b: R) -> R {
        Rc::new(RecExpr::Pair(a, b))
    }
    pub fn plus(a: R, b: R) -> R {
        Rc::new(RecExpr::Plus(a, b))
    }
    pub fn proj(i: u8, e: R) -> R {
        Rc::new(RecExpr::Proj(i, e))
    }
    pub fn zero() -> R {
        Rc::new(RecExpr::Zero)
    }
    pub fn one() -> R {
        Rc::new(RecExpr::One)
    }

    /// `c +c E = (c + π0 E, π1 E)`, with both occurrences of `E` shared.
    pub fn add_cost(c: R, e: R) -> R {
        RecExpr::pair(RecExpr::plus(c, RecExpr::proj(0, e.clone())), RecExpr::proj(1, e))
    }

    /// Recognizes a term built by [`RecExpr::add_cost`].
    pub fn as_add_cost(&self) -> Option<(&R, &R)> {
        if let RecExpr::Pair(l, r) = self {
            if let (RecExpr::Plus(c, p0), RecExpr::Proj(1, e1)) = (&**l, &**r) {
                if let RecExpr::Proj(0, e0) = &**p0 {
                    if Rc::ptr_eq(e0, e1) {
                        return Some((c, e0));
                    }
                }
            }
        }
        None
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let fv = collect_free(self, &mut HashMap::new());
        Rc::try_unwrap(fv).unwrap_or_else(|rc| (*rc).clone())
    }

    /// Number of distinct nodes in the term graph.
    pub fn size(self: &Rc<Self>) -> usize {
        fn go(e: &R, seen: &mut std::collections::HashSet<*const RecExpr>) {
            if !seen.insert(Rc::as_ptr(e)) {
                return;
            }
            for c in e.children() {
                go(c, seen);
            }
        }
        let mut seen = std::collections::HashSet::new();
        go(self, &mut seen);
        seen.len()
    }

    /// Immediate subterms in left-to-right order.
    pub fn children(&self) -> Vec<&R> {
        match self {
            RecExpr::Var(_) | RecExpr::Zero | RecExpr::One | RecExpr::Unit => vec![],
            RecExpr::Plus(a, b) | RecExpr::Pair(a, b) | RecExpr::App(a, b) => vec![a, b],
            RecExpr::Proj(_, a)
            | RecExpr::Inj(_, _, a)
            | RecExpr::Lam(_, _, a)
            | RecExpr::TyLam(_, _, a)
            | RecExpr::TyApp(a, _)
            | RecExpr::Cons(_, a)
            | RecExpr::Dest(_, a) => vec![a],
            RecExpr::Case(s, _, _, a, _, _, b) => vec![s, a, b],
            RecExpr::Fold { scrut, body, .. } => vec![scrut, body],
        }
    }
}

type FvCache = HashMap<*const RecExpr, Rc<BTreeSet<String>>>;

fn collect_free(e: &RecExpr, cache: &mut FvCache) -> Rc<BTreeSet<String>> {
    let key = e as *const RecExpr;
    if let Some(s) = cache.get(&key) {
        return s.clone();
    }
    let mut out = BTreeSet::new();
    let under = |x: &str, b: &R, out: &mut BTreeSet<String>, cache: &mut FvCache| {
        out.extend(collect_free(b, cache).iter().filter(|v| *v != x).cloned());
    };
    match e {
        RecExpr::Var(x) => {
            out.insert(x.clone());
        }
        RecExpr::Lam(x, _, a) => under(x, a, &mut out, cache),
        RecExpr::Case(s, x0, _, a, x1, _, b) => {
            out.extend(collect_free(s, cache).iter().cloned());
            under(x0, a, &mut out, cache);
            under(x1, b, &mut out, cache);
        }
        RecExpr::Fold { scrut, binder, body, .. } => {
            out.extend(collect_free(scrut, cache).iter().cloned());
            under(binder, body, &mut out, cache);
        }
        _ => {
            for c in e.children() {
                out.extend(collect_free(c, cache).iter().cloned());
            }
        }
    }
    let out = Rc::new(out);
    cache.insert(key, out.clone());
    out
}

/// Capture-avoiding substitution `e[rep/x]` that preserves sharing: a
/// subterm reached through several paths is rewritten once.
pub fn subst(e: &R, x: &str, rep: &R) -> R {
    let fv = rep.free_vars();
    let mut s = Subst { x, rep, fv: &fv, cache: HashMap::new() };
    s.go(e)
}

struct Subst<'a> {
    x: &'a str,
    rep: &'a R,
    fv: &'a BTreeSet<String>,
    /// Keyed by node address; the original is kept alive alongside its
    /// image so addresses cannot be reused during the traversal.
    cache: HashMap<*const RecExpr, (R, R)>,
}

impl Subst<'_> {
    fn go(&mut self, e: &R) -> R {
        let key = Rc::as_ptr(e);
        if let Some((_, out)) = self.cache.get(&key) {
            return out.clone();
        }
        let out = self.compute(e);
        self.cache.insert(key, (e.clone(), out.clone()));
        out
    }

    fn binder(&mut self, y: &str, body: &R) -> (String, R) {
        if y == self.x {
            return (y.to_string(), body.clone());
        }
        if self.fv.contains(y) {
            let mut avoid = body.free_vars();
            avoid.extend(self.fv.iter().cloned());
            avoid.insert(self.x.to_string());
            let fresh = fresh_name(y, &avoid);
            let renamed = subst(body, y, &RecExpr::var(&fresh));
            let mut inner = Subst { x: self.x, rep: self.rep, fv: self.fv, cache: HashMap::new() };
            return (fresh, inner.go(&renamed));
        }
        (y.to_string(), self.go(body))
    }

    fn compute(&mut self, e: &R) -> R {
        let same2 = |a: &R, b: &R, a2: &R, b2: &R| Rc::ptr_eq(a, a2) && Rc::ptr_eq(b, b2);
        match &**e {
            RecExpr::Var(y) => {
                if y == self.x {
                    self.rep.clone()
                } else {
                    e.clone()
                }
            }
            RecExpr::Zero | RecExpr::One | RecExpr::Unit => e.clone(),
            RecExpr::Plus(a, b) | RecExpr::Pair(a, b) | RecExpr::App(a, b) => {
                let (a2, b2) = (self.go(a), self.go(b));
                if same2(a, b, &a2, &b2) {
                    return e.clone();
                }
                Rc::new(match &**e {
                    RecExpr::Plus(..) => RecExpr::Plus(a2, b2),
                    RecExpr::Pair(..) => RecExpr::Pair(a2, b2),
                    _ => RecExpr::App(a2, b2),
                })
            }
            RecExpr::Proj(i, a) => self.unary(e, a, |a| RecExpr::Proj(*i, a)),
            RecExpr::Inj(i, t, a) => self.unary(e, a, |a| RecExpr::Inj(*i, t.clone(), a)),
            RecExpr::TyLam(al, t, a) => self.unary(e, a, |a| RecExpr::TyLam(al.clone(), t.clone(), a)),
            RecExpr::TyApp(a, t) => self.unary(e, a, |a| RecExpr::TyApp(a, t.clone())),
            RecExpr::Cons(t, a) => self.unary(e, a, |a| RecExpr::Cons(t.clone(), a)),
            RecExpr::Dest(t, a) => self.unary(e, a, |a| RecExpr::Dest(t.clone(), a)),
            RecExpr::Lam(y, t, body) => {
                let (y2, b2) = self.binder(y, body);
                if y2 == *y && Rc::ptr_eq(&b2, body) {
                    return e.clone();
                }
                Rc::new(RecExpr::Lam(y2, t.clone(), b2))
            }
            RecExpr::Case(s, x0, t0, a, x1, t1, b) => {
                let s2 = self.go(s);
                let (x0b, a2) = self.binder(x0, a);
                let (x1b, b2) = self.binder(x1, b);
                if Rc::ptr_eq(&s2, s) && Rc::ptr_eq(&a2, a) && Rc::ptr_eq(&b2, b) && x0b == *x0 && x1b == *x1 {
                    return e.clone();
                }
                Rc::new(RecExpr::Case(s2, x0b, t0.clone(), a2, x1b, t1.clone(), b2))
            }
            RecExpr::Fold { ty, scrut, binder, result, body } => {
                let s2 = self.go(scrut);
                let (xb, b2) = self.binder(binder, body);
                if Rc::ptr_eq(&s2, scrut) && Rc::ptr_eq(&b2, body) && xb == *binder {
                    return e.clone();
                }
                Rc::new(RecExpr::Fold { ty: ty.clone(), scrut: s2, binder: xb, result: result.clone(), body: b2 })
            }
        }
    }

    fn unary(&mut self, e: &R, a: &R, rebuild: impl FnOnce(R) -> RecExpr) -> R {
        let a2 = self.go(a);
        if Rc::ptr_eq(&a2, a) {
            e.clone()
        } else {
            Rc::new(rebuild(a2))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("recurrence type error: {0}")]
pub struct RecTypeError(pub String);

type RResult<T> = Result<T, RecTypeError>;

/// Typing context for recurrence terms.
#[derive(Clone, Debug, Default)]
pub struct RecContext {
    pub vars: BTreeMap<String, RecType>,
}

impl RecContext {
    fn free_tyvars(&self) -> BTreeSet<String> {
        self.vars.values().flat_map(|t| t.free_vars()).collect()
    }
}

fn require_eq(found: &RecType, expected: &RecType, what: &str) -> RResult<()> {
    if found.alpha_eq(expected) {
        Ok(())
    } else {
        Err(RecTypeError(format!("{what}: expected {}, found {}", pretty_rec_type(expected), pretty_rec_type(found))))
    }
}

/// Computes the type of a recurrence term.
pub fn check_rec(ctx: &RecContext, e: &RecExpr) -> RResult<RecType> {
    let mut cache = HashMap::new();
    check_in(ctx, e, &mut cache)
}

fn check_in(ctx: &RecContext, e: &RecExpr, cache: &mut HashMap<*const RecExpr, RecType>) -> RResult<RecType> {
    let sub = |ctx: &RecContext, a: &R, cache: &mut HashMap<*const RecExpr, RecType>| -> RResult<RecType> {
        // Shared subterms in the same context are checked once.
        let key = Rc::as_ptr(a);
        if let Some(t) = cache.get(&key) {
            return Ok(t.clone());
        }
        let t = check_in(ctx, a, cache)?;
        cache.insert(key, t.clone());
        Ok(t)
    };
    let ext = |x: &str, t: RecType| {
        let mut c = ctx.clone();
        c.vars.insert(x.to_string(), t);
        c
    };
    match e {
        RecExpr::Var(x) => ctx.vars.get(x).cloned().ok_or_else(|| RecTypeError(format!("unbound variable `{x}`"))),
        RecExpr::Zero | RecExpr::One => Ok(RecType::C),
        RecExpr::Plus(a, b) => {
            require_eq(&sub(ctx, a, cache)?, &RecType::C, "left operand of +")?;
            require_eq(&sub(ctx, b, cache)?, &RecType::C, "right operand of +")?;
            Ok(RecType::C)
        }
        RecExpr::Unit => Ok(RecType::Unit),
        RecExpr::Pair(a, b) => Ok(RecType::prod(sub(ctx, a, cache)?, sub(ctx, b, cache)?)),
        RecExpr::Proj(i, a) => match sub(ctx, a, cache)? {
            RecType::Prod(t0, t1) => Ok((*if *i == 0 { t0 } else { t1 }).clone()),
            other => Err(RecTypeError(format!("projection from {}", pretty_rec_type(&other)))),
        },
        RecExpr::Inj(i, t, a) => {
            let RecType::Sum(t0, t1) = t else {
                return Err(RecTypeError(format!("injection annotated with non-sum {}", pretty_rec_type(t))));
            };
            let ta = sub(ctx, a, cache)?;
            require_eq(&ta, if *i == 0 { t0 } else { t1 }, "injection payload")?;
            Ok(t.clone())
        }
        RecExpr::Case(s, x0, t0, a, x1, t1, b) => {
            let ts = sub(ctx, s, cache)?;
            require_eq(&ts, &RecType::sum(t0.clone(), t1.clone()), "case scrutinee")?;
            let ta = check_in(&ext(x0, t0.clone()), a, &mut HashMap::new())?;
            let tb = check_in(&ext(x1, t1.clone()), b, &mut HashMap::new())?;
            require_eq(&tb, &ta, "case branches")?;
            Ok(ta)
        }
        RecExpr::Lam(x, t, body) => {
            let tb = check_in(&ext(x, t.clone()), body, &mut HashMap::new())?;
            Ok(RecType::arrow(t.clone(), tb))
        }
        RecExpr::App(f, a) => {
            let tf = sub(ctx, f, cache)?;
            let ta = sub(ctx, a, cache)?;
            match tf {
                RecType::Arrow(d, c) => {
                    require_eq(&ta, &d, "argument")?;
                    Ok((*c).clone())
                }
                other => Err(RecTypeError(format!("applying non-function of type {}", pretty_rec_type(&other)))),
            }
        }
        RecExpr::TyLam(al, ann, body) => {
            if ctx.free_tyvars().contains(al) {
                return Err(RecTypeError(format!("type variable `{al}` is free in the context")));
            }
            let tb = sub(ctx, body, cache)?;
            if let Some(ann) = ann {
                require_eq(&tb, ann, "type abstraction body")?;
            }
            Ok(RecType::forall(al, tb))
        }
        RecExpr::TyApp(a, t) => {
            if !t.is_quantifier_free() {
                return Err(RecTypeError("type application to a quantified type".into()));
            }
            match sub(ctx, a, cache)? {
                RecType::Forall(al, body) => Ok(body.subst_one(&al, t)),
                other => Err(RecTypeError(format!("type application of non-polymorphic {}", pretty_rec_type(&other)))),
            }
        }
        RecExpr::Cons(d, a) => {
            let unfolded = d.unfold().ok_or_else(|| RecTypeError("constructor at non-inductive type".into()))?;
            require_eq(&sub(ctx, a, cache)?, &unfolded, "constructor payload")?;
            Ok(d.clone())
        }
        RecExpr::Dest(d, a) => {
            let unfolded = d.unfold().ok_or_else(|| RecTypeError("destructor at non-inductive type".into()))?;
            require_eq(&sub(ctx, a, cache)?, d, "destructor argument")?;
            Ok(unfolded)
        }
        RecExpr::Fold { ty, scrut, binder, result, body } => {
            let f = ty.as_mu().ok_or_else(|| RecTypeError("fold at non-inductive type".into()))?;
            require_eq(&sub(ctx, scrut, cache)?, ty, "fold scrutinee")?;
            let tb = check_in(&ext(binder, f.apply(result)), body, &mut HashMap::new())?;
            require_eq(&tb, result, "fold body")?;
            Ok(result.clone())
        }
    }
}

/// The macro `F[ρ; y.e', e]`: applies `y ↦ e'` at the recursive positions of
/// `e : F[ρ]`, where `e' : σ` under `y : ρ`.
pub fn map_macro(f: &RecShape, rho: &RecType, sigma: &RecType, y: &str, e_prime: &R, e: &R) -> R {
    let fresh = || {
        let mut avoid = e_prime.free_vars();
        avoid.extend(e.free_vars());
        avoid.insert(y.to_string());
        fresh_name("x", &avoid)
    };
    match f {
        RecShape::T => subst(e_prime, y, e),
        RecShape::Const(_) => e.clone(),
        RecShape::Sum(f0, f1) => {
            let x = fresh();
            let xv = RecExpr::var(&x);
            let out = f.apply(sigma);
            let branch = |g: &RecShape, i: u8| -> R {
                Rc::new(RecExpr::Inj(i, out.clone(), map_macro(g, rho, sigma, y, e_prime, &xv)))
            };
            Rc::new(RecExpr::Case(e.clone(), x.clone(), f0.apply(rho), branch(f0, 0), x, f1.apply(rho), branch(f1, 1)))
        }
        RecShape::Prod(f0, f1) => RecExpr::pair(
            map_macro(f0, rho, sigma, y, e_prime, &RecExpr::proj(0, e.clone())),
            map_macro(f1, rho, sigma, y, e_prime, &RecExpr::proj(1, e.clone())),
        ),
        RecShape::Arrow(d, g) => {
            let x = fresh();
            let app = Rc::new(RecExpr::App(e.clone(), RecExpr::var(&x)));
            Rc::new(RecExpr::Lam(x, d.clone(), map_macro(g, rho, sigma, y, e_prime, &app)))
        }
    }
}

impl fmt::Display for RecType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_rec_type(self))
    }
}

impl fmt::Display for RecExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_rec_expr(self))
    }
}
