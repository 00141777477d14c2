//! Type inference with let-generalization, producing an elaborated tree
//! that records the instantiation of every variable use and the scheme of
//! every let.
//!
//! Type variables written in annotations are rigid: they only unify with
//! themselves. Omitted instantiations become unification variables, printed
//! as `?n`, which must all be solved by the end of each declaration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::source_ast::{subst_shape, Expr, Program, Shape, Span, SrcType, TypeScheme, Value, ValueEnv};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct TypeError {
    pub message: String,
    pub span: Option<Span>,
    pub decl: Option<String>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(span) = self.span {
            write!(f, "{span}: ")?;
        }
        if let Some(d) = &self.decl {
            write!(f, "in `{d}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl TypeError {
    fn new(message: impl Into<String>) -> Self {
        TypeError { message: message.into(), span: None, decl: None }
    }
}

type TResult<T> = Result<T, TypeError>;

/// Typing context: term variables to schemes, plus in-scope type variables.
#[derive(Clone, Debug, Default)]
pub struct TypeContext {
    pub vars: BTreeMap<String, TypeScheme>,
    pub tyvars: BTreeSet<String>,
}

impl TypeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, scheme: TypeScheme) -> Self {
        self.tyvars.extend(scheme.free_vars());
        self.vars.insert(name.to_string(), scheme);
        self
    }
}

/// An expression annotated with its type at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct TExpr {
    pub ty: SrcType,
    pub kind: TKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TKind {
    /// A variable with its instantiation (empty for monomorphic bindings).
    Var(String, Vec<SrcType>),
    Unit,
    Pair(Box<TExpr>, Box<TExpr>),
    Proj(u8, Box<TExpr>),
    Inj(u8, Box<TExpr>),
    Case(Box<TExpr>, String, Box<TExpr>, String, Box<TExpr>),
    Lam(String, SrcType, Box<TExpr>),
    App(Box<TExpr>, Box<TExpr>),
    Delay(Box<TExpr>),
    Force(Box<TExpr>),
    Cons(SrcType, Box<TExpr>),
    Dest(SrcType, Box<TExpr>),
    Fold {
        ty: SrcType,
        scrut: Box<TExpr>,
        binder: String,
        body: Box<TExpr>,
        result: SrcType,
    },
    Let(String, TypeScheme, Box<TExpr>, Box<TExpr>),
}

impl TExpr {
    fn map_types(&mut self, f: &mut dyn FnMut(&SrcType) -> SrcType) {
        self.ty = f(&self.ty);
        match &mut self.kind {
            TKind::Var(_, args) => args.iter_mut().for_each(|a| *a = f(a)),
            TKind::Unit => {}
            TKind::Pair(a, b) | TKind::App(a, b) => {
                a.map_types(f);
                b.map_types(f);
            }
            TKind::Proj(_, a) | TKind::Inj(_, a) | TKind::Delay(a) | TKind::Force(a) => a.map_types(f),
            TKind::Cons(t, a) | TKind::Dest(t, a) | TKind::Lam(_, t, a) => {
                *t = f(t);
                a.map_types(f);
            }
            TKind::Case(s, _, a, _, b) => {
                s.map_types(f);
                a.map_types(f);
                b.map_types(f);
            }
            TKind::Fold { ty, scrut, body, result, .. } => {
                *ty = f(ty);
                *result = f(result);
                scrut.map_types(f);
                body.map_types(f);
            }
            TKind::Let(_, scheme, a, b) => {
                scheme.body = f(&scheme.body);
                a.map_types(f);
                b.map_types(f);
            }
        }
    }

    fn visit_types(&self, f: &mut dyn FnMut(&SrcType)) {
        f(&self.ty);
        match &self.kind {
            TKind::Var(_, args) => args.iter().for_each(&mut *f),
            TKind::Unit => {}
            TKind::Pair(a, b) | TKind::App(a, b) => {
                a.visit_types(f);
                b.visit_types(f);
            }
            TKind::Proj(_, a) | TKind::Inj(_, a) | TKind::Delay(a) | TKind::Force(a) => a.visit_types(f),
            TKind::Cons(t, a) | TKind::Dest(t, a) | TKind::Lam(_, t, a) => {
                f(t);
                a.visit_types(f);
            }
            TKind::Case(s, _, a, _, b) => {
                s.visit_types(f);
                a.visit_types(f);
                b.visit_types(f);
            }
            TKind::Fold { ty, scrut, body, result, .. } => {
                f(ty);
                f(result);
                scrut.visit_types(f);
                body.visit_types(f);
            }
            TKind::Let(_, scheme, a, b) => {
                f(&scheme.body);
                a.visit_types(f);
                b.visit_types(f);
            }
        }
    }
}

/// A checked top-level declaration.
#[derive(Clone, Debug)]
pub struct CheckedDecl {
    pub name: String,
    pub scheme: TypeScheme,
    pub body: TExpr,
    pub span: Span,
}

#[derive(Clone, Debug, Default)]
pub struct CheckedProgram {
    pub decls: Vec<CheckedDecl>,
    pub main: Option<CheckedDecl>,
}

impl CheckedProgram {
    pub fn decl(&self, name: &str) -> Option<&CheckedDecl> {
        if name == "main" {
            return self.main.as_ref();
        }
        self.decls.iter().find(|d| d.name == name)
    }

    /// The typing context holding every top-level scheme.
    pub fn context(&self) -> TypeContext {
        let mut ctx = TypeContext::new();
        for d in &self.decls {
            ctx.vars.insert(d.name.clone(), d.scheme.clone());
        }
        ctx
    }
}

pub fn is_core(e: &Expr) -> bool {
    e.is_core()
}

fn is_meta(name: &str) -> bool {
    name.starts_with('?')
}

fn meta_name(n: usize) -> String {
    format!("?{n}")
}

fn first_occurrence_vars(ty: &SrcType, out: &mut Vec<String>) {
    fn go_shape(f: &Shape, out: &mut Vec<String>) {
        match f {
            Shape::T => {}
            Shape::Const(s) => first_occurrence_vars(s, out),
            Shape::Prod(a, b) | Shape::Sum(a, b) => {
                go_shape(a, out);
                go_shape(b, out);
            }
            Shape::Arrow(d, b) => {
                first_occurrence_vars(d, out);
                go_shape(b, out);
            }
        }
    }
    match ty {
        SrcType::Var(a) => {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        SrcType::Unit => {}
        SrcType::Prod(a, b) | SrcType::Sum(a, b) | SrcType::Arrow(a, b) => {
            first_occurrence_vars(a, out);
            first_occurrence_vars(b, out);
        }
        SrcType::Susp(a) => first_occurrence_vars(a, out),
        SrcType::Mu(f) => go_shape(f, out),
    }
}

#[derive(Clone)]
enum Binding {
    Scheme(TypeScheme),
    /// A runtime value whose type is discovered per use site.
    Value(Value),
}

struct Checker {
    env: Vec<(String, Binding)>,
    subst: HashMap<String, SrcType>,
    next_meta: usize,
    /// Renaming applied to annotation type variables (used when checking
    /// closure bodies, whose rigid variables are instantiated afresh).
    rename: BTreeMap<String, SrcType>,
    core_only: bool,
    pending: Vec<(Value, SrcType)>,
}

impl Checker {
    fn new(ctx: &TypeContext) -> Self {
        let env = ctx.vars.iter().map(|(n, s)| (n.clone(), Binding::Scheme(s.clone()))).collect();
        Checker {
            env,
            subst: HashMap::new(),
            next_meta: 0,
            rename: BTreeMap::new(),
            core_only: true,
            pending: Vec::new(),
        }
    }

    fn fresh(&mut self) -> SrcType {
        self.next_meta += 1;
        SrcType::Var(meta_name(self.next_meta))
    }

    fn ann(&self, t: &SrcType) -> SrcType {
        t.subst(&self.rename)
    }

    fn lookup(&self, x: &str) -> Option<&Binding> {
        self.env.iter().rev().find(|(n, _)| n == x).map(|(_, b)| b)
    }

    fn resolve(&self, t: &SrcType) -> SrcType {
        match t {
            SrcType::Var(a) if is_meta(a) => match self.subst.get(a) {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            SrcType::Var(_) | SrcType::Unit => t.clone(),
            SrcType::Prod(a, b) => SrcType::prod(self.resolve(a), self.resolve(b)),
            SrcType::Sum(a, b) => SrcType::sum(self.resolve(a), self.resolve(b)),
            SrcType::Arrow(a, b) => SrcType::arrow(self.resolve(a), self.resolve(b)),
            SrcType::Susp(a) => SrcType::susp(self.resolve(a)),
            SrcType::Mu(f) => {
                if f_has_meta(f) {
                    SrcType::mu(self.resolve_shape(f))
                } else {
                    t.clone()
                }
            }
        }
    }

    fn resolve_shape(&self, f: &Shape) -> Shape {
        match f {
            Shape::T => Shape::T,
            Shape::Const(s) => Shape::Const(self.resolve(s)),
            Shape::Prod(a, b) => Shape::prod(self.resolve_shape(a), self.resolve_shape(b)),
            Shape::Sum(a, b) => Shape::sum(self.resolve_shape(a), self.resolve_shape(b)),
            Shape::Arrow(d, b) => Shape::arrow(self.resolve(d), self.resolve_shape(b)),
        }
    }

    /// Head-normalizes a type by following solved metas.
    fn head(&self, t: &SrcType) -> SrcType {
        let mut cur = t.clone();
        while let SrcType::Var(a) = &cur {
            match self.subst.get(a) {
                Some(u) if is_meta(a) => cur = u.clone(),
                _ => break,
            }
        }
        cur
    }

    fn mismatch(&self, a: &SrcType, b: &SrcType) -> TypeError {
        TypeError::new(format!("type mismatch: expected {}, found {}", self.resolve(b), self.resolve(a)))
    }

    fn unify(&mut self, a: &SrcType, b: &SrcType) -> TResult<()> {
        let (a, b) = (self.head(a), self.head(b));
        match (&a, &b) {
            (SrcType::Var(x), SrcType::Var(y)) if x == y => Ok(()),
            (SrcType::Var(x), _) if is_meta(x) => self.bind(x, &b),
            (_, SrcType::Var(y)) if is_meta(y) => self.bind(y, &a),
            (SrcType::Unit, SrcType::Unit) => Ok(()),
            (SrcType::Prod(a0, a1), SrcType::Prod(b0, b1))
            | (SrcType::Sum(a0, a1), SrcType::Sum(b0, b1))
            | (SrcType::Arrow(a0, a1), SrcType::Arrow(b0, b1)) => {
                self.unify(a0, b0).map_err(|_| self.mismatch(&a, &b))?;
                self.unify(a1, b1).map_err(|_| self.mismatch(&a, &b))
            }
            (SrcType::Susp(x), SrcType::Susp(y)) => self.unify(x, y).map_err(|_| self.mismatch(&a, &b)),
            (SrcType::Mu(f), SrcType::Mu(g)) => self.unify_shape(f, g).map_err(|_| self.mismatch(&a, &b)),
            _ => Err(self.mismatch(&a, &b)),
        }
    }

    fn unify_shape(&mut self, f: &Shape, g: &Shape) -> TResult<()> {
        match (f, g) {
            (Shape::T, Shape::T) => Ok(()),
            (Shape::Const(a), Shape::Const(b)) => self.unify(a, b),
            (Shape::Prod(a0, a1), Shape::Prod(b0, b1)) | (Shape::Sum(a0, a1), Shape::Sum(b0, b1)) => {
                self.unify_shape(a0, b0)?;
                self.unify_shape(a1, b1)
            }
            (Shape::Arrow(d0, a), Shape::Arrow(d1, b)) => {
                self.unify(d0, d1)?;
                self.unify_shape(a, b)
            }
            _ => Err(TypeError::new("shape mismatch")),
        }
    }

    fn bind(&mut self, meta: &str, t: &SrcType) -> TResult<()> {
        let t = self.resolve(t);
        if t.free_vars().contains(meta) {
            return Err(TypeError::new(format!("infinite type: {meta} occurs in {t}")));
        }
        self.subst.insert(meta.to_string(), t);
        Ok(())
    }

    fn expect_sum(&mut self, t: &SrcType) -> TResult<(SrcType, SrcType)> {
        match self.head(t) {
            SrcType::Sum(a, b) => Ok((*a, *b)),
            other => {
                let (a, b) = (self.fresh(), self.fresh());
                self.unify(&other, &SrcType::sum(a.clone(), b.clone()))?;
                Ok((a, b))
            }
        }
    }

    fn expect_prod(&mut self, t: &SrcType) -> TResult<(SrcType, SrcType)> {
        match self.head(t) {
            SrcType::Prod(a, b) => Ok((*a, *b)),
            other => {
                let (a, b) = (self.fresh(), self.fresh());
                self.unify(&other, &SrcType::prod(a.clone(), b.clone()))
                    .map_err(|_| TypeError::new(format!("expected a product, found {}", self.resolve(&other))))?;
                Ok((a, b))
            }
        }
    }

    fn inductive(&self, t: &SrcType, what: &str) -> TResult<Rc<Shape>> {
        match self.resolve(t) {
            SrcType::Mu(f) => Ok(f),
            other => Err(TypeError::new(format!("{what} annotation {other} is not an inductive type"))),
        }
    }

    fn env_free_tyvars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, b) in &self.env {
            if let Binding::Scheme(s) = b {
                let body = self.resolve(&s.body);
                let mut fv = body.free_vars();
                for v in &s.vars {
                    fv.remove(v);
                }
                out.extend(fv);
            }
        }
        out
    }

    fn with_binding<T>(&mut self, x: &str, b: Binding, f: impl FnOnce(&mut Self) -> TResult<T>) -> TResult<T> {
        self.env.push((x.to_string(), b));
        let r = f(self);
        self.env.pop();
        r
    }

    fn mono(t: SrcType) -> Binding {
        Binding::Scheme(TypeScheme::mono(t))
    }

    fn infer(&mut self, e: &Expr) -> TResult<TExpr> {
        let (ty, kind) = match e {
            Expr::Var(x, inst) => {
                let binding =
                    self.lookup(x).cloned().ok_or_else(|| TypeError::new(format!("unbound variable `{x}`")))?;
                match binding {
                    Binding::Scheme(scheme) => {
                        let args: Vec<SrcType> = match inst {
                            Some(args) => {
                                if args.len() != scheme.vars.len() {
                                    return Err(TypeError::new(format!(
                                        "`{x}` takes {} type argument(s), {} given",
                                        scheme.vars.len(),
                                        args.len()
                                    )));
                                }
                                args.iter().map(|a| self.ann(a)).collect()
                            }
                            None => (0..scheme.vars.len()).map(|_| self.fresh()).collect(),
                        };
                        let ty = scheme.instantiate(&args).expect("arity checked");
                        (ty, TKind::Var(x.clone(), args))
                    }
                    Binding::Value(v) => {
                        if inst.is_some() {
                            return Err(TypeError::new(format!("`{x}` is not polymorphic here")));
                        }
                        let m = self.fresh();
                        self.pending.push((v, m.clone()));
                        (m, TKind::Var(x.clone(), Vec::new()))
                    }
                }
            }
            Expr::Unit => (SrcType::Unit, TKind::Unit),
            Expr::Pair(a, b) => {
                let a = self.infer(a)?;
                let b = self.infer(b)?;
                (SrcType::prod(a.ty.clone(), b.ty.clone()), TKind::Pair(Box::new(a), Box::new(b)))
            }
            Expr::Proj(i, a) => {
                let a = self.infer(a)?;
                let (t0, t1) = self.expect_prod(&a.ty)?;
                (if *i == 0 { t0 } else { t1 }, TKind::Proj(*i, Box::new(a)))
            }
            Expr::Inj(i, ann, a) => {
                let ann = self.ann(ann);
                let SrcType::Sum(l, r) = self.resolve(&ann) else {
                    return Err(TypeError::new(format!("injection annotation {ann} is not a sum type")));
                };
                let a = self.infer(a)?;
                self.unify(&a.ty, if *i == 0 { &l } else { &r })?;
                (ann, TKind::Inj(*i, Box::new(a)))
            }
            Expr::Case(s, x0, e0, x1, e1) => {
                let s = self.infer(s)?;
                let (t0, t1) = self
                    .expect_sum(&s.ty)
                    .map_err(|_| TypeError::new(format!("case scrutinee has non-sum type {}", self.resolve(&s.ty))))?;
                let e0 = self.with_binding(x0, Self::mono(t0), |c| c.infer(e0))?;
                let e1 = self.with_binding(x1, Self::mono(t1), |c| c.infer(e1))?;
                self.unify(&e1.ty, &e0.ty)
                    .map_err(|err| TypeError::new(format!("case branches disagree: {}", err.message)))?;
                (e0.ty.clone(), TKind::Case(Box::new(s), x0.clone(), Box::new(e0), x1.clone(), Box::new(e1)))
            }
            Expr::Lam(x, ann, body) => {
                let ann = self.ann(ann);
                let body = self.with_binding(x, Self::mono(ann.clone()), |c| c.infer(body))?;
                (SrcType::arrow(ann.clone(), body.ty.clone()), TKind::Lam(x.clone(), ann, Box::new(body)))
            }
            Expr::App(f, a) => {
                let f = self.infer(f)?;
                let a = self.infer(a)?;
                let r = self.fresh();
                match self.head(&f.ty) {
                    SrcType::Arrow(dom, cod) => {
                        self.unify(&a.ty, &dom)
                            .map_err(|err| TypeError::new(format!("argument type mismatch: {}", err.message)))?;
                        self.unify(&r, &cod)?;
                    }
                    SrcType::Var(m) if is_meta(&m) => {
                        self.unify(&f.ty, &SrcType::arrow(a.ty.clone(), r.clone()))?;
                    }
                    other => {
                        return Err(TypeError::new(format!("applying a non-function of type {}", self.resolve(&other))))
                    }
                }
                (r, TKind::App(Box::new(f), Box::new(a)))
            }
            Expr::Delay(a) => {
                let a = self.infer(a)?;
                (SrcType::susp(a.ty.clone()), TKind::Delay(Box::new(a)))
            }
            Expr::Force(a) => {
                let a = self.infer(a)?;
                let r = match self.head(&a.ty) {
                    SrcType::Susp(t) => *t,
                    other => {
                        let m = self.fresh();
                        self.unify(&other, &SrcType::susp(m.clone())).map_err(|_| {
                            TypeError::new(format!("forcing a non-suspension of type {}", self.resolve(&other)))
                        })?;
                        m
                    }
                };
                (r, TKind::Force(Box::new(a)))
            }
            Expr::Cons(d, a) => {
                let d = self.ann(d);
                let f = self.inductive(&d, "constructor")?;
                let a = self.infer(a)?;
                self.unify(&a.ty, &subst_shape(&f, &d))?;
                (d.clone(), TKind::Cons(d, Box::new(a)))
            }
            Expr::Dest(d, a) => {
                let d = self.ann(d);
                let f = self.inductive(&d, "destructor")?;
                let a = self.infer(a)?;
                self.unify(&a.ty, &d)?;
                (subst_shape(&f, &d), TKind::Dest(d, Box::new(a)))
            }
            Expr::Fold { ty, scrut, binder, body, result } => {
                let d = self.ann(ty);
                let result = self.ann(result);
                let f = self.inductive(&d, "fold")?;
                let s = self.infer(scrut)?;
                self.unify(&s.ty, &d)?;
                let xt = subst_shape(&f, &SrcType::susp(result.clone()));
                let b = self.with_binding(binder, Self::mono(xt), |c| c.infer(body))?;
                self.unify(&b.ty, &result)?;
                (
                    result.clone(),
                    TKind::Fold { ty: d, scrut: Box::new(s), binder: binder.clone(), body: Box::new(b), result },
                )
            }
            Expr::Let(x, bound, body) => {
                let bound = self.infer(bound)?;
                let bt = self.resolve(&bound.ty);
                let env_fv = self.env_free_tyvars();
                let mut order = Vec::new();
                first_occurrence_vars(&bt, &mut order);
                let vars: Vec<String> = order
                    .into_iter()
                    .filter(|v| !is_meta(v) && !env_fv.contains(v) && !self.rename.contains_key(v))
                    .collect();
                let scheme = TypeScheme { vars, body: bt };
                let body = self.with_binding(x, Binding::Scheme(scheme.clone()), |c| c.infer(body))?;
                (body.ty.clone(), TKind::Let(x.clone(), scheme, Box::new(bound), Box::new(body)))
            }
            Expr::Map { shape, binder, fun, arg } => {
                if self.core_only {
                    return Err(TypeError::new("`map` is not allowed in source programs"));
                }
                let a = self.infer(arg)?;
                let rho = self.fresh();
                let shape = self.ann_shape(shape);
                self.unify(&a.ty, &subst_shape(&shape, &rho))?;
                let sigma = self.fresh();
                self.check_value_in(fun, &sigma, Some((binder, rho)))?;
                return Ok(TExpr { ty: subst_shape(&shape, &sigma), kind: a.kind });
            }
            Expr::MapV { shape, binder, fun, arg } => {
                if self.core_only {
                    return Err(TypeError::new("`mapv` is not allowed in source programs"));
                }
                let rho = self.fresh();
                let shape = self.ann_shape(shape);
                self.check_value_u(arg, &subst_shape(&shape, &rho))?;
                let sigma = self.fresh();
                self.check_value_in(fun, &sigma, Some((binder, rho)))?;
                return Ok(TExpr { ty: subst_shape(&shape, &sigma), kind: TKind::Unit });
            }
        };
        Ok(TExpr { ty, kind })
    }

    fn ann_shape(&self, f: &Shape) -> Shape {
        f.subst_vars(&self.rename)
    }

    fn check_value_in(&mut self, v: &Value, ty: &SrcType, extra: Option<(&String, SrcType)>) -> TResult<()> {
        match extra {
            Some((y, rho)) => self.with_binding(y, Self::mono(rho), |c| c.check_value_u(v, ty)),
            None => self.check_value_u(v, ty),
        }
    }

    fn drain_pending(&mut self) -> TResult<()> {
        while let Some((v, t)) = self.pending.pop() {
            self.check_value_u(&v, &t)?;
        }
        Ok(())
    }

    /// Unification-based value typing.
    fn check_value_u(&mut self, v: &Value, ty: &SrcType) -> TResult<()> {
        match v {
            Value::Var(x) => {
                let e = self.infer(&Expr::var(x))?;
                self.unify(&e.ty, ty)
            }
            Value::Unit => self.unify(&SrcType::Unit, ty),
            Value::Pair(a, b) => {
                let (t0, t1) = self.expect_prod(ty)?;
                self.check_value_u(a, &t0)?;
                self.check_value_u(b, &t1)
            }
            Value::Inj(i, a) => {
                let (t0, t1) = self.expect_sum(ty)?;
                self.check_value_u(a, if *i == 0 { &t0 } else { &t1 })
            }
            Value::Cons(d, a) => {
                // Type arguments in a runtime constructor's annotation are
                // erased instances, so leftover rigid variables are open.
                let d = &self.ann(d);
                let open: BTreeMap<String, SrcType> =
                    d.free_vars().into_iter().filter(|v| !is_meta(v)).map(|v| (v, self.fresh())).collect();
                let d = &d.subst(&open);
                let f = self.inductive(d, "constructor")?;
                self.unify(d, ty)?;
                self.check_value_u(a, &subst_shape(&f, d))
            }
            Value::Lam(c) => {
                let saved = self.closure_scope(&c.env, &c.body, Some(&c.ann));
                let r = (|| {
                    let ann = self.ann(&c.ann);
                    let cod = self.fresh();
                    self.unify(&SrcType::arrow(ann.clone(), cod.clone()), ty)?;
                    let body = self.with_binding(&c.param, Self::mono(ann), |ch| ch.infer(&c.body))?;
                    self.unify(&body.ty, &cod)?;
                    self.drain_pending()
                })();
                self.restore(saved);
                r
            }
            Value::Delay(c) => {
                let saved = self.closure_scope(&c.env, &c.body, None);
                let r = (|| {
                    let body = self.infer(&c.body)?;
                    self.unify(&SrcType::susp(body.ty.clone()), ty)?;
                    self.drain_pending()
                })();
                self.restore(saved);
                r
            }
        }
    }

    /// Enters a closure: rigid type variables of its code become fresh metas
    /// and environment entries become per-use value bindings.
    fn closure_scope(
        &mut self,
        env: &ValueEnv,
        body: &Expr,
        ann: Option<&SrcType>,
    ) -> (usize, BTreeMap<String, SrcType>, Vec<(Value, SrcType)>) {
        let mut tvs = BTreeSet::new();
        collect_annotation_vars(body, &mut tvs);
        if let Some(a) = ann {
            tvs.extend(a.free_vars());
        }
        let saved_rename = self.rename.clone();
        for tv in tvs {
            if !is_meta(&tv) {
                let m = self.fresh();
                self.rename.insert(tv, m);
            }
        }
        let depth = self.env.len();
        let mut binds: Vec<_> = env.bindings().into_iter().map(|(n, v)| (n.to_string(), v.clone())).collect();
        binds.reverse();
        for (n, v) in binds {
            self.env.push((n, Binding::Value(v)));
        }
        (depth, saved_rename, std::mem::take(&mut self.pending))
    }

    fn restore(&mut self, saved: (usize, BTreeMap<String, SrcType>, Vec<(Value, SrcType)>)) {
        self.env.truncate(saved.0);
        self.rename = saved.1;
        self.pending = saved.2;
    }

    fn zonk(&self, mut t: TExpr) -> TResult<TExpr> {
        t.map_types(&mut |ty| self.resolve(ty));
        let mut leftover = None;
        t.visit_types(&mut |ty| {
            if leftover.is_none() {
                if let Some(m) = ty.free_vars().into_iter().find(|v| is_meta(v)) {
                    leftover = Some((m, ty.clone()));
                }
            }
        });
        if let Some((_, ty)) = leftover {
            return Err(TypeError::new(format!(
                "ambiguous instantiation: cannot determine the type variables in {ty}; add an explicit instantiation"
            )));
        }
        Ok(t)
    }
}

fn f_has_meta(f: &Shape) -> bool {
    let mut out = BTreeSet::new();
    collect_shape_vars(f, &mut out);
    out.iter().any(|v| is_meta(v))
}

fn collect_shape_vars(f: &Shape, out: &mut BTreeSet<String>) {
    out.extend(SrcType::Mu(Rc::new(f.clone())).free_vars());
}

fn collect_annotation_vars(e: &Expr, out: &mut BTreeSet<String>) {
    let mut go = |t: &SrcType| out.extend(t.free_vars());
    match e {
        Expr::Var(_, Some(args)) => args.iter().for_each(go),
        Expr::Var(_, None) | Expr::Unit => {}
        Expr::Pair(a, b) | Expr::App(a, b) | Expr::Let(_, a, b) => {
            collect_annotation_vars(a, out);
            collect_annotation_vars(b, out);
        }
        Expr::Proj(_, a) | Expr::Delay(a) | Expr::Force(a) => collect_annotation_vars(a, out),
        Expr::Inj(_, t, a) | Expr::Cons(t, a) | Expr::Dest(t, a) | Expr::Lam(_, t, a) => {
            go(t);
            collect_annotation_vars(a, out);
        }
        Expr::Case(s, _, a, _, b) => {
            collect_annotation_vars(s, out);
            collect_annotation_vars(a, out);
            collect_annotation_vars(b, out);
        }
        Expr::Fold { ty, scrut, body, result, .. } => {
            go(ty);
            go(result);
            collect_annotation_vars(scrut, out);
            collect_annotation_vars(body, out);
        }
        Expr::Map { shape, arg, .. } => {
            out.extend(SrcType::Mu(Rc::new(shape.clone())).free_vars());
            collect_annotation_vars(arg, out);
        }
        Expr::MapV { shape, .. } => out.extend(SrcType::Mu(Rc::new(shape.clone())).free_vars()),
    }
}

/// Elaborates a core expression, returning the typed tree.
pub fn elaborate(ctx: &TypeContext, e: &Expr) -> TResult<TExpr> {
    let mut c = Checker::new(ctx);
    let t = c.infer(e)?;
    c.zonk(t)
}

/// The type of a core expression in the given context.
pub fn infer_expr(ctx: &TypeContext, e: &Expr) -> TResult<SrcType> {
    elaborate(ctx, e).map(|t| t.ty)
}

/// Types an expression that may contain `map`/`mapv` (intermediate terms of
/// evaluation).
pub fn infer_runtime_expr(ctx: &TypeContext, e: &Expr) -> TResult<SrcType> {
    let mut c = Checker::new(ctx);
    c.core_only = false;
    let t = c.infer(e)?;
    c.drain_pending()?;
    Ok(c.resolve(&t.ty))
}

/// Checks that a runtime value has the given type. Variables bound in
/// closure environments are checked at each instance their uses demand.
pub fn check_value(ctx: &TypeContext, v: &Value, ty: &SrcType) -> TResult<()> {
    let mut c = Checker::new(ctx);
    c.core_only = false;
    c.check_value_u(v, ty)?;
    c.drain_pending()
}

fn with_decl(mut err: TypeError, name: &str, span: Span) -> TypeError {
    err.decl = Some(name.to_string());
    err.span = Some(span);
    err
}

/// Checks every declaration in order, generalizing each one.
pub fn check_program(prog: &Program) -> TResult<CheckedProgram> {
    let mut ctx = TypeContext::new();
    let mut out = CheckedProgram::default();
    let check = |ctx: &TypeContext, name: &str, e: &Expr, span: Span| -> TResult<CheckedDecl> {
        let body = elaborate(ctx, e).map_err(|err| with_decl(err, name, span))?;
        let mut vars = Vec::new();
        first_occurrence_vars(&body.ty, &mut vars);
        let scheme = TypeScheme { vars: vars.clone(), body: body.ty.clone() };
        check_closed(&body, &vars).map_err(|err| with_decl(err, name, span))?;
        Ok(CheckedDecl { name: name.to_string(), scheme, body, span })
    };
    for d in &prog.decls {
        let cd = check(&ctx, &d.name, &d.expr, d.span)?;
        ctx.vars.insert(d.name.clone(), cd.scheme.clone());
        out.decls.push(cd);
    }
    if let Some(m) = &prog.main {
        out.main = Some(check(&ctx, "main", &m.expr, m.span)?);
    }
    Ok(out)
}

/// Every type variable in the tree must be bound by an enclosing scheme.
fn check_closed(t: &TExpr, bound: &[String]) -> TResult<()> {
    let check_ty = |ty: &SrcType, bound: &[String]| -> TResult<()> {
        match ty.free_vars().into_iter().find(|v| !bound.contains(v)) {
            Some(v) => Err(TypeError::new(format!("type variable `{v}` is not determined by the declared type"))),
            None => Ok(()),
        }
    };
    check_ty(&t.ty, bound)?;
    match &t.kind {
        TKind::Var(_, args) => args.iter().try_for_each(|a| check_ty(a, bound)),
        TKind::Unit => Ok(()),
        TKind::Pair(a, b) | TKind::App(a, b) => {
            check_closed(a, bound)?;
            check_closed(b, bound)
        }
        TKind::Proj(_, a) | TKind::Inj(_, a) | TKind::Delay(a) | TKind::Force(a) => check_closed(a, bound),
        TKind::Cons(ty, a) | TKind::Dest(ty, a) | TKind::Lam(_, ty, a) => {
            check_ty(ty, bound)?;
            check_closed(a, bound)
        }
        TKind::Case(s, _, a, _, b) => {
            check_closed(s, bound)?;
            check_closed(a, bound)?;
            check_closed(b, bound)
        }
        TKind::Fold { ty, scrut, body, result, .. } => {
            check_ty(ty, bound)?;
            check_ty(result, bound)?;
            check_closed(scrut, bound)?;
            check_closed(body, bound)
        }
        TKind::Let(_, scheme, a, b) => {
            let mut inner = bound.to_vec();
            inner.extend(scheme.vars.iter().cloned());
            check_closed(a, &inner)?;
            check_closed(b, bound)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_ast::{parse_expr, LamClosure};

    fn ty(e: &str) -> TResult<SrcType> {
        infer_expr(&TypeContext::new(), &parse_expr(e).unwrap())
    }

    #[test]
    fn unit_has_unit_type() {
        assert_eq!(ty("()").unwrap(), SrcType::Unit);
    }

    #[test]
    fn let_polymorphism_with_explicit_instantiation() {
        let t = ty("let id = fn (x: a) => x in (id[nat] #1, id[bool] true)").unwrap();
        assert_eq!(t, SrcType::prod(SrcType::nat(), SrcType::bool()));
    }

    #[test]
    fn instantiation_inferred_by_unification() {
        let t = ty("let id = fn (x: a) => x in (id #1, id true)").unwrap();
        assert_eq!(t, SrcType::prod(SrcType::nat(), SrcType::bool()));
    }

    #[test]
    fn fold_binder_sees_suspended_results() {
        let t = ty("fold[nat] #2 with x => case x of inj0 y => #0 | inj1 y => force y : nat").unwrap();
        assert_eq!(t, SrcType::nat());
    }

    #[test]
    fn unbound_variable() {
        assert!(ty("x").unwrap_err().message.contains("unbound"));
    }

    #[test]
    fn rigid_variables_do_not_unify_with_concrete_types() {
        assert!(ty("fn (x: a) => S x").is_err());
    }

    #[test]
    fn ambiguity_is_an_error() {
        let err = ty("let n = fn (u: unit) => nil[a] in let m = n () in ()").unwrap_err();
        assert!(err.message.contains("ambiguous"), "{err}");
    }

    #[test]
    fn branches_must_agree() {
        assert!(ty("case true of inj0 x => () | inj1 y => #0").unwrap_err().message.contains("disagree"));
    }

    #[test]
    fn numeral_value_checks_at_nat() {
        let one = Value::nat(1);
        assert!(check_value(&TypeContext::new(), &one, &SrcType::nat()).is_ok());
        assert!(check_value(&TypeContext::new(), &one, &SrcType::bool()).is_err());
    }

    #[test]
    fn closure_checked_against_environment() {
        let clo = Value::Lam(Rc::new(LamClosure {
            param: "x".into(),
            ann: SrcType::nat(),
            body: Rc::new(Expr::var("y")),
            env: ValueEnv::new().extend("y", Value::Unit),
        }));
        let ctx = TypeContext::new();
        assert!(check_value(&ctx, &clo, &SrcType::arrow(SrcType::nat(), SrcType::Unit)).is_ok());
        assert!(check_value(&ctx, &clo, &SrcType::arrow(SrcType::nat(), SrcType::nat())).is_err());
    }

    #[test]
    fn generalization_skips_context_variables() {
        let e = parse_expr("fn (x: a) => let g = fn (y: b) => (x, y) in g[unit]").unwrap();
        let t = elaborate(&TypeContext::new(), &e).unwrap();
        let TKind::Lam(_, _, body) = &t.kind else { panic!() };
        let TKind::Let(_, scheme, _, _) = &body.kind else { panic!() };
        assert_eq!(scheme.vars, vec!["b".to_string()]);
    }
}
