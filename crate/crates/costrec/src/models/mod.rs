//! Denotations of recurrence terms in the shipped models.

pub mod datatypes;
pub mod galois;
mod potential;

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use crate::extract::{ExtractedDecl, ExtractedProgram};
use crate::rec_lang::{RecExpr, RecShape, RecType, R};
use crate::semdom::{join, join_all, meet_all, ExtNat, FoldFn, FoldKey, Sem, SemEnv, SemError, SemFn, SemResult};

pub use datatypes::{bottom, cons, reachable, top, Carrier};
pub use galois::{abs, conc};
pub use potential::value_potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Values themselves, with exact costs.
    Exact,
    /// Inductive values measured by their number of main constructors.
    Size,
    /// Inductive values measured by the nesting depth of main constructors.
    Height,
    /// Inductive values measured by a size map over all datatypes.
    AllCons,
    /// Size maps for monomorphic code, constructor sizes across type
    /// abstraction.
    Merged,
    /// Constructor sizes with the cost order reversed, yielding lower bounds.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
    Exact,
}

impl Model {
    pub const ALL: [Model; 6] = [Model::Exact, Model::Size, Model::Height, Model::AllCons, Model::Merged, Model::Lower];

    pub fn name(self) -> &'static str {
        match self {
            Model::Exact => "exact",
            Model::Size => "size",
            Model::Height => "height",
            Model::AllCons => "allcons",
            Model::Merged => "merged",
            Model::Lower => "lower",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Model::Exact => Direction::Exact,
            Model::Lower => Direction::Lower,
            _ => Direction::Upper,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model `{s}` (expected one of exact, size, height, allcons, merged, lower)"))
    }
}

pub const DEFAULT_DENOTE_LIMIT: u64 = 20_000_000;
const SHARED_CACHE_LIMIT: usize = 200_000;

type SharedKey = (usize, usize, usize);

/// Evaluates recurrence terms in one model. Memo tables live as long as the
/// interpreter.
pub struct Interp {
    model: Model,
    steps: Cell<u64>,
    limit: u64,
    shared: RefCell<HashMap<SharedKey, (R, SemEnv, Sem)>>,
}

impl Interp {
    pub fn new(model: Model) -> Self {
        Self::with_limit(model, DEFAULT_DENOTE_LIMIT)
    }

    pub fn with_limit(model: Model, limit: u64) -> Self {
        Interp { model, steps: Cell::new(0), limit, shared: RefCell::new(HashMap::new()) }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    fn tick(&self) -> SemResult<()> {
        let s = self.steps.get() + 1;
        self.steps.set(s);
        if s > self.limit {
            Err(SemError::StepLimit(self.limit))
        } else {
            Ok(())
        }
    }

    /// The denotation of `e` under `env`. Subterms referenced from several
    /// places are evaluated once per environment.
    pub fn denote(&self, env: &SemEnv, e: &R) -> SemResult<Sem> {
        self.tick()?;
        if Rc::strong_count(e) == 1 {
            return self.denote_node(env, e);
        }
        let (v, t) = env.identity();
        let key = (Rc::as_ptr(e) as usize, v, t);
        if let Some((_, _, s)) = self.shared.borrow().get(&key) {
            return Ok(s.clone());
        }
        let out = self.denote_node(env, e)?;
        let mut cache = self.shared.borrow_mut();
        if cache.len() >= SHARED_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, (e.clone(), env.clone(), out.clone()));
        Ok(out)
    }

    fn denote_node(&self, env: &SemEnv, e: &R) -> SemResult<Sem> {
        match &**e {
            RecExpr::Var(x) => env.lookup(x).cloned().ok_or_else(|| SemError::Unbound(x.clone())),
            RecExpr::Zero => Ok(Sem::cost(0)),
            RecExpr::One => Ok(Sem::cost(1)),
            RecExpr::Plus(a, b) => {
                let x = self.denote(env, a)?.as_cost()?;
                let y = self.denote(env, b)?.as_cost()?;
                Ok(Sem::Cost(x.add(y)))
            }
            RecExpr::Unit => Ok(Sem::Unit),
            RecExpr::Pair(a, b) => Ok(Sem::pair(self.denote(env, a)?, self.denote(env, b)?)),
            RecExpr::Proj(i, a) => self.denote(env, a)?.proj(*i),
            RecExpr::Inj(i, _, a) => {
                let v = self.denote(env, a)?;
                Ok(self.inj(*i, v))
            }
            RecExpr::Case(s, x0, _, a, x1, _, b) => {
                let scrut = self.denote(env, s)?;
                self.case(env, &scrut, (x0, a), (x1, b))
            }
            RecExpr::Lam(x, _, body) => {
                Ok(Sem::fun(SemFn::Closure { param: x.clone(), body: body.clone(), env: env.clone() }))
            }
            RecExpr::App(f, a) => {
                let fv = self.denote(env, f)?;
                let av = self.denote(env, a)?;
                self.apply(&fv, &av)
            }
            RecExpr::TyLam(a, ann, body) => Ok(Sem::fun(SemFn::TyClosure {
                tyvar: a.clone(),
                body_ty: ann.clone(),
                body: body.clone(),
                env: env.clone(),
            })),
            RecExpr::TyApp(a, t) => {
                let f = self.denote(env, a)?;
                self.apply_type(&f, &env.close(t))
            }
            RecExpr::Cons(d, a) => {
                let v = self.denote(env, a)?;
                cons(self.model, &env.close(d), v)
            }
            RecExpr::Dest(d, a) => {
                let v = self.denote(env, a)?;
                self.dest(&env.close(d), &v)
            }
            RecExpr::Fold { ty, scrut, binder, result, body } => {
                let x = self.denote(env, scrut)?;
                let f = Rc::new(FoldFn {
                    ty: env.close(ty),
                    binder: binder.clone(),
                    body: body.clone(),
                    env: env.clone(),
                    result: env.close(result),
                    memo: RefCell::new(HashMap::new()),
                });
                self.apply_fold(&f, &x)
            }
        }
    }

    pub fn inj(&self, i: u8, v: Sem) -> Sem {
        match self.model.carrier() {
            Carrier::Exact => Sem::Inj(i, v.into()),
            _ if i == 0 => Sem::ideal(vec![v], vec![]),
            _ => Sem::ideal(vec![], vec![v]),
        }
    }

    fn case(&self, env: &SemEnv, scrut: &Sem, left: (&String, &R), right: (&String, &R)) -> SemResult<Sem> {
        match scrut {
            Sem::Inj(i, v) => {
                let (x, body) = if *i == 0 { left } else { right };
                self.denote(&env.bind(x, (**v).clone()), body)
            }
            Sem::Ideal(ideal) => {
                let mut acc = Sem::Bot;
                for (gens, (x, body)) in [(&ideal.left, left), (&ideal.right, right)] {
                    for g in gens {
                        let r = self.denote(&env.bind(x, g.clone()), body)?;
                        acc = join(&acc, &r)?;
                    }
                }
                Ok(acc)
            }
            Sem::Bot => Ok(Sem::Bot),
            other => Err(SemError::Internal(format!("case on {other}"))),
        }
    }

    pub fn apply(&self, f: &Sem, a: &Sem) -> SemResult<Sem> {
        self.tick()?;
        let Sem::Fun(fun) = f else {
            return match f {
                Sem::Bot => Ok(Sem::Bot),
                other => Err(SemError::Internal(format!("application of {other}"))),
            };
        };
        match &**fun {
            SemFn::Closure { param, body, env } => self.denote(&env.bind(param, a.clone()), body),
            SemFn::Const(v) => Ok(v.clone()),
            SemFn::Join(fs) => {
                let rs = fs.iter().map(|g| self.apply(g, a)).collect::<SemResult<Vec<_>>>()?;
                join_all(&rs)
            }
            SemFn::Meet(fs) => {
                let rs = fs.iter().map(|g| self.apply(g, a)).collect::<SemResult<Vec<_>>>()?;
                Ok(meet_all(&rs)?.unwrap_or(Sem::Bot))
            }
            SemFn::Wrap { pre, inner, post } => {
                let x = galois::apply_conv(pre, a)?;
                let y = self.apply(inner, &x)?;
                galois::apply_conv(post, &y)
            }
            SemFn::PostMap { shape, f, inner } => {
                let y = self.apply(inner, a)?;
                self.map_shape(shape, f, &y)
            }
            SemFn::Fold(ff) => self.apply_fold(ff, a),
            SemFn::TyClosure { .. } => Err(SemError::Internal("term application of a type abstraction".into())),
        }
    }

    /// Instantiates a type abstraction at a closed type. In the merged model
    /// a quantifier-free instance is passed through `conc ∘ abs`.
    pub fn apply_type(&self, f: &Sem, ty: &RecType) -> SemResult<Sem> {
        self.tick()?;
        let Sem::Fun(fun) = f else {
            return match f {
                Sem::Bot => Ok(Sem::Bot),
                other => Err(SemError::Internal(format!("type application of {other}"))),
            };
        };
        match &**fun {
            SemFn::TyClosure { tyvar, body_ty, body, env } => {
                let inner = env.bind_type(tyvar, ty.clone());
                let v = self.denote(&inner, body)?;
                if self.model != Model::Merged {
                    return Ok(v);
                }
                let Some(rho) = body_ty else {
                    return Err(SemError::Internal("type abstraction without a body type".into()));
                };
                let rho = inner.close(rho);
                if rho.is_quantifier_free() {
                    conc(&rho, &abs(&rho, &v)?)
                } else {
                    Ok(v)
                }
            }
            SemFn::Const(v) => Ok(v.clone()),
            SemFn::Join(fs) => {
                let rs = fs.iter().map(|g| self.apply_type(g, ty)).collect::<SemResult<Vec<_>>>()?;
                join_all(&rs)
            }
            SemFn::Meet(fs) => {
                let rs = fs.iter().map(|g| self.apply_type(g, ty)).collect::<SemResult<Vec<_>>>()?;
                Ok(meet_all(&rs)?.unwrap_or(Sem::Bot))
            }
            _ => Err(SemError::Internal("type application of a term function".into())),
        }
    }

    /// The action of a shape on a semantic function.
    pub fn map_shape(&self, shape: &RecShape, f: &Sem, z: &Sem) -> SemResult<Sem> {
        if let Sem::Bot = z {
            return Ok(Sem::Bot);
        }
        match shape {
            RecShape::T => self.apply(f, z),
            RecShape::Const(_) => Ok(z.clone()),
            RecShape::Prod(f0, f1) => {
                Ok(Sem::pair(self.map_shape(f0, f, &z.proj(0)?)?, self.map_shape(f1, f, &z.proj(1)?)?))
            }
            RecShape::Sum(f0, f1) => match z {
                Sem::Inj(i, w) => {
                    let fi = if *i == 0 { f0 } else { f1 };
                    Ok(Sem::Inj(*i, self.map_shape(fi, f, w)?.into()))
                }
                Sem::Ideal(ideal) => {
                    let left = ideal.left.iter().map(|g| self.map_shape(f0, f, g)).collect::<SemResult<Vec<_>>>()?;
                    let right = ideal.right.iter().map(|g| self.map_shape(f1, f, g)).collect::<SemResult<Vec<_>>>()?;
                    Ok(Sem::ideal(left, right))
                }
                other => Err(SemError::Internal(format!("shape map over {other}"))),
            },
            RecShape::Arrow(_, body) => {
                Ok(Sem::fun(SemFn::PostMap { shape: (**body).clone(), f: f.clone(), inner: z.clone() }))
            }
        }
    }

    /// The semantic destructor of a closed inductive type.
    pub fn dest(&self, d: &RecType, x: &Sem) -> SemResult<Sem> {
        let shape = d.as_mu().ok_or_else(|| SemError::Internal(format!("{d} is not inductive")))?;
        let x = if let Sem::Bot = x { bottom(self.model, d)? } else { x.clone() };
        match (self.model.carrier(), &x) {
            (Carrier::Exact, Sem::Roll(v)) => Ok((**v).clone()),
            (Carrier::Count { additive }, Sem::Size(n)) => {
                if self.model == Model::Lower {
                    let zs = datatypes::min_decomps(self.model, shape, n.pred())?;
                    match meet_all(&zs)? {
                        Some(z) => Ok(z),
                        None => top(self.model, &shape.apply(d)),
                    }
                } else {
                    join_all(&datatypes::max_decomps(self.model, shape, n.pred(), additive)?)
                }
            }
            (Carrier::Maps, Sem::Map(m)) => {
                let mut b = (**m).clone();
                b.set(d, m.get(d).pred());
                if m.get(d) == ExtNat::ZERO {
                    return Ok(Sem::Bot);
                }
                join_all(&datatypes::max_decomps_maps(shape, d, &b)?)
            }
            (_, other) => Err(SemError::Internal(format!("destructor applied to {other}"))),
        }
    }

    fn step(&self, f: &Rc<FoldFn>, z: &Sem) -> SemResult<Sem> {
        let shape = f.ty.as_mu().expect("fold over an inductive type");
        let mapped = self.map_shape(shape, &Sem::fun(SemFn::Fold(f.clone())), z)?;
        self.denote(&f.env.bind(&f.binder, mapped), &f.body)
    }

    /// The semantic fold: structural recursion in the exact model, the join
    /// over maximal decompositions in upper models and the meet over minimal
    /// decompositions in the lower model.
    pub fn apply_fold(&self, f: &Rc<FoldFn>, x: &Sem) -> SemResult<Sem> {
        let d = &f.ty;
        let shape = d.as_mu().ok_or_else(|| SemError::Internal(format!("fold over {d}")))?;
        let x = if let Sem::Bot = x { bottom(self.model, d)? } else { x.clone() };
        let key = match (&x, self.model.carrier()) {
            (Sem::Roll(v), Carrier::Exact) => return self.step(f, v),
            (Sem::Size(n), Carrier::Count { .. }) => {
                if n.is_inf() {
                    return if self.model == Model::Lower {
                        bottom(self.model, &f.result)
                    } else {
                        top(self.model, &f.result)
                    };
                }
                FoldKey::Size(*n)
            }
            (Sem::Map(m), Carrier::Maps) => {
                if m.get(d).is_inf() {
                    return top(self.model, &f.result);
                }
                FoldKey::Map(m.restrict(&reachable(d)))
            }
            (other, _) => return Err(SemError::Internal(format!("fold applied to {other}"))),
        };
        if let Some(v) = f.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let out = match (&key, self.model.carrier()) {
            (FoldKey::Size(n), Carrier::Count { additive }) => {
                if self.model == Model::Lower {
                    let zs = datatypes::min_decomps(self.model, shape, n.pred())?;
                    let rs = zs.iter().map(|z| self.step(f, z)).collect::<SemResult<Vec<_>>>()?;
                    match meet_all(&rs)? {
                        Some(v) => v,
                        None => top(self.model, &f.result)?,
                    }
                } else {
                    let zs = datatypes::max_decomps(self.model, shape, n.pred(), additive)?;
                    let rs = zs.iter().map(|z| self.step(f, z)).collect::<SemResult<Vec<_>>>()?;
                    join_all(&rs)?
                }
            }
            (FoldKey::Map(m), _) => {
                if m.get(d) == ExtNat::ZERO {
                    Sem::Bot
                } else {
                    let mut b = m.clone();
                    b.set(d, m.get(d).pred());
                    let zs = datatypes::max_decomps_maps(shape, d, &b)?;
                    let rs = zs.iter().map(|z| self.step(f, z)).collect::<SemResult<Vec<_>>>()?;
                    join_all(&rs)?
                }
            }
            _ => unreachable!("fold key matches the carrier"),
        };
        f.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// Binds every declaration's potential in order.
    pub fn program_env(&self, prog: &ExtractedProgram) -> SemResult<SemEnv> {
        let mut env = SemEnv::new();
        for d in &prog.decls {
            let v = self.denote(&env, &d.potential)?;
            env = env.bind(&d.name, v);
        }
        Ok(env)
    }

    /// The complexity of a declaration instantiated at `ty_args` (missing
    /// type arguments default to `nat`) and applied to argument potentials.
    /// Returns the total cost and the final potential. The step limit applies
    /// to each call separately.
    pub fn analyze(
        &self,
        env: &SemEnv,
        decl: &ExtractedDecl,
        ty_args: &[RecType],
        args: &[Sem],
    ) -> SemResult<(ExtNat, Sem)> {
        self.steps.set(0);
        let tys: Vec<RecType> =
            (0..decl.type_params.len()).map(|i| ty_args.get(i).cloned().unwrap_or_else(RecType::nat)).collect();
        let mut tenv = env.clone();
        for (a, t) in decl.type_params.iter().zip(&tys) {
            tenv = tenv.bind_type(a, t.clone());
        }
        let mut cost = self.denote(&tenv, &decl.complexity)?.proj(0)?.as_cost()?;
        let mut f = self.denote(env, &decl.potential)?;
        for t in &tys {
            f = self.apply_type(&f, t)?;
        }
        for a in args {
            let r = self.apply(&f, a)?;
            cost = cost.add(r.proj(0)?.as_cost()?);
            f = r.proj(1)?;
        }
        Ok((cost, f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::extract_program;
    use crate::source_ast::parse_program;
    use crate::typecheck::check_program;

    fn program(src: &str) -> ExtractedProgram {
        extract_program(&check_program(&parse_program(src).unwrap()).unwrap())
    }

    fn run(model: Model, src: &str, name: &str, args: &[Sem]) -> (ExtNat, Sem) {
        let p = program(src);
        let i = Interp::new(model);
        let env = i.program_env(&p).unwrap();
        i.analyze(&env, p.decl(name).unwrap(), &[], args).unwrap()
    }

    const COPY: &str = "let copy = fn (t: tree<nat>) => foldtree[nat] t of emp => emp[nat] \
        | node(x, l, r) => node[nat](x, force l, force r) : tree<nat>;";

    #[test]
    fn copy_costs_its_size() {
        // Trees have odd sizes; at even sizes the node branch loses one.
        for n in 1..=7u64 {
            let (c, p) = run(Model::Size, COPY, "copy", &[Sem::size(n)]);
            let expected = if n % 2 == 1 { n } else { n - 1 };
            assert_eq!(c, ExtNat::Fin(expected));
            assert_eq!(p.to_string(), expected.to_string());
        }
    }

    #[test]
    fn numerals_in_allcons() {
        let (_, p) = run(Model::AllCons, "let three = #3;", "three", &[]);
        assert_eq!(p.to_string(), "{nat:4}");
    }

    #[test]
    fn nil_has_size_one() {
        let (_, p) = run(Model::Size, "let e = nil[nat];", "e", &[]);
        assert_eq!(p.to_string(), "1");
    }
}
