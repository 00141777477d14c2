//! Translation of typed source programs into recurrences.
//!
//! Every source term `e : σ` becomes a pair `(cost, potential)` of type
//! `C × ⟨⟨σ⟩⟩`. Potentials of functions are functions from potentials to
//! complexities, so recurrences for higher-order code stay compositional.

use std::rc::Rc;

use crate::rec_lang::{check_rec, RecContext, RecExpr, RecShape, RecType, RecTypeError, R};
use crate::source_ast::{Shape, SrcType, TypeScheme};
use crate::typecheck::{CheckedDecl, CheckedProgram, TExpr, TKind};

/// `⟨⟨σ⟩⟩`, the type of potentials of values of type `σ`.
pub fn potential_type(ty: &SrcType) -> RecType {
    match ty {
        SrcType::Var(a) => RecType::Var(a.clone()),
        SrcType::Unit => RecType::Unit,
        SrcType::Prod(a, b) => RecType::prod(potential_type(a), potential_type(b)),
        SrcType::Sum(a, b) => RecType::sum(potential_type(a), potential_type(b)),
        SrcType::Arrow(a, b) => RecType::arrow(potential_type(a), complexity_type(b)),
        SrcType::Susp(a) => complexity_type(a),
        SrcType::Mu(f) => RecType::mu(potential_shape(f)),
    }
}

/// `‖σ‖ = C × ⟨⟨σ⟩⟩`.
pub fn complexity_type(ty: &SrcType) -> RecType {
    RecType::complexity(potential_type(ty))
}

pub fn potential_shape(f: &Shape) -> RecShape {
    match f {
        Shape::T => RecShape::T,
        Shape::Const(s) => RecShape::Const(potential_type(s)),
        Shape::Prod(a, b) => RecShape::prod(potential_shape(a), potential_shape(b)),
        Shape::Sum(a, b) => RecShape::sum(potential_shape(a), potential_shape(b)),
        Shape::Arrow(d, g) => {
            RecShape::Arrow(potential_type(d), Rc::new(RecShape::prod(RecShape::Const(RecType::C), potential_shape(g))))
        }
    }
}

/// `∀ᾱ. ⟨⟨σ⟩⟩` for a source scheme `∀ᾱ. σ`.
pub fn potential_scheme(s: &TypeScheme) -> RecType {
    s.vars.iter().rev().fold(potential_type(&s.body), |acc, a| RecType::forall(a, acc))
}

fn split(e: R) -> (R, R) {
    match &*e {
        RecExpr::Pair(c, p) => (c.clone(), p.clone()),
        _ => (RecExpr::proj(0, e.clone()), RecExpr::proj(1, e)),
    }
}

/// `‖e‖` for a typed core term.
pub fn extract(e: &TExpr) -> R {
    let pair = RecExpr::pair;
    match &e.kind {
        TKind::Var(x, inst) => {
            let v = inst.iter().fold(RecExpr::var(x), |acc, t| Rc::new(RecExpr::TyApp(acc, potential_type(t))));
            pair(RecExpr::zero(), v)
        }
        TKind::Unit => pair(RecExpr::zero(), Rc::new(RecExpr::Unit)),
        TKind::Pair(a, b) => {
            let (c0, p0) = split(extract(a));
            let (c1, p1) = split(extract(b));
            pair(RecExpr::plus(c0, c1), pair(p0, p1))
        }
        TKind::Proj(i, a) => {
            let (c, p) = split(extract(a));
            pair(c, RecExpr::proj(*i, p))
        }
        TKind::Inj(i, a) => {
            let (c, p) = split(extract(a));
            pair(c, Rc::new(RecExpr::Inj(*i, potential_type(&e.ty), p)))
        }
        TKind::Case(s, x0, a, x1, b) => {
            let (c, p) = split(extract(s));
            let SrcType::Sum(t0, t1) = &s.ty else { unreachable!("case on non-sum after type checking") };
            let case = Rc::new(RecExpr::Case(
                p,
                x0.clone(),
                potential_type(t0),
                extract(a),
                x1.clone(),
                potential_type(t1),
                extract(b),
            ));
            RecExpr::add_cost(c, case)
        }
        TKind::Lam(x, t, body) => {
            pair(RecExpr::zero(), Rc::new(RecExpr::Lam(x.clone(), potential_type(t), extract(body))))
        }
        TKind::App(f, a) => {
            let (c0, p0) = split(extract(f));
            let (c1, p1) = split(extract(a));
            RecExpr::add_cost(RecExpr::plus(c0, c1), Rc::new(RecExpr::App(p0, p1)))
        }
        TKind::Delay(a) => pair(RecExpr::zero(), extract(a)),
        TKind::Force(a) => {
            let (c, p) = split(extract(a));
            RecExpr::add_cost(c, p)
        }
        TKind::Cons(d, a) => {
            let (c, p) = split(extract(a));
            pair(c, Rc::new(RecExpr::Cons(potential_type(d), p)))
        }
        TKind::Dest(d, a) => {
            let (c, p) = split(extract(a));
            pair(c, Rc::new(RecExpr::Dest(potential_type(d), p)))
        }
        TKind::Fold { ty, scrut, binder, body, result } => {
            let (c, p) = split(extract(scrut));
            let fold = Rc::new(RecExpr::Fold {
                ty: potential_type(ty),
                scrut: p,
                binder: binder.clone(),
                result: complexity_type(result),
                body: RecExpr::add_cost(RecExpr::one(), extract(body)),
            });
            RecExpr::add_cost(c, fold)
        }
        TKind::Let(x, scheme, bound, body) => {
            let (c0, p0) = split(extract(bound));
            let generalized = generalize(&scheme.vars, &potential_type(&scheme.body), p0);
            let e1 = crate::rec_lang::subst(&extract(body), x, &generalized);
            RecExpr::add_cost(c0, e1)
        }
    }
}

/// `Λᾱ. p`, annotating each abstraction with the type of its body.
pub fn generalize(vars: &[String], body_ty: &RecType, p: R) -> R {
    let mut ty = body_ty.clone();
    let mut out = p;
    for a in vars.iter().rev() {
        out = Rc::new(RecExpr::TyLam(a.clone(), Some(ty.clone()), out));
        ty = RecType::forall(a, ty);
    }
    out
}

#[derive(Clone, Debug)]
pub struct ExtractedDecl {
    pub name: String,
    /// `∀ᾱ. ⟨⟨σ⟩⟩`.
    pub scheme: RecType,
    /// The scheme variables `ᾱ`, free in `complexity`.
    pub type_params: Vec<String>,
    /// `‖e‖ : C × ⟨⟨σ⟩⟩`.
    pub complexity: R,
    /// `Λᾱ. π1 ‖e‖`, the term bound to the name for later declarations.
    pub potential: R,
}

#[derive(Clone, Debug, Default)]
pub struct ExtractedProgram {
    pub decls: Vec<ExtractedDecl>,
    pub main: Option<ExtractedDecl>,
}

impl ExtractedProgram {
    pub fn decl(&self, name: &str) -> Option<&ExtractedDecl> {
        if name == "main" {
            return self.main.as_ref();
        }
        self.decls.iter().find(|d| d.name == name)
    }

    /// Context assigning every declaration its potential scheme.
    pub fn context(&self) -> RecContext {
        let mut ctx = RecContext::default();
        for d in &self.decls {
            ctx.vars.insert(d.name.clone(), d.scheme.clone());
        }
        ctx
    }

    /// Context of the declarations strictly before `name`.
    pub fn context_before(&self, name: &str) -> RecContext {
        let mut ctx = RecContext::default();
        for d in self.decls.iter().take_while(|d| d.name != name) {
            ctx.vars.insert(d.name.clone(), d.scheme.clone());
        }
        ctx
    }

    /// Applies `f` to every extracted term.
    pub fn map_terms(&self, mut f: impl FnMut(&R) -> R) -> ExtractedProgram {
        let mut go = |d: &ExtractedDecl| {
            let complexity = f(&d.complexity);
            let pot_ty = d.scheme.strip_foralls().1.clone();
            let potential = generalize(&d.type_params, &pot_ty, split(complexity.clone()).1);
            ExtractedDecl { complexity, potential, ..d.clone() }
        };
        ExtractedProgram { decls: self.decls.iter().map(&mut go).collect(), main: self.main.as_ref().map(go) }
    }
}

pub fn extract_decl(d: &CheckedDecl) -> ExtractedDecl {
    let complexity = extract(&d.body);
    let pot_ty = potential_type(&d.scheme.body);
    let potential = generalize(&d.scheme.vars, &pot_ty, split(complexity.clone()).1);
    ExtractedDecl {
        name: d.name.clone(),
        scheme: potential_scheme(&d.scheme),
        type_params: d.scheme.vars.clone(),
        complexity,
        potential,
    }
}

pub fn extract_program(p: &CheckedProgram) -> ExtractedProgram {
    ExtractedProgram { decls: p.decls.iter().map(extract_decl).collect(), main: p.main.as_ref().map(extract_decl) }
}

/// Checks that the extracted term of every declaration has type `C × ⟨⟨σ⟩⟩`
/// in the context of the declarations before it.
pub fn check_extracted(p: &ExtractedProgram) -> Result<(), RecTypeError> {
    let mut ctx = RecContext::default();
    let all = p.decls.iter().chain(p.main.iter());
    for d in all {
        let ty = check_rec(&ctx, &d.complexity).map_err(|e| RecTypeError(format!("in `{}`: {}", d.name, e.0)))?;
        let expected = RecType::complexity(d.scheme.strip_foralls().1.clone());
        if !ty.alpha_eq(&expected) {
            return Err(RecTypeError(format!("in `{}`: extracted type {} differs from {}", d.name, ty, expected)));
        }
        let pty = check_rec(&ctx, &d.potential)?;
        if !pty.alpha_eq(&d.scheme) {
            return Err(RecTypeError(format!("in `{}`: potential has type {}", d.name, pty)));
        }
        ctx.vars.insert(d.name.clone(), d.scheme.clone());
    }
    Ok(())
}
