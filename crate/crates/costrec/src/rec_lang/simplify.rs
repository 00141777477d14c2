//! Bounded normalization of recurrence terms by projection, case and
//! application beta steps together with the additive identities for costs.

use std::collections::HashMap;
use std::rc::Rc;

use super::{subst, RecExpr, R};

pub const DEFAULT_SIMPLIFY_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimplifyStats {
    pub rewrites: usize,
    /// Set when the budget ran out before a normal form was reached.
    pub exhausted: bool,
}

pub fn simplify(e: &R) -> R {
    simplify_with_budget(e, DEFAULT_SIMPLIFY_BUDGET).0
}

pub fn simplify_with_budget(e: &R, budget: usize) -> (R, SimplifyStats) {
    let mut n = Normalizer { budget, stats: SimplifyStats::default(), memo: HashMap::new() };
    let out = n.norm(e);
    (out, n.stats)
}

struct Normalizer {
    budget: usize,
    stats: SimplifyStats,
    memo: HashMap<*const RecExpr, (R, R)>,
}

impl Normalizer {
    fn norm(&mut self, e: &R) -> R {
        let key = Rc::as_ptr(e);
        if let Some((_, out)) = self.memo.get(&key) {
            return out.clone();
        }
        let rebuilt = self.children(e);
        let out = self.root(rebuilt);
        self.memo.insert(key, (e.clone(), out.clone()));
        out
    }

    fn tick(&mut self) -> bool {
        if self.stats.rewrites >= self.budget {
            self.stats.exhausted = true;
            return false;
        }
        self.stats.rewrites += 1;
        true
    }

    fn children(&mut self, e: &R) -> R {
        let kids: Vec<R> = e.children().into_iter().cloned().collect();
        let normed: Vec<R> = kids.iter().map(|k| self.norm(k)).collect();
        if kids.iter().zip(&normed).all(|(a, b)| Rc::ptr_eq(a, b)) {
            return e.clone();
        }
        let mut it = normed.into_iter();
        let mut next = || it.next().expect("child count");
        Rc::new(match &**e {
            RecExpr::Plus(..) => RecExpr::Plus(next(), next()),
            RecExpr::Pair(..) => RecExpr::Pair(next(), next()),
            RecExpr::App(..) => RecExpr::App(next(), next()),
            RecExpr::Proj(i, _) => RecExpr::Proj(*i, next()),
            RecExpr::Inj(i, t, _) => RecExpr::Inj(*i, t.clone(), next()),
            RecExpr::Lam(x, t, _) => RecExpr::Lam(x.clone(), t.clone(), next()),
            RecExpr::TyLam(a, t, _) => RecExpr::TyLam(a.clone(), t.clone(), next()),
            RecExpr::TyApp(_, t) => RecExpr::TyApp(next(), t.clone()),
            RecExpr::Cons(t, _) => RecExpr::Cons(t.clone(), next()),
            RecExpr::Dest(t, _) => RecExpr::Dest(t.clone(), next()),
            RecExpr::Case(_, x0, t0, _, x1, t1, _) => {
                let (s, a, b) = (next(), next(), next());
                RecExpr::Case(s, x0.clone(), t0.clone(), a, x1.clone(), t1.clone(), b)
            }
            RecExpr::Fold { ty, binder, result, .. } => {
                let (scrut, body) = (next(), next());
                RecExpr::Fold { ty: ty.clone(), scrut, binder: binder.clone(), result: result.clone(), body }
            }
            RecExpr::Var(_) | RecExpr::Zero | RecExpr::One | RecExpr::Unit => unreachable!("leaf with children"),
        })
    }

    /// Rewrites at the root of a term whose children are already normal.
    fn root(&mut self, e: R) -> R {
        match &*e {
            RecExpr::Proj(i, p) => {
                if let RecExpr::Pair(a, b) = &**p {
                    if self.tick() {
                        return if *i == 0 { a.clone() } else { b.clone() };
                    }
                }
                e
            }
            RecExpr::Case(s, x0, _, a, x1, _, b) => {
                if let RecExpr::Inj(i, _, v) = &**s {
                    if self.tick() {
                        let (x, body) = if *i == 0 { (x0, a) } else { (x1, b) };
                        return self.norm(&subst(body, x, v));
                    }
                }
                e
            }
            RecExpr::App(f, arg) => {
                if let RecExpr::Lam(x, _, body) = &**f {
                    if self.tick() {
                        return self.norm(&subst(body, x, arg));
                    }
                }
                e
            }
            RecExpr::Plus(a, b) => {
                if matches!(**a, RecExpr::Zero) && self.tick() {
                    return b.clone();
                }
                if matches!(**b, RecExpr::Zero) && self.tick() {
                    return a.clone();
                }
                if let RecExpr::Plus(b0, b1) = &**b {
                    if self.tick() {
                        let left = self.root(RecExpr::plus(a.clone(), b0.clone()));
                        return self.root(RecExpr::plus(left, b1.clone()));
                    }
                }
                e
            }
            _ => e,
        }
    }
}
