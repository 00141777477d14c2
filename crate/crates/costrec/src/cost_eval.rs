//! Environment-based big-step cost semantics. Only fold unfoldings cost
//! anything: each one charges a single unit.

use std::rc::Rc;

use crate::source_ast::{DelayClosure, Expr, LamClosure, Program, Shape, Value, ValueEnv};

/// Name of the variable through which a fold's delayed recursive calls
/// receive their subvalue. It cannot be written in source programs.
pub const REC_VAR: &str = "%rec";

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub value: Value,
    pub cost: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}` during evaluation")]
    Unbound(String),
    #[error("evaluation is stuck: {0}")]
    Stuck(String),
    #[error("evaluation exceeded the limit of {0} rule applications")]
    StepLimit(u64),
}

type EResult<T> = Result<T, EvalError>;

/// Big-step evaluator with a rule-application budget and an independent
/// count of fold-rule firings.
#[derive(Debug)]
pub struct Evaluator {
    step_limit: u64,
    steps: u64,
    fold_firings: u64,
}

impl Default for Evaluator {
    fn default() -> Self {
        Self::new()
    }
}

impl Evaluator {
    pub fn new() -> Self {
        Self::with_limit(DEFAULT_STEP_LIMIT)
    }

    pub fn with_limit(step_limit: u64) -> Self {
        Evaluator { step_limit, steps: 0, fold_firings: 0 }
    }

    /// Number of times the fold rule has fired since construction.
    pub fn fold_firings(&self) -> u64 {
        self.fold_firings
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn tick(&mut self) -> EResult<()> {
        self.steps += 1;
        if self.steps > self.step_limit {
            Err(EvalError::StepLimit(self.step_limit))
        } else {
            Ok(())
        }
    }

    pub fn eval(&mut self, env: &ValueEnv, e: &Expr) -> EResult<EvalResult> {
        self.tick()?;
        let done = |value| Ok(EvalResult { value, cost: 0 });
        match e {
            Expr::Var(x, _) => match env.lookup(x) {
                Some(v) => done(v.clone()),
                None => Err(EvalError::Unbound(x.clone())),
            },
            Expr::Unit => done(Value::Unit),
            Expr::Pair(a, b) => {
                let a = self.eval(env, a)?;
                let b = self.eval(env, b)?;
                Ok(EvalResult { value: Value::pair(a.value, b.value), cost: a.cost + b.cost })
            }
            Expr::Proj(i, a) => {
                let r = self.eval(env, a)?;
                match r.value {
                    Value::Pair(v0, v1) => {
                        let v = if *i == 0 { v0 } else { v1 };
                        Ok(EvalResult { value: (*v).clone(), cost: r.cost })
                    }
                    other => Err(EvalError::Stuck(format!("projection from non-pair {other}"))),
                }
            }
            Expr::Inj(i, _, a) => {
                let r = self.eval(env, a)?;
                Ok(EvalResult { value: Value::inj(*i, r.value), cost: r.cost })
            }
            Expr::Case(s, x0, e0, x1, e1) => {
                let r = self.eval(env, s)?;
                let Value::Inj(i, v) = r.value else {
                    return Err(EvalError::Stuck(format!("case on non-injection {}", r.value)));
                };
                let (x, body) = if i == 0 { (x0, e0) } else { (x1, e1) };
                let b = self.eval(&env.extend(x, (*v).clone()), body)?;
                Ok(EvalResult { value: b.value, cost: r.cost + b.cost })
            }
            Expr::Lam(x, ann, body) => done(Value::Lam(Rc::new(LamClosure {
                param: x.clone(),
                ann: ann.clone(),
                body: body.clone(),
                env: env.clone(),
            }))),
            Expr::App(f, a) => {
                let rf = self.eval(env, f)?;
                let ra = self.eval(env, a)?;
                let r = self.apply(&rf.value, &ra.value)?;
                Ok(EvalResult { value: r.value, cost: rf.cost + ra.cost + r.cost })
            }
            Expr::Delay(body) => done(Value::Delay(Rc::new(DelayClosure { body: body.clone(), env: env.clone() }))),
            Expr::Force(a) => {
                let r = self.eval(env, a)?;
                let Value::Delay(c) = &r.value else {
                    return Err(EvalError::Stuck(format!("force of non-suspension {}", r.value)));
                };
                let b = self.eval(&c.env, &c.body)?;
                Ok(EvalResult { value: b.value, cost: r.cost + b.cost })
            }
            Expr::Cons(d, a) => {
                let r = self.eval(env, a)?;
                Ok(EvalResult { value: Value::cons(d.clone(), r.value), cost: r.cost })
            }
            Expr::Dest(_, a) => {
                let r = self.eval(env, a)?;
                match r.value {
                    Value::Cons(_, v) => Ok(EvalResult { value: (*v).clone(), cost: r.cost }),
                    other => Err(EvalError::Stuck(format!("destructor applied to {other}"))),
                }
            }
            Expr::Fold { ty, scrut, binder, body, result } => {
                let rs = self.eval(env, scrut)?;
                let Value::Cons(_, inner) = &rs.value else {
                    return Err(EvalError::Stuck(format!("fold over non-constructor {}", rs.value)));
                };
                let shape = ty.as_mu().ok_or_else(|| EvalError::Stuck(format!("fold at non-inductive {ty}")))?;
                let rec = Value::Delay(Rc::new(DelayClosure {
                    body: Rc::new(Expr::Fold {
                        ty: ty.clone(),
                        scrut: Rc::new(Expr::var(REC_VAR)),
                        binder: binder.clone(),
                        body: body.clone(),
                        result: result.clone(),
                    }),
                    env: env.clone(),
                }));
                let mapped = self.mapv(shape, REC_VAR, &rec, inner)?;
                self.fold_firings += 1;
                let rb = self.eval(&env.extend(binder, mapped), body)?;
                Ok(EvalResult { value: rb.value, cost: rs.cost + rb.cost + 1 })
            }
            Expr::Let(x, a, b) => {
                let ra = self.eval(env, a)?;
                let rb = self.eval(&env.extend(x, ra.value), b)?;
                Ok(EvalResult { value: rb.value, cost: ra.cost + rb.cost })
            }
            Expr::Map { shape, binder, fun, arg } => {
                let r = self.eval(env, arg)?;
                let v = self.mapv(shape, binder, fun, &r.value)?;
                Ok(EvalResult { value: v, cost: r.cost })
            }
            Expr::MapV { shape, binder, fun, arg } => done(self.mapv(shape, binder, fun, arg)?),
        }
    }

    /// Applies a function value to an argument.
    pub fn apply(&mut self, f: &Value, arg: &Value) -> EResult<EvalResult> {
        let Value::Lam(c) = f else {
            return Err(EvalError::Stuck(format!("application of non-function {f}")));
        };
        self.eval(&c.env.extend(&c.param, arg.clone()), &c.body)
    }

    fn mapv(&mut self, f: &Shape, y: &str, fun: &Value, v: &Value) -> EResult<Value> {
        self.tick()?;
        mapv_eval(f, y, fun, v)
    }
}

/// `mapv_F(y.v', v)`: applies `y ↦ v'` at each recursive position of `v`.
pub fn mapv_eval(f: &Shape, y: &str, fun: &Value, v: &Value) -> EResult<Value> {
    match (f, v) {
        (Shape::T, _) => Ok(subst_value(fun, v, y)),
        (Shape::Const(_), _) => Ok(v.clone()),
        (Shape::Prod(f0, f1), Value::Pair(v0, v1)) => {
            Ok(Value::pair(mapv_eval(f0, y, fun, v0)?, mapv_eval(f1, y, fun, v1)?))
        }
        (Shape::Sum(f0, f1), Value::Inj(i, w)) => {
            let fi = if *i == 0 { f0 } else { f1 };
            Ok(Value::inj(*i, mapv_eval(fi, y, fun, w)?))
        }
        (Shape::Arrow(_, body), Value::Lam(c)) => Ok(Value::Lam(Rc::new(LamClosure {
            param: c.param.clone(),
            ann: c.ann.clone(),
            body: Rc::new(Expr::Map {
                shape: (**body).clone(),
                binder: y.to_string(),
                fun: fun.clone(),
                arg: c.body.clone(),
            }),
            env: c.env.clone(),
        }))),
        _ => Err(EvalError::Stuck(format!("mapv shape does not match value {v}"))),
    }
}

/// `v'[v/y]` on values: closures record the binding in their environment.
pub fn subst_value(target: &Value, v: &Value, y: &str) -> Value {
    match target {
        Value::Var(x) if x == y => v.clone(),
        Value::Var(_) | Value::Unit => target.clone(),
        Value::Pair(a, b) => Value::pair(subst_value(a, v, y), subst_value(b, v, y)),
        Value::Inj(i, a) => Value::inj(*i, subst_value(a, v, y)),
        Value::Cons(d, a) => Value::cons(d.clone(), subst_value(a, v, y)),
        Value::Lam(c) => Value::Lam(Rc::new(LamClosure {
            param: c.param.clone(),
            ann: c.ann.clone(),
            body: c.body.clone(),
            env: c.env.extend(y, v.clone()),
        })),
        Value::Delay(c) => {
            Value::Delay(Rc::new(DelayClosure { body: c.body.clone(), env: c.env.extend(y, v.clone()) }))
        }
    }
}

/// Evaluates an expression in an environment with the default budget.
pub fn eval(env: &ValueEnv, e: &Expr) -> EResult<EvalResult> {
    Evaluator::new().eval(env, e)
}

/// Evaluates the top-level declarations in order. The costs of evaluating
/// the declarations themselves are returned alongside the environment.
pub fn program_env(prog: &Program) -> EResult<(ValueEnv, Vec<(String, u64)>)> {
    let mut env = ValueEnv::new();
    let mut costs = Vec::new();
    let mut ev = Evaluator::new();
    for d in &prog.decls {
        let r = ev.eval(&env, &d.expr)?;
        env = env.extend(&d.name, r.value);
        costs.push((d.name.clone(), r.cost));
    }
    Ok((env, costs))
}
