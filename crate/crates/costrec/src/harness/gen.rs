//! Random first-order values with a bound on their constructor count.

use rand::Rng;

use crate::source_ast::{SrcType, Value};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot generate values of type {0}")]
pub struct GenError(pub String);

/// How a generated value spends its budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenMode {
    /// The smallest value of the type.
    Minimal,
    /// All spare budget goes to the last recursive position.
    Spine,
    /// Spare budget is split evenly between recursive positions.
    Balanced,
    Random,
}

impl GenMode {
    /// Modes cycle with the trial index so that every boundary shape recurs.
    pub fn for_trial(index: usize) -> GenMode {
        match index % 5 {
            0 => GenMode::Minimal,
            1 => GenMode::Spine,
            2 => GenMode::Balanced,
            _ => GenMode::Random,
        }
    }
}

/// Constructor count of the smallest value of `ty`.
pub fn min_size(ty: &SrcType) -> Result<u64, GenError> {
    min_size_in(ty, &mut Vec::new())?.ok_or_else(|| GenError(format!("{ty} (uninhabited)")))
}

fn min_size_in(ty: &SrcType, stack: &mut Vec<SrcType>) -> Result<Option<u64>, GenError> {
    Ok(match ty {
        SrcType::Unit => Some(0),
        SrcType::Prod(a, b) => match (min_size_in(a, stack)?, min_size_in(b, stack)?) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        },
        SrcType::Sum(a, b) => match (min_size_in(a, stack)?, min_size_in(b, stack)?) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        },
        SrcType::Mu(_) => {
            if stack.contains(ty) {
                return Ok(None);
            }
            stack.push(ty.clone());
            let inner = min_size_in(&ty.unfold().expect("inductive type"), stack);
            stack.pop();
            inner?.map(|n| n + 1)
        }
        SrcType::Var(_) | SrcType::Arrow(..) | SrcType::Susp(_) => return Err(GenError(ty.to_string())),
    })
}

fn grows(ty: &SrcType) -> bool {
    match ty {
        SrcType::Mu(_) => true,
        SrcType::Prod(a, b) | SrcType::Sum(a, b) => grows(a) || grows(b),
        _ => false,
    }
}

/// A value of type `ty` with at most `budget` constructors; at least the
/// type's minimum size is always used.
pub fn gen_value(ty: &SrcType, budget: u64, mode: GenMode, rng: &mut impl Rng) -> Result<Value, GenError> {
    let budget = budget.max(min_size(ty)?);
    gen(ty, budget, mode, rng)
}

fn gen(ty: &SrcType, budget: u64, mode: GenMode, rng: &mut impl Rng) -> Result<Value, GenError> {
    Ok(match ty {
        SrcType::Unit => Value::Unit,
        SrcType::Prod(a, b) => {
            let (ma, mb) = (min_size(a)?, min_size(b)?);
            let extra = budget.saturating_sub(ma + mb);
            let (ga, gb) = (grows(a), grows(b));
            let ea = match (mode, ga, gb) {
                (GenMode::Minimal, ..) => 0,
                (_, true, false) => extra,
                (_, _, true) if !ga => 0,
                (GenMode::Spine, ..) => 0,
                (GenMode::Balanced, ..) => extra / 2,
                (GenMode::Random, ..) => rng.gen_range(0..=extra),
            };
            let eb = if mode == GenMode::Minimal { 0 } else { extra - ea };
            Value::pair(gen(a, ma + ea, mode, rng)?, gen(b, mb + eb, mode, rng)?)
        }
        SrcType::Sum(a, b) => {
            let ok = |t: &SrcType| min_size_in(t, &mut Vec::new()).ok().flatten().filter(|m| *m <= budget);
            let (la, lb) = (ok(a), ok(b));
            let side = match (la, lb) {
                (Some(_), None) => 0,
                (None, Some(_)) => 1,
                (None, None) => return Err(GenError(format!("{ty} within budget {budget}"))),
                (Some(x), Some(y)) => match mode {
                    GenMode::Minimal => u8::from(y < x),
                    _ if grows(a) != grows(b) => {
                        let growing = u8::from(grows(b));
                        let keep = mode != GenMode::Random || rng.gen_bool(0.75);
                        if keep {
                            growing
                        } else {
                            1 - growing
                        }
                    }
                    _ => u8::from(rng.gen_bool(0.5)),
                },
            };
            let inner = if side == 0 { a } else { b };
            Value::inj(side, gen(inner, budget, mode, rng)?)
        }
        SrcType::Mu(_) => {
            let unfolded = ty.unfold().expect("inductive type");
            Value::cons(ty.clone(), gen(&unfolded, budget - 1, mode, rng)?)
        }
        SrcType::Var(_) | SrcType::Arrow(..) | SrcType::Susp(_) => return Err(GenError(ty.to_string())),
    })
}
