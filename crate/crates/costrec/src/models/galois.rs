//! Abstraction from size maps to constructor sizes and the matching
//! concretization, lifted through sums, products and functions.

use super::datatypes::reachable;
use crate::rec_lang::RecType;
use crate::semdom::{Conv, ExtNat, Sem, SemError, SemFn, SemResult, SizeMap};

/// Maps an all-constructors value of the closed, quantifier-free type `ty`
/// to the constructor-size model.
pub fn abs(ty: &RecType, w: &Sem) -> SemResult<Sem> {
    convert(ty, w, true)
}

/// Maps a constructor-size value to the all-constructors model, padding every
/// other reachable datatype with `∞`.
pub fn conc(ty: &RecType, v: &Sem) -> SemResult<Sem> {
    convert(ty, v, false)
}

pub fn apply_conv(c: &Conv, v: &Sem) -> SemResult<Sem> {
    match c {
        Conv::Abs(t) => abs(t, v),
        Conv::Conc(t) => conc(t, v),
    }
}

fn convert(ty: &RecType, v: &Sem, up: bool) -> SemResult<Sem> {
    if let Sem::Bot = v {
        return Ok(Sem::Bot);
    }
    Ok(match ty {
        RecType::C | RecType::Unit => v.clone(),
        RecType::Mu(_) => {
            if up {
                match v {
                    Sem::Map(m) => Sem::Size(m.get(ty)),
                    other => return Err(SemError::Internal(format!("abs expects a size map, found {other}"))),
                }
            } else {
                match v {
                    Sem::Size(n) => {
                        let mut m = SizeMap::new();
                        for r in reachable(ty) {
                            m.set(&r, ExtNat::Inf);
                        }
                        m.set(ty, *n);
                        Sem::map(m)
                    }
                    other => return Err(SemError::Internal(format!("conc expects a size, found {other}"))),
                }
            }
        }
        RecType::Prod(a, b) => Sem::pair(convert(a, &v.proj(0)?, up)?, convert(b, &v.proj(1)?, up)?),
        RecType::Sum(a, b) => match v {
            Sem::Ideal(i) => {
                let left = i.left.iter().map(|g| convert(a, g, up)).collect::<SemResult<Vec<_>>>()?;
                let right = i.right.iter().map(|g| convert(b, g, up)).collect::<SemResult<Vec<_>>>()?;
                Sem::ideal(left, right)
            }
            other => return Err(SemError::Internal(format!("expected an ideal, found {other}"))),
        },
        RecType::Arrow(a, b) => {
            let (pre, post) = if up {
                (Conv::Conc((**a).clone()), Conv::Abs((**b).clone()))
            } else {
                (Conv::Abs((**a).clone()), Conv::Conc((**b).clone()))
            };
            Sem::fun(SemFn::Wrap { pre, inner: v.clone(), post })
        }
        RecType::Forall(..) | RecType::Var(_) => {
            return Err(SemError::Internal(format!("abstraction at non-quantifier-free type {ty}")))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semdom::leq;

    #[test]
    fn datatypes_project_and_pad() {
        let l = RecType::list(RecType::nat());
        let c = conc(&l, &Sem::size(4)).unwrap();
        assert_eq!(c.to_string(), "{nat:∞, list:4}");
        assert_eq!(abs(&l, &c).unwrap().to_string(), "4");
    }

    #[test]
    fn conc_after_abs_grows() {
        let l = RecType::list(RecType::nat());
        let mut m = SizeMap::single(&l, ExtNat::Fin(3));
        m.set(&RecType::nat(), ExtNat::Fin(2));
        let w = Sem::map(m);
        let back = conc(&l, &abs(&l, &w).unwrap()).unwrap();
        assert!(leq(&w, &back).unwrap());
    }
}
