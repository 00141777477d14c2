use super::{cons, Carrier, Model};
use crate::extract::potential_type;
use crate::semdom::{Sem, SemError, SemResult};
use crate::source_ast::{SrcType, Value};

/// The least potential of a first-order value in a model.
pub fn value_potential(model: Model, v: &Value, ty: &SrcType) -> SemResult<Sem> {
    match (v, ty) {
        (Value::Unit, SrcType::Unit) => Ok(Sem::Unit),
        (Value::Pair(a, b), SrcType::Prod(s, t)) => {
            Ok(Sem::pair(value_potential(model, a, s)?, value_potential(model, b, t)?))
        }
        (Value::Inj(i, w), SrcType::Sum(s, t)) => {
            let p = value_potential(model, w, if *i == 0 { s } else { t })?;
            Ok(match model.carrier() {
                Carrier::Exact => Sem::Inj(*i, p.into()),
                _ if *i == 0 => Sem::ideal(vec![p], vec![]),
                _ => Sem::ideal(vec![], vec![p]),
            })
        }
        (Value::Cons(_, w), SrcType::Mu(_)) => {
            let unfolded = ty.unfold().expect("inductive type");
            let p = value_potential(model, w, &unfolded)?;
            cons(model, &potential_type(ty), p)
        }
        (Value::Lam(_) | Value::Delay(_), _) => {
            Err(SemError::Unsupported(format!("potential of a value of non-observable type {ty}")))
        }
        _ => Err(SemError::Internal(format!("value {v} does not have type {ty}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nil_and_small_trees() {
        let nil = Value::cons(SrcType::list(SrcType::nat()), Value::inj(0, Value::Unit));
        assert_eq!(value_potential(Model::Size, &nil, &SrcType::list(SrcType::nat())).unwrap().to_string(), "1");
        let tn = SrcType::tree(SrcType::nat());
        let emp = Value::cons(tn.clone(), Value::inj(0, Value::Unit));
        let node = Value::cons(tn.clone(), Value::inj(1, Value::pair(Value::nat(0), Value::pair(emp.clone(), emp))));
        assert_eq!(value_potential(Model::Size, &node, &tn).unwrap().to_string(), "3");
    }

    #[test]
    fn numerals_count_all_constructors() {
        let p = value_potential(Model::AllCons, &Value::nat(2), &SrcType::nat()).unwrap();
        assert_eq!(p.to_string(), "{nat:3}");
    }
}
