//! Per-model interpretation of inductive types: top and bottom elements,
//! constructor sizes, and the enumeration of maximal or minimal
//! decompositions used by destructors and folds.

use std::collections::BTreeSet;

use super::Model;
use crate::rec_lang::{RecShape, RecType};
use crate::semdom::{prune_max, prune_min, ExtNat, Sem, SemError, SemFn, SemResult, SizeMap};

/// How a model measures inductive values.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Carrier {
    Exact,
    /// A single number counting main constructors; `additive` selects size
    /// (sum over recursive positions) or height (maximum).
    Count {
        additive: bool,
    },
    /// A size map counting every datatype's constructors.
    Maps,
}

impl Model {
    pub fn carrier(self) -> Carrier {
        match self {
            Model::Exact => Carrier::Exact,
            Model::Size | Model::Lower => Carrier::Count { additive: true },
            Model::Height => Carrier::Count { additive: false },
            Model::AllCons | Model::Merged => Carrier::Maps,
        }
    }
}

fn unsupported_arrow() -> SemError {
    SemError::Unsupported("function types inside a datatype's shape".into())
}

fn shape_of(d: &RecType) -> SemResult<&RecShape> {
    d.as_mu().map(|f| &**f).ok_or_else(|| SemError::Internal(format!("{d} is not an inductive type")))
}

fn shape_mentions_t(f: &RecShape) -> bool {
    match f {
        RecShape::T => true,
        RecShape::Const(_) => false,
        RecShape::Prod(a, b) | RecShape::Sum(a, b) => shape_mentions_t(a) || shape_mentions_t(b),
        RecShape::Arrow(_, b) => shape_mentions_t(b),
    }
}

/// The inductive types occurring in a closed type, itself included.
pub fn reachable(ty: &RecType) -> BTreeSet<RecType> {
    let mut out = BTreeSet::new();
    collect_reachable(ty, &mut out);
    out
}

fn collect_reachable(ty: &RecType, out: &mut BTreeSet<RecType>) {
    match ty {
        RecType::Var(_) | RecType::C | RecType::Unit => {}
        RecType::Prod(a, b) | RecType::Sum(a, b) | RecType::Arrow(a, b) => {
            collect_reachable(a, out);
            collect_reachable(b, out);
        }
        RecType::Forall(_, b) => collect_reachable(b, out),
        RecType::Mu(f) => {
            if out.insert(ty.clone()) {
                collect_shape(f, out);
            }
        }
    }
}

fn collect_shape(f: &RecShape, out: &mut BTreeSet<RecType>) {
    match f {
        RecShape::T => {}
        RecShape::Const(s) => collect_reachable(s, out),
        RecShape::Prod(a, b) | RecShape::Sum(a, b) => {
            collect_shape(a, out);
            collect_shape(b, out);
        }
        RecShape::Arrow(s, b) => {
            collect_reachable(s, out);
            collect_shape(b, out);
        }
    }
}

fn all_infinite(d: &RecType) -> SizeMap {
    let mut m = SizeMap::new();
    for r in reachable(d) {
        m.set(&r, ExtNat::Inf);
    }
    m
}

/// Greatest element of a closed type.
pub fn top(model: Model, ty: &RecType) -> SemResult<Sem> {
    Ok(match ty {
        RecType::C => Sem::Cost(ExtNat::Inf),
        RecType::Unit => Sem::Unit,
        RecType::Prod(a, b) => Sem::pair(top(model, a)?, top(model, b)?),
        RecType::Sum(a, b) => Sem::ideal(vec![top(model, a)?], vec![top(model, b)?]),
        RecType::Arrow(_, b) => Sem::fun(SemFn::Const(top(model, b)?)),
        RecType::Mu(_) => match model.carrier() {
            Carrier::Count { .. } => Sem::Size(ExtNat::Inf),
            Carrier::Maps => Sem::map(all_infinite(ty)),
            Carrier::Exact => return Err(SemError::Unsupported("top element in the exact model".into())),
        },
        RecType::Forall(..) => return Err(SemError::Unsupported(format!("top element of {ty}"))),
        RecType::Var(a) => return Err(SemError::Internal(format!("open type variable {a}"))),
    })
}

/// Least element of a closed type: cost 0, the smallest value of each
/// datatype, empty ideals, pointwise for pairs and functions.
pub fn bottom(model: Model, ty: &RecType) -> SemResult<Sem> {
    Ok(match ty {
        RecType::C => Sem::cost(0),
        RecType::Unit => Sem::Unit,
        RecType::Prod(a, b) => Sem::pair(bottom(model, a)?, bottom(model, b)?),
        RecType::Sum(..) => Sem::ideal(vec![], vec![]),
        RecType::Arrow(_, b) => Sem::fun(SemFn::Const(bottom(model, b)?)),
        RecType::Mu(_) => match model.carrier() {
            Carrier::Count { .. } => Sem::size(1),
            Carrier::Maps => Sem::map(SizeMap::single(ty, ExtNat::ONE)),
            Carrier::Exact => Sem::Bot,
        },
        RecType::Forall(..) | RecType::Var(_) => Sem::Bot,
    })
}

fn pair_parts(z: &Sem) -> SemResult<(Sem, Sem)> {
    Ok((z.proj(0)?, z.proj(1)?))
}

/// Generators of an ideal-valued position, by side.
fn ideal_sides(z: &Sem) -> SemResult<(Vec<Sem>, Vec<Sem>)> {
    match z {
        Sem::Ideal(i) => Ok((i.left.clone(), i.right.clone())),
        Sem::Bot => Ok((vec![], vec![])),
        other => Err(SemError::Internal(format!("expected an ideal, found {other}"))),
    }
}

/// `size_F(z)` for the counting carriers.
pub fn size_of(f: &RecShape, z: &Sem, additive: bool) -> SemResult<ExtNat> {
    match f {
        RecShape::T => match z {
            Sem::Size(n) => Ok(*n),
            Sem::Bot => Ok(ExtNat::ONE),
            other => Err(SemError::Internal(format!("expected a size, found {other}"))),
        },
        RecShape::Const(_) => Ok(ExtNat::ZERO),
        RecShape::Sum(f0, f1) => {
            let (l, r) = ideal_sides(z)?;
            let mut best = ExtNat::ZERO;
            for g in &l {
                best = best.max(size_of(f0, g, additive)?);
            }
            for g in &r {
                best = best.max(size_of(f1, g, additive)?);
            }
            Ok(best)
        }
        RecShape::Prod(f0, f1) => {
            let (a, b) = pair_parts(z)?;
            let (x, y) = (size_of(f0, &a, additive)?, size_of(f1, &b, additive)?);
            Ok(if additive { x.add(y) } else { x.max(y) })
        }
        RecShape::Arrow(..) => Err(unsupported_arrow()),
    }
}

fn as_map(z: &Sem, d: &RecType) -> SemResult<SizeMap> {
    match z {
        Sem::Map(m) => Ok((**m).clone()),
        Sem::Bot => Ok(SizeMap::single(d, ExtNat::ONE)),
        other => Err(SemError::Internal(format!("expected a size map, found {other}"))),
    }
}

/// Products add at the main datatype and take maxima elsewhere.
fn combine(a: &SizeMap, b: &SizeMap, main: &RecType) -> SizeMap {
    let mut m = a.join(b);
    m.set(main, a.get(main).add(b.get(main)));
    m
}

/// `size_{F,δ}(z)` for size maps.
pub fn size_all(f: &RecShape, main: &RecType, z: &Sem) -> SemResult<SizeMap> {
    match f {
        RecShape::T => as_map(z, main),
        RecShape::Const(s) => size_of_type(s, main, z),
        RecShape::Sum(f0, f1) => {
            let (l, r) = ideal_sides(z)?;
            let mut m = SizeMap::new();
            for g in &l {
                m = m.join(&size_all(f0, main, g)?);
            }
            for g in &r {
                m = m.join(&size_all(f1, main, g)?);
            }
            Ok(m)
        }
        RecShape::Prod(f0, f1) => {
            let (a, b) = pair_parts(z)?;
            Ok(combine(&size_all(f0, main, &a)?, &size_all(f1, main, &b)?, main))
        }
        RecShape::Arrow(..) => Err(unsupported_arrow()),
    }
}

fn size_of_type(ty: &RecType, main: &RecType, z: &Sem) -> SemResult<SizeMap> {
    match ty {
        RecType::C | RecType::Unit => Ok(SizeMap::new()),
        RecType::Mu(_) => as_map(z, ty),
        RecType::Sum(a, b) => {
            let (l, r) = ideal_sides(z)?;
            let mut m = SizeMap::new();
            for g in &l {
                m = m.join(&size_of_type(a, main, g)?);
            }
            for g in &r {
                m = m.join(&size_of_type(b, main, g)?);
            }
            Ok(m)
        }
        RecType::Prod(a, b) => {
            let (x, y) = pair_parts(z)?;
            Ok(combine(&size_of_type(a, main, &x)?, &size_of_type(b, main, &y)?, main))
        }
        RecType::Arrow(..) | RecType::Forall(..) => Err(unsupported_arrow()),
        RecType::Var(a) => Err(SemError::Internal(format!("open type variable {a}"))),
    }
}

/// The semantic constructor of a closed inductive type.
pub fn cons(model: Model, d: &RecType, z: Sem) -> SemResult<Sem> {
    let f = shape_of(d)?;
    Ok(match model.carrier() {
        Carrier::Exact => Sem::Roll(z.into()),
        Carrier::Count { additive } => Sem::Size(ExtNat::ONE.add(size_of(f, &z, additive)?)),
        Carrier::Maps => {
            let mut m = size_all(f, d, &z)?;
            m.set(d, m.get(d).add(ExtNat::ONE));
            Sem::map(m)
        }
    })
}

fn cartesian(xs: &[Sem], ys: &[Sem]) -> Vec<Sem> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            out.push(Sem::pair(x.clone(), y.clone()));
        }
    }
    out
}

/// Budgets `(b0, b1)` with `b0 + b1 = b`.
fn splits(b: ExtNat) -> Vec<(ExtNat, ExtNat)> {
    match b {
        ExtNat::Inf => vec![(ExtNat::Inf, ExtNat::Inf)],
        ExtNat::Fin(n) => (0..=n).map(|k| (ExtNat::Fin(k), ExtNat::Fin(n - k))).collect(),
    }
}

/// Maximal `z` with `size_F(z) ≤ b`, for the counting carriers. Non-recursive
/// positions are at top.
pub fn max_decomps(model: Model, f: &RecShape, b: ExtNat, additive: bool) -> SemResult<Vec<Sem>> {
    Ok(match f {
        RecShape::T => {
            if b >= ExtNat::ONE {
                vec![Sem::Size(b)]
            } else {
                vec![]
            }
        }
        RecShape::Const(s) => vec![top(model, s)?],
        RecShape::Sum(f0, f1) => {
            vec![Sem::ideal(max_decomps(model, f0, b, additive)?, max_decomps(model, f1, b, additive)?)]
        }
        RecShape::Prod(f0, f1) => {
            if additive && shape_mentions_t(f0) && shape_mentions_t(f1) {
                let mut out = Vec::new();
                for (b0, b1) in splits(b) {
                    out.extend(cartesian(
                        &max_decomps(model, f0, b0, additive)?,
                        &max_decomps(model, f1, b1, additive)?,
                    ));
                }
                prune_max(out)
            } else {
                cartesian(&max_decomps(model, f0, b, additive)?, &max_decomps(model, f1, b, additive)?)
            }
        }
        RecShape::Arrow(..) => return Err(unsupported_arrow()),
    })
}

/// Minimal `z` with `size_F(z) ≥ b` in the constructor-size carrier.
/// Non-recursive positions are at bottom.
pub fn min_decomps(model: Model, f: &RecShape, b: ExtNat) -> SemResult<Vec<Sem>> {
    Ok(match f {
        RecShape::T => vec![Sem::Size(b.max(ExtNat::ONE))],
        RecShape::Const(s) => {
            if b == ExtNat::ZERO {
                vec![bottom(model, s)?]
            } else {
                vec![]
            }
        }
        RecShape::Sum(f0, f1) => {
            if b == ExtNat::ZERO {
                vec![Sem::ideal(vec![], vec![])]
            } else {
                let mut out: Vec<Sem> =
                    min_decomps(model, f0, b)?.into_iter().map(|z| Sem::ideal(vec![z], vec![])).collect();
                out.extend(min_decomps(model, f1, b)?.into_iter().map(|z| Sem::ideal(vec![], vec![z])));
                out
            }
        }
        RecShape::Prod(f0, f1) => {
            let (t0, t1) = (shape_mentions_t(f0), shape_mentions_t(f1));
            let budgets: Vec<(ExtNat, ExtNat)> = match (t0, t1) {
                (true, true) => match b {
                    ExtNat::Inf => vec![(ExtNat::Inf, ExtNat::ZERO), (ExtNat::ZERO, ExtNat::Inf)],
                    _ => splits(b),
                },
                (true, false) => vec![(b, ExtNat::ZERO)],
                (false, true) => vec![(ExtNat::ZERO, b)],
                (false, false) => vec![(b, ExtNat::ZERO), (ExtNat::ZERO, b)],
            };
            let mut out = Vec::new();
            for (b0, b1) in budgets {
                out.extend(cartesian(&min_decomps(model, f0, b0)?, &min_decomps(model, f1, b1)?));
            }
            prune_min(out)
        }
        RecShape::Arrow(..) => return Err(unsupported_arrow()),
    })
}

/// Maximal `z` with `size_{F,δ}(z) ≤ b` for size maps.
pub fn max_decomps_maps(f: &RecShape, main: &RecType, b: &SizeMap) -> SemResult<Vec<Sem>> {
    Ok(match f {
        RecShape::T => {
            if b.get(main) >= ExtNat::ONE {
                vec![Sem::map(b.restrict(&reachable(main)))]
            } else {
                vec![]
            }
        }
        RecShape::Const(s) => max_elements(s, b)?,
        RecShape::Sum(f0, f1) => {
            vec![Sem::ideal(max_decomps_maps(f0, main, b)?, max_decomps_maps(f1, main, b)?)]
        }
        RecShape::Prod(f0, f1) => {
            if shape_mentions_t(f0) && shape_mentions_t(f1) {
                let mut out = Vec::new();
                for (b0, b1) in splits(b.get(main)) {
                    let (mut m0, mut m1) = (b.clone(), b.clone());
                    m0.set(main, b0);
                    m1.set(main, b1);
                    out.extend(cartesian(&max_decomps_maps(f0, main, &m0)?, &max_decomps_maps(f1, main, &m1)?));
                }
                prune_max(out)
            } else {
                cartesian(&max_decomps_maps(f0, main, b)?, &max_decomps_maps(f1, main, b)?)
            }
        }
        RecShape::Arrow(..) => return Err(unsupported_arrow()),
    })
}

/// Maximal elements of a constant type whose size map stays within `b`.
fn max_elements(ty: &RecType, b: &SizeMap) -> SemResult<Vec<Sem>> {
    Ok(match ty {
        RecType::C => vec![Sem::Cost(ExtNat::Inf)],
        RecType::Unit => vec![Sem::Unit],
        RecType::Mu(_) => {
            if b.get(ty) >= ExtNat::ONE {
                vec![Sem::map(b.restrict(&reachable(ty)))]
            } else {
                vec![]
            }
        }
        RecType::Sum(x, y) => vec![Sem::ideal(max_elements(x, b)?, max_elements(y, b)?)],
        RecType::Prod(x, y) => cartesian(&max_elements(x, b)?, &max_elements(y, b)?),
        RecType::Arrow(..) | RecType::Forall(..) => return Err(unsupported_arrow()),
        RecType::Var(a) => return Err(SemError::Internal(format!("open type variable {a}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list_shape() -> RecShape {
        (**RecType::list(RecType::nat()).as_mu().unwrap()).clone()
    }

    fn tree_shape() -> RecShape {
        (**RecType::tree(RecType::nat()).as_mu().unwrap()).clone()
    }

    #[test]
    fn list_sizes_count_the_tail() {
        let z = Sem::ideal(vec![], vec![Sem::pair(Sem::Size(ExtNat::Inf), Sem::size(4))]);
        assert_eq!(size_of(&list_shape(), &z, true).unwrap(), ExtNat::Fin(4));
        let nil = Sem::ideal(vec![Sem::Unit], vec![]);
        let d = RecType::list(RecType::nat());
        assert_eq!(cons(Model::Size, &d, nil).unwrap().to_string(), "1");
    }

    #[test]
    fn tree_sizes_add_or_max() {
        let z = Sem::ideal(vec![], vec![Sem::pair(Sem::size(7), Sem::pair(Sem::size(2), Sem::size(3)))]);
        assert_eq!(size_of(&tree_shape(), &z, true).unwrap(), ExtNat::Fin(5));
        assert_eq!(size_of(&tree_shape(), &z, false).unwrap(), ExtNat::Fin(3));
        assert_eq!(size_of(&RecShape::Const(RecType::nat()), &Sem::size(9), true).unwrap(), ExtNat::ZERO);
    }

    #[test]
    fn tree_decomposition_splits_the_budget() {
        let zs = max_decomps(Model::Size, &tree_shape(), ExtNat::Fin(3), true).unwrap();
        assert_eq!(zs.len(), 1);
        assert_eq!(zs[0].to_string(), "{*}⊔{(∞, (1, 2)), (∞, (2, 1))}");
    }

    #[test]
    fn minimal_list_decompositions() {
        let zs = min_decomps(Model::Lower, &list_shape(), ExtNat::Fin(3)).unwrap();
        assert_eq!(zs.len(), 1);
        assert_eq!(zs[0].to_string(), "{}⊔{(1, 3)}");
        let zs = min_decomps(Model::Lower, &list_shape(), ExtNat::ZERO).unwrap();
        assert_eq!(zs[0].to_string(), "{}⊔{}");
    }

    #[test]
    fn reachable_types_of_a_tree_of_lists() {
        let t = RecType::tree(RecType::list(RecType::nat()));
        assert_eq!(reachable(&t).len(), 3);
    }
}
