//! Semantic values shared by every model: extended naturals, size maps,
//! order ideals represented by antichains, pairs and semantic functions.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::rec_lang::{pretty_rec_type, RecShape, RecType, R};

/// A natural number or `∞`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);
    pub const ONE: ExtNat = ExtNat::Fin(1);

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: ExtNat) -> ExtNat {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a.saturating_add(b)),
            _ => ExtNat::Inf,
        }
    }

    /// Truncated predecessor; `∞ - 1 = ∞`.
    pub fn pred(self) -> ExtNat {
        match self {
            ExtNat::Fin(a) => ExtNat::Fin(a.saturating_sub(1)),
            ExtNat::Inf => ExtNat::Inf,
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Fin(a) => Some(a),
            ExtNat::Inf => None,
        }
    }

    pub fn is_inf(self) -> bool {
        self == ExtNat::Inf
    }
}

impl From<u64> for ExtNat {
    fn from(n: u64) -> Self {
        ExtNat::Fin(n)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => f.write_str("∞"),
        }
    }
}

/// A function from closed inductive types to extended naturals with finite
/// support; absent entries are 0.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct SizeMap(BTreeMap<RecType, ExtNat>);

impl SizeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(d: &RecType, n: ExtNat) -> Self {
        let mut m = SizeMap::new();
        m.set(d, n);
        m
    }

    pub fn get(&self, d: &RecType) -> ExtNat {
        self.0.get(d).copied().unwrap_or(ExtNat::ZERO)
    }

    pub fn set(&mut self, d: &RecType, n: ExtNat) {
        if n == ExtNat::ZERO {
            self.0.remove(d);
        } else {
            self.0.insert(d.clone(), n);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&RecType, ExtNat)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> BTreeSet<RecType> {
        self.0.keys().cloned().collect()
    }

    fn zip(&self, other: &SizeMap, f: impl Fn(ExtNat, ExtNat) -> ExtNat) -> SizeMap {
        let mut out = SizeMap::new();
        for k in self.keys().union(&other.keys()) {
            out.set(k, f(self.get(k), other.get(k)));
        }
        out
    }

    pub fn join(&self, other: &SizeMap) -> SizeMap {
        self.zip(other, |a, b| a.max(b))
    }

    pub fn meet(&self, other: &SizeMap) -> SizeMap {
        self.zip(other, |a, b| a.min(b))
    }

    pub fn add(&self, other: &SizeMap) -> SizeMap {
        self.zip(other, ExtNat::add)
    }

    pub fn leq(&self, other: &SizeMap) -> bool {
        self.0.iter().all(|(k, v)| *v <= other.get(k))
    }

    /// Keeps only the entries for the given datatypes.
    pub fn restrict(&self, keep: &BTreeSet<RecType>) -> SizeMap {
        SizeMap(self.0.iter().filter(|(k, _)| keep.contains(*k)).map(|(k, v)| (k.clone(), *v)).collect())
    }
}

/// Short display name of a datatype: the head of its printed form.
fn datatype_label(d: &RecType) -> String {
    let full = pretty_rec_type(d);
    match full.find('<') {
        Some(i) if !full.starts_with("mu ") => full[..i].to_string(),
        _ => full,
    }
}

impl fmt::Display for SizeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.0.keys().map(datatype_label).collect();
        let clash = |l: &String| labels.iter().filter(|x| *x == l).count() > 1;
        f.write_str("{")?;
        for (i, ((k, v), label)) in self.0.iter().zip(&labels).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if clash(label) {
                write!(f, "{}:{v}", pretty_rec_type(k))?;
            } else {
                write!(f, "{label}:{v}")?;
            }
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SemError {
    #[error("unsupported in this model: {0}")]
    Unsupported(String),
    #[error("cannot compare semantic functions")]
    FunctionComparison,
    #[error("unbound variable `{0}` in denotation")]
    Unbound(String),
    #[error("denotation exceeded its step limit of {0}")]
    StepLimit(u64),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type SemResult<T> = Result<T, SemError>;

/// Environment for denotations: term variables and closed type instances.
#[derive(Clone, Default)]
pub struct SemEnv {
    vars: Option<Rc<VarNode>>,
    types: Rc<BTreeMap<String, RecType>>,
}

struct VarNode {
    name: String,
    value: Sem,
    next: Option<Rc<VarNode>>,
}

impl SemEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&self, name: &str, value: Sem) -> SemEnv {
        SemEnv {
            vars: Some(Rc::new(VarNode { name: name.to_string(), value, next: self.vars.clone() })),
            types: self.types.clone(),
        }
    }

    pub fn bind_type(&self, name: &str, ty: RecType) -> SemEnv {
        let mut types = (*self.types).clone();
        types.insert(name.to_string(), ty);
        SemEnv { vars: self.vars.clone(), types: Rc::new(types) }
    }

    pub fn lookup(&self, name: &str) -> Option<&Sem> {
        let mut cur = self.vars.as_deref();
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = node.next.as_deref();
        }
        None
    }

    pub fn types(&self) -> &BTreeMap<String, RecType> {
        &self.types
    }

    /// Substitutes the bound type instances into `ty`.
    pub fn close(&self, ty: &RecType) -> RecType {
        if self.types.is_empty() {
            ty.clone()
        } else {
            ty.subst(&self.types)
        }
    }

    /// Identity of this environment, stable while it is alive.
    pub fn identity(&self) -> (usize, usize) {
        let v = self.vars.as_ref().map_or(0, |n| Rc::as_ptr(n) as usize);
        (v, Rc::as_ptr(&self.types) as usize)
    }
}

/// Direction of a Galois map applied around a function.
#[derive(Clone, Debug)]
pub enum Conv {
    Abs(RecType),
    Conc(RecType),
}

/// Memo key of a semantic fold.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FoldKey {
    Size(ExtNat),
    Map(SizeMap),
}

pub struct FoldFn {
    /// The closed inductive type being folded.
    pub ty: RecType,
    pub binder: String,
    pub body: R,
    pub env: SemEnv,
    /// The closed result type.
    pub result: RecType,
    pub memo: RefCell<HashMap<FoldKey, Sem>>,
}

pub enum SemFn {
    Closure {
        param: String,
        body: R,
        env: SemEnv,
    },
    TyClosure {
        tyvar: String,
        body_ty: Option<RecType>,
        body: R,
        env: SemEnv,
    },
    /// Ignores its argument, at the term or type level.
    Const(Sem),
    /// Pointwise join of functions.
    Join(Vec<Sem>),
    /// Pointwise meet of functions.
    Meet(Vec<Sem>),
    /// `post ∘ inner ∘ pre`.
    Wrap {
        pre: Conv,
        inner: Sem,
        post: Conv,
    },
    /// `λx. F[f](inner x)`, the action of a shape on a function value.
    PostMap {
        shape: RecShape,
        f: Sem,
        inner: Sem,
    },
    Fold(Rc<FoldFn>),
}

#[derive(Clone)]
pub enum Sem {
    /// The least element of every type; the join of the empty set.
    Bot,
    Cost(ExtNat),
    Size(ExtNat),
    Map(Rc<SizeMap>),
    Unit,
    Pair(Rc<Sem>, Rc<Sem>),
    Ideal(Rc<Ideal>),
    Inj(u8, Rc<Sem>),
    Roll(Rc<Sem>),
    Fun(Rc<SemFn>),
}

/// A downward closed subset of a disjoint union, stored as the maximal
/// generators of each side.
#[derive(Clone)]
pub struct Ideal {
    pub left: Vec<Sem>,
    pub right: Vec<Sem>,
}

impl Ideal {
    pub fn new(left: Vec<Sem>, right: Vec<Sem>) -> Ideal {
        Ideal { left: prune_max(left), right: prune_max(right) }
    }

    pub fn side(&self, i: u8) -> &[Sem] {
        if i == 0 {
            &self.left
        } else {
            &self.right
        }
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }
}

/// Drops generators dominated by another. Elements that cannot be compared
/// (those containing functions) are kept.
pub fn prune_max(gens: Vec<Sem>) -> Vec<Sem> {
    prune(gens, |a, b| leq(a, b).unwrap_or(false))
}

/// Drops elements that dominate another, keeping the minimal ones.
pub fn prune_min(gens: Vec<Sem>) -> Vec<Sem> {
    prune(gens, |a, b| leq(b, a).unwrap_or(false))
}

fn prune(gens: Vec<Sem>, below: impl Fn(&Sem, &Sem) -> bool) -> Vec<Sem> {
    let mut keep: Vec<Sem> = Vec::with_capacity(gens.len());
    for g in gens {
        if keep.iter().any(|k| below(&g, k)) {
            continue;
        }
        keep.retain(|k| !below(k, &g));
        keep.push(g);
    }
    keep
}

impl Sem {
    pub fn pair(a: Sem, b: Sem) -> Sem {
        Sem::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn ideal(left: Vec<Sem>, right: Vec<Sem>) -> Sem {
        Sem::Ideal(Rc::new(Ideal::new(left, right)))
    }

    pub fn map(m: SizeMap) -> Sem {
        Sem::Map(Rc::new(m))
    }

    pub fn fun(f: SemFn) -> Sem {
        Sem::Fun(Rc::new(f))
    }

    pub fn cost(n: u64) -> Sem {
        Sem::Cost(ExtNat::Fin(n))
    }

    pub fn size(n: u64) -> Sem {
        Sem::Size(ExtNat::Fin(n))
    }

    /// Components of a pair; the bottom element splits into bottoms.
    pub fn proj(&self, i: u8) -> SemResult<Sem> {
        match self {
            Sem::Pair(a, b) => Ok(if i == 0 { (**a).clone() } else { (**b).clone() }),
            Sem::Bot => Ok(Sem::Bot),
            other => Err(SemError::Internal(format!("projection from non-pair {other}"))),
        }
    }

    /// Reads a value of type `C`.
    pub fn as_cost(&self) -> SemResult<ExtNat> {
        match self {
            Sem::Cost(n) => Ok(*n),
            Sem::Bot => Ok(ExtNat::ZERO),
            other => Err(SemError::Internal(format!("expected a cost, found {other}"))),
        }
    }

    pub fn contains_function(&self) -> bool {
        match self {
            Sem::Fun(_) => true,
            Sem::Pair(a, b) => a.contains_function() || b.contains_function(),
            Sem::Ideal(i) => i.left.iter().chain(&i.right).any(Sem::contains_function),
            Sem::Inj(_, a) | Sem::Roll(a) => a.contains_function(),
            _ => false,
        }
    }

    fn is_bottom_like(&self) -> bool {
        match self {
            Sem::Bot | Sem::Unit => true,
            Sem::Cost(n) => *n == ExtNat::ZERO,
            Sem::Size(n) => *n <= ExtNat::ONE,
            Sem::Map(m) => m.entries().all(|(_, v)| v <= ExtNat::ONE),
            Sem::Pair(a, b) => a.is_bottom_like() && b.is_bottom_like(),
            Sem::Ideal(i) => i.is_empty(),
            _ => false,
        }
    }
}

/// The order shared by every model; in the exact model it is equality of
/// representations.
pub fn leq(a: &Sem, b: &Sem) -> SemResult<bool> {
    Ok(match (a, b) {
        (Sem::Bot, _) => true,
        (_, Sem::Bot) => a.is_bottom_like(),
        (Sem::Cost(x), Sem::Cost(y)) | (Sem::Size(x), Sem::Size(y)) => x <= y,
        (Sem::Map(x), Sem::Map(y)) => x.leq(y),
        (Sem::Unit, Sem::Unit) => true,
        (Sem::Pair(a0, a1), Sem::Pair(b0, b1)) => leq(a0, b0)? && leq(a1, b1)?,
        (Sem::Ideal(x), Sem::Ideal(y)) => {
            for side in [0u8, 1] {
                for g in x.side(side) {
                    let mut found = false;
                    for h in y.side(side) {
                        if leq(g, h)? {
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        return Ok(false);
                    }
                }
            }
            true
        }
        (Sem::Inj(i, x), Sem::Inj(j, y)) => i == j && leq(x, y)?,
        (Sem::Roll(x), Sem::Roll(y)) => leq(x, y)?,
        (Sem::Fun(f), Sem::Fun(g)) => {
            if Rc::ptr_eq(f, g) {
                true
            } else {
                return Err(SemError::FunctionComparison);
            }
        }
        _ => return Err(SemError::Internal(format!("comparing {a} with {b}"))),
    })
}

/// Equality in the order: `a ≤ b` and `b ≤ a`.
pub fn sem_eq(a: &Sem, b: &Sem) -> SemResult<bool> {
    Ok(leq(a, b)? && leq(b, a)?)
}

pub fn join(a: &Sem, b: &Sem) -> SemResult<Sem> {
    Ok(match (a, b) {
        (Sem::Bot, x) | (x, Sem::Bot) => x.clone(),
        (Sem::Cost(x), Sem::Cost(y)) => Sem::Cost((*x).max(*y)),
        (Sem::Size(x), Sem::Size(y)) => Sem::Size((*x).max(*y)),
        (Sem::Map(x), Sem::Map(y)) => Sem::map(x.join(y)),
        (Sem::Unit, Sem::Unit) => Sem::Unit,
        (Sem::Pair(a0, a1), Sem::Pair(b0, b1)) => Sem::pair(join(a0, b0)?, join(a1, b1)?),
        (Sem::Ideal(x), Sem::Ideal(y)) => Sem::ideal(
            x.left.iter().chain(&y.left).cloned().collect(),
            x.right.iter().chain(&y.right).cloned().collect(),
        ),
        (Sem::Fun(f), Sem::Fun(g)) => {
            if Rc::ptr_eq(f, g) {
                a.clone()
            } else {
                let mut parts = Vec::new();
                for h in [a, b] {
                    match h {
                        Sem::Fun(rc) => match &**rc {
                            SemFn::Join(xs) => parts.extend(xs.iter().cloned()),
                            _ => parts.push(h.clone()),
                        },
                        _ => unreachable!(),
                    }
                }
                Sem::fun(SemFn::Join(parts))
            }
        }
        (Sem::Inj(..), Sem::Inj(..)) | (Sem::Roll(_), Sem::Roll(_)) => {
            if sem_eq(a, b)? {
                a.clone()
            } else {
                return Err(SemError::Internal(format!("join of distinct exact values {a} and {b}")));
            }
        }
        _ => return Err(SemError::Internal(format!("join of {a} with {b}"))),
    })
}

pub fn join_all<'a>(xs: impl IntoIterator<Item = &'a Sem>) -> SemResult<Sem> {
    xs.into_iter().try_fold(Sem::Bot, |acc, x| join(&acc, x))
}

/// Greatest lower bound. `None` stands for the meet of the empty set.
pub fn meet(a: &Sem, b: &Sem) -> SemResult<Sem> {
    Ok(match (a, b) {
        (Sem::Bot, _) | (_, Sem::Bot) => Sem::Bot,
        (Sem::Cost(x), Sem::Cost(y)) => Sem::Cost((*x).min(*y)),
        (Sem::Size(x), Sem::Size(y)) => Sem::Size((*x).min(*y)),
        (Sem::Map(x), Sem::Map(y)) => Sem::map(x.meet(y)),
        (Sem::Unit, Sem::Unit) => Sem::Unit,
        (Sem::Pair(a0, a1), Sem::Pair(b0, b1)) => Sem::pair(meet(a0, b0)?, meet(a1, b1)?),
        (Sem::Ideal(x), Sem::Ideal(y)) => {
            let side = |i: u8| -> SemResult<Vec<Sem>> {
                let mut out = Vec::new();
                for g in x.side(i) {
                    for h in y.side(i) {
                        out.push(meet(g, h)?);
                    }
                }
                Ok(out)
            };
            Sem::ideal(side(0)?, side(1)?)
        }
        (Sem::Fun(f), Sem::Fun(g)) => {
            if Rc::ptr_eq(f, g) {
                a.clone()
            } else {
                Sem::fun(SemFn::Meet(vec![a.clone(), b.clone()]))
            }
        }
        (Sem::Inj(..), Sem::Inj(..)) | (Sem::Roll(_), Sem::Roll(_)) => {
            if sem_eq(a, b)? {
                a.clone()
            } else {
                return Err(SemError::Internal(format!("meet of distinct exact values {a} and {b}")));
            }
        }
        _ => return Err(SemError::Internal(format!("meet of {a} with {b}"))),
    })
}

pub fn meet_all<'a>(xs: impl IntoIterator<Item = &'a Sem>) -> SemResult<Option<Sem>> {
    let mut acc: Option<Sem> = None;
    for x in xs {
        acc = Some(match acc {
            None => x.clone(),
            Some(a) => meet(&a, x)?,
        });
    }
    Ok(acc)
}

fn exact_nat(v: &Sem) -> Option<u64> {
    let mut n = 0;
    let mut cur = v;
    loop {
        let Sem::Roll(inner) = cur else { return None };
        match &**inner {
            Sem::Inj(0, u) if matches!(**u, Sem::Unit) => return Some(n),
            Sem::Inj(1, rest) => {
                n += 1;
                cur = rest;
            }
            _ => return None,
        }
    }
}

impl fmt::Display for Sem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, xs: &[Sem]| -> fmt::Result {
            f.write_str("{")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("}")
        };
        match self {
            Sem::Bot => f.write_str("⊥"),
            Sem::Cost(n) | Sem::Size(n) => write!(f, "{n}"),
            Sem::Map(m) => write!(f, "{m}"),
            Sem::Unit => f.write_str("*"),
            Sem::Pair(a, b) => write!(f, "({a}, {b})"),
            Sem::Ideal(i) => {
                list(f, &i.left)?;
                f.write_str("⊔")?;
                list(f, &i.right)
            }
            Sem::Inj(i, a) => write!(f, "inj{i} {a}"),
            Sem::Roll(a) => match exact_nat(self) {
                Some(n) => write!(f, "#{n}"),
                None => write!(f, "roll({a})"),
            },
            Sem::Fun(_) => f.write_str("<fn>"),
        }
    }
}

impl fmt::Debug for Sem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
