#![allow(dead_code)]

use std::path::PathBuf;

use costrec::harness::{gen_value, load_file, GenMode, Loaded};
use costrec::models::{reachable, Carrier, Model};
use costrec::rec_lang::RecType;
use costrec::semdom::{ExtNat, Sem, SizeMap};
use costrec::source_ast::{SrcType, Value};
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_file(stem: &str) -> Loaded {
    let path = corpus_dir().join(format!("{stem}.src"));
    load_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every program in the corpus, sorted by file name.
pub fn corpus() -> Vec<Loaded> {
    let mut paths: Vec<_> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "src"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_file(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).collect()
}

/// First-order types used for sampling.
pub fn sample_types() -> Vec<SrcType> {
    let nat = SrcType::nat;
    vec![
        SrcType::Unit,
        SrcType::bool(),
        nat(),
        SrcType::list(nat()),
        SrcType::tree(nat()),
        SrcType::list(SrcType::bool()),
        SrcType::list(SrcType::list(nat())),
        SrcType::tree(SrcType::list(nat())),
        SrcType::prod(nat(), SrcType::list(nat())),
        SrcType::sum(nat(), SrcType::tree(SrcType::bool())),
        SrcType::order(),
    ]
}

pub fn random_value(ty: &SrcType, max: u64, rng: &mut impl Rng) -> Value {
    let budget = rng.gen_range(0..=max);
    gen_value(ty, budget, GenMode::Random, rng).expect("sampled types are inhabited")
}

fn random_size(rng: &mut impl Rng) -> ExtNat {
    if rng.gen_bool(0.1) {
        ExtNat::Inf
    } else {
        ExtNat::Fin(rng.gen_range(1..10))
    }
}

/// A function-free semantic value of `ty` in the carrier of `model`.
pub fn random_sem(model: Model, ty: &RecType, rng: &mut impl Rng) -> Sem {
    match ty {
        RecType::C => Sem::Cost(if rng.gen_bool(0.1) { ExtNat::Inf } else { ExtNat::Fin(rng.gen_range(0..10)) }),
        RecType::Unit => Sem::Unit,
        RecType::Prod(a, b) => Sem::pair(random_sem(model, a, rng), random_sem(model, b, rng)),
        RecType::Sum(a, b) => {
            let left = random_gens(model, a, rng);
            let right = random_gens(model, b, rng);
            if left.is_empty() && right.is_empty() {
                Sem::ideal(vec![random_sem(model, a, rng)], vec![])
            } else {
                Sem::ideal(left, right)
            }
        }
        RecType::Mu(_) => match model.carrier() {
            Carrier::Count { .. } => Sem::Size(random_size(rng)),
            Carrier::Maps => {
                let mut m = SizeMap::new();
                for d in reachable(ty) {
                    m.set(&d, random_size(rng));
                }
                Sem::map(m)
            }
            Carrier::Exact => panic!("exact values are sampled from source values"),
        },
        other => panic!("no samples at type {other}"),
    }
}

fn random_gens(model: Model, ty: &RecType, rng: &mut impl Rng) -> Vec<Sem> {
    let k = rng.gen_range(0..=2);
    (0..k).map(|_| random_sem(model, ty, rng)).collect()
}

/// Number of `node` constructors in a tree value.
pub fn internal_nodes(v: &Value) -> u64 {
    match v {
        Value::Cons(_, inner) => match &**inner {
            Value::Inj(1, p) => match &**p {
                Value::Pair(_, rest) => match &**rest {
                    Value::Pair(l, r) => 1 + internal_nodes(l) + internal_nodes(r),
                    _ => panic!("not a tree"),
                },
                _ => panic!("not a tree"),
            },
            _ => 0,
        },
        _ => panic!("not a tree"),
    }
}

/// Number of elements of a list value.
pub fn list_length(v: &Value) -> u64 {
    match v {
        Value::Cons(_, inner) => match &**inner {
            Value::Inj(1, p) => match &**p {
                Value::Pair(_, rest) => 1 + list_length(rest),
                _ => panic!("not a list"),
            },
            _ => 0,
        },
        _ => panic!("not a list"),
    }
}

/// A list of `nat` values.
pub fn nat_list(xs: &[u64]) -> Value {
    let ty = SrcType::list(SrcType::nat());
    xs.iter().rev().fold(Value::cons(ty.clone(), Value::inj(0, Value::Unit)), |acc, x| {
        Value::cons(ty.clone(), Value::inj(1, Value::pair(Value::nat(*x), acc)))
    })
}

/// The elements of a list of naturals, ignoring type annotations.
pub fn nat_items(v: &Value) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = v;
    loop {
        let Value::Cons(_, inner) = cur else { return None };
        match &**inner {
            Value::Inj(0, _) => return Some(out),
            Value::Inj(1, p) => {
                let Value::Pair(x, rest) = &**p else { return None };
                out.push(x.as_nat()?);
                cur = rest;
            }
            _ => return None,
        }
    }
}
