mod common;

use std::rc::Rc;

use costrec::extract::potential_type;
use costrec::models::{Interp, Model};
use costrec::rec_lang::{RecExpr, RecType};
use costrec::semdom::{join, leq, meet, ExtNat, Sem, SemEnv};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODELS: [Model; 3] = [Model::Size, Model::Height, Model::AllCons];

fn samples(seed: u64, which: usize, model_ix: usize, n: usize) -> (Model, RecType, Vec<Sem>) {
    let model = MODELS[model_ix % MODELS.len()];
    let types = common::sample_types();
    let ty = potential_type(&types[which % types.len()]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = (0..n).map(|_| common::random_sem(model, &ty, &mut rng)).collect();
    (model, ty, xs)
}

/// No generator of an ideal lies below another one on the same side.
fn canonical(v: &Sem) -> bool {
    match v {
        Sem::Pair(a, b) => canonical(a) && canonical(b),
        Sem::Ideal(i) => [&i.left, &i.right].into_iter().all(|gens| {
            gens.iter().all(canonical)
                && gens
                    .iter()
                    .enumerate()
                    .all(|(k, g)| gens.iter().enumerate().all(|(l, h)| k == l || !leq(g, h).unwrap()))
        }),
        _ => true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn order_is_a_preorder(seed in any::<u64>(), which in 0usize..11, m in 0usize..3) {
        let (_, _, xs) = samples(seed, which, m, 3);
        let (a, b, c) = (&xs[0], &xs[1], &xs[2]);
        prop_assert!(leq(a, a).unwrap());
        if leq(a, b).unwrap() && leq(b, c).unwrap() {
            prop_assert!(leq(a, c).unwrap());
        }
        let ab = join(a, b).unwrap();
        prop_assert!(leq(a, &ab).unwrap() && leq(b, &ab).unwrap());
        prop_assert!(leq(&Sem::Bot, a).unwrap());
    }

    #[test]
    fn join_is_least_among_sampled_upper_bounds(seed in any::<u64>(), which in 0usize..11, m in 0usize..3) {
        let (_, _, xs) = samples(seed, which, m, 8);
        let ab = join(&xs[0], &xs[1]).unwrap();
        for c in &xs[2..] {
            let c = join(c, &xs[0]).unwrap();
            let c = join(&c, &xs[1]).unwrap();
            prop_assert!(leq(&ab, &c).unwrap(), "{} not below {}", ab, c);
        }
        let lo = meet(&xs[0], &xs[1]).unwrap();
        prop_assert!(leq(&lo, &xs[0]).unwrap() && leq(&lo, &xs[1]).unwrap());
    }

    #[test]
    fn ideals_stay_antichains(seed in any::<u64>(), which in 0usize..11, m in 0usize..3) {
        let (_, _, xs) = samples(seed, which, m, 4);
        for x in &xs {
            prop_assert!(canonical(x));
        }
        prop_assert!(canonical(&join(&xs[0], &xs[1]).unwrap()));
        prop_assert!(canonical(&meet(&xs[2], &xs[3]).unwrap()));
        let all = join(&join(&xs[0], &xs[1]).unwrap(), &meet(&xs[2], &xs[3]).unwrap()).unwrap();
        prop_assert!(canonical(&all));
    }

    #[test]
    fn case_is_monotone_in_its_scrutinee(seed in any::<u64>(), m in 0usize..3, k in 0u64..4) {
        // case s of inj0 x => x + k | inj1 y => y, over C + C.
        let model = MODELS[m];
        let sum = RecType::sum(RecType::C, RecType::C);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = common::random_sem(model, &sum, &mut rng);
        let y = join(&x, &common::random_sem(model, &sum, &mut rng)).unwrap();
        let bump = (0..k).fold(RecExpr::var("x"), |acc, _| RecExpr::plus(acc, RecExpr::one()));
        let term = Rc::new(RecExpr::Case(
            RecExpr::var("s"),
            "x".into(),
            RecType::C,
            bump,
            "y".into(),
            RecType::C,
            RecExpr::var("y"),
        ));
        let interp = Interp::new(model);
        let at = |s: &Sem| interp.denote(&SemEnv::new().bind("s", s.clone()), &term).unwrap();
        prop_assert!(leq(&at(&x), &at(&y)).unwrap());
    }
}

#[test]
fn infinity_absorbs_addition() {
    assert_eq!(ExtNat::Fin(3).add(ExtNat::Inf), ExtNat::Inf);
    assert_eq!(ExtNat::Inf.add(ExtNat::Fin(3)), ExtNat::Inf);
    assert_eq!(join(&Sem::Cost(ExtNat::Inf), &Sem::cost(7)).unwrap().to_string(), "∞");
}

#[test]
fn empty_sides_are_kept() {
    let v = Sem::ideal(vec![Sem::Unit], vec![]);
    assert_eq!(v.to_string(), "{*}⊔{}");
    assert!(leq(&v, &Sem::ideal(vec![Sem::Unit], vec![Sem::Unit])).unwrap());
    assert!(!leq(&Sem::ideal(vec![], vec![Sem::Unit]), &v).unwrap());
}
