mod common;

use std::rc::Rc;

use costrec::extract::potential_type;
use costrec::harness::{potential_arg_types, signature_of, verifiable_decls};
use costrec::models::{abs, conc, cons, Direction, Interp, Model};
use costrec::rec_lang::{RecExpr, RecType};
use costrec::semdom::{join, leq, sem_eq, ExtNat, Sem, SemEnv};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UPPER: [Model; 4] = [Model::Size, Model::Height, Model::AllCons, Model::Merged];

fn datatypes() -> Vec<RecType> {
    common::sample_types().iter().map(potential_type).filter(|t| t.as_mu().is_some()).collect()
}

#[test]
fn galois_laws_hold_on_sampled_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for src in common::sample_types() {
        let ty = potential_type(&src);
        for _ in 0..500 {
            let v = common::random_sem(Model::Size, &ty, &mut rng);
            let back = abs(&ty, &conc(&ty, &v).unwrap()).unwrap();
            assert!(sem_eq(&back, &v).unwrap(), "abs(conc {v}) = {back} at {ty}");
            let w = common::random_sem(Model::AllCons, &ty, &mut rng);
            let up = conc(&ty, &abs(&ty, &w).unwrap()).unwrap();
            assert!(leq(&w, &up).unwrap(), "{w} not below conc(abs {w}) = {up} at {ty}");
        }
    }
}

#[test]
fn destructor_after_constructor_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for model in [Model::Size, Model::Height, Model::AllCons, Model::Lower] {
        let interp = Interp::new(model);
        for d in datatypes() {
            let unfolded = d.unfold().unwrap();
            for _ in 0..100 {
                let z = common::random_sem(model, &unfolded, &mut rng);
                let back = interp.dest(&d, &cons(model, &d, z.clone()).unwrap()).unwrap();
                match model.direction() {
                    Direction::Lower => assert!(leq(&back, &z).unwrap(), "{model:?}: dest(cons {z}) = {back}"),
                    _ => assert!(leq(&z, &back).unwrap(), "{model:?}: dest(cons {z}) = {back}"),
                }
            }
        }
    }
}

#[test]
fn case_of_an_injection_is_bounded_by_its_branch() {
    // case inj_i a of inj0 x => (x, 1) | inj1 y => (y, 0) over nat + nat.
    let nat = RecType::nat();
    let sum = RecType::sum(nat.clone(), nat.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for model in UPPER {
        let interp = Interp::new(model);
        for _ in 0..100 {
            let i: u8 = rng.gen_range(0..2);
            let a = common::random_sem(model, &nat, &mut rng);
            let term = Rc::new(RecExpr::Case(
                Rc::new(RecExpr::Inj(i, sum.clone(), RecExpr::var("a"))),
                "x".into(),
                nat.clone(),
                RecExpr::pair(RecExpr::var("x"), RecExpr::one()),
                "y".into(),
                nat.clone(),
                RecExpr::pair(RecExpr::var("y"), RecExpr::zero()),
            ));
            let env = SemEnv::new().bind("a", a.clone());
            let whole = interp.denote(&env, &term).unwrap();
            let branch = Sem::pair(a, Sem::cost(u64::from(i == 0)));
            assert!(leq(&branch, &whole).unwrap(), "{model:?}: {branch} vs {whole}");
        }
    }
}

#[test]
fn folds_at_infinity_are_trivial_upper_bounds() {
    let p = common::corpus_file("sumtree");
    let interp = Interp::new(Model::Size);
    let env = interp.program_env(&p.extracted).unwrap();
    let (c, _) = interp.analyze(&env, p.extracted.decl("sumtree").unwrap(), &[], &[Sem::size(5)]).unwrap();
    assert_eq!(c, ExtNat::Inf);
    let (c, _) = interp.analyze(&env, p.extracted.decl("sumtree").unwrap(), &[], &[Sem::size(1)]).unwrap();
    assert_eq!(c, ExtNat::Fin(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_bounds_are_monotone_in_their_inputs(seed in any::<u64>(), prog in 0usize..8, m in 0usize..5) {
        let models = [Model::Size, Model::Height, Model::AllCons, Model::Merged, Model::Lower];
        let model = models[m];
        let corpus = common::corpus();
        let p = &corpus[prog % corpus.len()];
        let interp = Interp::new(model);
        let env = interp.program_env(&p.extracted).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in verifiable_decls(p) {
            let tys = potential_arg_types(&signature_of(p, &name).unwrap());
            let small: Vec<_> = tys.iter().map(|t| common::random_sem(model, t, &mut rng)).collect();
            let big: Vec<_> = small
                .iter()
                .zip(&tys)
                .map(|(a, t)| join(a, &common::random_sem(model, t, &mut rng)).unwrap())
                .collect();
            // The lower model reads `∞` as an unknown size and answers with
            // the trivial lower bound, so it is only compared at finite sizes.
            if model == Model::Lower && big.iter().any(|a| a.to_string().contains('∞')) {
                continue;
            }
            let decl = p.extracted.decl(&name).unwrap();
            let (c0, p0) = interp.analyze(&env, decl, &[], &small).unwrap();
            let (c1, p1) = interp.analyze(&env, decl, &[], &big).unwrap();
            prop_assert!(c0 <= c1, "{}.{} cost {} > {}", p.name, name, c0, c1);
            prop_assert!(leq(&p0, &p1).unwrap(), "{}.{} potential {} vs {}", p.name, name, p0, p1);
        }
    }
}
