mod common;

use costrec::harness::{potential_arg_types, signature_of, trial_inputs, verifiable_decls};
use costrec::models::{value_potential, Interp, Model};
use costrec::rec_lang::{check_rec, simplify_with_budget, DEFAULT_SIMPLIFY_BUDGET};
use costrec::semdom::sem_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn simplification_preserves_types_and_terminates() {
    for p in common::corpus() {
        for d in &p.extracted.decls {
            let ctx = p.extracted.context_before(&d.name);
            let before = check_rec(&ctx, &d.complexity).unwrap();
            let (s, stats) = simplify_with_budget(&d.complexity, DEFAULT_SIMPLIFY_BUDGET);
            assert!(!stats.exhausted, "{}.{} did not reach a normal form", p.name, d.name);
            let after = check_rec(&ctx, &s).unwrap();
            assert!(before.alpha_eq(&after), "{}.{}: {before} became {after}", p.name, d.name);
            assert!(s.size() <= d.complexity.size(), "{}.{} grew", p.name, d.name);
        }
    }
}

#[test]
fn simplification_preserves_denotations_in_every_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in common::corpus() {
        let simplified = p.extracted.map_terms(|e| simplify_with_budget(e, DEFAULT_SIMPLIFY_BUDGET).0);
        for model in Model::ALL {
            let interp = Interp::new(model);
            let env0 = interp.program_env(&p.extracted).unwrap();
            let env1 = interp.program_env(&simplified).unwrap();
            for name in verifiable_decls(&p) {
                let sig = signature_of(&p, &name).unwrap();
                let tys = potential_arg_types(&sig);
                for i in 0..12 {
                    let args: Vec<_> = if model == Model::Exact {
                        let vs = trial_inputs(&sig, 9, i, 10).unwrap();
                        vs.iter().zip(&sig.args).map(|(v, t)| value_potential(model, v, t).unwrap()).collect()
                    } else {
                        tys.iter().map(|t| common::random_sem(model, t, &mut rng)).collect()
                    };
                    let a = interp.analyze(&env0, p.extracted.decl(&name).unwrap(), &[], &args).unwrap();
                    let b = interp.analyze(&env1, simplified.decl(&name).unwrap(), &[], &args).unwrap();
                    let shown: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                    assert_eq!(a.0, b.0, "{}.{name} in {} at {shown:?}", p.name, model.name());
                    assert!(sem_eq(&a.1, &b.1).unwrap(), "{}.{name} in {}: {} vs {}", p.name, model.name(), a.1, b.1);
                }
            }
        }
    }
}
