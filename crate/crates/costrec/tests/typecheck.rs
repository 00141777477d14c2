mod common;

use costrec::cost_eval::program_env;
use costrec::harness::{run_operational, signature_of, trial_inputs, verifiable_decls};
use costrec::source_ast::{parse_expr, parse_program, SrcType};
use costrec::typecheck::{check_program, check_value, infer_expr, TypeContext};
use proptest::prelude::*;

#[test]
fn results_of_corpus_functions_have_their_declared_types() {
    let mut checked = 0;
    for p in common::corpus() {
        let (env, costs) = program_env(&p.source).unwrap();
        let ctx = p.checked.context();
        for name in verifiable_decls(&p) {
            let sig = signature_of(&p, &name).unwrap();
            let decl_cost = costs.iter().find(|(n, _)| *n == name).map_or(0, |(_, c)| *c);
            for i in 0..150 {
                let inputs = trial_inputs(&sig, 11, i, 12).unwrap();
                for (v, ty) in inputs.iter().zip(&sig.args) {
                    check_value(&ctx, v, ty).unwrap();
                }
                let (out, _) = run_operational(&env, decl_cost, &name, &inputs).unwrap();
                if let Err(e) = check_value(&ctx, &out, &sig.result) {
                    panic!("{}.{name} on trial {i}: {e}", p.name);
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 1000, "only {checked} trials");
}

#[test]
fn declaration_values_check_at_their_schemes() {
    for p in common::corpus() {
        let (env, _) = program_env(&p.source).unwrap();
        let ctx = p.checked.context();
        for d in &p.checked.decls {
            let v = env.lookup(&d.name).unwrap();
            check_value(&ctx, v, &d.scheme.body).unwrap_or_else(|e| panic!("{}.{}: {e}", p.name, d.name));
        }
    }
}

#[test]
fn ill_typed_programs_report_the_declaration() {
    let prog = parse_program("let ok = #1;\nlet bad = fn (x: nat) => x.0;").unwrap();
    let err = check_program(&prog).unwrap_err();
    assert_eq!(err.decl.as_deref(), Some("bad"));
    assert!(err.span.is_some());
}

#[test]
fn let_generalization_does_not_capture_outer_variables() {
    let e = parse_expr("fn (x: a) => let k = fn (y: b) => x in (k[nat] #1, k[unit] ())").unwrap();
    let ty = infer_expr(&TypeContext::new(), &e).unwrap();
    assert_eq!(ty, SrcType::arrow(SrcType::var("a"), SrcType::prod(SrcType::var("a"), SrcType::var("a"))));
}

proptest! {
    #[test]
    fn inference_is_deterministic(which in 0usize..6) {
        let sources = [
            "fn (x: nat) => (x, S x)",
            "let id = fn (y: a) => y in id #3",
            "fn (xs: list<nat>) => foldlist[nat] xs of nil => Z | cons(h, r) => S (force r) : nat",
            "fn (p: bool * nat) => case p.0 of inj0 u => p.1 | inj1 u => Z",
            "delay (fn (t: tree<nat>) => unroll[tree<nat>] t)",
            "fn (f: a -> b) => fn (x: a) => f x",
        ];
        let e = parse_expr(sources[which]).unwrap();
        let a = infer_expr(&TypeContext::new(), &e).unwrap();
        let b = infer_expr(&TypeContext::new(), &e).unwrap();
        prop_assert_eq!(a, b);
    }
}
