mod common;

use costrec::cost_eval::eval;
use costrec::source_ast::{
    parse_expr, parse_program, pretty_expr, pretty_program, pretty_type, subst_shape, value_to_expr, Shape, SrcType,
    TypeNames, Value, ValueEnv,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn corpus_programs_roundtrip_through_the_printer() {
    for path in std::fs::read_dir(common::corpus_dir()).unwrap() {
        let path = path.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let first = parse_program(&text).unwrap();
        let printed = pretty_program(&first);
        let second = parse_program(&printed).unwrap_or_else(|e| panic!("{}: {e}\n{printed}", path.display()));
        assert_eq!(first.types, second.types, "{}", path.display());
        assert_eq!(first.decls.len(), second.decls.len());
        for (a, b) in first.decls.iter().zip(&second.decls) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.expr, b.expr, "{}: declaration {}", path.display(), a.name);
        }
        assert_eq!(first.main.map(|d| d.expr), second.main.map(|d| d.expr));
    }
}

fn arb_type() -> impl Strategy<Value = SrcType> {
    let leaf = prop_oneof![
        Just(SrcType::Unit),
        Just(SrcType::nat()),
        Just(SrcType::bool()),
        "[a-c]".prop_map(|v| SrcType::var(&v)),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SrcType::prod(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SrcType::sum(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SrcType::arrow(a, b)),
            inner.clone().prop_map(SrcType::list),
            inner.clone().prop_map(SrcType::tree),
            inner.prop_map(SrcType::susp),
        ]
    })
}

fn arb_shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![Just(Shape::T), arb_type().prop_map(Shape::Const)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Shape::prod(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Shape::sum(a, b)),
            (arb_type(), inner).prop_map(|(d, b)| Shape::arrow(d, b)),
        ]
    })
}

proptest! {
    #[test]
    fn numerals_have_one_more_constructor_than_their_value(n in 0u64..64) {
        let r = eval(&ValueEnv::new(), &parse_expr(&format!("#{n}")).unwrap()).unwrap();
        prop_assert_eq!(r.value.constructor_count(), n + 1);
        prop_assert_eq!(r.value.as_nat(), Some(n));
    }

    #[test]
    fn shape_substitution_keeps_free_variables(f in arb_shape(), ty in arb_type()) {
        let out = subst_shape(&f, &ty).free_vars();
        if f.mentions_t() {
            for v in ty.free_vars() {
                prop_assert!(out.contains(&v), "{} lost from {}", v, subst_shape(&f, &ty));
            }
        }
    }

    #[test]
    fn types_roundtrip_through_the_printer(ty in arb_type()) {
        let text = pretty_type(&ty, &TypeNames::builtin());
        let back = costrec::source_ast::parse_type(&text).unwrap();
        prop_assert_eq!(back, ty);
    }

    #[test]
    fn values_print_as_expressions_that_evaluate_back(seed in any::<u64>(), which in 0usize..11) {
        let ty = &common::sample_types()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Value = common::random_value(ty, 14, &mut rng);
        let e = value_to_expr(&v, Some(ty)).unwrap();
        let text = pretty_expr(&e, &TypeNames::builtin());
        let r = eval(&ValueEnv::new(), &parse_expr(&text).unwrap()).unwrap();
        prop_assert_eq!(r.cost, 0);
        prop_assert_eq!(r.value, v);
    }
}
