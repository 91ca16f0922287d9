use std::collections::BTreeMap;

use jetcalc::expr::{ex, normalize, parse, parse_tree, parse_tree_format, to_plain, Env, Expr, Symbol};
use jetcalc::jet::{BigradedForm, JetBundle, JetCoordinate, MultiIndex};
use jetcalc::lift::{ProjectableVectorField, VariationField};
use jetcalc::oracle::{Ranges, ZeroTester};
use jetcalc::secondvar::{second_variation, variational_derivative};
use jetcalc::varcalc::{euler_lagrange, euler_lagrange_of, first_variation_identity, helmholtz_check, Lagrangian};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source text of a random expression over `leaves`.
fn src(leaves: &'static [&'static str]) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(leaves).prop_map(str::to_string),
        (-3i32..4).prop_map(|k| format!("({k})")),
        (1i32..4, 2i32..5).prop_map(|(a, b)| format!("({a}/{b})")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(1/4*({a}))")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a})/(2 + ({b})^2)")),
        ]
    })
}

/// Random polynomial with small integer coefficients.
fn poly(leaves: &'static [&'static str]) -> impl Strategy<Value = String> {
    let mono = (
        -3i32..4,
        prop::collection::vec((prop::sample::select(leaves), 1u32..3), 0..3),
    )
        .prop_map(|(c, fs)| {
            let mut s = format!("({c})");
            for (v, k) in fs {
                s.push_str(&format!("*{v}^{k}"));
            }
            s
        });
    prop::collection::vec(mono, 1..5).prop_map(|ms| ms.join(" + "))
}

const XYZ: &[&str] = &["x", "y", "z"];
const J1: &[&str] = &["y", "y_t", "y_x", "t", "x"];
const J2: &[&str] = &["y", "y_t", "y_tt", "t"];
const ENV_LEAVES: &[&str] = &["x", "y"];

fn s(n: &str) -> Symbol {
    Symbol::new(n)
}

fn tx() -> JetBundle {
    JetBundle::new(&["t", "x"], &["y"], 2)
        .unwrap()
        .with_cap(8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn leibniz(a in src(XYZ), b in src(XYZ)) {
        let (a, b) = (ex(&a), ex(&b));
        let x = s("x");
        prop_assert_eq!(a.mul(&b).diff(&x), a.diff(&x).mul(&b).add(&a.mul(&b.diff(&x))));
    }

    #[test]
    fn linearity(a in src(XYZ), b in src(XYZ), k in -5i64..6) {
        let (a, b) = (ex(&a), ex(&b));
        let y = s("y");
        let lhs = a.mul(&Expr::int(k)).add(&b).diff(&y);
        prop_assert_eq!(lhs, a.diff(&y).mul(&Expr::int(k)).add(&b.diff(&y)));
    }

    #[test]
    fn mixed_partials(a in src(XYZ)) {
        let a = ex(&a);
        prop_assert_eq!(a.diff(&s("x")).diff(&s("z")), a.diff(&s("z")).diff(&s("x")));
    }

    #[test]
    fn finite_differences(a in src(XYZ), seed in 0u64..1000) {
        let e = ex(&a);
        let r = ZeroTester::new(seed).with_samples(5).fd_check(&e, &s("x")).unwrap();
        prop_assert!(r.zero, "{}: {}", a, r.max_residual);
    }

    #[test]
    fn plain_round_trip(a in src(XYZ)) {
        let e = ex(&a);
        prop_assert_eq!(parse(&to_plain(&e)).unwrap(), e);
    }

    #[test]
    fn tree_round_trip_and_idempotence(a in src(XYZ)) {
        let e = ex(&a);
        let back = normalize(&parse_tree_format(&e.to_tree_format()).unwrap()).unwrap();
        prop_assert!(back.same_as(&e));
        prop_assert!(normalize(&e.to_tree()).unwrap().same_as(&e));
    }

    #[test]
    fn normal_form_evaluates_like_raw_tree(a in src(ENV_LEAVES), seed in 0u64..1000) {
        let raw = parse_tree(&a).unwrap();
        let e = normalize(&raw).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = Env::new()
            .with("x", rng.random_range(-1.0..1.0))
            .with("y", rng.random_range(-1.0..1.0));
        let (u, v) = (raw.eval(&env).unwrap(), e.eval(&env).unwrap());
        prop_assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0), "{} vs {}", u, v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_derivatives_commute(a in src(J1)) {
        let b = tx();
        let e = ex(&a);
        let dtx = b.total_derivative(&b.total_derivative(&e, 0).unwrap(), 1).unwrap();
        let dxt = b.total_derivative(&b.total_derivative(&e, 1).unwrap(), 0).unwrap();
        prop_assert_eq!(dtx, dxt);
    }

    #[test]
    fn differentials_square_to_zero(a in src(J1)) {
        let b = tx();
        let f = BigradedForm::scalar(ex(&a));
        let dh = f.d_h(&b).unwrap();
        let dv = f.d_v(&b).unwrap();
        prop_assert!(dh.d_h(&b).unwrap().is_zero());
        prop_assert!(dv.d_v(&b).unwrap().is_zero());
        prop_assert!(dh.d_v(&b).unwrap().add(&dv.d_h(&b).unwrap()).is_zero());
    }

    #[test]
    fn contact_forms_vanish_on_sections(sec in poly(&["t", "x"]), k in 0usize..3) {
        let b = tx();
        let alpha = MultiIndex::up_to(2, 1)[k].clone();
        let theta = BigradedForm::theta(JetCoordinate { field: 0, alpha });
        prop_assert!(theta.pullback(&b, &[ex(&sec)]).unwrap().is_zero());
    }

    #[test]
    fn divergences_are_null_lagrangians(f in src(J1), g in src(J1)) {
        let b = tx();
        let l = b.total_derivative(&ex(&f), 0).unwrap().add(&b.total_derivative(&ex(&g), 1).unwrap());
        let lag = Lagrangian::new(b, l).unwrap();
        prop_assert!(euler_lagrange(&lag).unwrap().is_zero());
    }

    #[test]
    fn euler_lagrange_is_variational(l in poly(J2)) {
        let b = JetBundle::new(&["t"], &["y"], 2).unwrap();
        let lag = Lagrangian::new(b.clone(), ex(&l)).unwrap();
        let e = euler_lagrange(&lag).unwrap();
        prop_assert!(helmholtz_check(&b, &e).unwrap().passed);
    }

    #[test]
    fn first_variation_decomposes(l in poly(J2)) {
        let b = JetBundle::new(&["t"], &["y"], 2).unwrap();
        let lag = Lagrangian::new(b.clone(), ex(&l)).unwrap();
        let eta = VariationField::adjoin_default(&b).unwrap();
        prop_assert!(first_variation_identity(&lag, &eta).is_ok());
    }

    #[test]
    fn second_variation_routes_agree(l in poly(&["y", "y_t", "t"])) {
        let b = JetBundle::new(&["t"], &["y"], 1).unwrap();
        let lag = Lagrangian::new(b.clone(), ex(&l)).unwrap();
        let eta = VariationField::adjoin_default(&b).unwrap();
        let lie2 = variational_derivative(&lag.on(&eta.bundle), &eta.as_field(), 2).unwrap();
        let sv = second_variation(&lag, &eta).unwrap();
        let diff = lie2.density.sub(&sv.density);
        let el = euler_lagrange_of(&eta.bundle, &diff, &[0]).unwrap();
        prop_assert!(el.iter().all(Expr::is_zero));
    }

    #[test]
    fn prolongation_preserves_brackets(
        xa in poly(&["t"]), ya in poly(&["t", "y", "u"]), ua in poly(&["t", "y", "u"]),
        xb in poly(&["t"]), yb in poly(&["t", "y", "u"]), ub in poly(&["t", "y", "u"]),
    ) {
        let b = JetBundle::new(&["t"], &["y", "u"], 1).unwrap();
        let f = ProjectableVectorField::new(&b, vec![ex(&xa)], vec![ex(&ya), ex(&ua)]).unwrap();
        let g = ProjectableVectorField::new(&b, vec![ex(&xb)], vec![ex(&yb), ex(&ub)]).unwrap();
        let pf = f.prolong(&b, 1).unwrap();
        let pg = g.prolong(&b, 1).unwrap();
        let pfg = f.bracket(&g, &b).prolong(&b, 1).unwrap();
        let act = |p: &jetcalc::lift::Prolongation, e: &Expr| -> Expr {
            let mut acc = p.horizontal[0].mul(&e.diff(&b.base_symbol(0)));
            for (c, v) in &p.coordinate {
                acc = acc.add(&v.mul(&e.diff(&b.symbol(c))));
            }
            acc
        };
        for (c, v) in &pfg.coordinate {
            let lhs = act(&pf, &pg.coordinate[c]).sub(&act(&pg, &pf.coordinate[c]));
            prop_assert_eq!(&lhs, v, "component {:?}", c);
        }
    }
}

#[test]
fn symbol_jets_are_declared() {
    let b = tx();
    let mut seen = BTreeMap::new();
    for alpha in MultiIndex::up_to(2, 2) {
        seen.insert(b.field_symbol(0, &alpha).to_string(), alpha.order());
    }
    assert_eq!(seen["y_tx"], 2);
    assert!(Ranges::for_bundle(&b).range(&s("y")).0 >= -1.0);
}
