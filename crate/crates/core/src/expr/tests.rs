use std::collections::{BTreeSet, HashMap};

use super::*;

fn s(name: &str) -> Symbol {
    Symbol::new(name)
}

#[test]
fn like_terms_collect() {
    assert_eq!(to_plain(&ex("y + y")), "2*y");
    assert!(ex("y_t - y_t").is_zero());
}

#[test]
fn no_trig_rewriting() {
    let e = ex("sin(q)^2 + cos(q)^2");
    assert_eq!(e.term_count(), 2);
    assert!(!e.same_as(&Expr::one()));
}

#[test]
fn zero_denominator_is_an_error() {
    assert_eq!(parse("1/(y - y)"), Err(ExprError::ZeroDenominator));
    assert_eq!(parse("x^(-2)*0 + 1/0"), Err(ExprError::ZeroDenominator));
}

#[test]
fn partial_examples() {
    assert_eq!(ex("y_t^2").diff(&s("y_t")), ex("2*y_t"));
    assert_eq!(ex("x*y").diff(&s("y")), ex("x"));
    assert_eq!(to_plain(&ex("V(y)").diff(&s("y"))), "V_1(y)");
    assert_eq!(ex("V(y^2)").diff(&s("y")), ex("2*y*V_1(y^2)"));
}

#[test]
fn partial_rejects_undeclared() {
    let declared: BTreeSet<Symbol> = [s("y"), s("y_t")].into_iter().collect();
    assert!(partial(&ex("y*z"), &s("y"), &declared).is_ok());
    assert_eq!(
        partial(&ex("y*z"), &s("z"), &declared),
        Err(ExprError::UnknownCoordinate("z".into()))
    );
}

#[test]
fn transcendental_derivatives() {
    let x = s("x");
    assert_eq!(ex("sin(x)").diff(&x), ex("cos(x)"));
    assert_eq!(ex("cos(x^2)").diff(&x), ex("-2*x*sin(x^2)"));
    assert_eq!(ex("exp(2*x)").diff(&x), ex("2*exp(2*x)"));
    assert_eq!(ex("log(x)").diff(&x), ex("1/x"));
    assert_eq!(ex("tan(x)").diff(&x), ex("1 + tan(x)^2"));
    assert_eq!(ex("sqrt(x)").diff(&x), ex("1/2/sqrt(x)"));
    assert_eq!(ex("log(1 + x^2)").diff(&x), ex("2*x/(x^2 + 1)"));
}

#[test]
fn quotient_rule_and_cancellation() {
    assert_eq!(ex("(x^2 - 1)/(x - 1)"), ex("x + 1"));
    let q = ex("x/(1 + x)");
    let d = q.diff(&s("x"));
    assert!(d.same_as(&ex("1/(1 + x)^2")));
    assert!(ex("1/(x + 1) - 1/(x + 1)").is_zero());
    assert!(ex("1/(x + 1) + x/(x + 1)").same_as(&Expr::one()));
}

#[test]
fn substitute_examples() {
    let mut m = HashMap::new();
    m.insert(s("y_t"), ex("cos(t)"));
    assert_eq!(ex("y_t^2").substitute(&m).unwrap(), ex("cos(t)^2"));

    let mut m = HashMap::new();
    m.insert(s("y"), ex("sin(t)"));
    m.insert(s("y_tt"), ex("-sin(t)"));
    assert!(ex("y_tt + y").substitute(&m).unwrap().is_zero());

    // sphere metric contracted with u = (1, 0) at theta = pi/2
    let g = ex("u1^2 + sin(th)^2*u2^2");
    let mut m = HashMap::new();
    m.insert(s("th"), ex("1/2*pi"));
    m.insert(s("u1"), ex("1"));
    m.insert(s("u2"), ex("0"));
    assert_eq!(g.substitute(&m).unwrap(), Expr::one());
}

#[test]
fn substitution_can_hit_zero_denominator() {
    let mut m = HashMap::new();
    m.insert(s("x"), Expr::zero());
    assert_eq!(ex("1/x").substitute(&m), Err(ExprError::ZeroDenominator));
}

#[test]
fn eval_examples() {
    let env = Env::new().with("y_t", 3.0);
    assert_eq!(ex("y_t^2").eval(&env).unwrap(), 9.0);
    let env = Env::new().with("x", 0.0);
    assert_eq!(ex("sin(x)*exp(0)").eval(&env).unwrap(), 0.0);

    let energy = ex("1/2*(th_t^2 + sin(th)^2*ph_t^2)");
    let th = std::f64::consts::PI / 3.0;
    let env = Env::new().with("th", th).with("th_t", 0.2).with("ph_t", 0.5);
    let want = 0.5 * (0.04 + th.sin().powi(2) * 0.25);
    assert!((energy.eval(&env).unwrap() - want).abs() < 1e-15);
}

#[test]
fn eval_errors() {
    assert_eq!(ex("y + 1").eval(&Env::new()), Err(ExprError::Unbound("y".into())));
    let env = Env::new().with("x", -1.0);
    assert!(matches!(ex("log(x)").eval(&env), Err(ExprError::Domain(_))));
    assert!(matches!(ex("sqrt(x)").eval(&env), Err(ExprError::Domain(_))));
    let env = Env::new().with("x", 1.0);
    assert!(matches!(ex("1/(x - 1)").eval(&env), Err(ExprError::Domain(_))));
}

#[test]
fn opaque_eval_uses_bindings() {
    let mut env = Env::new().with("y", 2.0);
    env.set_fn("V", std::sync::Arc::new(|a: &[f64]| a[0] * a[0]));
    env.set_fn("V_1", std::sync::Arc::new(|a: &[f64]| 2.0 * a[0]));
    assert_eq!(ex("V(y) + V_1(y)").eval(&env).unwrap(), 8.0);
}

#[test]
fn printing_is_canonical() {
    assert_eq!(to_plain(&ex("-y - y_tt")), "-(y_tt + y)");
    assert_eq!(to_plain(&ex("y_t^2/2 - y^2/2")), "1/2*y_t^2 - 1/2*y^2");
    assert_eq!(to_plain(&ex("y_tt*y_t*2")), "2*y_t*y_tt");
    assert_eq!(to_plain(&ex("cos(th)/sin(th)")), "cos(th)/sin(th)");
    assert_eq!(to_plain(&ex("-x")), "-x");
    assert_eq!(to_plain(&ex("0")), "0");
    assert_eq!(to_plain(&ex("-1/2")), "-1/2");
    assert_eq!(to_plain(&ex("y + x*y_x")), "x*y_x + y");
    assert_eq!(to_plain(&ex("1/(1 + x^2)")), "1/(x^2 + 1)");
    assert_eq!(to_plain(&ex("-(a + b)/(1 + x^2)")), "-(b + a)/(x^2 + 1)");
}

#[test]
fn jet_suffixes_are_canonical() {
    assert_eq!(ex("y_{tt}"), ex("y_tt"));
    assert_eq!(ex("u_xt"), ex("u_tx"));
    assert_eq!(s("u_{xt}").order(), 2);
}

#[test]
fn parse_errors_carry_positions() {
    match parse("y + * 2") {
        Err(ExprError::Parse { pos, .. }) => assert_eq!(pos, 4),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse("y^x"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse("sin(x, y)"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse("y_12"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse("V_3(y)"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse("(y"), Err(ExprError::Parse { .. })));
    assert!(matches!(parse(""), Err(ExprError::Parse { .. })));
    assert!(matches!(parse("y $ 2"), Err(ExprError::Parse { .. })));
}

#[test]
fn decimal_literals_are_exact() {
    assert_eq!(ex("0.25"), Expr::frac(1, 4));
    assert_eq!(ex("1e-3"), Expr::frac(1, 1000));
    assert_eq!(ex("2.5e1"), Expr::int(25));
}

#[test]
fn round_trips() {
    for src in [
        "-(y_tt + y)",
        "1/2*y_t^2 - 1/2*y^2",
        "cos(th)/sin(th)*ph_t^2 - 3/7",
        "V_11(y, t)*y_t + g12(q1, q2)",
        "(x + 1)/(x^2 + 2)^2",
        "-(x + 1)/((x^2 + 2)*(y + 3))",
        "exp(-x)/sqrt(1 + x^2)",
        "sin(1/(1 + x))",
    ] {
        let e = ex(src);
        assert_eq!(ex(&to_plain(&e)), e, "plain round trip of {src}");
        let t = parse_tree_format(&e.to_tree_format()).unwrap();
        assert_eq!(normalize(&t).unwrap(), e, "tree round trip of {src}");
        assert_eq!(normalize(&e.to_tree()).unwrap(), e, "idempotence of {src}");
    }
}

#[test]
fn pi_folding() {
    assert_eq!(ex("sin(1/2*pi)"), Expr::one());
    assert_eq!(ex("cos(pi)"), Expr::int(-1));
    assert_eq!(ex("cos(3/2*pi)"), Expr::zero());
    assert_eq!(ex("tan(pi)"), Expr::zero());
    assert_eq!(ex("sin(1/3*pi)").term_count(), 1);
    assert_eq!(ex("sqrt(9/4)"), Expr::frac(3, 2));
}

#[test]
fn latex_rendering() {
    assert_eq!(to_latex(&ex("y_t^2")), "\\dot{y}^{2}");
    assert_eq!(to_latex(&ex("y_tt + th_ttt")), "\\ddot{y} + \\theta_{ttt}");
    assert_eq!(to_latex(&ex("q1_t/2")), "\\frac{\\dot{q}_{1}}{2}");
    assert_eq!(to_latex(&ex("cos(th)/sin(th)")), "\\frac{\\cos\\left(\\theta\\right)}{\\sin\\left(\\theta\\right)}");
}

#[test]
fn coefficient_extraction() {
    let e = ex("a*y_tt + b*y_tt*y + c");
    let c = e.coefficients_in(&[s("y_tt")]).unwrap();
    assert_eq!(c[&vec![1]], ex("a + b*y"));
    assert_eq!(c[&vec![0]], ex("c"));
    assert!(ex("sin(y_tt)").coefficients_in(&[s("y_tt")]).is_none());
}

#[test]
fn powers_in_denominators_are_recognized() {
    let e = ex("x/(x^4 + 4*x^2 + 4)");
    assert_eq!(e.den().len(), 1);
    assert_eq!(e.den()[0].1, 2);
    assert_eq!(to_plain(&e), "x/(x^2 + 2)^2");
    let two = ex("1/(x + 1)").mul(&ex("1/(y + 1)^3"));
    assert_eq!(parse(&to_plain(&two)).unwrap(), two);
}
