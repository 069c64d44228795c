//! Property tests for the algebraic invariants of the scalar tower and the
//! series engine.

use proptest::prelude::*;

use logcalc::comb::{gbinom, lubell_pair};
use logcalc::polyscalar::PolyScalar;
use logcalc::scalar::Scalar;
use logcalc::series::{
    delta_plain, window_equal, BaseVar, Mono, Series, VarSupport, Window,
};

fn scalar_strategy() -> impl Strategy<Value = Scalar> {
    (-20i64..=20, 1i64..=9, -20i64..=20, 1i64..=9)
        .prop_map(|(a, b, c, d)| Scalar::gauss(a, b, c, d))
}

fn nonzero_scalar() -> impl Strategy<Value = Scalar> {
    scalar_strategy().prop_filter("nonzero", |s| !s.is_zero())
}

fn laurent_poly() -> impl Strategy<Value = Vec<(i64, i64)>> {
    proptest::collection::vec(((-4i64..=4), (-5i64..=5)), 1..5)
}

fn series_from(terms: &[(i64, i64)]) -> Series<Scalar> {
    let vars = vec![BaseVar::new("x", 0, VarSupport::unbounded())];
    Series::from_terms(
        vars,
        Scalar::zero(),
        terms
            .iter()
            .map(|(e, c)| {
                (
                    Mono {
                        exps: vec![Scalar::from_int(*e)],
                        logs: vec![0],
                    },
                    Scalar::from_int(*c),
                )
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_field_laws(a in scalar_strategy(), b in scalar_strategy(), c in scalar_strategy()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn scalar_inverses(a in nonzero_scalar()) {
        prop_assert_eq!(&a * &a.inv().unwrap(), Scalar::one());
        let text = a.to_string();
        let back: Scalar = text.parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn gbinom_pascal_recurrence(l in scalar_strategy(), n in 1u64..8) {
        let lm1 = &l - &Scalar::one();
        prop_assert_eq!(
            gbinom(&l, n),
            &gbinom(&lm1, n) + &gbinom(&lm1, n - 1)
        );
    }

    #[test]
    fn gbinom_vanishes_above_integer_top(m in 0i64..5, extra in 1u64..4) {
        let n = m as u64 + extra;
        prop_assert_eq!(gbinom(&Scalar::from_int(m), n), Scalar::zero());
    }

    #[test]
    fn lubell_identity(k in 0u64..=9) {
        for j in 0..=k {
            let (lhs, rhs) = lubell_pair(k, j);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn polyscalar_ring_laws(a in scalar_strategy(), b in scalar_strategy(), la in 0u32..3, pb in 0u32..3) {
        let p = PolyScalar::monomial(la, 0, a) + &PolyScalar::pi();
        let q = PolyScalar::monomial(0, pb, b) + &PolyScalar::lambda();
        prop_assert_eq!(p.clone() * &q, q.clone() * &p);
        let r = PolyScalar::lambda() + &PolyScalar::one();
        let lhs = (p.clone() + &q) * &r;
        let rhs = p.clone() * &r + &(q * &r);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn leibniz_against_delta(terms in laurent_poly()) {
        // d(f * delta) = df * delta + f * d(delta) on a window
        let f = series_from(&terms);
        let vars = vec![BaseVar::new("x", 0, VarSupport::unbounded())];
        let d = delta_plain(vars, 0);
        let prod = f.mul(&d).unwrap();
        let lhs = prod.deriv(0);
        let rhs = f.deriv(0).mul(&d).unwrap().add(&f.mul(&d.deriv(0)).unwrap());
        let cmp = window_equal(&lhs, &rhs, &Window::symmetric(5, 0));
        prop_assert!(cmp.equal, "{:?}", cmp.witness);
    }

    #[test]
    fn substitution_is_a_homomorphism(t1 in laurent_poly(), t2 in laurent_poly()) {
        // (fg)(x+y) = f(x+y) g(x+y) on a window
        let f = series_from(&t1);
        let g = series_from(&t2);
        let prod = f.mul(&g).unwrap().subst_shift(0, "y");
        let sep = f
            .subst_shift(0, "y")
            .mul(&g.subst_shift(0, "y"))
            .unwrap();
        let mut w = Window::symmetric(3, 0);
        w.overrides.push(("y".into(), 0, 3, 0));
        let cmp = window_equal(&prod, &sep, &w);
        prop_assert!(cmp.equal, "{:?}", cmp.witness);
    }

    #[test]
    fn delta_substitution_principle(terms in laurent_poly()) {
        // X(x1, x2) delta(x1/x2) = X(x2, x2) delta(x1/x2) for X a monomial
        // family in x1 alone (limit trivially exists)
        let vars = vec![
            BaseVar::new("x1", 0, VarSupport::unbounded()),
            BaseVar::new("x2", 0, VarSupport::unbounded()),
        ];
        let mk = |e1: i64, e2: i64, c: i64| {
            (
                Mono {
                    exps: vec![Scalar::from_int(e1), Scalar::from_int(e2)],
                    logs: vec![0, 0],
                },
                Scalar::from_int(c),
            )
        };
        let x: Vec<_> = terms.iter().map(|(e, c)| mk(*e, 0, *c)).collect();
        let x_sub: Vec<_> = terms.iter().map(|(e, c)| mk(0, *e, *c)).collect();
        let x = Series::from_terms(vars.clone(), Scalar::zero(), x);
        let x_sub = Series::from_terms(vars.clone(), Scalar::zero(), x_sub);
        let d = logcalc::series::delta_ratio(vars, 0, 1);
        let lhs = x.mul_with(&d, Scalar::zero(), |a, b| a * b).unwrap();
        let rhs = x_sub.mul_with(&d, Scalar::zero(), |a, b| a * b).unwrap();
        let cmp = window_equal(&lhs, &rhs, &Window::symmetric(4, 0));
        prop_assert!(cmp.equal, "{:?}", cmp.witness);
    }
}
