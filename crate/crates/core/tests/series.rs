use std::collections::BTreeMap;
use std::sync::Arc;

use polydepth::{ExponentVector, Layout, Nonlinearity, TruncatedSeries};
use proptest::prelude::*;

type Dense = BTreeMap<Vec<u32>, f64>;

fn to_map(s: &TruncatedSeries) -> Dense {
    s.terms()
        .filter(|(_, c)| *c != 0.0)
        .map(|(e, c)| (e.as_slice().to_vec(), c))
        .collect()
}

/// Schoolbook product of two term maps, truncated at `cap`.
fn naive_mul(a: &Dense, b: &Dense, cap: u32) -> Dense {
    let mut out = Dense::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            if e.iter().sum::<u32>() <= cap {
                *out.entry(e).or_insert(0.0) += ca * cb;
            }
        }
    }
    out
}

fn close(a: &Dense, b: &Dense, rel: f64) -> bool {
    let scale = a
        .values()
        .chain(b.values())
        .fold(1.0f64, |m, c| m.max(c.abs()));
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| {
        let x = a.get(k).copied().unwrap_or(0.0);
        let y = b.get(k).copied().unwrap_or(0.0);
        (x - y).abs() <= rel * scale
    })
}

fn series(layout: &Arc<Layout>, terms: Vec<(Vec<u32>, f64)>) -> TruncatedSeries {
    TruncatedSeries::from_terms(
        layout,
        terms.into_iter().map(|(e, c)| (ExponentVector::new(e), c)),
    )
    .unwrap()
}

fn arb_terms(n: usize, cap: u32) -> impl Strategy<Value = Vec<(Vec<u32>, f64)>> {
    prop::collection::vec(
        (prop::collection::vec(0..=cap, n), -2.0f64..2.0),
        0..8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in arb_terms(2, 4), b in arb_terms(2, 4), c in arb_terms(2, 4)) {
        let l = Arc::new(Layout::new(2, 4).unwrap());
        let (a, b, c) = (series(&l, a), series(&l, b), series(&l, c));
        prop_assert!(a.add(&b).unwrap().approx_eq(&b.add(&a).unwrap(), 1e-12));
        let left = a.add(&b).unwrap().add(&c).unwrap();
        let right = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-12));
        prop_assert!(a.mul(&b).unwrap().approx_eq(&b.mul(&a).unwrap(), 1e-12));
        let dist = a.mul(&b.add(&c).unwrap()).unwrap();
        let split = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(dist.approx_eq(&split, 1e-12));
    }

    #[test]
    fn product_matches_schoolbook(a in arb_terms(3, 5), b in arb_terms(3, 5)) {
        let l = Arc::new(Layout::new(3, 5).unwrap());
        let (sa, sb) = (series(&l, a), series(&l, b));
        let expect = naive_mul(&to_map(&sa), &to_map(&sb), 5);
        prop_assert!(close(&to_map(&sa.mul(&sb).unwrap()), &expect, 1e-12));
    }

    #[test]
    fn exp_composition_matches_power_sum(terms in arb_terms(2, 6)) {
        let cap = 6;
        let l = Arc::new(Layout::new(2, cap).unwrap());
        // zero constant term
        let terms: Vec<_> = terms.into_iter().filter(|(e, _)| e.iter().sum::<u32>() > 0).collect();
        let s = series(&l, terms);
        let got = s.compose(Nonlinearity::Exp).unwrap();
        let mut power = TruncatedSeries::constant(&l, 1.0);
        let mut sum = power.clone();
        let mut fact = 1.0;
        for k in 1..=cap {
            power = power.mul(&s).unwrap();
            fact *= k as f64;
            sum = sum.add(&power.scale(1.0 / fact)).unwrap();
        }
        prop_assert!(close(&to_map(&got), &to_map(&sum), 1e-10));
    }

    #[test]
    fn truncation_is_sound(terms in arb_terms(2, 4), other in arb_terms(2, 4)) {
        let lo = Arc::new(Layout::new(2, 4).unwrap());
        let hi = Arc::new(Layout::new(2, 6).unwrap());
        let a_lo = series(&lo, terms.clone()).mul(&series(&lo, other.clone())).unwrap();
        let a_hi = series(&hi, terms.clone()).mul(&series(&hi, other.clone())).unwrap();
        let t_lo = series(&lo, terms.clone()).compose(Nonlinearity::Sigmoid).unwrap();
        let t_hi = series(&hi, terms).compose(Nonlinearity::Sigmoid).unwrap();
        prop_assert!(a_hi.truncated(4).unwrap().approx_eq(&a_lo, 1e-12));
        prop_assert!(t_hi.truncated(4).unwrap().approx_eq(&t_lo, 1e-12));
    }
}

#[test]
fn nonlinearity_coefficients() {
    let tanh = Nonlinearity::Tanh.maclaurin(16).unwrap();
    for k in (0..16).step_by(2) {
        assert_eq!(tanh[k], 0.0, "tanh degree {k}");
    }
    let exp = Nonlinearity::Exp.maclaurin(16).unwrap();
    let mut fact = 1.0;
    for (k, c) in exp.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        assert!((c * fact - 1.0).abs() < 1e-12, "exp degree {k}");
    }
}

#[test]
fn tanh_matches_derivative_recursion() {
    // tanh' = 1 − tanh², so with T = Σ tₖ xᵏ: (k+1) t_{k+1} = [k=0] − Σ tᵢ t_{k−i}.
    let n = 12;
    let mut t = vec![0.0f64; n];
    for k in 0..n - 1 {
        let conv: f64 = (0..=k).map(|i| t[i] * t[k - i]).sum();
        let rhs = if k == 0 { 1.0 } else { 0.0 } - conv;
        t[k + 1] = rhs / (k + 1) as f64;
    }
    let got = Nonlinearity::Tanh.maclaurin(n).unwrap();
    for k in 0..n {
        assert!((got[k] - t[k]).abs() < 1e-14, "degree {k}: {} vs {}", got[k], t[k]);
    }
}

#[test]
fn square_of_sum_by_hand() {
    let l = Arc::new(Layout::new(2, 2).unwrap());
    let s = series(&l, vec![(vec![1, 0], 1.0), (vec![0, 1], 1.0)]);
    let sq = to_map(&s.mul(&s).unwrap());
    let expect: Dense = [(vec![2, 0], 1.0), (vec![1, 1], 2.0), (vec![0, 2], 1.0)]
        .into_iter()
        .collect();
    assert_eq!(sq, expect);
}

#[test]
fn recentred_composition_matches_pointwise_values() {
    // σ(c + s(x)) against direct evaluation for small x
    let l = Arc::new(Layout::new(2, 10).unwrap());
    let s = series(&l, vec![(vec![0, 0], 0.3), (vec![1, 0], 0.7), (vec![0, 1], -0.4)]);
    for sigma in [Nonlinearity::Exp, Nonlinearity::Sigmoid, Nonlinearity::Tanh, Nonlinearity::Softplus] {
        let c = s.compose(sigma).unwrap();
        for x in [[0.01, 0.02], [-0.03, 0.01], [0.05, -0.05]] {
            let exact = sigma.eval(0.3 + 0.7 * x[0] - 0.4 * x[1]);
            assert!((c.eval(&x) - exact).abs() < 1e-14, "{sigma:?} at {x:?}");
        }
    }
}
