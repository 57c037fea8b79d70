mod common;

use common::{dyadic, random_subdist, rng};
use metric_wb::dist::{Dist, DistError, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mix_weight_is_linear(seed in any::<u64>(), parts in 1usize..5) {
        let mut r = rng(seed);
        let mut left = Rational::one();
        let mut items = Vec::new();
        for _ in 0..parts {
            let c = dyadic(&mut r, 3) * &left;
            left -= &c;
            items.push((c, random_subdist(&mut r, 4)));
        }
        let m = Dist::mix(&items).unwrap();
        let expect: Rational = items.iter().map(|(c, d)| c * d.weight()).sum();
        prop_assert_eq!(m.weight(), expect);
        prop_assert!(m.weight() <= Rational::one());
    }

    #[test]
    fn mix_regroups(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_subdist(&mut r, 4), random_subdist(&mut r, 4), random_subdist(&mut r, 4));
        let p = dyadic(&mut r, 2);
        let q = dyadic(&mut r, 2);
        let inner = Dist::mix(&[(q.clone(), b.clone()), (Rational::one() - &q, c.clone())]).unwrap();
        let nested = Dist::mix(&[(p.clone(), a.clone()), (Rational::one() - &p, inner)]).unwrap();
        let one_minus_p = Rational::one() - &p;
        let flat = Dist::mix(&[
            (p.clone(), a),
            (&one_minus_p * &q, b),
            (&one_minus_p * (Rational::one() - &q), c),
        ])
        .unwrap();
        prop_assert_eq!(nested, flat);
    }

    #[test]
    fn bind_never_exceeds_one(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = random_subdist(&mut r, 5);
        let ks: Vec<Dist<usize>> = (0..5).map(|_| random_subdist(&mut r, 5)).collect();
        let e = d.bind(|s| ks[*s].clone());
        prop_assert!(e.weight() <= d.weight());
        let scaled = d.scale(&dyadic(&mut r, 3));
        prop_assert!(scaled.weight() <= d.weight());
    }

    #[test]
    fn overweight_mix_rejected(seed in any::<u64>()) {
        let mut r = rng(seed);
        let extra: i64 = r.gen_range(1..8);
        let c = Rational::one() + Rational::new(extra.into(), 8.into());
        let err = Dist::mix(&[(c, Dist::dirac(0usize))]).unwrap_err();
        prop_assert!(matches!(err, DistError::CoefficientOverflow(..)));
    }
}

#[test]
fn empty_mix_is_empty() {
    let m: Dist<usize> = Dist::mix(&[]).unwrap();
    assert!(m.is_empty());
    assert!(m.weight().is_zero());
}
