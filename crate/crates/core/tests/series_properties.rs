mod common;

use approxlie::expr::NormalForm;
use approxlie::series::EpsSeries;
use common::{expr_text, nf};
use proptest::prelude::*;

fn series() -> impl Strategy<Value = EpsSeries> {
    prop::collection::vec(expr_text(), 3).prop_map(|cs| EpsSeries::new(cs.iter().map(|c| nf(c)).collect()))
}

fn same(a: &EpsSeries, b: &EpsSeries) -> bool {
    a.order() == b.order() && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| x.sub(y).is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_is_commutative_and_associative(a in series(), b in series(), c in series()) {
        prop_assert!(same(&a.mul(&b).unwrap(), &b.mul(&a).unwrap()));
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(same(&left, &right));
    }

    #[test]
    fn product_distributes(a in series(), b in series(), c in series()) {
        let left = a.mul(&b.add(&c).unwrap()).unwrap();
        let right = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(same(&left, &right));
    }

    #[test]
    fn inverse(a in series()) {
        prop_assume!(!a.coeff(0).is_zero());
        let one = EpsSeries::constant(NormalForm::one(), a.order());
        prop_assert!(same(&a.mul(&a.inv().unwrap()).unwrap(), &one));
    }

    #[test]
    fn truncation_commutes_with_products(a in series(), b in series()) {
        let low = a.with_order(1).mul(&b.with_order(1)).unwrap();
        prop_assert!(same(&a.mul(&b).unwrap().with_order(1), &low));
    }

    #[test]
    fn expansion_round_trips(a in series()) {
        let back = EpsSeries::from_normal(&a.to_normal(), a.order()).unwrap();
        prop_assert!(same(&back, &a));
    }

    #[test]
    fn expansion_is_multiplicative(a in series(), b in series()) {
        let (f, g) = (a.to_normal(), b.to_normal());
        let whole = EpsSeries::from_normal(&f.mul(&g), 2).unwrap();
        let parts = EpsSeries::from_normal(&f, 2).unwrap().mul(&EpsSeries::from_normal(&g, 2).unwrap()).unwrap();
        prop_assert!(same(&whole, &parts));
    }
}
