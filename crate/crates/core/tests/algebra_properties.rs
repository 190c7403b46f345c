mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use ncfree::algebra::{
    amplify_element, amplify_map, compose_maps, AlgElement, AlgebraDescriptor, ConditionalExpectation, LinMapRep, C64,
};

fn random_dense(seed: u64, d: usize) -> LinMapRep {
    let mut rng = common::rng(seed);
    let n = d * d;
    let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    LinMapRep::dense(AlgebraDescriptor::full(d), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kraus_maps_have_psd_choi(seed in any::<u64>(), full in any::<bool>()) {
        let alg = common::algebras()[full as usize];
        let m = common::random_cp_map(&mut common::rng(seed), alg);
        prop_assert!(m.choi_is_psd());
        prop_assert!(m.densified().choi_is_psd());
    }

    #[test]
    fn amplify_respects_composition(seed in any::<u64>(), d in 1usize..=3, outer in 2usize..=3) {
        let (m1, m2) = (random_dense(seed, d), random_dense(seed ^ 0x9e37, d));
        let lhs = amplify_map(&compose_maps(&m1, &m2).unwrap(), outer);
        let rhs = compose_maps(&amplify_map(&m1, outer), &amplify_map(&m2, outer)).unwrap();
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn amplified_kraus_matches_dense(seed in any::<u64>()) {
        let alg = AlgebraDescriptor::full(2);
        let m = common::random_cp_map(&mut common::rng(seed), alg);
        prop_assert!(amplify_map(&m, 2).approx_eq(&amplify_map(&m.densified(), 2), 1e-12));
        let x = common::random_element(&mut common::rng(seed + 1), alg);
        let big = amplify_map(&m, 2).apply(&amplify_element(&x, 2));
        prop_assert!(big.approx_eq(&amplify_element(&m.apply(&x), 2), 1e-12, 1e-14));
    }

    #[test]
    fn conditional_expectation_laws(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = common::rng(seed);
        let e = ConditionalExpectation::onto_diagonal(d);
        let full = AlgebraDescriptor::full(d);
        let diag = AlgebraDescriptor::diagonal(d);
        let x = common::random_element(&mut rng, full);
        let b = common::random_element(&mut rng, diag);
        let b2 = common::random_element(&mut rng, diag);
        let ex = e.apply(&x);
        let lift = |y: &AlgElement| AlgElement::new(full, y.entries().clone()).unwrap();
        prop_assert_eq!(e.apply(&lift(&ex)), ex.clone());
        prop_assert_eq!(e.apply(&AlgElement::one(full)), AlgElement::one(diag));
        let lhs = e.apply(&(&(&lift(&b) * &x) * &lift(&b2)));
        let rhs = &(&b * &ex) * &b2;
        prop_assert!(lhs.approx_eq(&rhs, 1e-12, 1e-14));
    }
}
