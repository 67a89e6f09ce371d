//! Completeness of the presheaves built from sub-modules, and the constant
//! presheaf as the standing counterexample.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sheafplectic::checks::{check_constant_counterexample, random_completeness};
use sheafplectic::exactalg::Field;
use sheafplectic::sheaf::{check_completeness, sheafify, AxiomVerdict, ExplicitPresheaf};
use sheafplectic::space::FiniteSpace;

#[test]
fn constant_presheaf_witnesses() {
    check_constant_counterexample(Field::Rationals).unwrap();
    let space = Arc::new(FiniteSpace::discrete(&["a", "b"]));
    let report = check_completeness(&ExplicitPresheaf::constant(
        Arc::clone(&space),
        Field::Rationals,
        1,
    ));
    let AxiomVerdict::Fails(cx) = report.s2 else {
        panic!("gluing must fail")
    };
    assert_eq!(space.open(cx.cover.target), space.open(space.full_open()));
    assert_eq!(cx.cover.members.len(), 2);
    // the witness family differs on the two points, so nothing glues it
    assert_ne!(cx.family[0], cx.family[1]);
}

#[test]
fn sheafification_of_constant_presheaf_is_locally_constant() {
    let space = Arc::new(FiniteSpace::discrete(&["a", "b"]));
    let s = sheafify(&ExplicitPresheaf::constant(space, Field::Rationals, 1));
    assert_eq!(s.sheaf.dims(), &[0, 1, 1, 2]);
    assert!(check_completeness(&s.sheaf).is_complete());
    assert!(!s.is_isomorphism());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructed_presheaves_are_complete(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(random_completeness(&mut rng), Ok(()));
    }
}
