//! Main-path results against exhaustive enumeration over small prime fields
//! and against determinant expansion over the rationals.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sheafplectic::exactalg::{rank_of, subspace_intersection, Field, Matrix, Subspace};
use sheafplectic::oracle::{
    enum_annihilator, enum_gluing_check, enum_intersection, enum_rank, recompute_rank_via_minors,
    EnumerationBudget,
};
use sheafplectic::pairing::{annihilator, PairingSheaf};
use sheafplectic::random;
use sheafplectic::sheaf::{check_completeness, ExplicitPresheaf, FreeModuleSheaf, SubmoduleSheaf};
use sheafplectic::space::FiniteSpace;

fn f(p: u64) -> Field {
    Field::prime(p).unwrap()
}

#[test]
fn f3_planes_meet_in_a_line() {
    let f3 = f(3);
    let v = |xs: &[i64]| xs.iter().map(|&x| f3.from_i64(x)).collect::<Vec<_>>();
    let a = Subspace::span(f3, 3, [v(&[1, 0, 0]), v(&[0, 1, 0])]);
    let b = Subspace::span(f3, 3, [v(&[1, 1, 0]), v(&[0, 0, 1])]);
    let found = enum_intersection(&a, &b, &EnumerationBudget::default()).unwrap();
    assert_eq!(found, vec![v(&[0, 0, 0]), v(&[1, 1, 0]), v(&[2, 2, 0])]);
    assert_eq!(
        Subspace::span(f3, 3, found),
        subspace_intersection(&a, &b).unwrap()
    );
}

#[test]
fn j4_lagrangian_is_self_annihilating_over_f3() {
    let f3 = f(3);
    let e = FreeModuleSheaf::new(Arc::new(FiniteSpace::discrete(&["p"])), f3, 4);
    let j4 = Matrix::from_i64(
        f3,
        &[&[0, 1, 0, 0], &[-1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, -1, 0]],
    );
    let p = PairingSheaf::constant(e.clone(), e.clone(), j4).unwrap();
    let l = SubmoduleSheaf::constant(
        &e,
        Subspace::span(
            f3,
            4,
            [
                vec![f3.one(), f3.zero(), f3.zero(), f3.zero()],
                vec![f3.zero(), f3.zero(), f3.one(), f3.zero()],
            ],
        ),
    )
    .unwrap();
    let budget = EnumerationBudget {
        max_rank: 4,
        ..EnumerationBudget::default()
    };
    let found = enum_annihilator(&p, &l, 1, &budget).unwrap();
    assert_eq!(found.len(), 9);
    let spanned = Subspace::span(f3, 4, found.iter().map(|s| s.value(0).unwrap().to_vec()));
    assert_eq!(&spanned, l.stalk(0));
    assert_eq!(annihilator(&p, &l).unwrap(), l);
}

#[test]
fn gluing_enumeration_agrees_on_constant_and_section_presheaves() {
    let budget = EnumerationBudget::default();
    for p in [2, 3] {
        let space = Arc::new(FiniteSpace::sierpinski());
        let e = FreeModuleSheaf::new(Arc::clone(&space), f(p), 1);
        for presheaf in [
            ExplicitPresheaf::of_sections(&SubmoduleSheaf::full(&e)),
            ExplicitPresheaf::constant(Arc::clone(&space), f(p), 1),
            ExplicitPresheaf::constant(Arc::new(FiniteSpace::discrete(&["a", "b"])), f(p), 1),
        ] {
            let report = check_completeness(&presheaf);
            let s = presheaf.space();
            let enumerated: Vec<_> = (0..s.n_opens())
                .map(|u| enum_gluing_check(&presheaf, u, &budget).unwrap())
                .collect();
            assert_eq!(report.s1.holds(), enumerated.iter().all(|r| !r.s1_fails));
            assert_eq!(report.s2.holds(), enumerated.iter().all(|r| !r.s2_fails));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn annihilator_matches_enumeration(seed in any::<u64>(), prime in prop::sample::select(vec![2u64, 3])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = 1 + (seed % 3) as usize;
        let n_points = 1 + (seed / 3 % 2) as usize;
        let field = f(prime);
        let e = FreeModuleSheaf::new(Arc::new(random::space(&mut rng, n_points)), field, rank);
        let grams = (0..n_points).map(|_| random::matrix(&mut rng, field, rank, rank)).collect();
        let p = PairingSheaf::new(e.clone(), e.clone(), grams).unwrap();
        let g = random::submodule(&mut rng, &e);
        let exact = annihilator(&p, &g).unwrap();
        let budget = EnumerationBudget::default();
        for u in 0..e.space().n_opens() {
            let found = enum_annihilator(&p, &g, u, &budget).unwrap();
            for x in e.space().open(u).iter() {
                let spanned = Subspace::span(field, rank, found.iter().map(|s| s.value(x).unwrap().to_vec()));
                prop_assert_eq!(&spanned, exact.stalk(x));
            }
        }
    }

    #[test]
    fn intersection_and_rank_match_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = f(2 + (seed % 2));
        let budget = EnumerationBudget::default();
        let a = random::subspace(&mut rng, field, 3);
        let b = random::subspace(&mut rng, field, 3);
        let found = enum_intersection(&a, &b, &budget).unwrap();
        prop_assert_eq!(Subspace::span(field, 3, found), a.intersection(&b).unwrap());
        let m = random::matrix(&mut rng, field, 3, 4);
        prop_assert_eq!(enum_rank(&m, &budget).unwrap(), rank_of(&m));
    }

    #[test]
    fn rank_matches_minor_expansion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = 1 + (seed % 6) as usize;
        let cols = 1 + (seed / 6 % 6) as usize;
        let mut m = random::matrix(&mut rng, Field::Rationals, rows, cols);
        if seed % 4 == 0 && rows > 1 {
            // force a dependent row
            for c in 0..cols {
                m[(rows - 1, c)] = m[(0, c)].clone();
            }
        }
        prop_assert_eq!(recompute_rank_via_minors(&m).unwrap(), rank_of(&m));
    }
}
