//! Darboux decomposition and symplectic reduction on random instances.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sheafplectic::checks::{random_darboux, random_reduction, random_symplectic_module};
use sheafplectic::random;
use sheafplectic::sheaf::{FreeModuleSheaf, SubmoduleSheaf};
use sheafplectic::space::FiniteSpace;
use sheafplectic::symplectic::{classify, lagrangian_complement, SymplecticError};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn darboux_reconstructs(seed in any::<u64>(), seeded in any::<bool>()) {
        prop_assert_eq!(random_darboux(&mut ChaCha8Rng::seed_from_u64(seed), seeded), Ok(()));
    }

    #[test]
    fn reduction_is_symplectic(seed in any::<u64>()) {
        prop_assert_eq!(random_reduction(&mut ChaCha8Rng::seed_from_u64(seed)), Ok(()));
    }

    #[test]
    fn lagrangian_characterisations_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sm = random_symplectic_module(&mut rng, 3, 2);
        let e = sm.module().clone();
        let n = e.rank();
        let f = if seed % 2 == 0 {
            let stalks = sm.form().coeffs().iter().map(|a| random::lagrangian(&mut rng, a)).collect();
            SubmoduleSheaf::new(e.clone(), stalks).unwrap()
        } else {
            random::submodule(&mut rng, &e)
        };
        let c = classify(&sm, &f).unwrap();
        let half = f.stalks().iter().all(|s| 2 * s.dim() == n);
        let complement = lagrangian_complement(&sm, &f);
        prop_assert_eq!(c.lagrangian, c.isotropic && half);
        prop_assert_eq!(c.lagrangian, complement.is_ok());
        if c.lagrangian {
            prop_assert!(c.isotropic && c.coisotropic);
        }
        if c.symplectic_sub {
            let perp = sm.perp(&f).unwrap();
            for x in 0..f.stalks().len() {
                prop_assert!(f.stalk(x).intersection(perp.stalk(x)).unwrap().is_zero());
            }
        }
        if let Ok(g) = complement {
            for x in 0..f.stalks().len() {
                let (a, b) = (f.stalk(x), g.stalk(x));
                prop_assert!(a.sum(b).unwrap().is_full());
                prop_assert!(a.intersection(b).unwrap().is_zero());
                prop_assert!(b.is_isotropic_for(sm.form().coeff(x)));
            }
        }
    }
}

#[test]
fn failure_branch_names_the_obstructing_point() {
    let space = Arc::new(FiniteSpace::sierpinski());
    let (a, b) = (
        space.point_index("a").unwrap(),
        space.point_index("b").unwrap(),
    );
    let e = FreeModuleSheaf::new(
        Arc::clone(&space),
        sheafplectic::exactalg::Field::Rationals,
        2,
    );
    let mut coeff = vec![random::standard_form(e.field(), 2, 0); 2];
    coeff[b] = random::standard_form(e.field(), 2, 2);
    let w = sheafplectic::symplectic::TwoFormSheaf::new(e, coeff).unwrap();
    assert_eq!(
        sheafplectic::symplectic::darboux(&w, b, &Default::default()),
        Err(SymplecticError::NoAdmissibleNeighborhood { witness: a })
    );
}
