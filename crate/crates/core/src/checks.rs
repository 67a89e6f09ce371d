//! Invariant checks shared by the randomized test suites and `check` command.
//!
//! Each `check_*` function takes one concrete instance and returns the first
//! violated property as an error message. The `random_*` drivers build an
//! instance from an RNG and run the matching check.

use rand::Rng;

use crate::exactalg::{rank_of, Field, Matrix, Scalar, Subspace};
use crate::pairing::{
    annihilator, check_hom_exactness, induced_endomorphism, induced_pairing, left_annihilator,
    transpose_endomorphism, transpose_morphism, MorphismSheaf, PairingSheaf,
};
use crate::random;
use crate::sheaf::{
    check_completeness, check_completeness_over_all_covers, intersect_submodules, sum_submodules,
    ExplicitPresheaf, FreeModuleSheaf, SubmoduleSheaf,
};
use crate::symplectic::{
    darboux, flat, form_rank, reduce, reduce_lagrangian, DarbouxOptions, DarbouxResult,
    SymplecticError, SymplecticModule, TwoFormSheaf,
};

pub type CheckResult = Result<(), String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> CheckResult {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Dimension formula, double annihilator, both De Morgan laws and inclusion
/// reversal for `𝓖`, `𝓗` under a non-degenerate pairing.
pub fn check_annihilator_laws(
    p: &PairingSheaf,
    g: &SubmoduleSheaf,
    h: &SubmoduleSheaf,
) -> CheckResult {
    let gp = annihilator(p, g).map_err(err)?;
    let hp = annihilator(p, h).map_err(err)?;
    let space = p.left().space();
    for u in 0..space.n_opens() {
        ensure(
            g.dim_over(u) + gp.dim_over(u) == p.left().dim_over(u),
            || format!("dim 𝓖 + dim 𝓖^⊥ ≠ dim 𝓔 over {}", space.describe(u)),
        )?;
    }
    ensure(left_annihilator(p, &gp).map_err(err)? == *g, || {
        "(𝓖^⊥)^⊥ ≠ 𝓖".into()
    })?;

    let sum = sum_submodules(&[g.clone(), h.clone()]).map_err(err)?;
    let meet = intersect_submodules(&[g.clone(), h.clone()]).map_err(err)?;
    let perp_meet = intersect_submodules(&[gp.clone(), hp.clone()]).map_err(err)?;
    let perp_sum = sum_submodules(&[gp.clone(), hp.clone()]).map_err(err)?;
    ensure(annihilator(p, &sum).map_err(err)? == perp_meet, || {
        "(𝓖+𝓗)^⊥ ≠ 𝓖^⊥ ∩ 𝓗^⊥".into()
    })?;
    ensure(annihilator(p, &meet).map_err(err)? == perp_sum, || {
        "(𝓖∩𝓗)^⊥ ≠ 𝓖^⊥ + 𝓗^⊥".into()
    })?;

    // 𝓖∩𝓗 ⊆ 𝓖 reverses, and distinct sub-modules have distinct annihilators
    ensure(
        gp.is_subsheaf_of(&annihilator(p, &meet).map_err(err)?),
        || "inclusion is not reversed".into(),
    )?;
    if g.is_subsheaf_of(h) {
        ensure(hp.is_subsheaf_of(&gp), || {
            "inclusion is not reversed".into()
        })?;
    }
    ensure((g == h) == (gp == hp), || {
        "annihilator is not injective".into()
    })
}

/// `𝓔 = 𝓖 ⊕ 𝓗` stalkwise implies `𝓕 = 𝓖^⊥ ⊕ 𝓗^⊥`.
pub fn check_direct_sum_split(
    p: &PairingSheaf,
    g: &SubmoduleSheaf,
    h: &SubmoduleSheaf,
) -> CheckResult {
    let gp = annihilator(p, g).map_err(err)?;
    let hp = annihilator(p, h).map_err(err)?;
    for x in 0..g.stalks().len() {
        let (a, b) = (g.stalk(x), h.stalk(x));
        if !(a.sum(b).map_err(err)?.is_full() && a.intersection(b).map_err(err)?.is_zero()) {
            continue;
        }
        let (c, d) = (gp.stalk(x), hp.stalk(x));
        ensure(
            c.sum(d).map_err(err)?.is_full() && c.intersection(d).map_err(err)?.is_zero(),
            || format!("annihilators do not split the partner at point {x}"),
        )?;
    }
    Ok(())
}

/// The pairing of `𝓖` with `𝓕/𝓖^⊥`, and the endomorphisms induced by an
/// `S` leaving `𝓖` invariant.
pub fn check_induced_structures(
    p: &PairingSheaf,
    s: &MorphismSheaf,
    g: &SubmoduleSheaf,
) -> CheckResult {
    let ip = induced_pairing(p, g).map_err(err)?;
    ensure(ip.is_nondegenerate(), || {
        "induced pairing is degenerate".into()
    })?;
    for x in 0..g.stalks().len() {
        let reps = ip.quotient().stalk(x).complement().basis();
        for a in g.stalk(x).basis() {
            for t in reps {
                for z in ip.sub_perp().stalk(x).basis() {
                    let shifted: Vec<Scalar> = t.iter().zip(z).map(|(u, v)| u + v).collect();
                    ensure(
                        ip.evaluate_at(x, a, t) == ip.evaluate_at(x, a, &shifted),
                        || format!("induced pairing depends on the representative at point {x}"),
                    )?;
                }
            }
        }
    }
    let ie = induced_endomorphism(p, s, g).map_err(err)?;
    for (x, stalk) in ie.pairing.sub_perp().stalks().iter().enumerate() {
        for b in stalk.basis() {
            ensure(stalk.contains(&ie.transpose.mat(x).mul_vec(b)), || {
                format!("𝓖^⊥ is not T-invariant at point {x}")
            })?;
        }
    }
    ensure(ie.commutes_with_projection(), || "T*∘q ≠ q∘T".into())?;
    ensure(ie.is_transpose_pair(), || {
        "S|𝓖 and T* are not transposes".into()
    })
}

/// Transposition laws on morphisms and on endomorphisms relative to `p`.
pub fn check_transpose_laws(
    p: &PairingSheaf,
    phi: &MorphismSheaf,
    psi: &MorphismSheaf,
) -> CheckResult {
    let e = phi.from();
    let id = MorphismSheaf::identity(e);
    ensure(transpose_morphism(&id) == id, || "ᵗid ≠ id".into())?;
    let sum = phi.add(psi).map_err(err)?;
    ensure(
        transpose_morphism(&sum)
            == transpose_morphism(phi)
                .add(&transpose_morphism(psi))
                .map_err(err)?,
        || "ᵗ(φ+ψ) ≠ ᵗφ+ᵗψ".into(),
    )?;
    let comp = psi.compose(phi).map_err(err)?;
    ensure(
        transpose_morphism(&comp)
            == transpose_morphism(phi)
                .compose(&transpose_morphism(psi))
                .map_err(err)?,
        || "ᵗ(ψ∘φ) ≠ ᵗφ∘ᵗψ".into(),
    )?;
    if let Some(inv) = phi.inverse() {
        ensure(
            transpose_morphism(phi).inverse() == Some(transpose_morphism(&inv)),
            || "(ᵗφ)⁻¹ ≠ ᵗ(φ⁻¹)".into(),
        )?;
    }
    let perp_image = annihilator(&PairingSheaf::canonical(e), &phi.image()).map_err(err)?;
    ensure(transpose_morphism(phi).kernel() == perp_image, || {
        "ker ᵗφ ≠ (im φ)^⊥".into()
    })?;

    let t = transpose_endomorphism(p, phi).map_err(err)?;
    for x in 0..e.space().n_points() {
        let lhs = p.gram(x).mul(t.mat(x));
        let rhs = phi.mat(x).transpose().mul(p.gram(x));
        ensure(lhs == rhs, || format!("φ(s, Tt) ≠ φ(Ss, t) at point {x}"))?;
    }
    Ok(())
}

/// Exactness of both Hom sequences at every open.
pub fn check_hom_sequences(f: &SubmoduleSheaf, probe: &FreeModuleSheaf) -> CheckResult {
    let report = check_hom_exactness(f, probe).map_err(err)?;
    for entry in &report.entries {
        ensure(entry.covariant.is_exact(), || {
            format!("Hom(P, -) is not left exact over open {}", entry.open)
        })?;
        ensure(entry.contravariant.is_exact(), || {
            format!("Hom(-, P) is not left exact over open {}", entry.open)
        })?;
    }
    Ok(())
}

/// Sections presheaves of sub-modules satisfy both sheaf axioms, with the
/// same verdict whether only irredundant covers or all covers are examined.
pub fn check_sections_complete(f: &SubmoduleSheaf) -> CheckResult {
    let presheaf = ExplicitPresheaf::of_sections(f);
    let report = check_completeness(&presheaf);
    ensure(report.is_complete(), || {
        format!("sections presheaf is not complete: {report:?}")
    })?;
    if presheaf.space().n_opens() <= 10 {
        ensure(
            check_completeness_over_all_covers(&presheaf) == report,
            || "verdict depends on which covers are examined".into(),
        )?;
    }
    Ok(())
}

/// The constant presheaf on a two-point discrete space violates gluing.
pub fn check_constant_counterexample(field: Field) -> CheckResult {
    let space = std::sync::Arc::new(crate::space::FiniteSpace::discrete(&["a", "b"]));
    let report = check_completeness(&ExplicitPresheaf::constant(space, field, 1));
    ensure(!report.s2.holds(), || "constant presheaf glues".into())?;
    ensure(!report.s1.holds(), || {
        "constant presheaf is separated over ∅".into()
    })
}

/// Exact reconstruction, rank agreement, independence of the covectors and,
/// when seeded, that the seed is the second covector of the first pair.
pub fn check_darboux_result(
    w: &TwoFormSheaf,
    r: &DarbouxResult,
    seed: Option<&crate::sheaf::Section>,
) -> CheckResult {
    let space = w.module().space();
    ensure(space.open(r.neighborhood).contains(r.at), || {
        "neighbourhood misses the point".into()
    })?;
    ensure(r.reconstructs(w), || {
        "Σ s∧s ≠ ω on the neighbourhood".into()
    })?;
    let rank = form_rank(w, r.neighborhood).map_err(err)?;
    ensure(2 * r.half_rank == rank, || {
        format!("2m = {} but rank is {rank}", 2 * r.half_rank)
    })?;
    for y in space.open(r.neighborhood).iter() {
        let rows: Vec<Vec<Scalar>> = r
            .pairs
            .iter()
            .flat_map(|(a, b)| [a.value(y).unwrap().to_vec(), b.value(y).unwrap().to_vec()])
            .collect();
        let m = Matrix::from_rows(w.module().field(), w.module().rank(), rows);
        ensure(rank_of(&m) == 2 * r.half_rank, || {
            format!("covectors dependent at point {y}")
        })?;
    }
    if let Some(seed) = seed {
        let restricted = w.module().restrict(seed, r.neighborhood).map_err(err)?;
        ensure(r.pairs[0].1 == restricted, || "seed not honoured".into())?;
    }
    Ok(())
}

/// Reduction of `𝓕`: non-degenerate `ω̂`, pointwise dimension count,
/// representative independence; when `𝓕` is coisotropic and a Lagrangian
/// `𝓖` is given, the image of `𝓖∩𝓕` is Lagrangian in the reduction.
pub fn check_reduction(
    sm: &SymplecticModule,
    f: &SubmoduleSheaf,
    g: Option<&SubmoduleSheaf>,
) -> CheckResult {
    let r = reduce(sm, f).map_err(err)?;
    ensure(r.is_nondegenerate(), || "ω̂ is degenerate".into())?;
    let perp = sm.perp(f).map_err(err)?;
    let coisotropic = perp.is_subsheaf_of(f);
    for x in 0..f.stalks().len() {
        let radical = r.radical().stalk(x);
        ensure(r.dim_at(x) == f.stalk(x).dim() - radical.dim(), || {
            format!("wrong reduced dimension at point {x}")
        })?;
        if coisotropic {
            ensure(
                r.dim_at(x) == f.stalk(x).dim() - perp.stalk(x).dim(),
                || format!("dim ≠ dim 𝓕 − dim 𝓕^⊥ at point {x}"),
            )?;
        }
        let reps = r.stalk(x).complement().basis();
        for a in reps {
            for b in reps {
                for z in radical.basis() {
                    let shifted: Vec<Scalar> = b.iter().zip(z).map(|(u, v)| u + v).collect();
                    ensure(
                        r.evaluate_at(x, a, b) == r.evaluate_at(x, a, &shifted),
                        || format!("ω̂ depends on the representative at point {x}"),
                    )?;
                }
            }
        }
    }
    if let (true, Some(g)) = (coisotropic, g) {
        let rl = reduce_lagrangian(sm, f, g).map_err(err)?;
        ensure(rl.is_isotropic(), || {
            "reduced Lagrangian is not isotropic".into()
        })?;
        ensure(rl.has_half_dimension(), || {
            "reduced Lagrangian has the wrong dimension".into()
        })?;
    }
    Ok(())
}

fn nondegenerate_pairing<R: Rng + ?Sized>(rng: &mut R, e: &FreeModuleSheaf) -> PairingSheaf {
    let grams = (0..e.space().n_points())
        .map(|_| random::invertible(rng, e.field(), e.rank()))
        .collect();
    PairingSheaf::new(e.clone(), e.clone(), grams).expect("square grams")
}

/// A complement of `s`: the standard basis vectors at its non-pivot positions.
fn standard_complement(s: &Subspace) -> Subspace {
    let field = s.field();
    let n = s.ambient_dim();
    Subspace::span(
        field,
        n,
        (0..n).filter(|j| !s.pivots().contains(j)).map(|j| {
            let mut v = vec![field.zero(); n];
            v[j] = field.one();
            v
        }),
    )
}

/// All annihilator laws, including the direct-sum split, on one random
/// instance over `ℚ` (up to 4 points, rank up to 6).
pub fn random_annihilator_theorem<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let rank = rng.gen_range(1..=6);
    let e = random::module(rng, Field::Rationals, 4, rank);
    let p = nondegenerate_pairing(rng, &e);
    let g = random::submodule(rng, &e);
    let h = if rng.gen_bool(0.2) {
        g.clone()
    } else {
        random::submodule(rng, &e)
    };
    check_annihilator_laws(&p, &g, &h)?;
    let inside = intersect_submodules(&[g.clone(), h.clone()]).map_err(err)?;
    check_annihilator_laws(&p, &inside, &g)?;
    let complement = SubmoduleSheaf::from_fn(&e, |x| standard_complement(g.stalk(x)));
    check_direct_sum_split(&p, &g, &complement)
}

/// An endomorphism with `𝓖` invariant: block upper-triangular in a basis
/// adapted to `𝓖` at every point.
fn invariant_endomorphism<R: Rng + ?Sized>(
    rng: &mut R,
    e: &FreeModuleSheaf,
    g: &SubmoduleSheaf,
) -> MorphismSheaf {
    let field = e.field();
    let n = e.rank();
    let mats = g
        .stalks()
        .iter()
        .map(|s| {
            let mut cols: Vec<Vec<Scalar>> = s.basis().to_vec();
            cols.extend(standard_complement(s).basis().iter().cloned());
            let b = Matrix::from_rows(field, n, cols).transpose();
            let mut k = random::matrix(rng, field, n, n);
            for r in s.dim()..n {
                for c in 0..s.dim() {
                    k[(r, c)] = field.zero();
                }
            }
            b.mul(&k).mul(&b.inverse().expect("adapted basis"))
        })
        .collect();
    MorphismSheaf::new(e.clone(), e.clone(), mats).expect("square matrices")
}

/// Induced pairing and induced endomorphisms on one random instance over `ℚ`.
pub fn random_induced_structures<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let rank = rng.gen_range(1..=5);
    let e = random::module(rng, Field::Rationals, 3, rank);
    let p = nondegenerate_pairing(rng, &e);
    let g = random::submodule(rng, &e);
    let s = invariant_endomorphism(rng, &e, &g);
    check_induced_structures(&p, &s, &g)
}

/// Darboux on a random rankwise form over `ℚ` (rank up to 8, up to 4 points),
/// optionally seeded with a random covector of `♭𝓔` near the point.
pub fn random_darboux<R: Rng + ?Sized>(rng: &mut R, seeded: bool) -> CheckResult {
    let n = rng.gen_range(2..=8);
    let e = random::module(rng, Field::Rationals, 4, n);
    let x = rng.gen_range(0..e.space().n_points());
    let rank = 2 * rng.gen_range(1..=n / 2);
    let w = random::rankwise_form(rng, &e, x, rank);
    // near x the form is c(y)·ω₀, so ♭𝓔 has the same stalk there and the
    // seed can be d(y)·v for one v; independent values per point could leave
    // no coordinate that is nonzero on the whole minimal open
    let seed = if seeded {
        let near = e.space().minimal_open(x).expect("point in range");
        let image = flat(&w).image;
        let stalk = image.stalk(x);
        let v = loop {
            let v = stalk.combine(&random::vector(rng, e.field(), stalk.dim()));
            if v.iter().any(|c| !c.is_zero()) {
                break v;
            }
        };
        let scales: Vec<Scalar> = (0..e.space().n_points())
            .map(|_| loop {
                let c = random::scalar(rng, e.field());
                if !c.is_zero() {
                    break c;
                }
            })
            .collect();
        Some(e.section_from_fn(near, |y| v.iter().map(|c| c * &scales[y]).collect()))
    } else {
        None
    };
    let options = DarbouxOptions {
        seed: seed.clone(),
        abs_normalize: false,
    };
    let r = darboux(&w, x, &options).map_err(err)?;
    check_darboux_result(&w, &r, seed.as_ref())
}

/// A symplectic module over `ℚ` with per-point forms `Pᵀ·J·P`.
pub fn random_symplectic_module<R: Rng + ?Sized>(
    rng: &mut R,
    max_points: usize,
    max_half: usize,
) -> SymplecticModule {
    let n = 2 * rng.gen_range(1..=max_half);
    let e = random::module(rng, Field::Rationals, max_points, n);
    let coeff = (0..e.space().n_points())
        .map(|_| random::form_of_rank(rng, Field::Rationals, n, n))
        .collect();
    SymplecticModule::new(TwoFormSheaf::new(e, coeff).expect("skew")).expect("non-degenerate")
}

/// Reduction of a random coisotropic `𝓛 + 𝓦` together with a random Lagrangian.
pub fn random_reduction<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let sm = random_symplectic_module(rng, 4, 3);
    let e = sm.module().clone();
    let per_point = |rng: &mut R, build: fn(&mut R, &Matrix) -> Subspace| {
        let stalks = sm.form().coeffs().iter().map(|a| build(rng, a)).collect();
        SubmoduleSheaf::new(e.clone(), stalks).expect("stalks of rank n")
    };
    let f = per_point(rng, random::coisotropic::<R>);
    let g = per_point(rng, random::lagrangian::<R>);
    let perp = sm.perp(&f).map_err(err)?;
    ensure(perp.is_subsheaf_of(&f), || {
        "constructed 𝓕 is not coisotropic".into()
    })?;
    check_reduction(&sm, &f, Some(&g))
}

/// Completeness of sections presheaves built from sub-modules, annihilators,
/// sums and intersections.
pub fn random_completeness<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let rank = rng.gen_range(1..=3);
    let e = random::module(rng, Field::Rationals, 4, rank);
    let p = nondegenerate_pairing(rng, &e);
    let g = random::submodule(rng, &e);
    let h = random::submodule(rng, &e);
    check_sections_complete(&g)?;
    check_sections_complete(&annihilator(&p, &g).map_err(err)?)?;
    check_sections_complete(&sum_submodules(&[g.clone(), h.clone()]).map_err(err)?)?;
    check_sections_complete(&intersect_submodules(&[g, h]).map_err(err)?)
}

/// Hom exactness for a random `(𝓔, 𝓕, probe)`.
pub fn random_hom_exactness<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let rank = rng.gen_range(1..=3);
    let e = random::module(rng, Field::Rationals, 3, rank);
    let f = random::submodule(rng, &e);
    let probe = e.with_rank(rng.gen_range(0..=2));
    check_hom_sequences(&f, &probe)
}

/// Transposition laws for random morphisms and a random non-degenerate pairing.
pub fn random_transpose_laws<R: Rng + ?Sized>(rng: &mut R) -> CheckResult {
    let rank = rng.gen_range(1..=4);
    let e = random::module(rng, Field::Rationals, 3, rank);
    let p = nondegenerate_pairing(rng, &e);
    let mut endo = || {
        let mats = (0..e.space().n_points())
            .map(|_| random::matrix(rng, e.field(), rank, rank))
            .collect();
        MorphismSheaf::new(e.clone(), e.clone(), mats).expect("square")
    };
    let (phi, psi) = (endo(), endo());
    check_transpose_laws(&p, &phi, &psi)
}

/// Whether a Darboux failure is one the algorithm is allowed to report.
pub fn is_expected_darboux_failure(e: &SymplecticError) -> bool {
    matches!(
        e,
        SymplecticError::ZeroFormAt(_) | SymplecticError::NoAdmissibleNeighborhood { .. }
    )
}
