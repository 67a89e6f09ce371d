//! Random instances for property tests and randomized check suites.
//!
//! Rational entries are small (numerators in `-3..=3`, occasionally halved)
//! so exact arithmetic stays cheap.

use std::sync::Arc;

use rand::Rng;

use crate::exactalg::{Field, Matrix, Scalar, Subspace};
use crate::sheaf::{FreeModuleSheaf, SubmoduleSheaf};
use crate::space::{FiniteSpace, PointSet};
use crate::symplectic::TwoFormSheaf;

/// A topology on `n_points` points: the closure of a few random subsets
/// under unions and intersections.
pub fn space<R: Rng + ?Sized>(rng: &mut R, n_points: usize) -> FiniteSpace {
    let full = PointSet::full(n_points);
    let mut opens = vec![PointSet::EMPTY, full];
    for _ in 0..rng.gen_range(0..=n_points + 1) {
        opens.push(PointSet::from_indices(
            (0..n_points).filter(|_| rng.gen_bool(0.5)),
        ));
    }
    loop {
        let mut grown = opens.clone();
        for a in &opens {
            for b in &opens {
                for c in [a.union(*b), a.intersection(*b)] {
                    if !grown.contains(&c) {
                        grown.push(c);
                    }
                }
            }
        }
        if grown.len() == opens.len() {
            break;
        }
        opens = grown;
    }
    let names = (0..n_points).map(|i| format!("p{i}")).collect();
    FiniteSpace::new(names, opens).expect("closure is a topology")
}

pub fn scalar<R: Rng + ?Sized>(rng: &mut R, field: Field) -> Scalar {
    match field {
        Field::Rationals => {
            let num = rng.gen_range(-3..=3);
            let den = if rng.gen_bool(0.2) { 2 } else { 1 };
            field.from_ratio(num, den)
        }
        Field::Prime(p) => field.from_i64(rng.gen_range(0..p) as i64),
    }
}

pub fn vector<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize) -> Vec<Scalar> {
    (0..n).map(|_| scalar(rng, field)).collect()
}

pub fn matrix<R: Rng + ?Sized>(rng: &mut R, field: Field, rows: usize, cols: usize) -> Matrix {
    Matrix::from_rows(
        field,
        cols,
        (0..rows).map(|_| vector(rng, field, cols)).collect(),
    )
}

pub fn invertible<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize) -> Matrix {
    loop {
        let m = matrix(rng, field, n, n);
        if m.inverse().is_some() {
            return m;
        }
    }
}

/// A subspace spanned by a random number (up to `n`) of random vectors.
pub fn subspace<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize) -> Subspace {
    let k = rng.gen_range(0..=n);
    Subspace::span(field, n, (0..k).map(|_| vector(rng, field, n)))
}

pub fn submodule<R: Rng + ?Sized>(rng: &mut R, module: &FreeModuleSheaf) -> SubmoduleSheaf {
    let stalks = (0..module.space().n_points())
        .map(|_| subspace(rng, module.field(), module.rank()))
        .collect();
    SubmoduleSheaf::new(module.clone(), stalks).expect("stalks have the module's rank")
}

pub fn skew<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize) -> Matrix {
    let mut m = Matrix::zeros(field, n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = scalar(rng, field);
            m[(j, i)] = -&v;
            m[(i, j)] = v;
        }
    }
    m
}

/// `J ⊕ 0` with `rank/2` standard blocks in an `n × n` matrix.
pub fn standard_form(field: Field, n: usize, rank: usize) -> Matrix {
    let mut m = Matrix::zeros(field, n, n);
    for k in (0..rank).step_by(2) {
        m[(k, k + 1)] = field.one();
        m[(k + 1, k)] = -field.one();
    }
    m
}

/// `Pᵀ·(J ⊕ 0)·P` for a random invertible `P`: a skew form of exactly `rank`.
pub fn form_of_rank<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize, rank: usize) -> Matrix {
    let p = invertible(rng, field, n);
    p.transpose().mul(&standard_form(field, n, rank)).mul(&p)
}

/// A form whose restriction to the minimal open of `x` is `c(y)·ω₀` for one
/// fixed `ω₀` of the given rank and nonzero scalars `c(y)`, and arbitrary
/// skew elsewhere. Such forms are rankwise near `x`.
pub fn rankwise_form<R: Rng + ?Sized>(
    rng: &mut R,
    module: &FreeModuleSheaf,
    x: usize,
    rank: usize,
) -> TwoFormSheaf {
    let field = module.field();
    let n = module.rank();
    let base = form_of_rank(rng, field, n, rank);
    let near = module
        .space()
        .open(module.space().minimal_open(x).expect("point in range"));
    let coeff = (0..module.space().n_points())
        .map(|y| {
            if near.contains(y) {
                let c = loop {
                    let c = scalar(rng, field);
                    if !c.is_zero() {
                        break c;
                    }
                };
                base.scale(&c)
            } else {
                skew(rng, field, n)
            }
        })
        .collect();
    TwoFormSheaf::new(module.clone(), coeff).expect("skew by construction")
}

/// A random Lagrangian subspace of a non-degenerate form, grown one
/// isotropic vector at a time.
pub fn lagrangian<R: Rng + ?Sized>(rng: &mut R, form: &Matrix) -> Subspace {
    let field = form.field();
    let n = form.rows();
    let mut chosen = Subspace::zero(field, n);
    while 2 * chosen.dim() < n {
        let room = chosen.orthogonal_complement(form).expect("square form");
        let v = room.combine(&vector(rng, field, room.dim()));
        if !chosen.contains(&v) {
            chosen = chosen
                .sum(&Subspace::span(field, n, [v]))
                .expect("same ambient");
        }
    }
    chosen
}

/// A coisotropic subspace `L + W` for a random Lagrangian `L`.
pub fn coisotropic<R: Rng + ?Sized>(rng: &mut R, form: &Matrix) -> Subspace {
    let l = lagrangian(rng, form);
    let w = subspace(rng, form.field(), form.rows());
    l.sum(&w).expect("same ambient")
}

/// A free module of the given rank over a random space with 1 to `max_points` points.
pub fn module<R: Rng + ?Sized>(
    rng: &mut R,
    field: Field,
    max_points: usize,
    rank: usize,
) -> FreeModuleSheaf {
    let n_points = rng.gen_range(1..=max_points);
    FreeModuleSheaf::new(Arc::new(space(rng, n_points)), field, rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rank_of;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_objects_have_their_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = Field::Rationals;
        for _ in 0..20 {
            let s = space(&mut rng, 4);
            assert!(s.n_opens() <= 16);
            let a = form_of_rank(&mut rng, q, 6, 4);
            assert!(a.is_skew());
            assert_eq!(rank_of(&a), 4);
            let j = form_of_rank(&mut rng, q, 4, 4);
            let l = lagrangian(&mut rng, &j);
            assert_eq!(l.dim(), 2);
            assert!(l.is_isotropic_for(&j));
            let c = coisotropic(&mut rng, &j);
            assert!(c.orthogonal_complement(&j).unwrap().is_subspace_of(&c));
        }
    }
}
