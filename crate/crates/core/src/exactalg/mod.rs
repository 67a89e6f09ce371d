//! Exact scalar and dense linear algebra: ranks, kernels, solving and the
//! subspace lattice. Everything else in the crate works stalk by stalk on top
//! of these routines.

mod matrix;
mod scalar;
mod subspace;

use thiserror::Error;

pub use matrix::Matrix;
pub use scalar::{Field, LiteralError, RationalLiteral, Scalar, MAX_PRIME};
pub use subspace::{Subquotient, Subspace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("ambient dimensions differ ({left} vs {right})")]
    AmbientMismatch { left: usize, right: usize },
    #[error("right-hand side is not in the column space")]
    NoSolution,
    #[error("expected a {}x{} matrix, found {}x{}", expected.0, expected.1, found.0, found.1)]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("subspaces are not nested")]
    NotNested,
}

/// Row rank by exact Gaussian elimination.
pub fn rank_of(m: &Matrix) -> usize {
    m.rref().1.len()
}

/// `{v : m·v = 0}` with its canonical echelon basis.
pub fn kernel_basis(m: &Matrix) -> Subspace {
    let field = m.field();
    let n = m.cols();
    let (r, pivots) = m.rref();
    let vectors = (0..n).filter(|c| !pivots.contains(c)).map(|free| {
        let mut v = vec![field.zero(); n];
        v[free] = field.one();
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -&r[(row, free)];
        }
        v
    });
    Subspace::span(field, n, vectors)
}

/// Some `x` with `m·x = rhs`; free variables are set to zero.
pub fn solve(m: &Matrix, rhs: &[Scalar]) -> Result<Vec<Scalar>, AlgebraError> {
    if rhs.len() != m.rows() {
        return Err(AlgebraError::DimensionMismatch {
            expected: (m.rows(), 1),
            found: (rhs.len(), 1),
        });
    }
    let field = m.field();
    let n = m.cols();
    let aug = m.hstack(&Matrix::column_vector(field, rhs));
    let (r, pivots) = aug.rref();
    if pivots.last() == Some(&n) {
        return Err(AlgebraError::NoSolution);
    }
    let mut x = vec![field.zero(); n];
    for (row, &p) in pivots.iter().enumerate() {
        x[p] = r[(row, n)].clone();
    }
    Ok(x)
}

pub fn subspace_sum(a: &Subspace, b: &Subspace) -> Result<Subspace, AlgebraError> {
    a.sum(b)
}

pub fn subspace_intersection(a: &Subspace, b: &Subspace) -> Result<Subspace, AlgebraError> {
    a.intersection(b)
}

pub fn orthogonal_complement(s: &Subspace, gram: &Matrix) -> Result<Subspace, AlgebraError> {
    if !gram.is_square() {
        return Err(AlgebraError::DimensionMismatch {
            expected: (s.ambient_dim(), s.ambient_dim()),
            found: (gram.rows(), gram.cols()),
        });
    }
    s.orthogonal_complement(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: Field = Field::Rationals;

    fn v(xs: &[i64]) -> Vec<Scalar> {
        xs.iter().map(|&x| Q.from_i64(x)).collect()
    }

    fn e(n: usize, i: usize) -> Vec<Scalar> {
        (0..n).map(|j| Q.from_i64((i == j) as i64)).collect()
    }

    fn j4() -> Matrix {
        Matrix::from_i64(
            Q,
            &[&[0, 1, 0, 0], &[-1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, -1, 0]],
        )
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_of(&Matrix::identity(Q, 2)), 2);
        assert_eq!(rank_of(&Matrix::zeros(Q, 3, 3)), 0);
        // Oracle: the 2x2 minor of the first two rows is 0*0 - 1*(-1) = 1 ≠ 0, and
        // there are only two columns, so the rank is exactly 2.
        assert_eq!(
            rank_of(&Matrix::from_i64(Q, &[&[0, 1], &[-1, 0], &[0, 2]])),
            2
        );
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&Matrix::identity(Q, 3)).is_zero());
        assert_eq!(kernel_basis(&Matrix::zeros(Q, 2, 3)), Subspace::full(Q, 3));
        let m = Matrix::from_i64(Q, &[&[1, 2, 3]]);
        let k = kernel_basis(&m);
        assert_eq!(k.dim(), 2);
        for b in k.basis() {
            assert!(m.mul_vec(b).iter().all(Scalar::is_zero));
        }
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve(&Matrix::identity(Q, 2), &e(2, 0)).unwrap(), e(2, 0));
        assert_eq!(
            solve(&Matrix::from_i64(Q, &[&[1, 1]]), &v(&[2])).unwrap(),
            v(&[2, 0])
        );
        assert_eq!(
            solve(&Matrix::from_i64(Q, &[&[1, 0], &[0, 0]]), &v(&[0, 1])),
            Err(AlgebraError::NoSolution)
        );
    }

    #[test]
    fn sum_examples() {
        let a = Subspace::span(Q, 3, [v(&[1, 2, 3])]);
        assert_eq!(subspace_sum(&a, &Subspace::zero(Q, 3)).unwrap(), a);
        let e12 = Subspace::span(Q, 3, [e(3, 0), e(3, 1)]);
        let s = subspace_sum(
            &Subspace::span(Q, 3, [e(3, 0)]),
            &Subspace::span(Q, 3, [e(3, 1)]),
        )
        .unwrap();
        assert_eq!(s, e12);
        let s = subspace_sum(
            &Subspace::span(Q, 3, [v(&[1, 1, 0])]),
            &Subspace::span(Q, 3, [v(&[1, -1, 0])]),
        )
        .unwrap();
        assert_eq!(s, e12);
        assert_eq!(
            subspace_sum(&a, &Subspace::zero(Q, 2)),
            Err(AlgebraError::AmbientMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn intersection_examples() {
        let a = Subspace::span(Q, 3, [v(&[1, 2, 3])]);
        assert_eq!(subspace_intersection(&a, &Subspace::full(Q, 3)).unwrap(), a);
        assert!(subspace_intersection(
            &Subspace::span(Q, 3, [e(3, 0)]),
            &Subspace::span(Q, 3, [e(3, 1)])
        )
        .unwrap()
        .is_zero());
        // Over F3 the same two planes share exactly the 3 vectors {0, ±(1,1,0)};
        // the enumeration in tests/oracle_agreement.rs checks the F3 analog.
        let i = subspace_intersection(
            &Subspace::span(Q, 3, [e(3, 0), e(3, 1)]),
            &Subspace::span(Q, 3, [v(&[1, 1, 0]), e(3, 2)]),
        )
        .unwrap();
        assert_eq!(i, Subspace::span(Q, 3, [v(&[1, 1, 0])]));
    }

    #[test]
    fn complement_examples() {
        let g = j4();
        assert!(orthogonal_complement(&Subspace::full(Q, 4), &g)
            .unwrap()
            .is_zero());
        assert_eq!(
            orthogonal_complement(&Subspace::zero(Q, 4), &g).unwrap(),
            Subspace::full(Q, 4)
        );
        let c = orthogonal_complement(&Subspace::span(Q, 4, [e(4, 0)]), &g).unwrap();
        assert_eq!(c, Subspace::span(Q, 4, [e(4, 0), e(4, 2), e(4, 3)]));
    }

    fn small_matrix(max: usize) -> impl Strategy<Value = Matrix> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            prop::collection::vec(-2i64..=2, r * c).prop_map(move |xs| {
                let rows: Vec<Vec<Scalar>> = xs
                    .chunks(c)
                    .map(|ch| ch.iter().map(|&x| Q.from_i64(x)).collect())
                    .collect();
                Matrix::from_rows(Q, c, rows)
            })
        })
    }

    fn subspace_in(n: usize) -> impl Strategy<Value = Subspace> {
        prop::collection::vec(prop::collection::vec(-2i64..=2, n), 0..=n)
            .prop_map(move |rows| Subspace::span(Q, n, rows.into_iter().map(|r| v(&r))))
    }

    proptest! {
        #[test]
        fn rank_nullity(m in small_matrix(5)) {
            prop_assert_eq!(rank_of(&m) + kernel_basis(&m).dim(), m.cols());
        }

        #[test]
        fn sum_intersection_dimensions(a in subspace_in(4), b in subspace_in(4)) {
            let s = subspace_sum(&a, &b).unwrap();
            let i = subspace_intersection(&a, &b).unwrap();
            prop_assert_eq!(s.dim() + i.dim(), a.dim() + b.dim());
            prop_assert!(i.is_subspace_of(&a) && i.is_subspace_of(&b));
            prop_assert!(a.is_subspace_of(&s) && b.is_subspace_of(&s));
        }

        #[test]
        fn complement_reverses_inclusion(a in subspace_in(4), extra in subspace_in(4)) {
            let g = j4();
            let b = subspace_sum(&a, &extra).unwrap();
            let a_perp = orthogonal_complement(&a, &g).unwrap();
            let b_perp = orthogonal_complement(&b, &g).unwrap();
            prop_assert!(b_perp.is_subspace_of(&a_perp));
            prop_assert_eq!(a.dim() + a_perp.dim(), 4);
            prop_assert_eq!(orthogonal_complement(&a_perp, &g).unwrap(), a);
        }

        #[test]
        fn solve_satisfies_system(m in small_matrix(4), x in prop::collection::vec(-3i64..=3, 4)) {
            let x: Vec<Scalar> = v(&x[..m.cols()]);
            let rhs = m.mul_vec(&x);
            let sol = solve(&m, &rhs).unwrap();
            prop_assert_eq!(m.mul_vec(&sol), rhs);
        }
    }
}
