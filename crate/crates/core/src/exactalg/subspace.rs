use std::fmt;

use super::matrix::{dot, Matrix};
use super::scalar::{Field, Scalar};
use super::{kernel_basis, AlgebraError};

/// A subspace of `kⁿ`, held as the rows of its reduced echelon basis.
///
/// The echelon basis is canonical, so derived equality is subspace equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    field: Field,
    ambient_dim: usize,
    basis: Vec<Vec<Scalar>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(field: Field, ambient_dim: usize) -> Self {
        Subspace {
            field,
            ambient_dim,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(field: Field, ambient_dim: usize) -> Self {
        Self::row_space(&Matrix::identity(field, ambient_dim))
    }

    /// The span of `vectors`; each must have length `ambient_dim`.
    pub fn span<I>(field: Field, ambient_dim: usize, vectors: I) -> Self
    where
        I: IntoIterator<Item = Vec<Scalar>>,
    {
        let rows: Vec<Vec<Scalar>> = vectors.into_iter().collect();
        Self::row_space(&Matrix::from_rows(field, ambient_dim, rows))
    }

    /// The row space of `m`.
    pub fn row_space(m: &Matrix) -> Self {
        let (r, pivots) = m.rref();
        let basis = (0..pivots.len()).map(|i| r.row(i).to_vec()).collect();
        Subspace {
            field: m.field(),
            ambient_dim: m.cols(),
            basis,
            pivots,
        }
    }

    /// The column space of `m`.
    pub fn column_space(m: &Matrix) -> Self {
        Self::row_space(&m.transpose())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.ambient_dim
    }

    pub fn basis(&self) -> &[Vec<Scalar>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Basis vectors as the rows of a `dim × ambient_dim` matrix.
    pub fn basis_matrix(&self) -> Matrix {
        Matrix::from_rows(self.field, self.ambient_dim, self.basis.clone())
    }

    /// Coefficients of `v` in the echelon basis, or `None` when `v` is outside.
    pub fn coordinates(&self, v: &[Scalar]) -> Option<Vec<Scalar>> {
        assert_eq!(v.len(), self.ambient_dim, "vector length mismatch");
        let coeffs: Vec<Scalar> = self.pivots.iter().map(|&p| v[p].clone()).collect();
        let mut rest = v.to_vec();
        for (c, b) in coeffs.iter().zip(&self.basis) {
            if c.is_zero() {
                continue;
            }
            for (r, x) in rest.iter_mut().zip(b) {
                *r = &*r - &(c * x);
            }
        }
        rest.iter().all(Scalar::is_zero).then_some(coeffs)
    }

    /// The vector with the given echelon-basis coefficients.
    pub fn combine(&self, coeffs: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(coeffs.len(), self.dim(), "coefficient count mismatch");
        let mut out = vec![self.field.zero(); self.ambient_dim];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(b) {
                *o = &*o + &(c * x);
            }
        }
        out
    }

    pub fn contains(&self, v: &[Scalar]) -> bool {
        self.coordinates(v).is_some()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.ambient_dim == other.ambient_dim && self.basis.iter().all(|b| other.contains(b))
    }

    fn check_ambient(&self, other: &Subspace) -> Result<(), AlgebraError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(AlgebraError::AmbientMismatch {
                left: self.ambient_dim,
                right: other.ambient_dim,
            });
        }
        Ok(())
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, AlgebraError> {
        self.check_ambient(other)?;
        Ok(Self::row_space(
            &self.basis_matrix().vstack(&other.basis_matrix()),
        ))
    }

    /// Intersection as the common solution set of both subspaces' defining equations.
    pub fn intersection(&self, other: &Subspace) -> Result<Subspace, AlgebraError> {
        self.check_ambient(other)?;
        let constraints = self
            .equations()
            .basis_matrix()
            .vstack(&other.equations().basis_matrix());
        Ok(kernel_basis(&constraints))
    }

    /// The linear equations cutting out `self`: all `w` with `v·w = 0` for `v ∈ self`.
    pub fn equations(&self) -> Subspace {
        kernel_basis(&self.basis_matrix())
    }

    /// `{w : vᵀ·gram·w = 0 for all v ∈ self}`.
    pub fn orthogonal_complement(&self, gram: &Matrix) -> Result<Subspace, AlgebraError> {
        if gram.rows() != self.ambient_dim {
            return Err(AlgebraError::AmbientMismatch {
                left: self.ambient_dim,
                right: gram.rows(),
            });
        }
        Ok(kernel_basis(&self.basis_matrix().mul(gram)))
    }

    /// Image of the subspace under `m` (acting on column vectors).
    pub fn image_under(&self, m: &Matrix) -> Subspace {
        assert_eq!(m.cols(), self.ambient_dim, "map domain mismatch");
        Subspace::span(
            self.field,
            m.rows(),
            self.basis.iter().map(|b| m.mul_vec(b)),
        )
    }

    /// Whether `form(u, v) = 0` for all basis pairs.
    pub fn is_isotropic_for(&self, form: &Matrix) -> bool {
        self.basis
            .iter()
            .all(|u| self.basis.iter().all(|v| form.bilinear(u, v).is_zero()))
    }

    /// Restriction of a bilinear form to the subspace, in echelon-basis coordinates.
    pub fn restrict_form(&self, form: &Matrix) -> Matrix {
        let b = self.basis_matrix();
        b.mul(form).mul(&b.transpose())
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{}", self.basis_matrix())
    }
}

/// A quotient `top / bottom` of nested subspaces, with a chosen complement of
/// `bottom` inside `top` serving as coset representatives.
///
/// The complement is the echelon completion: writing `bottom` in the echelon
/// coordinates of `top`, the top-basis vectors at the non-pivot positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subquotient {
    top: Subspace,
    bottom: Subspace,
    complement: Subspace,
    // bottom in top-coordinates, echelon form
    bottom_coords: Matrix,
    bottom_pivots: Vec<usize>,
    free: Vec<usize>,
}

impl Subquotient {
    pub fn new(top: Subspace, bottom: Subspace) -> Result<Self, AlgebraError> {
        top.check_ambient(&bottom)?;
        if !bottom.is_subspace_of(&top) {
            return Err(AlgebraError::NotNested);
        }
        let coords: Vec<Vec<Scalar>> = bottom
            .basis()
            .iter()
            .map(|b| top.coordinates(b).expect("bottom lies in top"))
            .collect();
        let (bottom_coords, bottom_pivots) = Matrix::from_rows(top.field, top.dim(), coords).rref();
        let free: Vec<usize> = (0..top.dim())
            .filter(|j| !bottom_pivots.contains(j))
            .collect();
        let complement = Subspace {
            field: top.field,
            ambient_dim: top.ambient_dim,
            basis: free.iter().map(|&j| top.basis[j].clone()).collect(),
            pivots: free.iter().map(|&j| top.pivots[j]).collect(),
        };
        Ok(Subquotient {
            top,
            bottom,
            complement,
            bottom_coords,
            bottom_pivots,
            free,
        })
    }

    pub fn top(&self) -> &Subspace {
        &self.top
    }

    pub fn bottom(&self) -> &Subspace {
        &self.bottom
    }

    /// The chosen coset representatives, a complement of `bottom` in `top`.
    pub fn complement(&self) -> &Subspace {
        &self.complement
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Coordinates of the coset `v + bottom` in the representative basis;
    /// `None` when `v ∉ top`.
    pub fn project(&self, v: &[Scalar]) -> Option<Vec<Scalar>> {
        let y = self.top.coordinates(v)?;
        Some(self.project_top_coords(&y))
    }

    fn project_top_coords(&self, y: &[Scalar]) -> Vec<Scalar> {
        let field = self.top.field;
        let a: Vec<Scalar> = self.bottom_pivots.iter().map(|&p| y[p].clone()).collect();
        self.free
            .iter()
            .map(|&j| {
                let col = self.bottom_coords.column(j);
                &y[j] - &dot(&a, &col[..a.len()], field)
            })
            .collect()
    }

    /// The representative with the given coset coordinates.
    pub fn lift(&self, coords: &[Scalar]) -> Vec<Scalar> {
        self.complement.combine(coords)
    }

    /// `dim × ambient` matrix `P` with `P·v = project(v)` for every `v ∈ top`.
    pub fn projection_matrix(&self) -> Matrix {
        let field = self.top.field;
        let mut p = Matrix::zeros(field, self.dim(), self.top.ambient_dim);
        for (t, &col) in self.top.pivots.iter().enumerate() {
            let mut y = vec![field.zero(); self.top.dim()];
            y[t] = field.one();
            for (r, c) in self.project_top_coords(&y).into_iter().enumerate() {
                p[(r, col)] = c;
            }
        }
        p
    }

    /// `ambient × dim` matrix whose columns are the representatives.
    pub fn lift_matrix(&self) -> Matrix {
        self.complement.basis_matrix().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| Field::Rationals.from_i64(x)).collect()
    }

    #[test]
    fn coordinates_round_trip() {
        let s = Subspace::span(Field::Rationals, 3, [q(&[1, 2, 0]), q(&[0, 1, 1])]);
        let v = q(&[2, 7, 3]);
        let c = s.coordinates(&v).unwrap();
        assert_eq!(s.combine(&c), v);
        assert!(s.coordinates(&q(&[0, 0, 1])).is_none());
    }

    #[test]
    fn quotient_of_full_space_by_line() {
        let f = Field::Rationals;
        let top = Subspace::full(f, 3);
        let bottom = Subspace::span(f, 3, [q(&[1, 1, 0])]);
        let sq = Subquotient::new(top, bottom.clone()).unwrap();
        assert_eq!(sq.dim(), 2);
        assert_eq!(
            sq.complement(),
            &Subspace::span(f, 3, [q(&[0, 1, 0]), q(&[0, 0, 1])])
        );
        assert!(sq
            .projection_matrix()
            .mul(&bottom.basis_matrix().transpose())
            .is_zero());
        let v = q(&[3, 5, 7]);
        let back = sq.lift(&sq.project(&v).unwrap());
        let diff: Vec<Scalar> = v.iter().zip(&back).map(|(a, b)| a - b).collect();
        assert!(bottom.contains(&diff));
    }

    #[test]
    fn quotient_requires_nesting() {
        let f = Field::Rationals;
        let a = Subspace::span(f, 2, [q(&[1, 0])]);
        let b = Subspace::span(f, 2, [q(&[0, 1])]);
        assert_eq!(Subquotient::new(a, b), Err(AlgebraError::NotNested));
    }
}
