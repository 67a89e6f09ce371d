//! Bilinear morphisms `𝓔 ⊕ 𝓕 → 𝒜`, annihilators, transposes, and the
//! structures a non-degenerate pairing induces on sub-modules and quotients.
//!
//! Duals are represented concretely: a functional on `kⁿ` is a vector in `kⁿ`
//! acting by the dot product, which identifies `𝓔*` with `𝓔` through the
//! standard basis. Under that identification the canonical pairing of `𝓔`
//! with `𝓔*` has the identity as its Gram matrix at every point.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exactalg::{kernel_basis, solve, AlgebraError, Matrix, Scalar, Subspace};
use crate::sheaf::{quotient, FreeModuleSheaf, QuotientSheaf, Section, SheafError, SubmoduleSheaf};
use crate::space::OpenId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairingError {
    #[error("modules live over different parents")]
    ParentMismatch,
    #[error("pairing is degenerate at point {} ({:?} side)", .0.point, .0.side)]
    Degenerate(Box<DegeneracyWitness>),
    #[error("sub-module is not invariant at point {point}")]
    NotInvariant { point: usize, vector: Vec<Scalar> },
    #[error("malformed matrix family: {0}")]
    Shape(String),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A point and a nonzero vector there that pairs to zero with everything on
/// the other side; `section` extends it by zero over the point's minimal open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegeneracyWitness {
    pub point: usize,
    pub side: Side,
    pub vector: Vec<Scalar>,
    pub section: Section,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nondegeneracy {
    Nondegenerate,
    Degenerate(DegeneracyWitness),
}

impl Nondegeneracy {
    pub fn is_nondegenerate(&self) -> bool {
        matches!(self, Nondegeneracy::Nondegenerate)
    }
}

fn check_family(
    from: &FreeModuleSheaf,
    to: &FreeModuleSheaf,
    mats: &[Matrix],
) -> Result<(), PairingError> {
    if !from.is_compatible_with(to) {
        return Err(PairingError::ParentMismatch);
    }
    let n = from.space().n_points();
    if mats.len() != n {
        return Err(PairingError::Shape(format!(
            "expected {n} matrices, found {}",
            mats.len()
        )));
    }
    for (x, m) in mats.iter().enumerate() {
        if m.field() != from.field() {
            return Err(PairingError::Shape(format!(
                "matrix at point {x} is over {}",
                m.field()
            )));
        }
        m.expect_shape(to.rank(), from.rank())?;
    }
    Ok(())
}

/// A bilinear morphism `φ: 𝓔 ⊕ 𝓕 → 𝒜`, given at every point by a Gram
/// matrix: `φ(s, t)(x) = s(x)ᵀ·gram[x]·t(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingSheaf {
    left: FreeModuleSheaf,
    right: FreeModuleSheaf,
    gram: Vec<Matrix>,
}

impl PairingSheaf {
    pub fn new(
        left: FreeModuleSheaf,
        right: FreeModuleSheaf,
        gram: Vec<Matrix>,
    ) -> Result<Self, PairingError> {
        // gram[x] is n_left × n_right: a "map" right → left in shape terms
        check_family(&right, &left, &gram)?;
        Ok(PairingSheaf { left, right, gram })
    }

    /// The canonical pairing of `𝓔` with its dual `𝓔* ≅ 𝓔`.
    pub fn canonical(e: &FreeModuleSheaf) -> Self {
        let gram = vec![Matrix::identity(e.field(), e.rank()); e.space().n_points()];
        PairingSheaf {
            left: e.clone(),
            right: e.clone(),
            gram,
        }
    }

    /// The same Gram matrix at every point.
    pub fn constant(
        left: FreeModuleSheaf,
        right: FreeModuleSheaf,
        gram: Matrix,
    ) -> Result<Self, PairingError> {
        let n = left.space().n_points();
        Self::new(left, right, vec![gram; n])
    }

    pub fn left(&self) -> &FreeModuleSheaf {
        &self.left
    }

    pub fn right(&self) -> &FreeModuleSheaf {
        &self.right
    }

    pub fn gram(&self, x: usize) -> &Matrix {
        &self.gram[x]
    }

    pub fn grams(&self) -> &[Matrix] {
        &self.gram
    }

    /// `φ^U(s, t)` as a function on `U`.
    pub fn evaluate(
        &self,
        s: &Section,
        t: &Section,
    ) -> Result<BTreeMap<usize, Scalar>, PairingError> {
        if s.over() != t.over() {
            return Err(PairingError::Shape("sections over different opens".into()));
        }
        Ok(s.values()
            .iter()
            .map(|(&x, v)| {
                (
                    x,
                    self.gram[x].bilinear(v, t.value(x).expect("same domain")),
                )
            })
            .collect())
    }
}

/// An `𝒜`-morphism between free modules, given pointwise by
/// `to.rank × from.rank` matrices acting on column vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismSheaf {
    from: FreeModuleSheaf,
    to: FreeModuleSheaf,
    mats: Vec<Matrix>,
}

impl MorphismSheaf {
    pub fn new(
        from: FreeModuleSheaf,
        to: FreeModuleSheaf,
        mats: Vec<Matrix>,
    ) -> Result<Self, PairingError> {
        check_family(&from, &to, &mats)?;
        Ok(MorphismSheaf { from, to, mats })
    }

    pub fn identity(e: &FreeModuleSheaf) -> Self {
        MorphismSheaf {
            from: e.clone(),
            to: e.clone(),
            mats: vec![Matrix::identity(e.field(), e.rank()); e.space().n_points()],
        }
    }

    pub fn from(&self) -> &FreeModuleSheaf {
        &self.from
    }

    pub fn to(&self) -> &FreeModuleSheaf {
        &self.to
    }

    pub fn mat(&self, x: usize) -> &Matrix {
        &self.mats[x]
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn apply(&self, s: &Section) -> Section {
        self.to.section_from_fn(s.over(), |x| {
            self.mats[x].mul_vec(s.value(x).expect("in domain"))
        })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MorphismSheaf) -> Result<MorphismSheaf, PairingError> {
        if inner.to != self.from {
            return Err(PairingError::ParentMismatch);
        }
        Ok(MorphismSheaf {
            from: inner.from.clone(),
            to: self.to.clone(),
            mats: self
                .mats
                .iter()
                .zip(&inner.mats)
                .map(|(a, b)| a.mul(b))
                .collect(),
        })
    }

    pub fn add(&self, other: &MorphismSheaf) -> Result<MorphismSheaf, PairingError> {
        if self.from != other.from || self.to != other.to {
            return Err(PairingError::ParentMismatch);
        }
        Ok(MorphismSheaf {
            from: self.from.clone(),
            to: self.to.clone(),
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn inverse(&self) -> Option<MorphismSheaf> {
        let mats = self
            .mats
            .iter()
            .map(Matrix::inverse)
            .collect::<Option<Vec<_>>>()?;
        Some(MorphismSheaf {
            from: self.to.clone(),
            to: self.from.clone(),
            mats,
        })
    }

    pub fn image(&self) -> SubmoduleSheaf {
        SubmoduleSheaf::from_fn(&self.to, |x| Subspace::column_space(&self.mats[x]))
    }

    pub fn kernel(&self) -> SubmoduleSheaf {
        SubmoduleSheaf::from_fn(&self.from, |x| kernel_basis(&self.mats[x]))
    }
}

fn witness_section(module: &FreeModuleSheaf, x: usize, v: &[Scalar]) -> Section {
    let u = module.space().minimal_open(x).expect("point in range");
    module.section_from_fn(u, |y| {
        if y == x {
            v.to_vec()
        } else {
            vec![module.field().zero(); module.rank()]
        }
    })
}

/// Non-degenerate iff both ranks agree and every Gram matrix is invertible.
/// On failure, reports the first point and a vector killed by the pairing.
pub fn is_nondegenerate(p: &PairingSheaf) -> Nondegeneracy {
    for (x, g) in p.gram.iter().enumerate() {
        let left_kernel = kernel_basis(&g.transpose());
        let right_kernel = kernel_basis(g);
        let found = if let Some(v) = left_kernel.basis().first() {
            Some((Side::Left, v.clone(), &p.left))
        } else {
            right_kernel
                .basis()
                .first()
                .map(|v| (Side::Right, v.clone(), &p.right))
        };
        if let Some((side, vector, module)) = found {
            return Nondegeneracy::Degenerate(DegeneracyWitness {
                point: x,
                side,
                section: witness_section(module, x, &vector),
                vector,
            });
        }
    }
    Nondegeneracy::Nondegenerate
}

fn require_nondegenerate(p: &PairingSheaf) -> Result<(), PairingError> {
    match is_nondegenerate(p) {
        Nondegeneracy::Nondegenerate => Ok(()),
        Nondegeneracy::Degenerate(w) => Err(PairingError::Degenerate(Box::new(w))),
    }
}

/// `θ: 𝓕 → 𝓔*`, `t ↦ (s ↦ φ(s, t))`, with `𝓔*` identified with `𝓔`.
/// Its matrix at `x` is `gram[x]`.
pub fn theta(p: &PairingSheaf) -> Result<MorphismSheaf, PairingError> {
    require_nondegenerate(p)?;
    MorphismSheaf::new(p.right.clone(), p.left.clone(), p.gram.clone())
}

/// `𝓖^⊥ = {t : φ(s, t) = 0 for all s ∈ 𝓖}`, a sub-module of the right factor.
pub fn annihilator(p: &PairingSheaf, g: &SubmoduleSheaf) -> Result<SubmoduleSheaf, PairingError> {
    g.check_parent(&p.left)?;
    let stalks = g
        .stalks()
        .iter()
        .zip(&p.gram)
        .map(|(s, m)| s.orthogonal_complement(m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubmoduleSheaf::new(p.right.clone(), stalks)?)
}

/// The left annihilator `{s : φ(s, t) = 0 for all t ∈ 𝓗}` of a sub-module of the right factor.
pub fn left_annihilator(
    p: &PairingSheaf,
    h: &SubmoduleSheaf,
) -> Result<SubmoduleSheaf, PairingError> {
    let flipped = PairingSheaf {
        left: p.right.clone(),
        right: p.left.clone(),
        gram: p.gram.iter().map(Matrix::transpose).collect(),
    };
    annihilator(&flipped, h)
}

/// The transpose `ᵗm: 𝓕* → 𝓔*`, `u ↦ u∘m`; pointwise the transposed matrices.
pub fn transpose_morphism(m: &MorphismSheaf) -> MorphismSheaf {
    MorphismSheaf {
        from: m.to.clone(),
        to: m.from.clone(),
        mats: m.mats.iter().map(Matrix::transpose).collect(),
    }
}

/// The unique `T` on the right factor with `φ(s, T t) = φ(S s, t)`, i.e.
/// `gram·T = Sᵀ·gram` at every point.
pub fn transpose_endomorphism(
    p: &PairingSheaf,
    s: &MorphismSheaf,
) -> Result<MorphismSheaf, PairingError> {
    if s.from != p.left || s.to != p.left {
        return Err(PairingError::ParentMismatch);
    }
    require_nondegenerate(p)?;
    let mats = p
        .gram
        .iter()
        .zip(&s.mats)
        .map(|(g, sx)| {
            let rhs = sx.transpose().mul(g);
            let n = g.cols();
            let mut t = Matrix::zeros(g.field(), n, n);
            for c in 0..n {
                let col = solve(g, &rhs.column(c))?;
                for (r, v) in col.into_iter().enumerate() {
                    t[(r, c)] = v;
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    MorphismSheaf::new(p.right.clone(), p.right.clone(), mats)
}

/// The pairing `𝓖 ⊕ 𝓕/𝓖^⊥ → 𝒜`, `(s, [t]) ↦ φ(s, t)`.
#[derive(Clone, Debug)]
pub struct InducedPairing {
    base: PairingSheaf,
    sub: SubmoduleSheaf,
    sub_perp: SubmoduleSheaf,
    quotient: QuotientSheaf,
    gram: Vec<Matrix>,
}

impl InducedPairing {
    pub fn base(&self) -> &PairingSheaf {
        &self.base
    }

    pub fn sub(&self) -> &SubmoduleSheaf {
        &self.sub
    }

    pub fn sub_perp(&self) -> &SubmoduleSheaf {
        &self.sub_perp
    }

    pub fn quotient(&self) -> &QuotientSheaf {
        &self.quotient
    }

    /// Gram matrix at `x` in the echelon basis of `𝓖_x` against the chosen
    /// coset representatives of `𝓕_x/𝓖^⊥_x`.
    pub fn gram(&self, x: usize) -> &Matrix {
        &self.gram[x]
    }

    /// `φ̃(s, [t])` at `x`, evaluated through the representative `t`.
    pub fn evaluate_at(&self, x: usize, s: &[Scalar], t: &[Scalar]) -> Scalar {
        self.base.gram[x].bilinear(s, t)
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.gram
            .iter()
            .all(|g| g.is_square() && g.inverse().is_some())
    }
}

/// Builds the induced pairing of `𝓖` with `𝓕/𝓖^⊥` for a non-degenerate `p`.
pub fn induced_pairing(
    p: &PairingSheaf,
    g: &SubmoduleSheaf,
) -> Result<InducedPairing, PairingError> {
    require_nondegenerate(p)?;
    let sub_perp = annihilator(p, g)?;
    let quotient = quotient(&p.right, &sub_perp)?;
    let gram = (0..g.stalks().len())
        .map(|x| {
            g.stalk(x)
                .basis_matrix()
                .mul(&p.gram[x])
                .mul(&quotient.stalk(x).lift_matrix())
        })
        .collect();
    Ok(InducedPairing {
        base: p.clone(),
        sub: g.clone(),
        sub_perp,
        quotient,
        gram,
    })
}

/// An endomorphism `S` restricted to an invariant `𝓖`, and its transpose
/// `T` pushed down to `𝓕/𝓖^⊥`.
#[derive(Clone, Debug)]
pub struct InducedEndomorphism {
    pub pairing: InducedPairing,
    /// `T` on the whole right factor.
    pub transpose: MorphismSheaf,
    /// `S|𝓖` in the echelon basis of each stalk of `𝓖`.
    pub on_sub: Vec<Matrix>,
    /// `T*` on `𝓕/𝓖^⊥` in coset-representative coordinates.
    pub on_quotient: Vec<Matrix>,
}

impl InducedEndomorphism {
    /// `T*∘q = q∘T` at every point.
    pub fn commutes_with_projection(&self) -> bool {
        let q = self.pairing.quotient();
        (0..self.on_quotient.len()).all(|x| {
            self.on_quotient[x].mul(q.projection(x)) == q.projection(x).mul(self.transpose.mat(x))
        })
    }

    /// `φ̃(s, T*[t]) = φ̃(S s, [t])` on all basis pairs.
    pub fn is_transpose_pair(&self) -> bool {
        let ip = &self.pairing;
        (0..self.on_sub.len()).all(|x| {
            // in coordinates: gram·T* = (S|𝓖)ᵀ·gram
            ip.gram(x).mul(&self.on_quotient[x]) == self.on_sub[x].transpose().mul(ip.gram(x))
        })
    }
}

pub fn induced_endomorphism(
    p: &PairingSheaf,
    s: &MorphismSheaf,
    g: &SubmoduleSheaf,
) -> Result<InducedEndomorphism, PairingError> {
    g.check_parent(&p.left)?;
    let mut on_sub = Vec::new();
    for (x, stalk) in g.stalks().iter().enumerate() {
        let mut m = Matrix::zeros(p.left.field(), stalk.dim(), stalk.dim());
        for (j, b) in stalk.basis().iter().enumerate() {
            let image = s.mat(x).mul_vec(b);
            let Some(coords) = stalk.coordinates(&image) else {
                return Err(PairingError::NotInvariant {
                    point: x,
                    vector: b.clone(),
                });
            };
            for (i, c) in coords.into_iter().enumerate() {
                m[(i, j)] = c;
            }
        }
        on_sub.push(m);
    }
    let transpose = transpose_endomorphism(p, s)?;
    let pairing = induced_pairing(p, g)?;
    for (x, stalk) in pairing.sub_perp.stalks().iter().enumerate() {
        if let Some(b) = stalk
            .basis()
            .iter()
            .find(|b| !stalk.contains(&transpose.mat(x).mul_vec(b)))
        {
            return Err(PairingError::NotInvariant {
                point: x,
                vector: b.clone(),
            });
        }
    }
    let on_quotient = (0..g.stalks().len())
        .map(|x| {
            let sq = pairing.quotient.stalk(x);
            let mut m = Matrix::zeros(p.right.field(), sq.dim(), sq.dim());
            for (j, rep) in sq.complement().basis().iter().enumerate() {
                let image = sq
                    .project(&transpose.mat(x).mul_vec(rep))
                    .expect("top is the full stalk");
                for (i, c) in image.into_iter().enumerate() {
                    m[(i, j)] = c;
                }
            }
            m
        })
        .collect();
    Ok(InducedEndomorphism {
        pairing,
        transpose,
        on_sub,
        on_quotient,
    })
}

/// The isomorphism `(𝓔/𝓕)* → 𝓕^⊥` given by `ᵗq` corestricted to `𝓕^⊥`.
#[derive(Clone, Debug)]
pub struct QuotientDualIso {
    pub quotient: QuotientSheaf,
    /// `𝓕^⊥` for the canonical pairing.
    pub annihilator: SubmoduleSheaf,
    /// `ᵗq` at each point as an `n × dim(𝓔/𝓕)_x` matrix.
    pub transpose_projection: Vec<Matrix>,
    /// `ᵗq` in the echelon basis of `𝓕^⊥_x` (square).
    pub mats: Vec<Matrix>,
}

impl QuotientDualIso {
    pub fn is_bijective(&self) -> bool {
        self.mats
            .iter()
            .all(|m| m.is_square() && m.inverse().is_some())
    }
}

pub fn quotient_dual_iso(
    e: &FreeModuleSheaf,
    f: &SubmoduleSheaf,
) -> Result<QuotientDualIso, PairingError> {
    let q = quotient(e, f)?;
    let perp = annihilator(&PairingSheaf::canonical(e), f)?;
    let mut transpose_projection = Vec::new();
    let mut mats = Vec::new();
    for x in 0..f.stalks().len() {
        let qt = q.projection(x).transpose();
        let stalk = perp.stalk(x);
        let mut m = Matrix::zeros(e.field(), stalk.dim(), qt.cols());
        for c in 0..qt.cols() {
            let coords = stalk
                .coordinates(&qt.column(c))
                .ok_or(PairingError::NotInvariant {
                    point: x,
                    vector: qt.column(c),
                })?;
            for (r, v) in coords.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        transpose_projection.push(qt);
        mats.push(m);
    }
    Ok(QuotientDualIso {
        quotient: q,
        annihilator: perp,
        transpose_projection,
        mats,
    })
}

/// Exactness of one three-term sequence of Hom spaces over an open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomSequenceCheck {
    /// Dimensions of the three Hom spaces, left to right.
    pub dims: (usize, usize, usize),
    pub injective: bool,
    pub image_equals_kernel: bool,
}

impl HomSequenceCheck {
    pub fn is_exact(&self) -> bool {
        self.injective && self.image_equals_kernel
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomExactnessEntry {
    pub open: OpenId,
    /// `0 → Hom(P,𝓕) → Hom(P,𝓔) → Hom(P,𝓔/𝓕)`.
    pub covariant: HomSequenceCheck,
    /// `0 → Hom(𝓔/𝓕,P) → Hom(𝓔,P) → Hom(𝓕,P)`.
    pub contravariant: HomSequenceCheck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomExactnessReport {
    pub entries: Vec<HomExactnessEntry>,
}

impl HomExactnessReport {
    pub fn is_exact(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.covariant.is_exact() && e.contravariant.is_exact())
    }
}

fn sequence_check(first: &Matrix, second: &Matrix) -> HomSequenceCheck {
    let image = Subspace::column_space(first);
    let kernel = kernel_basis(second);
    HomSequenceCheck {
        dims: (first.cols(), first.rows(), second.rows()),
        injective: image.dim() == first.cols(),
        image_equals_kernel: image == kernel,
    }
}

/// Applies `Hom(P, -)` and `Hom(-, P)` to `0 → 𝓕 → 𝓔 → 𝓔/𝓕 → 0` over every
/// open and checks exactness at the first two spots. Hom spaces over `U` are
/// families of matrices indexed by the points of `U`, flattened row-major.
pub fn check_hom_exactness(
    f: &SubmoduleSheaf,
    probe: &FreeModuleSheaf,
) -> Result<HomExactnessReport, PairingError> {
    let e = f.parent();
    if !e.is_compatible_with(probe) {
        return Err(PairingError::ParentMismatch);
    }
    let q = quotient(e, f)?;
    let field = e.field();
    let p = probe.rank();
    let id_p = Matrix::identity(field, p);
    let space = e.space();
    let mut entries = Vec::new();
    for u in 0..space.n_opens() {
        let mut cov_first = Vec::new();
        let mut cov_second = Vec::new();
        let mut con_first = Vec::new();
        let mut con_second = Vec::new();
        for x in space.open(u).iter() {
            let inclusion = f.stalk(x).basis_matrix().transpose();
            let projection = q.projection(x);
            // X ↦ M·X on (a × p) matrices: M ⊗ I_p
            cov_first.push(inclusion.kronecker(&id_p));
            cov_second.push(projection.kronecker(&id_p));
            // Y ↦ Y·N on (p × b) matrices: I_p ⊗ Nᵀ
            con_first.push(id_p.kronecker(&projection.transpose()));
            con_second.push(id_p.kronecker(&inclusion.transpose()));
        }
        let block = |ms: &[Matrix]| Matrix::block_diag(field, ms);
        entries.push(HomExactnessEntry {
            open: u,
            covariant: sequence_check(&block(&cov_first), &block(&cov_second)),
            contravariant: sequence_check(&block(&con_first), &block(&con_second)),
        });
    }
    Ok(HomExactnessReport { entries })
}
