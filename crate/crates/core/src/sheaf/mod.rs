//! Free modules over the functional coefficient sheaf, their sections, and
//! stalkwise sub-modules with sums, intersections and quotients.
//!
//! The coefficient sheaf assigns to an open `U` the ring of all functions
//! `U → k`. A free module of rank `n` then has the maps `U → kⁿ` as sections,
//! restriction is restriction of functions, and the module over `∅` is zero.
//! A sub-module is described by one subspace of `kⁿ` per point; its sections
//! over `U` are the maps taking every `x ∈ U` into the subspace at `x`.

mod presheaf;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::exactalg::{AlgebraError, Field, Matrix, Scalar, Subquotient, Subspace};
use crate::space::{Cover, FiniteSpace, OpenId};

pub use presheaf::{
    check_completeness, check_completeness_over_all_covers, sheafify, AxiomVerdict,
    CompletenessReport, Counterexample, ExplicitPresheaf, Sheafification,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SheafError {
    #[error("modules live over different parents")]
    ParentMismatch,
    #[error("local sections over opens {first} and {second} disagree at point {point}")]
    OverlapMismatch {
        first: OpenId,
        second: OpenId,
        point: usize,
    },
    #[error("open {to} is not contained in open {from}")]
    NotASubset { from: OpenId, to: OpenId },
    #[error("malformed section: {0}")]
    BadSection(String),
    #[error("an empty family of sub-modules has no parent")]
    EmptyFamily,
    #[error("local sections do not match the cover members")]
    CoverMismatch,
    #[error("restriction maps are not functorial: {0}")]
    NotFunctorial(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// The free module `𝒜ⁿ` over the functional coefficient sheaf on a finite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeModuleSheaf {
    space: Arc<FiniteSpace>,
    field: Field,
    rank: usize,
}

/// A section over an open set: a vector in `kⁿ` for every point of the open.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Section {
    over: OpenId,
    values: BTreeMap<usize, Vec<Scalar>>,
}

impl Section {
    pub fn over(&self) -> OpenId {
        self.over
    }

    pub fn value(&self, x: usize) -> Option<&[Scalar]> {
        self.values.get(&x).map(Vec::as_slice)
    }

    pub fn values(&self) -> &BTreeMap<usize, Vec<Scalar>> {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().flatten().all(Scalar::is_zero)
    }

    /// Pointwise `self + other`; both must live over the same open.
    pub fn add(&self, other: &Section) -> Section {
        assert_eq!(self.over, other.over, "sections over different opens");
        let values = self
            .values
            .iter()
            .map(|(&x, v)| {
                let w = &other.values[&x];
                (x, v.iter().zip(w).map(|(a, b)| a + b).collect())
            })
            .collect();
        Section {
            over: self.over,
            values,
        }
    }

    /// Multiplication by a coefficient function given pointwise.
    pub fn scale_by(&self, coeff: impl Fn(usize) -> Scalar) -> Section {
        let values = self
            .values
            .iter()
            .map(|(&x, v)| {
                let c = coeff(x);
                (x, v.iter().map(|a| a * &c).collect())
            })
            .collect();
        Section {
            over: self.over,
            values,
        }
    }
}

impl FreeModuleSheaf {
    pub fn new(space: Arc<FiniteSpace>, field: Field, rank: usize) -> Self {
        FreeModuleSheaf { space, field, rank }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Same base space and field, possibly a different rank.
    pub fn is_compatible_with(&self, other: &FreeModuleSheaf) -> bool {
        self.field == other.field
            && (Arc::ptr_eq(&self.space, &other.space) || self.space == other.space)
    }

    /// The same base with a different rank.
    pub fn with_rank(&self, rank: usize) -> FreeModuleSheaf {
        FreeModuleSheaf {
            space: Arc::clone(&self.space),
            field: self.field,
            rank,
        }
    }

    /// Builds a section from its values, checking the domain and vector lengths.
    pub fn section(
        &self,
        over: OpenId,
        values: BTreeMap<usize, Vec<Scalar>>,
    ) -> Result<Section, SheafError> {
        if over >= self.space.n_opens() {
            return Err(SheafError::BadSection(format!("unknown open {over}")));
        }
        let domain: Vec<usize> = self.space.open(over).iter().collect();
        if !values.keys().copied().eq(domain.iter().copied()) {
            return Err(SheafError::BadSection(format!(
                "values must be given exactly on {}",
                self.space.describe(over)
            )));
        }
        for v in values.values() {
            if v.len() != self.rank || v.iter().any(|x| x.field() != self.field) {
                return Err(SheafError::BadSection(format!(
                    "expected vectors of length {} over {}",
                    self.rank, self.field
                )));
            }
        }
        Ok(Section { over, values })
    }

    /// Section whose value at `x` is `f(x)`.
    pub fn section_from_fn(&self, over: OpenId, f: impl Fn(usize) -> Vec<Scalar>) -> Section {
        let values = self.space.open(over).iter().map(|x| (x, f(x))).collect();
        self.section(over, values)
            .expect("section_from_fn produced a malformed section")
    }

    pub fn zero_section(&self, over: OpenId) -> Section {
        self.section_from_fn(over, |_| vec![self.field.zero(); self.rank])
    }

    /// Restriction of a section to a smaller open.
    pub fn restrict(&self, s: &Section, to: OpenId) -> Result<Section, SheafError> {
        let target = self.space.open(to);
        if !target.is_subset(self.space.open(s.over)) {
            return Err(SheafError::NotASubset { from: s.over, to });
        }
        Ok(Section {
            over: to,
            values: s
                .values
                .iter()
                .filter(|(x, _)| target.contains(**x))
                .map(|(&x, v)| (x, v.clone()))
                .collect(),
        })
    }

    /// `dim 𝓔(U) = n·|U|` as a vector space over `k`.
    pub fn dim_over(&self, u: OpenId) -> usize {
        self.rank * self.space.open(u).len()
    }
}

/// A sub-module of a free module, given by one subspace per point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmoduleSheaf {
    parent: FreeModuleSheaf,
    stalks: Vec<Subspace>,
}

impl SubmoduleSheaf {
    pub fn new(parent: FreeModuleSheaf, stalks: Vec<Subspace>) -> Result<Self, SheafError> {
        if stalks.len() != parent.space.n_points() {
            return Err(SheafError::BadSection(format!(
                "expected {} stalks, found {}",
                parent.space.n_points(),
                stalks.len()
            )));
        }
        for s in &stalks {
            if s.ambient_dim() != parent.rank || s.field() != parent.field {
                return Err(AlgebraError::AmbientMismatch {
                    left: parent.rank,
                    right: s.ambient_dim(),
                }
                .into());
            }
        }
        Ok(SubmoduleSheaf { parent, stalks })
    }

    pub fn from_fn(parent: &FreeModuleSheaf, f: impl Fn(usize) -> Subspace) -> Self {
        let stalks = (0..parent.space.n_points()).map(f).collect();
        Self::new(parent.clone(), stalks).expect("from_fn produced malformed stalks")
    }

    pub fn zero(parent: &FreeModuleSheaf) -> Self {
        Self::from_fn(parent, |_| Subspace::zero(parent.field, parent.rank))
    }

    pub fn full(parent: &FreeModuleSheaf) -> Self {
        Self::from_fn(parent, |_| Subspace::full(parent.field, parent.rank))
    }

    /// The same subspace at every point.
    pub fn constant(parent: &FreeModuleSheaf, stalk: Subspace) -> Result<Self, SheafError> {
        Self::new(parent.clone(), vec![stalk; parent.space.n_points()])
    }

    pub fn parent(&self) -> &FreeModuleSheaf {
        &self.parent
    }

    pub fn stalk(&self, x: usize) -> &Subspace {
        &self.stalks[x]
    }

    pub fn stalks(&self) -> &[Subspace] {
        &self.stalks
    }

    /// `dim 𝓕(U) = Σ_{x∈U} dim F_x`.
    pub fn dim_over(&self, u: OpenId) -> usize {
        self.parent
            .space
            .open(u)
            .iter()
            .map(|x| self.stalks[x].dim())
            .sum()
    }

    pub fn contains(&self, s: &Section) -> bool {
        s.values.iter().all(|(&x, v)| self.stalks[x].contains(v))
    }

    pub fn is_subsheaf_of(&self, other: &SubmoduleSheaf) -> bool {
        self.parent == other.parent
            && self
                .stalks
                .iter()
                .zip(&other.stalks)
                .all(|(a, b)| a.is_subspace_of(b))
    }

    pub(crate) fn check_parent(&self, parent: &FreeModuleSheaf) -> Result<(), SheafError> {
        if &self.parent == parent {
            Ok(())
        } else {
            Err(SheafError::ParentMismatch)
        }
    }

    /// Stalkwise image under pointwise matrices (`target_rank × rank`).
    pub fn map_stalks(&self, target: &FreeModuleSheaf, mats: &[Matrix]) -> SubmoduleSheaf {
        SubmoduleSheaf::from_fn(target, |x| self.stalks[x].image_under(&mats[x]))
    }
}

/// A basis of `𝓕(U)` over `k`: for each point of `U` in order, the stalk
/// basis vectors placed at that point and zero elsewhere.
pub fn sections_basis(f: &SubmoduleSheaf, u: OpenId) -> Vec<Section> {
    let parent = &f.parent;
    let points: Vec<usize> = parent.space.open(u).iter().collect();
    let mut out = Vec::new();
    for &x in &points {
        for b in f.stalks[x].basis() {
            out.push(parent.section_from_fn(u, |y| {
                if y == x {
                    b.clone()
                } else {
                    vec![parent.field.zero(); parent.rank]
                }
            }));
        }
    }
    out
}

/// Glues local sections over the members of `cover` into a section over its target.
pub fn glue(
    module: &FreeModuleSheaf,
    cover: &Cover,
    locals: &[Section],
) -> Result<Section, SheafError> {
    if locals.len() != cover.members.len()
        || locals.iter().zip(&cover.members).any(|(s, &m)| s.over != m)
    {
        return Err(SheafError::CoverMismatch);
    }
    let mut values: BTreeMap<usize, Vec<Scalar>> = BTreeMap::new();
    let mut owner: BTreeMap<usize, OpenId> = BTreeMap::new();
    for s in locals {
        for (&x, v) in &s.values {
            match values.get(&x) {
                Some(prev) if prev != v => {
                    return Err(SheafError::OverlapMismatch {
                        first: owner[&x],
                        second: s.over,
                        point: x,
                    })
                }
                Some(_) => {}
                None => {
                    values.insert(x, v.clone());
                    owner.insert(x, s.over);
                }
            }
        }
    }
    module.section(cover.target, values)
}

fn common_parent(fs: &[SubmoduleSheaf]) -> Result<&FreeModuleSheaf, SheafError> {
    let first = fs.first().ok_or(SheafError::EmptyFamily)?;
    for f in &fs[1..] {
        f.check_parent(&first.parent)?;
    }
    Ok(&first.parent)
}

/// Stalkwise sum of sub-modules.
pub fn sum_submodules(fs: &[SubmoduleSheaf]) -> Result<SubmoduleSheaf, SheafError> {
    let parent = common_parent(fs)?;
    let mut stalks = fs[0].stalks.clone();
    for f in &fs[1..] {
        for (s, t) in stalks.iter_mut().zip(&f.stalks) {
            *s = s.sum(t)?;
        }
    }
    SubmoduleSheaf::new(parent.clone(), stalks)
}

/// Stalkwise intersection of sub-modules.
pub fn intersect_submodules(fs: &[SubmoduleSheaf]) -> Result<SubmoduleSheaf, SheafError> {
    let parent = common_parent(fs)?;
    let mut stalks = fs[0].stalks.clone();
    for f in &fs[1..] {
        for (s, t) in stalks.iter_mut().zip(&f.stalks) {
            *s = s.intersection(t)?;
        }
    }
    SubmoduleSheaf::new(parent.clone(), stalks)
}

/// The quotient `𝓔/𝓕` with chosen coset representatives at every point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientSheaf {
    parent: FreeModuleSheaf,
    by: SubmoduleSheaf,
    stalks: Vec<Subquotient>,
    projections: Vec<Matrix>,
}

impl QuotientSheaf {
    pub fn parent(&self) -> &FreeModuleSheaf {
        &self.parent
    }

    pub fn by(&self) -> &SubmoduleSheaf {
        &self.by
    }

    pub fn stalk(&self, x: usize) -> &Subquotient {
        &self.stalks[x]
    }

    /// Representatives spanning a complement of `by` at every point.
    pub fn stalk_complements(&self) -> Vec<&Subspace> {
        self.stalks.iter().map(Subquotient::complement).collect()
    }

    pub fn dim_at(&self, x: usize) -> usize {
        self.stalks[x].dim()
    }

    pub fn dim_over(&self, u: OpenId) -> usize {
        self.parent
            .space
            .open(u)
            .iter()
            .map(|x| self.dim_at(x))
            .sum()
    }

    /// The matrix of the projection `q` at `x` (quotient coordinates × n).
    pub fn projection(&self, x: usize) -> &Matrix {
        &self.projections[x]
    }

    pub fn projections(&self) -> &[Matrix] {
        &self.projections
    }

    /// Applies `q` to a section: quotient coordinates at every point.
    pub fn project(&self, s: &Section) -> BTreeMap<usize, Vec<Scalar>> {
        s.values
            .iter()
            .map(|(&x, v)| (x, self.projections[x].mul_vec(v)))
            .collect()
    }
}

/// Stalkwise quotient `𝓔/𝓕` and its projection.
pub fn quotient(e: &FreeModuleSheaf, f: &SubmoduleSheaf) -> Result<QuotientSheaf, SheafError> {
    f.check_parent(e)?;
    let stalks = f
        .stalks
        .iter()
        .map(|s| Subquotient::new(Subspace::full(e.field, e.rank), s.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let projections = stalks.iter().map(Subquotient::projection_matrix).collect();
    Ok(QuotientSheaf {
        parent: e.clone(),
        by: f.clone(),
        stalks,
        projections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Field = Field::Rationals;

    fn v(xs: &[i64]) -> Vec<Scalar> {
        xs.iter().map(|&x| Q.from_i64(x)).collect()
    }

    fn line(n: usize, xs: &[i64]) -> Subspace {
        Subspace::span(Q, n, [v(xs)])
    }

    fn module(space: FiniteSpace, rank: usize) -> FreeModuleSheaf {
        FreeModuleSheaf::new(Arc::new(space), Q, rank)
    }

    #[test]
    fn sections_basis_counts() {
        let one = module(FiniteSpace::discrete(&["a"]), 2);
        assert_eq!(sections_basis(&SubmoduleSheaf::full(&one), 1).len(), 2);
        assert!(sections_basis(&SubmoduleSheaf::zero(&one), 1).is_empty());

        let e = module(FiniteSpace::discrete(&["a", "b"]), 3);
        let f = SubmoduleSheaf::new(
            e.clone(),
            vec![
                line(3, &[1, 0, 0]),
                Subspace::span(Q, 3, [v(&[0, 1, 0]), v(&[0, 0, 1])]),
            ],
        )
        .unwrap();
        let basis = sections_basis(&f, 3);
        assert_eq!(basis.len(), 3);
        assert!(basis.iter().all(|s| f.contains(s)));
    }

    #[test]
    fn glue_examples() {
        let e = module(FiniteSpace::discrete(&["a", "b"]), 1);
        let whole = e.section_from_fn(3, |x| v(&[x as i64 + 5]));
        let single = Cover {
            target: 3,
            members: vec![3],
        };
        assert_eq!(
            glue(&e, &single, std::slice::from_ref(&whole)).unwrap(),
            whole
        );

        let pair = Cover {
            target: 3,
            members: vec![1, 2],
        };
        let sa = e.section_from_fn(1, |_| v(&[1]));
        let sb = e.section_from_fn(2, |_| v(&[2]));
        let g = glue(&e, &pair, &[sa, sb]).unwrap();
        assert_eq!(g.value(0).unwrap(), v(&[1]).as_slice());
        assert_eq!(g.value(1).unwrap(), v(&[2]).as_slice());

        let c = module(FiniteSpace::sierpinski(), 1);
        let over_a = c.section_from_fn(1, |_| v(&[1]));
        let over_ab = c.section_from_fn(2, |_| v(&[0]));
        let cover = Cover {
            target: 2,
            members: vec![1, 2],
        };
        assert_eq!(
            glue(&c, &cover, &[over_a, over_ab]),
            Err(SheafError::OverlapMismatch {
                first: 1,
                second: 2,
                point: 0
            })
        );
    }

    #[test]
    fn restriction_is_functorial() {
        let e = module(FiniteSpace::chain(&["a", "b", "c"]), 2);
        let s = e.section_from_fn(3, |x| v(&[x as i64, 1]));
        let direct = e.restrict(&s, 1).unwrap();
        let staged = e.restrict(&e.restrict(&s, 2).unwrap(), 1).unwrap();
        assert_eq!(direct, staged);
        assert!(e.restrict(&direct, 2).is_err());
    }

    #[test]
    fn sum_and_intersection_examples() {
        let e = module(FiniteSpace::discrete(&["a", "b"]), 3);
        let f =
            SubmoduleSheaf::new(e.clone(), vec![line(3, &[1, 2, 0]), line(3, &[0, 0, 1])]).unwrap();
        let zero = SubmoduleSheaf::zero(&e);
        assert_eq!(sum_submodules(&[f.clone(), zero.clone()]).unwrap(), f);
        assert_eq!(
            intersect_submodules(&[f.clone(), SubmoduleSheaf::full(&e)]).unwrap(),
            f
        );

        let e1 = SubmoduleSheaf::constant(&e, line(3, &[1, 0, 0])).unwrap();
        let e2 = SubmoduleSheaf::constant(&e, line(3, &[0, 1, 0])).unwrap();
        let both = Subspace::span(Q, 3, [v(&[1, 0, 0]), v(&[0, 1, 0])]);
        assert_eq!(
            sum_submodules(&[e1.clone(), e2.clone()]).unwrap(),
            SubmoduleSheaf::constant(&e, both).unwrap()
        );
        assert_eq!(intersect_submodules(&[e1, e2]).unwrap(), zero);

        let g = SubmoduleSheaf::new(e.clone(), vec![line(3, &[1, 1, 1]), line(3, &[1, -1, 2])])
            .unwrap();
        let s = sum_submodules(&[f.clone(), g.clone()]).unwrap();
        for x in 0..2 {
            assert_eq!(s.stalk(x).dim(), 2);
            assert_eq!(s.stalk(x), &f.stalk(x).sum(g.stalk(x)).unwrap());
        }

        let other = module(FiniteSpace::discrete(&["a", "b"]), 2);
        assert_eq!(
            sum_submodules(&[f, SubmoduleSheaf::zero(&other)]),
            Err(SheafError::ParentMismatch)
        );
        assert_eq!(sum_submodules(&[]), Err(SheafError::EmptyFamily));
    }

    #[test]
    fn intersection_commutes_with_sections() {
        let e = module(FiniteSpace::sierpinski(), 2);
        let f =
            SubmoduleSheaf::new(e.clone(), vec![Subspace::full(Q, 2), line(2, &[1, 1])]).unwrap();
        let g = SubmoduleSheaf::new(e.clone(), vec![line(2, &[1, 0]), line(2, &[1, 1])]).unwrap();
        let i = intersect_submodules(&[f.clone(), g.clone()]).unwrap();
        for u in 0..e.space().n_opens() {
            for s in sections_basis(&i, u) {
                assert!(f.contains(&s) && g.contains(&s));
            }
            let expected: usize = e
                .space()
                .open(u)
                .iter()
                .map(|x| f.stalk(x).intersection(g.stalk(x)).unwrap().dim())
                .sum();
            assert_eq!(i.dim_over(u), expected);
        }
    }

    #[test]
    fn quotient_examples() {
        let e = module(FiniteSpace::discrete(&["a"]), 3);
        let q0 = quotient(&e, &SubmoduleSheaf::zero(&e)).unwrap();
        assert_eq!(q0.projection(0), &Matrix::identity(Q, 3));
        let qf = quotient(&e, &SubmoduleSheaf::full(&e)).unwrap();
        assert_eq!(qf.dim_at(0), 0);

        let f = SubmoduleSheaf::constant(&e, line(3, &[1, 1, 0])).unwrap();
        let q = quotient(&e, &f).unwrap();
        assert_eq!(q.dim_at(0), 2);
        let inclusion = f.stalk(0).basis_matrix().transpose();
        assert!(q.projection(0).mul(&inclusion).is_zero());
        assert_eq!(crate::exactalg::rank_of(q.projection(0)), 2);
    }

    #[test]
    fn short_sequence_is_exact_on_every_open() {
        let space = FiniteSpace::from_named(
            &["a", "b", "c"],
            &[
                vec![],
                vec!["a"],
                vec!["a", "b"],
                vec!["a", "c"],
                vec!["a", "b", "c"],
            ],
        )
        .unwrap();
        let e = module(space, 3);
        let f = SubmoduleSheaf::new(
            e.clone(),
            vec![
                line(3, &[1, 1, 0]),
                Subspace::zero(Q, 3),
                Subspace::span(Q, 3, [v(&[1, 0, 0]), v(&[0, 0, 1])]),
            ],
        )
        .unwrap();
        let q = quotient(&e, &f).unwrap();
        for u in 0..e.space().n_opens() {
            assert_eq!(f.dim_over(u) + q.dim_over(u), e.dim_over(u));
            for x in e.space().open(u).iter() {
                let inc = f.stalk(x).basis_matrix().transpose();
                let proj = q.projection(x);
                assert!(proj.mul(&inc).is_zero());
                assert_eq!(crate::exactalg::rank_of(proj), q.dim_at(x));
                assert_eq!(&crate::exactalg::kernel_basis(proj), f.stalk(x));
            }
        }
    }
}
