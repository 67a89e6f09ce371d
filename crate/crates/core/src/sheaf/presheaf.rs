//! Explicitly presented presheaves of finite-dimensional vector spaces, the
//! S1/S2 completeness checker, and sheafification on finite spaces.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::exactalg::{kernel_basis, Field, Matrix, Scalar, Subspace};
use crate::space::{Cover, FiniteSpace, OpenId};

use super::{SheafError, SubmoduleSheaf};

/// A presheaf given by a dimension per open and a restriction matrix
/// (`dim V × dim U`) for every pair `V ⊆ U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitPresheaf {
    space: Arc<FiniteSpace>,
    field: Field,
    dims: Vec<usize>,
    restrictions: BTreeMap<(OpenId, OpenId), Matrix>,
}

impl ExplicitPresheaf {
    /// Builds a presheaf; `restrict(u, v)` is queried for every pair `v ⊆ u`.
    /// Fails unless the maps have the right shapes, `restrict(u, u)` is the
    /// identity and restrictions compose.
    pub fn new(
        space: Arc<FiniteSpace>,
        field: Field,
        dims: Vec<usize>,
        restrict: impl Fn(OpenId, OpenId) -> Matrix,
    ) -> Result<Self, SheafError> {
        let n = space.n_opens();
        if dims.len() != n {
            return Err(SheafError::NotFunctorial(format!(
                "expected {n} dimensions, found {}",
                dims.len()
            )));
        }
        let mut restrictions = BTreeMap::new();
        for u in 0..n {
            for v in space.opens_within(u) {
                let m = restrict(u, v);
                m.expect_shape(dims[v], dims[u])?;
                if u == v && m != Matrix::identity(field, dims[u]) {
                    return Err(SheafError::NotFunctorial(format!(
                        "restriction of {} to itself is not the identity",
                        space.describe(u)
                    )));
                }
                restrictions.insert((u, v), m);
            }
        }
        let p = ExplicitPresheaf {
            space,
            field,
            dims,
            restrictions,
        };
        for u in 0..n {
            for v in p.space.opens_within(u) {
                for w in p.space.opens_within(v) {
                    if p.restriction(v, w).mul(p.restriction(u, v)) != *p.restriction(u, w) {
                        return Err(SheafError::NotFunctorial(format!(
                            "{} -> {} -> {} does not compose",
                            p.space.describe(u),
                            p.space.describe(v),
                            p.space.describe(w)
                        )));
                    }
                }
            }
        }
        Ok(p)
    }

    /// The presheaf of sections of a stalkwise sub-module. Coordinates over
    /// `U` list the stalk-basis coefficients point by point.
    pub fn of_sections(f: &SubmoduleSheaf) -> Self {
        let space = Arc::clone(f.parent().space());
        let field = f.parent().field();
        let dims = (0..space.n_opens()).map(|u| f.dim_over(u)).collect();
        let sp = Arc::clone(&space);
        Self::new(space, field, dims, |u, v| {
            let cols = f.dim_over(u);
            let rows = f.dim_over(v);
            let mut m = Matrix::zeros(field, rows, cols);
            let (mut r, mut c) = (0, 0);
            for x in sp.open(u).iter() {
                let d = f.stalk(x).dim();
                if sp.open(v).contains(x) {
                    for i in 0..d {
                        m[(r + i, c + i)] = field.one();
                    }
                    r += d;
                }
                c += d;
            }
            m
        })
        .expect("sections of a sub-module form a presheaf")
    }

    /// The constant presheaf `U ↦ k^dim` (the empty open included) with
    /// identity restrictions.
    pub fn constant(space: Arc<FiniteSpace>, field: Field, dim: usize) -> Self {
        let n = space.n_opens();
        Self::new(space, field, vec![dim; n], |_, _| {
            Matrix::identity(field, dim)
        })
        .expect("constant presheaf is functorial")
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self, u: OpenId) -> usize {
        self.dims[u]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The restriction matrix from `u` to `v ⊆ u`.
    pub fn restriction(&self, u: OpenId, v: OpenId) -> &Matrix {
        self.restrictions
            .get(&(u, v))
            .unwrap_or_else(|| panic!("open {v} is not inside open {u}"))
    }
}

/// Witness that an axiom fails: an open, one of its covers, and the offending
/// data. For S1, `section` is a nonzero element whose restrictions (`family`)
/// are all zero; for S2, `family` is compatible but has no gluing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub open: OpenId,
    pub cover: Cover,
    pub section: Option<Vec<Scalar>>,
    pub family: Vec<Vec<Scalar>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxiomVerdict {
    Holds,
    Fails(Counterexample),
}

impl AxiomVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, AxiomVerdict::Holds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletenessReport {
    pub s1: AxiomVerdict,
    pub s2: AxiomVerdict,
}

impl CompletenessReport {
    pub fn is_complete(&self) -> bool {
        self.s1.holds() && self.s2.holds()
    }
}

/// Checks S1 (locality) and S2 (gluing) over every irredundant cover of every open.
///
/// Families are compatible when they agree on every nonempty pairwise overlap.
pub fn check_completeness(p: &ExplicitPresheaf) -> CompletenessReport {
    check_with(p, |u| p.space.irredundant_covers(u))
}

/// Same verdict as [`check_completeness`], but every cover is examined.
/// Exponential; for cross-checking on small spaces.
pub fn check_completeness_over_all_covers(p: &ExplicitPresheaf) -> CompletenessReport {
    check_with(p, |u| p.space.all_covers(u))
}

fn check_with(p: &ExplicitPresheaf, covers: impl Fn(OpenId) -> Vec<Cover>) -> CompletenessReport {
    let mut s1 = AxiomVerdict::Holds;
    let mut s2 = AxiomVerdict::Holds;
    for u in 0..p.space.n_opens() {
        for cover in covers(u) {
            if s1.holds() {
                if let Some(cx) = locality_failure(p, &cover) {
                    s1 = AxiomVerdict::Fails(cx);
                }
            }
            if s2.holds() {
                if let Some(cx) = gluing_failure(p, &cover) {
                    s2 = AxiomVerdict::Fails(cx);
                }
            }
            if !s1.holds() && !s2.holds() {
                return CompletenessReport { s1, s2 };
            }
        }
    }
    CompletenessReport { s1, s2 }
}

fn joint_restriction(p: &ExplicitPresheaf, cover: &Cover) -> Matrix {
    let u = cover.target;
    cover
        .members
        .iter()
        .fold(Matrix::zeros(p.field, 0, p.dims[u]), |acc, &m| {
            acc.vstack(p.restriction(u, m))
        })
}

fn split_family(p: &ExplicitPresheaf, cover: &Cover, v: &[Scalar]) -> Vec<Vec<Scalar>> {
    let mut out = Vec::new();
    let mut at = 0;
    for &m in &cover.members {
        out.push(v[at..at + p.dims[m]].to_vec());
        at += p.dims[m];
    }
    out
}

fn locality_failure(p: &ExplicitPresheaf, cover: &Cover) -> Option<Counterexample> {
    let joint = joint_restriction(p, cover);
    let kernel = kernel_basis(&joint);
    let witness = kernel.basis().first()?.clone();
    Some(Counterexample {
        open: cover.target,
        cover: cover.clone(),
        family: split_family(p, cover, &joint.mul_vec(&witness)),
        section: Some(witness),
    })
}

/// The subspace of compatible families over `cover`, in concatenated coordinates.
fn compatible_families(p: &ExplicitPresheaf, cover: &Cover) -> Subspace {
    let offsets: Vec<usize> = cover
        .members
        .iter()
        .scan(0, |acc, &m| {
            let start = *acc;
            *acc += p.dims[m];
            Some(start)
        })
        .collect();
    let total: usize = cover.members.iter().map(|&m| p.dims[m]).sum();
    let mut constraints = Matrix::zeros(p.field, 0, total);
    for (i, &a) in cover.members.iter().enumerate() {
        for (j, &b) in cover.members.iter().enumerate().skip(i + 1) {
            let w = p.space.meet(a, b);
            if p.space.open(w).is_empty() {
                continue;
            }
            let ra = p.restriction(a, w);
            let rb = p.restriction(b, w);
            let mut block = Matrix::zeros(p.field, p.dims[w], total);
            for r in 0..p.dims[w] {
                for c in 0..p.dims[a] {
                    block[(r, offsets[i] + c)] = ra[(r, c)].clone();
                }
                for c in 0..p.dims[b] {
                    block[(r, offsets[j] + c)] = -&rb[(r, c)];
                }
            }
            constraints = constraints.vstack(&block);
        }
    }
    kernel_basis(&constraints)
}

fn gluing_failure(p: &ExplicitPresheaf, cover: &Cover) -> Option<Counterexample> {
    let compatible = compatible_families(p, cover);
    let glued = Subspace::column_space(&joint_restriction(p, cover));
    if glued.dim() == compatible.dim() {
        return None;
    }
    let witness = compatible
        .basis()
        .iter()
        .find(|b| !glued.contains(b))?
        .clone();
    Some(Counterexample {
        open: cover.target,
        cover: cover.clone(),
        section: None,
        family: split_family(p, cover, &witness),
    })
}

/// The sheaf generated by a presheaf, with the canonical map into it.
#[derive(Clone, Debug)]
pub struct Sheafification {
    /// Over `U`: families `(s_x ∈ p(minimal_open(x)))_{x∈U}` that restrict
    /// consistently, in echelon coordinates of [`Self::families`].
    pub sheaf: ExplicitPresheaf,
    /// The compatible families over each open, inside `⊕_{x∈U} p(minimal_open(x))`.
    pub families: Vec<Subspace>,
    /// The canonical map `p(U) → sheaf(U)` for every open.
    pub unit: Vec<Matrix>,
}

impl Sheafification {
    /// True when the canonical map is invertible over every open, i.e. the
    /// input was already complete; the unit is then the witness isomorphism.
    pub fn is_isomorphism(&self) -> bool {
        self.unit
            .iter()
            .all(|m| m.is_square() && m.inverse().is_some())
    }
}

pub fn sheafify(p: &ExplicitPresheaf) -> Sheafification {
    let space = &p.space;
    let field = p.field;
    let minimal: Vec<OpenId> = (0..space.n_points())
        .map(|x| space.minimal_open(x).expect("point index in range"))
        .collect();
    // block layout of ⊕_{x∈U} p(U_x)
    let layout = |u: OpenId| -> Vec<(usize, usize, usize)> {
        let mut at = 0;
        space
            .open(u)
            .iter()
            .map(|x| {
                let d = p.dims[minimal[x]];
                let entry = (x, at, d);
                at += d;
                entry
            })
            .collect()
    };

    let families: Vec<Subspace> = (0..space.n_opens())
        .map(|u| {
            let blocks = layout(u);
            let total: usize = blocks.iter().map(|b| b.2).sum();
            let mut constraints = Matrix::zeros(field, 0, total);
            for &(x, ox, dx) in &blocks {
                for &(y, oy, dy) in &blocks {
                    if x == y || !space.open(minimal[x]).contains(y) {
                        continue;
                    }
                    let r = p.restriction(minimal[x], minimal[y]);
                    let mut block = Matrix::zeros(field, dy, total);
                    for i in 0..dy {
                        for j in 0..dx {
                            block[(i, ox + j)] = r[(i, j)].clone();
                        }
                        block[(i, oy + i)] = &block[(i, oy + i)] - &field.one();
                    }
                    constraints = constraints.vstack(&block);
                }
            }
            kernel_basis(&constraints)
        })
        .collect();

    let dims = families.iter().map(Subspace::dim).collect();
    let sheaf = ExplicitPresheaf::new(Arc::clone(space), field, dims, |u, v| {
        let from = layout(u);
        let to = layout(v);
        let mut m = Matrix::zeros(field, families[v].dim(), families[u].dim());
        for (col, b) in families[u].basis().iter().enumerate() {
            let mut projected = Vec::new();
            for &(y, _, _) in &to {
                let &(_, off, d) = from.iter().find(|e| e.0 == y).expect("V ⊆ U");
                projected.extend_from_slice(&b[off..off + d]);
            }
            let coords = families[v]
                .coordinates(&projected)
                .expect("restricted families stay compatible");
            for (row, c) in coords.into_iter().enumerate() {
                m[(row, col)] = c;
            }
        }
        m
    })
    .expect("compatible families form a presheaf");

    let unit = (0..space.n_opens())
        .map(|u| {
            let blocks = layout(u);
            let mut m = Matrix::zeros(field, families[u].dim(), p.dims[u]);
            for j in 0..p.dims[u] {
                let mut family = Vec::new();
                for &(x, _, _) in &blocks {
                    family.extend(p.restriction(u, minimal[x]).column(j));
                }
                let coords = families[u]
                    .coordinates(&family)
                    .expect("restrictions of a section are compatible");
                for (row, c) in coords.into_iter().enumerate() {
                    m[(row, j)] = c;
                }
            }
            m
        })
        .collect();

    Sheafification {
        sheaf,
        families,
        unit,
    }
}
