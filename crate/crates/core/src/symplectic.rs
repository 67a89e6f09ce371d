//! Exterior 2-forms on free modules: contraction, the flat map, the
//! constructive Darboux decomposition, and sub-modules of symplectic modules.
//!
//! A covector is stored like a vector, acting by the dot product. The wedge
//! of covectors `s ∧ t` has coefficient matrix `s·tᵀ − t·sᵀ`, so
//! `e¹ ∧ e²` is `[[0,1],[-1,0]]`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::exactalg::{solve, AlgebraError, Field, Matrix, Scalar, Subquotient, Subspace};
use crate::pairing::{
    annihilator, is_nondegenerate, DegeneracyWitness, MorphismSheaf, Nondegeneracy, PairingError,
    PairingSheaf,
};
use crate::sheaf::{quotient, FreeModuleSheaf, QuotientSheaf, Section, SheafError, SubmoduleSheaf};
use crate::space::{OpenId, PointSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymplecticError {
    #[error("coefficient matrix at point {point} is not skew-symmetric")]
    NotSkew { point: usize },
    #[error("section has rank {found}, the form expects {expected}")]
    RankMismatch { expected: usize, found: usize },
    #[error("form rank differs between points {0} and {1}")]
    RankNotConstant(usize, usize),
    #[error("rank is undefined on the empty open")]
    EmptyOpen,
    #[error("form vanishes at point {0}")]
    ZeroFormAt(usize),
    #[error("no admissible neighbourhood: elimination fails at point {witness}")]
    NoAdmissibleNeighborhood { witness: usize },
    #[error("seed is unusable at point {point}: {reason}")]
    BadSeed { point: usize, reason: String },
    #[error("absolute-value normalisation needs an ordered field")]
    UnorderedField,
    #[error("pivot is negative at point {point}; absolute-value normalisation cannot reconstruct the form")]
    NegativePivot { point: usize },
    #[error("form is degenerate at point {}", .0.point)]
    Degenerate(Box<DegeneracyWitness>),
    #[error("module rank {0} is odd")]
    OddRank(usize),
    #[error("sub-module is not Lagrangian at point {point}")]
    NotLagrangian { point: usize },
    #[error("sub-module is not coisotropic at point {point}")]
    NotCoisotropic { point: usize },
    #[error("modules live over different parents")]
    ParentMismatch,
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Coefficient matrix of `s ∧ t`.
pub fn wedge(s: &[Scalar], t: &[Scalar]) -> Matrix {
    let field = s
        .first()
        .or(t.first())
        .map_or(Field::Rationals, Scalar::field);
    let n = s.len();
    let mut m = Matrix::zeros(field, n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = &(&s[i] * &t[j]) - &(&t[i] * &s[j]);
        }
    }
    m
}

/// An exterior 2-form: a skew-symmetric coefficient matrix at every point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoFormSheaf {
    module: FreeModuleSheaf,
    coeff: Vec<Matrix>,
}

impl TwoFormSheaf {
    pub fn new(module: FreeModuleSheaf, coeff: Vec<Matrix>) -> Result<Self, SymplecticError> {
        let n = module.space().n_points();
        if coeff.len() != n {
            return Err(PairingError::Shape(format!(
                "expected {n} matrices, found {}",
                coeff.len()
            ))
            .into());
        }
        for (x, m) in coeff.iter().enumerate() {
            m.expect_shape(module.rank(), module.rank())?;
            if m.field() != module.field() || !m.is_skew() {
                return Err(SymplecticError::NotSkew { point: x });
            }
        }
        Ok(TwoFormSheaf { module, coeff })
    }

    pub fn constant(module: FreeModuleSheaf, coeff: Matrix) -> Result<Self, SymplecticError> {
        let n = module.space().n_points();
        Self::new(module, vec![coeff; n])
    }

    pub fn zero(module: &FreeModuleSheaf) -> Self {
        let m = Matrix::zeros(module.field(), module.rank(), module.rank());
        TwoFormSheaf {
            coeff: vec![m; module.space().n_points()],
            module: module.clone(),
        }
    }

    pub fn module(&self) -> &FreeModuleSheaf {
        &self.module
    }

    pub fn coeff(&self, x: usize) -> &Matrix {
        &self.coeff[x]
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeff
    }

    pub fn as_pairing(&self) -> PairingSheaf {
        PairingSheaf::new(self.module.clone(), self.module.clone(), self.coeff.clone())
            .expect("shapes validated on construction")
    }

    pub fn evaluate(
        &self,
        s: &Section,
        t: &Section,
    ) -> Result<BTreeMap<usize, Scalar>, SymplecticError> {
        Ok(self.as_pairing().evaluate(s, t)?)
    }
}

/// `i(s)ω`: the covector `t ↦ ω(s, t)`, pointwise `s(x)ᵀ·coeff[x]`.
pub fn contract(w: &TwoFormSheaf, s: &Section) -> Result<Section, SymplecticError> {
    check_rank(w, s)?;
    Ok(w.module.section_from_fn(s.over(), |x| {
        w.coeff[x].vec_mul(s.value(x).expect("in domain"))
    }))
}

/// `i(s)η` for a covector `η`: plain evaluation `η(s)`.
pub fn contract_covector(
    eta: &Section,
    s: &Section,
) -> Result<BTreeMap<usize, Scalar>, SymplecticError> {
    if eta.over() != s.over() {
        return Err(SheafError::BadSection("sections over different opens".into()).into());
    }
    let mut out = BTreeMap::new();
    for (&x, v) in s.values() {
        let e = eta.value(x).expect("same domain");
        if e.len() != v.len() {
            return Err(SymplecticError::RankMismatch {
                expected: e.len(),
                found: v.len(),
            });
        }
        let field = field_of(v, e);
        out.insert(
            x,
            e.iter()
                .zip(v)
                .fold(field.zero(), |acc, (a, b)| acc + a * b),
        );
    }
    Ok(out)
}

fn field_of(v: &[Scalar], e: &[Scalar]) -> Field {
    v.first()
        .or(e.first())
        .map_or(Field::Rationals, Scalar::field)
}

fn check_rank(w: &TwoFormSheaf, s: &Section) -> Result<(), SymplecticError> {
    let found = s.values().values().next().map_or(w.module.rank(), Vec::len);
    if found != w.module.rank() {
        return Err(SymplecticError::RankMismatch {
            expected: w.module.rank(),
            found,
        });
    }
    Ok(())
}

/// `ω^♭: s ↦ −i(s)ω` with its image `♭𝓔`, kernel, and the isomorphism
/// `𝓔/ker ω^♭ → ♭𝓔`.
#[derive(Clone, Debug)]
pub struct FlatMap {
    pub morphism: MorphismSheaf,
    pub image: SubmoduleSheaf,
    pub kernel: SubmoduleSheaf,
    pub coimage: QuotientSheaf,
    /// At each point, the square matrix sending coset coordinates of
    /// `𝓔/ker` to echelon coordinates of the image.
    pub iso: Vec<Matrix>,
}

pub fn flat(w: &TwoFormSheaf) -> FlatMap {
    // −(sᵀ·A) as a column is −Aᵀ·s = A·s
    let morphism = MorphismSheaf::new(w.module.clone(), w.module.clone(), w.coeff.clone())
        .expect("shapes validated on construction");
    let image = morphism.image();
    let kernel = morphism.kernel();
    let coimage = quotient(&w.module, &kernel).expect("kernel lives in the module");
    let iso = (0..w.coeff.len())
        .map(|x| {
            let reps = coimage.stalk(x).lift_matrix();
            let mapped = w.coeff[x].mul(&reps);
            let stalk = image.stalk(x);
            let mut m = Matrix::zeros(w.module.field(), stalk.dim(), reps.cols());
            for c in 0..reps.cols() {
                let coords = stalk
                    .coordinates(&mapped.column(c))
                    .expect("lands in the image");
                for (r, v) in coords.into_iter().enumerate() {
                    m[(r, c)] = v;
                }
            }
            m
        })
        .collect();
    FlatMap {
        morphism,
        image,
        kernel,
        coimage,
        iso,
    }
}

/// The common rank of the coefficient matrices over the points of `u`.
pub fn form_rank(w: &TwoFormSheaf, u: OpenId) -> Result<usize, SymplecticError> {
    let pts = w.module.space().open(u);
    let mut first: Option<(usize, usize)> = None;
    for y in pts.iter() {
        let r = crate::exactalg::rank_of(&w.coeff[y]);
        match first {
            None => first = Some((y, r)),
            Some((x, r0)) if r0 != r => return Err(SymplecticError::RankNotConstant(x, y)),
            _ => {}
        }
    }
    first.map(|(_, r)| r).ok_or(SymplecticError::EmptyOpen)
}

#[derive(Clone, Debug, Default)]
pub struct DarbouxOptions {
    /// A covector in `♭𝓔` over an open containing the base point; it becomes
    /// the second member of the first pair.
    pub seed: Option<Section>,
    /// Divide the first covector of each pair by `|pivot|` instead of the
    /// pivot. Needs an ordered field and positive pivots.
    pub abs_normalize: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pivot {
    /// Eliminated with the basis vectors `e_i`, `e_j` (`i < j`).
    Index(usize, usize),
    /// Eliminated with `e_k` against the preimage of the seed.
    Seed(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DarbouxStep {
    pub pivot: Pivot,
    /// Pivot value at the base point.
    pub value: Scalar,
    /// Neighbourhood after this step.
    pub neighborhood: OpenId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DarbouxResult {
    pub at: usize,
    pub neighborhood: OpenId,
    /// Covector pairs `(s^{2k−1}, s^{2k})` over the neighbourhood.
    pub pairs: Vec<(Section, Section)>,
    pub half_rank: usize,
    /// Basis indices in the order they served as pivots, then the rest.
    pub permutation: Vec<usize>,
    pub trace: Vec<DarbouxStep>,
}

impl DarbouxResult {
    /// `Σ s^{2k−1} ∧ s^{2k}` at every point of the neighbourhood.
    pub fn reconstruct(&self, module: &FreeModuleSheaf) -> BTreeMap<usize, Matrix> {
        let n = module.rank();
        module
            .space()
            .open(self.neighborhood)
            .iter()
            .map(|y| {
                let sum =
                    self.pairs
                        .iter()
                        .fold(Matrix::zeros(module.field(), n, n), |acc, (s, t)| {
                            acc.add(&wedge(
                                s.value(y).expect("in domain"),
                                t.value(y).expect("in domain"),
                            ))
                        });
                (y, sum)
            })
            .collect()
    }

    /// Whether the pairs reproduce `w` exactly on the neighbourhood.
    pub fn reconstructs(&self, w: &TwoFormSheaf) -> bool {
        self.reconstruct(&w.module)
            .iter()
            .all(|(&y, m)| m == &w.coeff[y])
    }
}

type PointValues = BTreeMap<usize, Vec<Scalar>>;

struct Elimination<'a> {
    w: &'a TwoFormSheaf,
    x: usize,
    floor: PointSet,
    u: OpenId,
    residual: BTreeMap<usize, Matrix>,
    covectors: Vec<(PointValues, PointValues)>,
    used: Vec<usize>,
    trace: Vec<DarbouxStep>,
    abs_normalize: bool,
}

impl Elimination<'_> {
    fn points(&self) -> PointSet {
        self.w.module.space().open(self.u)
    }

    /// Shrinks the neighbourhood to the interior of `{y : keep(y)}`.
    fn shrink(&mut self, keep: impl Fn(usize) -> bool) {
        let set = PointSet::from_indices(self.points().iter().filter(|&y| keep(y)));
        self.u = self.w.module.space().interior(set);
        let pts = self.points();
        self.residual.retain(|y, _| pts.contains(*y));
    }

    /// One elimination step with pivot vectors `u_y`, `v_y`; `c_y = u_yᵀ·A_y·v_y`
    /// must be nonzero on the current neighbourhood.
    fn eliminate(
        &mut self,
        pivot: Pivot,
        u: impl Fn(usize) -> Vec<Scalar>,
        v: impl Fn(usize) -> Vec<Scalar>,
    ) -> Result<(), SymplecticError> {
        let mut odd = BTreeMap::new();
        let mut even = BTreeMap::new();
        let mut value = None;
        for (&y, a) in self.residual.iter_mut() {
            let (uy, vy) = (u(y), v(y));
            let c = a.bilinear(&uy, &vy);
            let norm = if self.abs_normalize {
                if c.signum_cmp() == Some(Ordering::Less) {
                    return Err(SymplecticError::NegativePivot { point: y });
                }
                c.abs().ok_or(SymplecticError::UnorderedField)?
            } else {
                c.clone()
            };
            let inv = norm.inv().expect("pivot is nonzero on the neighbourhood");
            let s_odd: Vec<Scalar> = a
                .transpose()
                .mul_vec(&uy)
                .iter()
                .map(|z| z * &inv)
                .collect();
            let s_even = a.transpose().mul_vec(&vy);
            // A − (a·bᵀ − b·aᵀ)/c with a = Aᵀu, b = Aᵀv
            let c_inv = c.inv().expect("pivot is nonzero");
            let a_col: Vec<Scalar> = a
                .transpose()
                .mul_vec(&uy)
                .iter()
                .map(|z| z * &c_inv)
                .collect();
            *a = a.sub(&wedge(&a_col, &s_even));
            if y == self.x {
                value = Some(c);
            }
            odd.insert(y, s_odd);
            even.insert(y, s_even);
        }
        self.covectors.push((odd, even));
        self.trace.push(DarbouxStep {
            pivot,
            value: value.expect("base point stays in the neighbourhood"),
            neighborhood: self.u,
        });
        Ok(())
    }

    fn index_step(&mut self) -> Result<bool, SymplecticError> {
        let ax = &self.residual[&self.x];
        let n = ax.rows();
        let candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !ax[(i, j)].is_zero())
            .collect();
        let Some(&first) = candidates.first() else {
            return Ok(false);
        };
        let admissible = candidates.iter().copied().find(|&(i, j)| {
            self.floor
                .iter()
                .all(|y| !self.residual[&y][(i, j)].is_zero())
        });
        let Some((i, j)) = admissible else {
            let witness = self
                .floor
                .iter()
                .find(|y| self.residual[y][first].is_zero())
                .expect("the first candidate vanishes somewhere");
            return Err(SymplecticError::NoAdmissibleNeighborhood { witness });
        };
        let field = self.w.module.field();
        let residual = &self.residual;
        let nonzero: PointSet = PointSet::from_indices(
            residual
                .iter()
                .filter(|(_, a)| !a[(i, j)].is_zero())
                .map(|(&y, _)| y),
        );
        self.shrink(|y| nonzero.contains(y));
        let e = |k: usize| {
            move |_y: usize| {
                let mut v = vec![field.zero(); n];
                v[k] = field.one();
                v
            }
        };
        // Default orientation splits off (e_jᵀA/a_ji) ∧ (e_iᵀA), which leaves the
        // standard form fixed; the absolute-value variant keeps (e_iᵀA/|a_ij|) ∧ (e_jᵀA).
        if self.abs_normalize {
            self.eliminate(Pivot::Index(i, j), e(i), e(j))?;
        } else {
            self.eliminate(Pivot::Index(i, j), e(j), e(i))?;
        }
        if let Some(step) = self.trace.last_mut() {
            step.value = self.w.coeff[self.x][(i, j)].clone();
        }
        self.used.extend([i, j]);
        Ok(true)
    }

    fn seed_step(&mut self, seed: &Section) -> Result<(), SymplecticError> {
        let space = self.w.module.space();
        let v_set = space.open(seed.over());
        if !v_set.contains(self.x) {
            return Err(SymplecticError::BadSeed {
                point: self.x,
                reason: "seed is not defined at the base point".into(),
            });
        }
        let n = self.w.module.rank();
        if seed.value(self.x).map(<[Scalar]>::len) != Some(n) {
            return Err(SymplecticError::RankMismatch {
                expected: n,
                found: seed.value(self.x).map_or(0, <[Scalar]>::len),
            });
        }
        let mut preimage = BTreeMap::new();
        for y in v_set.iter() {
            let value = seed.value(y).expect("in domain");
            // seed = s₂ᵀ·A, i.e. Aᵀ·s₂ = seed
            match solve(&self.w.coeff[y].transpose(), value) {
                Ok(s2) => {
                    preimage.insert(y, s2);
                }
                Err(_) => {
                    return Err(SymplecticError::BadSeed {
                        point: y,
                        reason: "seed is not in the image of the flat map".into(),
                    })
                }
            }
        }
        let at_x = seed.value(self.x).expect("in domain");
        if at_x.iter().all(Scalar::is_zero) {
            return Err(SymplecticError::BadSeed {
                point: self.x,
                reason: "seed vanishes at the base point".into(),
            });
        }
        self.shrink(|y| v_set.contains(y));
        let floor = self.floor;
        let Some(k) = (0..n).find(|&k| {
            floor
                .iter()
                .all(|y| !seed.value(y).expect("in domain")[k].is_zero())
        }) else {
            let k0 = at_x
                .iter()
                .position(|c| !c.is_zero())
                .expect("seed nonzero at x");
            let witness = floor
                .iter()
                .find(|&y| seed.value(y).expect("in domain")[k0].is_zero())
                .expect("first candidate vanishes somewhere");
            return Err(SymplecticError::NoAdmissibleNeighborhood { witness });
        };
        self.shrink(|y| !seed.value(y).expect("in domain")[k].is_zero());
        let field = self.w.module.field();
        self.eliminate(
            Pivot::Seed(k),
            |_| {
                let mut v = vec![field.zero(); n];
                v[k] = field.one();
                v
            },
            |y| preimage[&y].clone(),
        )?;
        self.used.push(k);
        Ok(())
    }
}

/// Writes `ω` near `x` as `Σ_{k=1}^m s^{2k−1} ∧ s^{2k}`.
///
/// Each step picks a pivot that is nonzero at `x`, shrinks the neighbourhood
/// to where the pivot is invertible, splits off one wedge and continues with
/// the residual form. The neighbourhood is finally shrunk to where the
/// residual vanishes, i.e. where the form has rank `2m`. On a finite space the
/// neighbourhood cannot shrink below the minimal open of `x`; when that is
/// not enough, the error names a point of the minimal open that obstructs it.
pub fn darboux(
    w: &TwoFormSheaf,
    x: usize,
    options: &DarbouxOptions,
) -> Result<DarbouxResult, SymplecticError> {
    let space = w.module.space();
    let floor_open = space
        .minimal_open(x)
        .map_err(|_| SheafError::BadSection(format!("unknown point {x}")))?;
    if w.coeff[x].is_zero() {
        return Err(SymplecticError::ZeroFormAt(x));
    }
    if options.abs_normalize && !w.module.field().is_ordered() {
        return Err(SymplecticError::UnorderedField);
    }
    let u = space.full_open();
    let mut el = Elimination {
        w,
        x,
        floor: space.open(floor_open),
        u,
        residual: space
            .open(u)
            .iter()
            .map(|y| (y, w.coeff[y].clone()))
            .collect(),
        covectors: Vec::new(),
        used: Vec::new(),
        trace: Vec::new(),
        abs_normalize: options.abs_normalize,
    };
    if let Some(seed) = &options.seed {
        el.seed_step(seed)?;
    }
    while el.index_step()? {}
    if let Some(witness) = el.floor.iter().find(|y| !el.residual[y].is_zero()) {
        return Err(SymplecticError::NoAdmissibleNeighborhood { witness });
    }
    let residual = el.residual.clone();
    el.shrink(|y| residual[&y].is_zero());

    let module = &w.module;
    let u = el.u;
    let pairs = el
        .covectors
        .iter()
        .map(|(odd, even)| {
            (
                module.section_from_fn(u, |y| odd[&y].clone()),
                module.section_from_fn(u, |y| even[&y].clone()),
            )
        })
        .collect::<Vec<_>>();
    let mut permutation = Vec::new();
    for &i in el
        .used
        .iter()
        .chain(&(0..module.rank()).collect::<Vec<_>>())
    {
        if !permutation.contains(&i) {
            permutation.push(i);
        }
    }
    Ok(DarbouxResult {
        at: x,
        neighborhood: u,
        half_rank: pairs.len(),
        pairs,
        permutation,
        trace: el.trace,
    })
}

/// A free module with a non-degenerate 2-form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticModule {
    form: TwoFormSheaf,
}

impl SymplecticModule {
    pub fn new(form: TwoFormSheaf) -> Result<Self, SymplecticError> {
        let n = form.module.rank();
        if n % 2 == 1 {
            return Err(SymplecticError::OddRank(n));
        }
        if let Nondegeneracy::Degenerate(w) = is_nondegenerate(&form.as_pairing()) {
            return Err(SymplecticError::Degenerate(Box::new(w)));
        }
        Ok(SymplecticModule { form })
    }

    pub fn module(&self) -> &FreeModuleSheaf {
        &self.form.module
    }

    pub fn form(&self) -> &TwoFormSheaf {
        &self.form
    }

    /// `𝓕^⊥` with respect to the form.
    pub fn perp(&self, f: &SubmoduleSheaf) -> Result<SubmoduleSheaf, SymplecticError> {
        if f.parent() != &self.form.module {
            return Err(SymplecticError::ParentMismatch);
        }
        Ok(annihilator(&self.form.as_pairing(), f)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub isotropic: bool,
    pub coisotropic: bool,
    pub symplectic_sub: bool,
    pub lagrangian: bool,
    /// An isotropic complement, present exactly when `lagrangian` holds.
    pub complement: Option<SubmoduleSheaf>,
}

pub fn classify(
    sm: &SymplecticModule,
    f: &SubmoduleSheaf,
) -> Result<Classification, SymplecticError> {
    let perp = sm.perp(f)?;
    let isotropic = f.is_subsheaf_of(&perp);
    let coisotropic = perp.is_subsheaf_of(f);
    let symplectic_sub = f
        .stalks()
        .iter()
        .zip(sm.form.coeffs())
        .all(|(s, a)| s.restrict_form(a).inverse().is_some());
    let lagrangian = isotropic && coisotropic;
    let complement = if lagrangian {
        Some(lagrangian_complement(sm, f)?)
    } else {
        None
    };
    Ok(Classification {
        isotropic,
        coisotropic,
        symplectic_sub,
        lagrangian,
        complement,
    })
}

/// An isotropic `𝓖` with `𝓔 = 𝓕 ⊕ 𝓖` for Lagrangian `𝓕`.
///
/// At each point, generators are chosen one at a time: the next one is the
/// first echelon basis vector of the perp of those already chosen that lies
/// outside `𝓕` plus their span. This stops once `𝓕` and the generators span.
pub fn lagrangian_complement(
    sm: &SymplecticModule,
    f: &SubmoduleSheaf,
) -> Result<SubmoduleSheaf, SymplecticError> {
    let perp = sm.perp(f)?;
    let module = sm.module();
    let field = module.field();
    let n = module.rank();
    let mut stalks = Vec::new();
    for (x, (fx, px)) in f.stalks().iter().zip(perp.stalks()).enumerate() {
        if fx != px {
            return Err(SymplecticError::NotLagrangian { point: x });
        }
        let a = sm.form.coeff(x);
        let mut chosen = Subspace::zero(field, n);
        let mut running = fx.clone();
        while !running.is_full() {
            let candidates = chosen.orthogonal_complement(a)?;
            let next = candidates
                .basis()
                .iter()
                .find(|v| !running.contains(v))
                .ok_or(SymplecticError::NotLagrangian { point: x })?
                .clone();
            chosen = chosen.sum(&Subspace::span(field, n, [next.clone()]))?;
            running = running.sum(&Subspace::span(field, n, [next]))?;
        }
        stalks.push(chosen);
    }
    Ok(SubmoduleSheaf::new(module.clone(), stalks)?)
}

/// `𝓕/(𝓕∩𝓕^⊥)` with the form induced on coset representatives.
#[derive(Clone, Debug)]
pub struct ReducedModule {
    source: SymplecticModule,
    by: SubmoduleSheaf,
    radical: SubmoduleSheaf,
    stalks: Vec<Subquotient>,
    reduced_form: Vec<Matrix>,
}

impl ReducedModule {
    pub fn source(&self) -> &SymplecticModule {
        &self.source
    }

    pub fn by(&self) -> &SubmoduleSheaf {
        &self.by
    }

    /// `𝓕∩𝓕^⊥`.
    pub fn radical(&self) -> &SubmoduleSheaf {
        &self.radical
    }

    pub fn stalk(&self, x: usize) -> &Subquotient {
        &self.stalks[x]
    }

    pub fn dim_at(&self, x: usize) -> usize {
        self.stalks[x].dim()
    }

    /// `ω̂` at `x` in the coordinates of the chosen representatives.
    pub fn reduced_form(&self, x: usize) -> &Matrix {
        &self.reduced_form[x]
    }

    pub fn reduced_forms(&self) -> &[Matrix] {
        &self.reduced_form
    }

    /// `ω̂([s], [t])` at `x` through the representatives `s, t ∈ 𝓕_x`.
    pub fn evaluate_at(&self, x: usize, s: &[Scalar], t: &[Scalar]) -> Option<Scalar> {
        let top = self.stalks[x].top();
        (top.contains(s) && top.contains(t)).then(|| self.source.form.coeff(x).bilinear(s, t))
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.reduced_form.iter().all(|m| m.inverse().is_some())
    }
}

pub fn reduce(sm: &SymplecticModule, f: &SubmoduleSheaf) -> Result<ReducedModule, SymplecticError> {
    let perp = sm.perp(f)?;
    let radical = SubmoduleSheaf::from_fn(sm.module(), |x| {
        f.stalk(x)
            .intersection(perp.stalk(x))
            .expect("same ambient")
    });
    let stalks = f
        .stalks()
        .iter()
        .zip(radical.stalks())
        .map(|(top, bottom)| Subquotient::new(top.clone(), bottom.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let reduced_form = stalks
        .iter()
        .zip(sm.form.coeffs())
        .map(|(sq, a)| {
            let l = sq.lift_matrix();
            l.transpose().mul(a).mul(&l)
        })
        .collect();
    Ok(ReducedModule {
        source: sm.clone(),
        by: f.clone(),
        radical,
        stalks,
        reduced_form,
    })
}

/// The image of `𝓖∩𝓕` in the reduction of a coisotropic `𝓕`.
#[derive(Clone, Debug)]
pub struct ReducedLagrangian {
    pub reduced: ReducedModule,
    /// Subspace of the reduction at each point, in representative coordinates.
    pub stalks: Vec<Subspace>,
}

impl ReducedLagrangian {
    pub fn is_isotropic(&self) -> bool {
        self.stalks
            .iter()
            .zip(self.reduced.reduced_forms())
            .all(|(s, a)| s.is_isotropic_for(a))
    }

    /// `dim = ½·dim` of the reduction at every point.
    pub fn has_half_dimension(&self) -> bool {
        self.stalks
            .iter()
            .enumerate()
            .all(|(x, s)| 2 * s.dim() == self.reduced.dim_at(x))
    }
}

pub fn reduce_lagrangian(
    sm: &SymplecticModule,
    f: &SubmoduleSheaf,
    g: &SubmoduleSheaf,
) -> Result<ReducedLagrangian, SymplecticError> {
    let cf = classify(sm, f)?;
    if !cf.coisotropic {
        let perp = sm.perp(f)?;
        let point = (0..f.stalks().len())
            .find(|&x| !perp.stalk(x).is_subspace_of(f.stalk(x)))
            .expect("some stalk fails");
        return Err(SymplecticError::NotCoisotropic { point });
    }
    let perp_g = sm.perp(g)?;
    if let Some(point) = (0..g.stalks().len()).find(|&x| g.stalk(x) != perp_g.stalk(x)) {
        return Err(SymplecticError::NotLagrangian { point });
    }
    let reduced = reduce(sm, f)?;
    let stalks = (0..f.stalks().len())
        .map(|x| {
            let sq = reduced.stalk(x);
            let meet = g.stalk(x).intersection(f.stalk(x)).expect("same ambient");
            Subspace::span(
                sm.module().field(),
                sq.dim(),
                meet.basis()
                    .iter()
                    .map(|v| sq.project(v).expect("inside 𝓕")),
            )
        })
        .collect();
    Ok(ReducedLagrangian { reduced, stalks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::Field;
    use crate::space::FiniteSpace;
    use std::sync::Arc;

    const Q: Field = Field::Rationals;

    fn v(xs: &[i64]) -> Vec<Scalar> {
        xs.iter().map(|&x| Q.from_i64(x)).collect()
    }

    fn j(n: usize) -> Matrix {
        let mut m = Matrix::zeros(Q, n, n);
        for k in (0..n).step_by(2) {
            m[(k, k + 1)] = Q.one();
            m[(k + 1, k)] = -Q.one();
        }
        m
    }

    fn point_form(coeff: Matrix) -> TwoFormSheaf {
        let e = FreeModuleSheaf::new(Arc::new(FiniteSpace::discrete(&["p"])), Q, coeff.rows());
        TwoFormSheaf::constant(e, coeff).unwrap()
    }

    fn span(n: usize, rows: &[&[i64]]) -> Subspace {
        Subspace::span(Q, n, rows.iter().map(|r| v(r)))
    }

    fn sub(sm: &SymplecticModule, rows: &[&[i64]]) -> SubmoduleSheaf {
        SubmoduleSheaf::constant(sm.module(), span(sm.module().rank(), rows)).unwrap()
    }

    #[test]
    fn rejects_non_skew() {
        let e = FreeModuleSheaf::new(Arc::new(FiniteSpace::discrete(&["p"])), Q, 2);
        assert_eq!(
            TwoFormSheaf::constant(e.clone(), Matrix::identity(Q, 2)),
            Err(SymplecticError::NotSkew { point: 0 })
        );
        assert!(TwoFormSheaf::constant(e, Matrix::from_i64(Q, &[&[0, 1], &[1, 0]])).is_err());
    }

    #[test]
    fn contraction() {
        let w = point_form(j(2));
        let s = w.module().section_from_fn(1, |_| v(&[1, 0]));
        assert_eq!(
            contract(&w, &s).unwrap().value(0).unwrap(),
            v(&[0, 1]).as_slice()
        );
        let z = TwoFormSheaf::zero(w.module());
        assert!(contract(&z, &s).unwrap().is_zero());
        let scaled = w.module().section_from_fn(1, |_| v(&[5, 0]));
        assert_eq!(
            contract(&w, &scaled).unwrap().value(0).unwrap(),
            v(&[0, 5]).as_slice()
        );
        let eta = w.module().section_from_fn(1, |_| v(&[2, 3]));
        assert_eq!(
            contract_covector(&eta, &scaled).unwrap()[&0],
            Q.from_i64(10)
        );
    }

    #[test]
    fn flat_examples() {
        let zero = flat(&TwoFormSheaf::zero(point_form(j(2)).module()));
        assert!(zero.kernel.stalk(0).is_full());
        assert!(zero.image.stalk(0).is_zero());

        let full = flat(&point_form(j(4)));
        assert!(full.kernel.stalk(0).is_zero());
        assert!(full.image.stalk(0).is_full());

        let a = Matrix::block_diag(Q, &[j(2), Matrix::zeros(Q, 2, 2)]);
        let f = flat(&point_form(a));
        assert_eq!(f.kernel.stalk(0), &span(4, &[&[0, 0, 1, 0], &[0, 0, 0, 1]]));
        assert_eq!(f.image.stalk(0), &span(4, &[&[1, 0, 0, 0], &[0, 1, 0, 0]]));
        assert!(f.iso[0].is_square() && f.iso[0].inverse().is_some());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(form_rank(&point_form(j(4)), 1), Ok(4));
        assert_eq!(form_rank(&point_form(Matrix::zeros(Q, 4, 4)), 1), Ok(0));
        let e = FreeModuleSheaf::new(Arc::new(FiniteSpace::discrete(&["a", "b"])), Q, 4);
        let w = TwoFormSheaf::new(
            e.clone(),
            vec![Matrix::block_diag(Q, &[j(2), Matrix::zeros(Q, 2, 2)]), j(4)],
        )
        .unwrap();
        let full = e.space().full_open();
        assert_eq!(
            form_rank(&w, full),
            Err(SymplecticError::RankNotConstant(0, 1))
        );
        assert_eq!(form_rank(&w, 0), Err(SymplecticError::EmptyOpen));
    }

    #[test]
    fn darboux_standard_form() {
        let w = point_form(j(2));
        let r = darboux(&w, 0, &DarbouxOptions::default()).unwrap();
        assert_eq!(r.half_rank, 1);
        assert_eq!(r.pairs[0].0.value(0).unwrap(), v(&[1, 0]).as_slice());
        assert_eq!(r.pairs[0].1.value(0).unwrap(), v(&[0, 1]).as_slice());
        assert!(r.reconstructs(&w));
    }

    #[test]
    fn darboux_rank_four() {
        let w = point_form(Matrix::from_i64(
            Q,
            &[&[0, 1, 0, 0], &[-1, 0, 0, 0], &[0, 0, 0, 2], &[0, 0, -2, 0]],
        ));
        let r = darboux(&w, 0, &DarbouxOptions::default()).unwrap();
        assert_eq!(r.half_rank, 2);
        assert!(r.reconstructs(&w));
        assert_eq!(r.permutation, vec![0, 1, 2, 3]);
        assert!(matches!(
            darboux(
                &point_form(Matrix::zeros(Q, 2, 2)),
                0,
                &DarbouxOptions::default()
            ),
            Err(SymplecticError::ZeroFormAt(0))
        ));
    }

    #[test]
    fn darboux_on_sierpinski() {
        let space = Arc::new(FiniteSpace::sierpinski());
        let b = space.point_index("b").unwrap();
        let a = space.point_index("a").unwrap();
        let e = FreeModuleSheaf::new(Arc::clone(&space), Q, 4);

        // pivot (1,2) vanishes at b, but (1,3) works on the whole minimal open
        let mut at_a = Matrix::from_i64(
            Q,
            &[
                &[0, 1, 1, 0],
                &[-1, 0, 0, 1],
                &[-1, 0, 0, 0],
                &[0, -1, 0, 0],
            ],
        );
        let at_b = Matrix::from_i64(
            Q,
            &[&[0, 0, 1, 0], &[0, 0, 0, 1], &[-1, 0, 0, 0], &[0, -1, 0, 0]],
        );
        let mut coeff = vec![Matrix::zeros(Q, 4, 4); 2];
        coeff[a] = at_a.clone();
        coeff[b] = at_b.clone();
        let w = TwoFormSheaf::new(e.clone(), coeff).unwrap();
        let r = darboux(&w, b, &DarbouxOptions::default()).unwrap();
        assert_eq!(r.trace[0].pivot, Pivot::Index(0, 2));
        assert_eq!(space.open(r.neighborhood).len(), 2);
        assert!(r.reconstructs(&w));

        // no pivot survives on the minimal open of b
        at_a = Matrix::zeros(Q, 4, 4);
        let mut coeff = vec![Matrix::zeros(Q, 4, 4); 2];
        coeff[a] = at_a;
        coeff[b] = at_b;
        let w = TwoFormSheaf::new(e, coeff).unwrap();
        assert_eq!(
            darboux(&w, b, &DarbouxOptions::default()),
            Err(SymplecticError::NoAdmissibleNeighborhood { witness: a })
        );
        // at a the form vanishes
        assert_eq!(
            darboux(&w, a, &DarbouxOptions::default()),
            Err(SymplecticError::ZeroFormAt(a))
        );
    }

    #[test]
    fn darboux_seeded_and_abs() {
        let w = point_form(j(4));
        let seed = w.module().section_from_fn(1, |_| v(&[0, 0, 1, 1]));
        let r = darboux(
            &w,
            0,
            &DarbouxOptions {
                seed: Some(seed.clone()),
                abs_normalize: false,
            },
        )
        .unwrap();
        assert_eq!(r.pairs[0].1, seed);
        assert!(r.reconstructs(&w));
        assert_eq!(r.half_rank, 2);

        let bad = w.module().section_from_fn(1, |_| v(&[0, 0, 0, 0]));
        assert!(matches!(
            darboux(
                &w,
                0,
                &DarbouxOptions {
                    seed: Some(bad),
                    abs_normalize: false
                }
            ),
            Err(SymplecticError::BadSeed { .. })
        ));
        let degenerate = point_form(Matrix::block_diag(Q, &[j(2), Matrix::zeros(Q, 2, 2)]));
        let outside = degenerate.module().section_from_fn(1, |_| v(&[0, 0, 1, 0]));
        assert!(matches!(
            darboux(
                &degenerate,
                0,
                &DarbouxOptions {
                    seed: Some(outside),
                    abs_normalize: false
                }
            ),
            Err(SymplecticError::BadSeed { .. })
        ));

        let abs = DarbouxOptions {
            seed: None,
            abs_normalize: true,
        };
        assert!(darboux(&w, 0, &abs).unwrap().reconstructs(&w));
        let neg = point_form(j(2).neg());
        assert_eq!(
            darboux(&neg, 0, &abs),
            Err(SymplecticError::NegativePivot { point: 0 })
        );
        let f3 = Field::prime(3).unwrap();
        let e3 = FreeModuleSheaf::new(Arc::new(FiniteSpace::discrete(&["p"])), f3, 2);
        let w3 = TwoFormSheaf::constant(e3, Matrix::from_i64(f3, &[&[0, 1], &[-1, 0]])).unwrap();
        assert_eq!(darboux(&w3, 0, &abs), Err(SymplecticError::UnorderedField));
        assert!(darboux(&w3, 0, &DarbouxOptions::default())
            .unwrap()
            .reconstructs(&w3));
    }

    #[test]
    fn symplectic_module_needs_nondegenerate_form() {
        assert!(SymplecticModule::new(point_form(j(4))).is_ok());
        assert!(matches!(
            SymplecticModule::new(point_form(Matrix::zeros(Q, 2, 2))),
            Err(SymplecticError::Degenerate(_))
        ));
        assert_eq!(
            SymplecticModule::new(point_form(Matrix::zeros(Q, 3, 3))),
            Err(SymplecticError::OddRank(3))
        );
    }

    #[test]
    fn classification_examples() {
        let sm = SymplecticModule::new(point_form(j(4))).unwrap();
        let zero = classify(&sm, &SubmoduleSheaf::zero(sm.module())).unwrap();
        assert!(zero.isotropic && !zero.coisotropic && !zero.lagrangian);
        let full = classify(&sm, &SubmoduleSheaf::full(sm.module())).unwrap();
        assert!(full.coisotropic && full.symplectic_sub && !full.isotropic);
        let l = classify(&sm, &sub(&sm, &[&[1, 0, 0, 0], &[0, 0, 1, 0]])).unwrap();
        assert!(l.isotropic && l.coisotropic && l.lagrangian && !l.symplectic_sub);
        assert_eq!(
            l.complement.unwrap().stalk(0),
            &span(4, &[&[0, 1, 0, 0], &[0, 0, 0, 1]])
        );
    }

    #[test]
    fn complement_examples() {
        let sm2 = SymplecticModule::new(point_form(j(2))).unwrap();
        let g = lagrangian_complement(&sm2, &sub(&sm2, &[&[1, 0]])).unwrap();
        assert_eq!(g.stalk(0), &span(2, &[&[0, 1]]));
        let sm = SymplecticModule::new(point_form(j(4))).unwrap();
        assert_eq!(
            lagrangian_complement(&sm, &sub(&sm, &[&[1, 0, 0, 0]])),
            Err(SymplecticError::NotLagrangian { point: 0 })
        );
    }

    #[test]
    fn reduction_examples() {
        let sm = SymplecticModule::new(point_form(j(4))).unwrap();
        let full = reduce(&sm, &SubmoduleSheaf::full(sm.module())).unwrap();
        assert_eq!(full.reduced_form(0), &j(4));
        let lag = reduce(&sm, &sub(&sm, &[&[1, 0, 0, 0], &[0, 0, 1, 0]])).unwrap();
        assert_eq!(lag.dim_at(0), 0);

        let f = sub(&sm, &[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0]]);
        assert_eq!(sm.perp(&f).unwrap().stalk(0), &span(4, &[&[0, 0, 1, 0]]));
        let r = reduce(&sm, &f).unwrap();
        assert_eq!(r.dim_at(0), 2);
        assert!(r.is_nondegenerate());
        let s = v(&[1, 0, 0, 0]);
        let t = v(&[0, 1, 0, 0]);
        let z = v(&[0, 0, 1, 0]);
        let shifted: Vec<Scalar> = t.iter().zip(&z).map(|(a, b)| a + b).collect();
        assert_eq!(r.evaluate_at(0, &s, &t), r.evaluate_at(0, &s, &shifted));

        let g = sub(&sm, &[&[1, 0, 0, 0], &[0, 0, 1, 0]]);
        let rl = reduce_lagrangian(&sm, &f, &g).unwrap();
        assert_eq!(rl.stalks[0].dim(), 1);
        assert!(rl.is_isotropic() && rl.has_half_dimension());

        assert_eq!(
            reduce_lagrangian(&sm, &sub(&sm, &[&[1, 0, 0, 0]]), &g).unwrap_err(),
            SymplecticError::NotCoisotropic { point: 0 }
        );
        assert_eq!(
            reduce_lagrangian(&sm, &f, &sub(&sm, &[&[1, 0, 0, 0]])).unwrap_err(),
            SymplecticError::NotLagrangian { point: 0 }
        );
    }
}
