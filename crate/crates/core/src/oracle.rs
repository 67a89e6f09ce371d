//! Brute-force verifiers for small instances.
//!
//! Everything here works by enumerating elements of `𝔽_p`-vector spaces with
//! plain `u64` arithmetic, or by determinant expansion over `ℚ`. None of it
//! calls into row reduction, so agreement with the main routines is evidence
//! rather than tautology.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::exactalg::{Field, Matrix, Scalar, Subspace};
use crate::pairing::PairingSheaf;
use crate::sheaf::{ExplicitPresheaf, Section, SubmoduleSheaf};
use crate::space::OpenId;

/// Caps on enumeration: prime, module rank, number of points, and the
/// largest number of vectors any single enumeration may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_field: u64,
    pub max_rank: usize,
    pub max_points: usize,
    pub max_elements: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_field: 3,
            max_rank: 3,
            max_points: 3,
            max_elements: 3u64.pow(9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration exceeds the budget: {0}")]
    BudgetExceeded(String),
    #[error("enumeration needs a finite prime field")]
    NotFiniteField,
}

impl EnumerationBudget {
    fn prime(&self, field: Field) -> Result<u64, OracleError> {
        let Field::Prime(p) = field else {
            return Err(OracleError::NotFiniteField);
        };
        if p > self.max_field {
            return Err(OracleError::BudgetExceeded(format!(
                "prime {p} > {}",
                self.max_field
            )));
        }
        Ok(p)
    }

    fn check(&self, rank: usize, points: usize) -> Result<(), OracleError> {
        if rank > self.max_rank {
            return Err(OracleError::BudgetExceeded(format!(
                "rank {rank} > {}",
                self.max_rank
            )));
        }
        if points > self.max_points {
            return Err(OracleError::BudgetExceeded(format!(
                "{points} points > {}",
                self.max_points
            )));
        }
        Ok(())
    }

    fn count(&self, p: u64, exponent: usize) -> Result<u64, OracleError> {
        let n = u32::try_from(exponent)
            .ok()
            .and_then(|e| p.checked_pow(e))
            .filter(|&n| n <= self.max_elements)
            .ok_or_else(|| {
                OracleError::BudgetExceeded(format!(
                    "{p}^{exponent} elements > {}",
                    self.max_elements
                ))
            })?;
        Ok(n)
    }
}

fn residues(v: &[Scalar]) -> Vec<u64> {
    v.iter()
        .map(|s| s.residue().expect("finite field scalar"))
        .collect()
}

/// The `index`-th vector of `𝔽_pⁿ` in base-`p` order.
fn nth_vector(p: u64, n: usize, mut index: u64) -> Vec<u64> {
    let mut v = vec![0; n];
    for slot in v.iter_mut() {
        *slot = index % p;
        index /= p;
    }
    v
}

/// All linear combinations of `basis` (with repetition if dependent).
fn combinations(p: u64, n: usize, basis: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let k = basis.len();
    (0..p.pow(k as u32))
        .map(|i| {
            let coeffs = nth_vector(p, k, i);
            (0..n)
                .map(|j| {
                    basis
                        .iter()
                        .zip(&coeffs)
                        .fold(0, |acc, (b, c)| (acc + b[j] * c) % p)
                })
                .collect()
        })
        .collect()
}

fn bilinear(p: u64, gram: &[Vec<u64>], s: &[u64], t: &[u64]) -> u64 {
    let mut acc = 0;
    for (i, row) in gram.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            acc = (acc + s[i] * g * t[j]) % p;
        }
    }
    acc
}

fn apply(p: u64, m: &[Vec<u64>], v: &[u64]) -> Vec<u64> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(0, |acc, (a, b)| (acc + a * b) % p))
        .collect()
}

fn raw(m: &Matrix) -> Vec<Vec<u64>> {
    m.row_vecs().iter().map(|r| residues(r)).collect()
}

fn to_scalars(field: Field, v: &[u64]) -> Vec<Scalar> {
    v.iter().map(|&x| field.from_i64(x as i64)).collect()
}

/// Every section `t` of the right module over `u` with `φ(s, t) = 0` for all
/// sections `s` of `𝓖` over `u`, found by exhaustion.
pub fn enum_annihilator(
    pairing: &PairingSheaf,
    g: &SubmoduleSheaf,
    u: OpenId,
    budget: &EnumerationBudget,
) -> Result<Vec<Section>, OracleError> {
    let right = pairing.right();
    let p = budget.prime(right.field())?;
    let points: Vec<usize> = right.space().open(u).iter().collect();
    budget.check(right.rank().max(pairing.left().rank()), points.len())?;
    let n = right.rank();
    let total = budget.count(p, n * points.len())?;

    // sections of 𝓖 over u, as one vector per point
    let local: Vec<Vec<Vec<u64>>> = points
        .iter()
        .map(|&x| {
            let basis: Vec<Vec<u64>> = g.stalk(x).basis().iter().map(|b| residues(b)).collect();
            combinations(p, pairing.left().rank(), &basis)
        })
        .collect();
    let n_s: u64 = local.iter().map(|l| l.len() as u64).product();
    if n_s > budget.max_elements {
        return Err(OracleError::BudgetExceeded(format!(
            "{n_s} sections of the sub-module"
        )));
    }
    let grams: Vec<Vec<Vec<u64>>> = points.iter().map(|&x| raw(pairing.gram(x))).collect();

    let mut out = Vec::new();
    for index in 0..total {
        let flat = nth_vector(p, n * points.len(), index);
        let t: Vec<&[u64]> = flat.chunks(n.max(1)).take(points.len()).collect();
        let t: Vec<Vec<u64>> = if n == 0 {
            vec![Vec::new(); points.len()]
        } else {
            t.into_iter().map(<[u64]>::to_vec).collect()
        };
        let killed = (0..n_s).all(|s_index| {
            let mut rest = s_index;
            points.iter().enumerate().all(|(k, _)| {
                let len = local[k].len() as u64;
                let s = &local[k][(rest % len) as usize];
                rest /= len;
                bilinear(p, &grams[k], s, &t[k]) == 0
            })
        });
        if killed {
            let field = right.field();
            out.push(right.section_from_fn(u, |x| {
                let k = points.iter().position(|&y| y == x).expect("point of u");
                to_scalars(field, &t[k])
            }));
        }
    }
    Ok(out)
}

/// Elements of `a ∩ b` by listing `a` and testing membership in the list of `b`.
pub fn enum_intersection(
    a: &Subspace,
    b: &Subspace,
    budget: &EnumerationBudget,
) -> Result<Vec<Vec<Scalar>>, OracleError> {
    let p = budget.prime(a.field())?;
    let n = a.ambient_dim();
    budget.count(p, a.dim().max(b.dim()))?;
    let raw_basis = |s: &Subspace| s.basis().iter().map(|v| residues(v)).collect::<Vec<_>>();
    let in_b: BTreeSet<Vec<u64>> = combinations(p, n, &raw_basis(b)).into_iter().collect();
    let mut out: Vec<Vec<u64>> = combinations(p, n, &raw_basis(a))
        .into_iter()
        .filter(|v| in_b.contains(v))
        .collect();
    out.sort();
    out.dedup();
    Ok(out.iter().map(|v| to_scalars(a.field(), v)).collect())
}

/// Rank over `𝔽_p` as `log_p` of the number of distinct column combinations.
pub fn enum_rank(m: &Matrix, budget: &EnumerationBudget) -> Result<usize, OracleError> {
    let p = budget.prime(m.field())?;
    budget.count(p, m.cols())?;
    let columns: Vec<Vec<u64>> = (0..m.cols()).map(|c| residues(&m.column(c))).collect();
    let distinct: BTreeSet<Vec<u64>> = combinations(p, m.rows(), &columns).into_iter().collect();
    let mut size = distinct.len() as u64;
    let mut rank = 0;
    while size > 1 {
        size /= p;
        rank += 1;
    }
    Ok(rank)
}

/// Outcome of exhaustive gluing over one open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingReport {
    pub open: OpenId,
    pub covers: usize,
    /// Families examined, summed over covers.
    pub families: u64,
    pub compatible: u64,
    /// Compatible families with exactly one gluing.
    pub glued_uniquely: u64,
    /// Some compatible family has two distinct gluings.
    pub s1_fails: bool,
    /// Some compatible family has no gluing.
    pub s2_fails: bool,
}

impl GluingReport {
    pub fn holds(&self) -> bool {
        !self.s1_fails && !self.s2_fails
    }
}

/// Enumerates every family over every irredundant cover of `u`, keeps those
/// agreeing on nonempty overlaps, and counts how many sections over `u`
/// restrict to each one.
pub fn enum_gluing_check(
    presheaf: &ExplicitPresheaf,
    u: OpenId,
    budget: &EnumerationBudget,
) -> Result<GluingReport, OracleError> {
    let p = budget.prime(presheaf.field())?;
    let space = presheaf.space();
    budget.check(
        presheaf.dims().iter().copied().max().unwrap_or(0),
        space.n_points(),
    )?;
    let n_sections = budget.count(p, presheaf.dim(u))?;
    let sections: Vec<Vec<u64>> = (0..n_sections)
        .map(|i| nth_vector(p, presheaf.dim(u), i))
        .collect();

    let mut report = GluingReport {
        open: u,
        covers: 0,
        families: 0,
        compatible: 0,
        glued_uniquely: 0,
        s1_fails: false,
        s2_fails: false,
    };
    for cover in space.irredundant_covers(u) {
        report.covers += 1;
        let dims: Vec<usize> = cover.members.iter().map(|&m| presheaf.dim(m)).collect();
        let n_families = budget.count(p, dims.iter().sum())?;
        let restrictions: Vec<Vec<Vec<u64>>> = cover
            .members
            .iter()
            .map(|&m| raw(presheaf.restriction(u, m)))
            .collect();
        let images: Vec<Vec<Vec<u64>>> = sections
            .iter()
            .map(|s| restrictions.iter().map(|r| apply(p, r, s)).collect())
            .collect();
        for index in 0..n_families {
            let flat = nth_vector(p, dims.iter().sum(), index);
            let mut family = Vec::new();
            let mut at = 0;
            for &d in &dims {
                family.push(flat[at..at + d].to_vec());
                at += d;
            }
            report.families += 1;
            let compatible = cover.members.iter().enumerate().all(|(i, &a)| {
                cover.members.iter().enumerate().skip(i + 1).all(|(j, &b)| {
                    let w = space.meet(a, b);
                    space.open(w).is_empty()
                        || apply(p, &raw(presheaf.restriction(a, w)), &family[i])
                            == apply(p, &raw(presheaf.restriction(b, w)), &family[j])
                })
            });
            if !compatible {
                continue;
            }
            report.compatible += 1;
            let gluings = images.iter().filter(|img| **img == family).count();
            match gluings {
                0 => report.s2_fails = true,
                1 => report.glued_uniquely += 1,
                _ => report.s1_fails = true,
            }
        }
    }
    Ok(report)
}

/// Largest `k` with a nonzero `k × k` minor, each minor computed by the
/// permutation expansion of the determinant.
pub fn recompute_rank_via_minors(m: &Matrix) -> Result<usize, OracleError> {
    if m.rows() * m.cols() > 36 {
        return Err(OracleError::BudgetExceeded(format!(
            "{}×{} matrix has more than 36 entries",
            m.rows(),
            m.cols()
        )));
    }
    for k in (1..=m.rows().min(m.cols())).rev() {
        for rows in subsets(m.rows(), k) {
            for cols in subsets(m.cols(), k) {
                if !leibniz(m, &rows, &cols).is_zero() {
                    return Ok(k);
                }
            }
        }
    }
    Ok(0)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn leibniz(m: &Matrix, rows: &[usize], cols: &[usize]) -> Scalar {
    let field = m.field();
    let k = rows.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut total = field.zero();
    permute(&mut perm, 0, &mut |perm| {
        let inversions = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .filter(|&(i, j)| perm[i] > perm[j])
            .count();
        let term = (0..k).fold(field.one(), |acc, i| acc * &m[(rows[i], cols[perm[i]])]);
        total = if inversions % 2 == 0 {
            &total + &term
        } else {
            &total - &term
        };
    });
    total
}

fn permute(perm: &mut Vec<usize>, from: usize, visit: &mut impl FnMut(&[usize])) {
    if from == perm.len() {
        visit(perm);
        return;
    }
    for i in from..perm.len() {
        perm.swap(from, i);
        permute(perm, from + 1, visit);
        perm.swap(from, i);
    }
}
