//! Finite topological spaces given by an explicit lattice of open sets.

use std::fmt;

use thiserror::Error;

/// Index of an open set in [`FiniteSpace::opens`].
pub type OpenId = usize;

/// Hard cap on the number of points a space may have.
pub const MAX_POINTS: usize = 64;

/// A set of point indices, as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PointSet(u64);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn from_indices<I: IntoIterator<Item = usize>>(idx: I) -> Self {
        PointSet(idx.into_iter().fold(0u64, |m, i| {
            assert!(i < MAX_POINTS, "point index out of range");
            m | (1 << i)
        }))
    }

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            PointSet(u64::MAX)
        } else {
            PointSet((1u64 << n) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_POINTS && self.0 & (1 << i) != 0
    }

    pub fn is_subset(self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_POINTS).filter(move |&i| self.contains(i))
    }

    fn canonical_key(self) -> (usize, Vec<usize>) {
        (self.len(), self.iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("the empty set or the full point set is missing from the opens")]
    MissingEmptyOrFull,
    #[error("union of opens {0} and {1} is not open")]
    NotClosedUnderUnion(OpenId, OpenId),
    #[error("intersection of opens {0} and {1} is not open")]
    NotClosedUnderIntersection(OpenId, OpenId),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("duplicate point name {0:?}")]
    DuplicatePoint(String),
    #[error("too many points ({found}, limit {limit})")]
    TooManyPoints { found: usize, limit: usize },
}

/// An irredundant open cover of one open set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cover {
    pub target: OpenId,
    pub members: Vec<OpenId>,
}

/// A finite set of named points with its topology.
///
/// Opens are deduplicated and kept in canonical order (by size, then
/// lexicographically by point index), so `opens()[0]` is the empty set and
/// the last open is the whole space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    points: Vec<String>,
    opens: Vec<PointSet>,
}

/// Checks that `opens` is a topology on `n_points` points.
///
/// Opens are compared in the order given; the first failing pair is reported.
pub fn validate_topology(n_points: usize, opens: &[PointSet]) -> Result<(), TopologyError> {
    let full = PointSet::full(n_points);
    if !opens.contains(&PointSet::EMPTY) || !opens.contains(&full) {
        return Err(TopologyError::MissingEmptyOrFull);
    }
    for (i, a) in opens.iter().enumerate() {
        for (j, b) in opens.iter().enumerate().skip(i + 1) {
            if !opens.contains(&a.union(*b)) {
                return Err(TopologyError::NotClosedUnderUnion(i, j));
            }
            if !opens.contains(&a.intersection(*b)) {
                return Err(TopologyError::NotClosedUnderIntersection(i, j));
            }
        }
    }
    Ok(())
}

impl FiniteSpace {
    /// Builds a space from point names and opens given as point-index sets.
    pub fn new(points: Vec<String>, opens: Vec<PointSet>) -> Result<Self, TopologyError> {
        if points.len() > MAX_POINTS {
            return Err(TopologyError::TooManyPoints {
                found: points.len(),
                limit: MAX_POINTS,
            });
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(TopologyError::DuplicatePoint(p.clone()));
            }
        }
        let full = PointSet::full(points.len());
        if let Some(bad) = opens.iter().find(|o| !o.is_subset(full)) {
            let idx = bad.iter().find(|&i| i >= points.len()).unwrap_or(0);
            return Err(TopologyError::UnknownPoint(format!("#{idx}")));
        }
        let mut opens = opens;
        opens.sort_by_key(|o| o.canonical_key());
        opens.dedup();
        validate_topology(points.len(), &opens)?;
        Ok(FiniteSpace { points, opens })
    }

    /// Builds a space from opens listed by point name.
    pub fn from_named<S: AsRef<str>>(
        points: &[S],
        opens: &[Vec<S>],
    ) -> Result<Self, TopologyError> {
        let names: Vec<String> = points.iter().map(|p| p.as_ref().to_string()).collect();
        let sets = opens
            .iter()
            .map(|o| {
                o.iter()
                    .map(|p| {
                        names
                            .iter()
                            .position(|n| n == p.as_ref())
                            .ok_or_else(|| TopologyError::UnknownPoint(p.as_ref().to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(PointSet::from_indices)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(names, sets)
    }

    /// Every subset is open.
    pub fn discrete<S: AsRef<str>>(points: &[S]) -> Self {
        let n = points.len();
        assert!(n <= 16, "discrete space too large to enumerate");
        let opens = (0..(1u64 << n)).map(PointSet).collect();
        Self::new(
            points.iter().map(|p| p.as_ref().to_string()).collect(),
            opens,
        )
        .expect("discrete topology is valid")
    }

    /// The chain topology `∅ ⊂ {p0} ⊂ {p0,p1} ⊂ …`.
    pub fn chain<S: AsRef<str>>(points: &[S]) -> Self {
        let n = points.len();
        let opens = (0..=n).map(PointSet::full).collect();
        Self::new(
            points.iter().map(|p| p.as_ref().to_string()).collect(),
            opens,
        )
        .expect("chain topology is valid")
    }

    /// Sierpiński space on points `a`, `b` with opens `∅, {a}, {a,b}`.
    pub fn sierpinski() -> Self {
        Self::chain(&["a", "b"])
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn opens(&self) -> &[PointSet] {
        &self.opens
    }

    pub fn open(&self, id: OpenId) -> PointSet {
        self.opens[id]
    }

    pub fn n_opens(&self) -> usize {
        self.opens.len()
    }

    pub fn empty_open(&self) -> OpenId {
        0
    }

    pub fn full_open(&self) -> OpenId {
        self.opens.len() - 1
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn open_index(&self, set: PointSet) -> Option<OpenId> {
        self.opens.iter().position(|&o| o == set)
    }

    /// Opens contained in `u`, in canonical order.
    pub fn opens_within(&self, u: OpenId) -> impl Iterator<Item = OpenId> + '_ {
        let target = self.opens[u];
        (0..self.opens.len()).filter(move |&i| self.opens[i].is_subset(target))
    }

    /// The smallest open containing point `x`.
    pub fn minimal_open(&self, x: usize) -> Result<OpenId, TopologyError> {
        if x >= self.points.len() {
            return Err(TopologyError::UnknownPoint(format!("#{x}")));
        }
        let set = self
            .opens
            .iter()
            .filter(|o| o.contains(x))
            .fold(PointSet::full(self.points.len()), |acc, o| {
                acc.intersection(*o)
            });
        Ok(self
            .open_index(set)
            .expect("finite intersections of opens are open"))
    }

    /// The largest open contained in `set` (its interior).
    pub fn interior(&self, set: PointSet) -> OpenId {
        let union = self
            .opens
            .iter()
            .filter(|o| o.is_subset(set))
            .fold(PointSet::EMPTY, |acc, o| acc.union(*o));
        self.open_index(union).expect("unions of opens are open")
    }

    /// Open set formed by intersecting two opens.
    pub fn meet(&self, a: OpenId, b: OpenId) -> OpenId {
        self.open_index(self.opens[a].intersection(self.opens[b]))
            .expect("intersection of opens is open")
    }

    /// All irredundant covers of `u` by opens inside `u`, sorted by member
    /// count and then by member indices.
    pub fn irredundant_covers(&self, u: OpenId) -> Vec<Cover> {
        let target = self.opens[u];
        // Each member of an irredundant cover owns a point no other member
        // covers, so covers never exceed |u| members and never contain ∅.
        let candidates: Vec<OpenId> = self.opens_within(u).filter(|&i| i != 0).collect();
        let mut out = Vec::new();
        let mut chosen = Vec::new();
        self.search_covers(target, &candidates, 0, &mut chosen, &mut out);
        let mut covers: Vec<Cover> = out
            .into_iter()
            .map(|members| Cover { target: u, members })
            .collect();
        covers.sort_by(|a, b| (a.members.len(), &a.members).cmp(&(b.members.len(), &b.members)));
        covers
    }

    fn search_covers(
        &self,
        target: PointSet,
        candidates: &[OpenId],
        from: usize,
        chosen: &mut Vec<OpenId>,
        out: &mut Vec<Vec<OpenId>>,
    ) {
        let union = chosen
            .iter()
            .fold(PointSet::EMPTY, |acc, &m| acc.union(self.opens[m]));
        if union == target {
            out.push(chosen.clone());
            return;
        }
        if chosen.len() >= target.len() {
            return;
        }
        for k in from..candidates.len() {
            let c = candidates[k];
            chosen.push(c);
            if self.is_irredundant(chosen) {
                self.search_covers(target, candidates, k + 1, chosen, out);
            }
            chosen.pop();
        }
    }

    fn is_irredundant(&self, members: &[OpenId]) -> bool {
        members.iter().enumerate().all(|(i, &m)| {
            let others = members
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(PointSet::EMPTY, |acc, (_, &o)| acc.union(self.opens[o]));
            !self.opens[m].is_subset(others)
        })
    }

    /// Every cover of `u` (redundant ones included) by opens inside `u`.
    /// Exponential in the number of such opens; meant for cross-checks.
    pub fn all_covers(&self, u: OpenId) -> Vec<Cover> {
        let target = self.opens[u];
        let candidates: Vec<OpenId> = self.opens_within(u).collect();
        assert!(
            candidates.len() <= 20,
            "too many opens to enumerate every cover"
        );
        (0u64..(1 << candidates.len()))
            .filter_map(|mask| {
                let members: Vec<OpenId> = candidates
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &c)| c)
                    .collect();
                let union = members
                    .iter()
                    .fold(PointSet::EMPTY, |acc, &m| acc.union(self.opens[m]));
                (union == target).then_some(Cover { target: u, members })
            })
            .collect()
    }

    /// Human-readable rendering of an open, e.g. `{a,b}`.
    pub fn describe(&self, u: OpenId) -> String {
        let names: Vec<&str> = self.opens[u]
            .iter()
            .map(|i| self.points[i].as_str())
            .collect();
        format!("{{{}}}", names.join(","))
    }
}

impl fmt::Display for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opens: Vec<String> = (0..self.opens.len()).map(|u| self.describe(u)).collect();
        write!(f, "({}; {})", self.points.join(","), opens.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(space: &FiniteSpace, names: &[&str]) -> PointSet {
        PointSet::from_indices(names.iter().map(|n| space.point_index(n).unwrap()))
    }

    #[test]
    fn validation_examples() {
        assert!(FiniteSpace::from_named(&["a", "b"], &[vec![], vec!["a"], vec!["a", "b"]]).is_ok());
        assert!(FiniteSpace::from_named(
            &["a", "b"],
            &[vec![], vec!["a"], vec!["b"], vec!["a", "b"]]
        )
        .is_ok());
        assert_eq!(
            FiniteSpace::from_named(&["a", "b"], &[vec![], vec!["a"], vec!["b"]]),
            Err(TopologyError::MissingEmptyOrFull)
        );
        let three = ["a", "b", "c"];
        assert_eq!(
            FiniteSpace::from_named(&three, &[vec![], vec!["a"], vec!["b"], vec!["a", "b", "c"]]),
            Err(TopologyError::NotClosedUnderUnion(1, 2))
        );
        assert_eq!(
            FiniteSpace::from_named(
                &three,
                &[vec![], vec!["a", "b"], vec!["b", "c"], vec!["a", "b", "c"]]
            ),
            Err(TopologyError::NotClosedUnderIntersection(1, 2))
        );
        assert!(matches!(
            FiniteSpace::from_named(&["a"], &[vec![], vec!["z"]]),
            Err(TopologyError::UnknownPoint(_))
        ));
    }

    #[test]
    fn opens_are_canonically_sorted() {
        let s = FiniteSpace::from_named(
            &["a", "b"],
            &[vec!["a", "b"], vec!["b"], vec![], vec!["a"], vec!["b"]],
        )
        .unwrap();
        assert_eq!(s.n_opens(), 4);
        assert_eq!(s.open(0), PointSet::EMPTY);
        assert_eq!(s.open(1), set(&s, &["a"]));
        assert_eq!(s.open(2), set(&s, &["b"]));
        assert_eq!(s.open(3), set(&s, &["a", "b"]));
    }

    #[test]
    fn minimal_open_examples() {
        let d = FiniteSpace::discrete(&["a", "b"]);
        assert_eq!(d.open(d.minimal_open(0).unwrap()), set(&d, &["a"]));
        let s = FiniteSpace::sierpinski();
        assert_eq!(s.open(s.minimal_open(1).unwrap()), set(&s, &["a", "b"]));
        let c = FiniteSpace::chain(&["a", "b", "c"]);
        assert_eq!(c.open(c.minimal_open(1).unwrap()), set(&c, &["a", "b"]));
        assert!(c.minimal_open(7).is_err());
    }

    #[test]
    fn cover_examples() {
        let d = FiniteSpace::discrete(&["a", "b"]);
        assert_eq!(
            d.irredundant_covers(0),
            vec![Cover {
                target: 0,
                members: vec![]
            }]
        );
        let covers: Vec<Vec<OpenId>> = d
            .irredundant_covers(3)
            .into_iter()
            .map(|c| c.members)
            .collect();
        assert_eq!(covers, vec![vec![3], vec![1, 2]]);

        let c = FiniteSpace::chain(&["a", "b", "c"]);
        let ab = c.open_index(set(&c, &["a", "b"])).unwrap();
        let covers: Vec<Vec<OpenId>> = c
            .irredundant_covers(ab)
            .into_iter()
            .map(|c| c.members)
            .collect();
        assert_eq!(covers, vec![vec![ab]]);
    }

    #[test]
    fn every_open_is_union_of_minimal_opens() {
        let s = FiniteSpace::from_named(
            &["a", "b", "c"],
            &[
                vec![],
                vec!["a"],
                vec!["b"],
                vec!["a", "b"],
                vec!["a", "b", "c"],
            ],
        )
        .unwrap();
        for u in 0..s.n_opens() {
            let union = s.open(u).iter().fold(PointSet::EMPTY, |acc, x| {
                acc.union(s.open(s.minimal_open(x).unwrap()))
            });
            assert_eq!(union, s.open(u));
        }
        for x in 0..s.n_points() {
            let m = s.open(s.minimal_open(x).unwrap());
            for o in s.opens().iter().filter(|o| o.contains(x)) {
                assert!(m.is_subset(*o));
            }
        }
    }

    #[test]
    fn interior_of_point_sets() {
        let s = FiniteSpace::sierpinski();
        assert_eq!(s.interior(set(&s, &["b"])), 0);
        assert_eq!(s.open(s.interior(set(&s, &["a"]))), set(&s, &["a"]));
    }
}
