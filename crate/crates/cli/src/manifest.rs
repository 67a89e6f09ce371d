//! The `sheafplectic-manifest/1` JSON format.
//!
//! ```json
//! {
//!   "format": "sheafplectic-manifest/1",
//!   "space": { "points": ["a", "b"], "opens": [["a"]] },
//!   "field": "Q",
//!   "rank": 2,
//!   "form": { "*": [["0", "1"], ["-1", "0"]] },
//!   "pairings": { "P": { "a": [["1", "0"], ["0", "1"]], "b": [["2", "0"], ["0", "1"]] } },
//!   "submodules": { "L": { "*": [["1", "0"]] } },
//!   "morphisms": { "S": { "*": [["1", "1"], ["0", "1"]] } },
//!   "sections": { "s": { "a": ["1", "0"], "b": ["0", "1/2"] } }
//! }
//! ```
//!
//! Scalars are strings (`"3/2"`, `"-1"`); over `{"Fp": p}` only integers are
//! allowed. The empty set and the whole space are always open and need not be
//! listed. In per-point maps the key `"*"` supplies the value for every point
//! not named explicitly. Submodules list spanning rows per point. A section's
//! domain is the set of points it names, which must be open.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sheafplectic::exactalg::{Field, Matrix, RationalLiteral, Scalar, Subspace};
use sheafplectic::pairing::{MorphismSheaf, PairingSheaf};
use sheafplectic::sheaf::{FreeModuleSheaf, Section, SubmoduleSheaf};
use sheafplectic::space::{FiniteSpace, PointSet};
use sheafplectic::symplectic::TwoFormSheaf;
use thiserror::Error;

pub const FORMAT: &str = "sheafplectic-manifest/1";
pub const MAX_POINTS: usize = 12;
pub const MAX_OPENS: usize = 64;
pub const MAX_POINTS_ENV: &str = "SHEAFPLECTIC_MAX_POINTS";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid manifest at {path}: {message}")]
    Validation { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ManifestError {
    ManifestError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

/// A scalar literal as written in the file.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Literal(String, RationalLiteral);

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let value = text.parse().map_err(serde::de::Error::custom)?;
        Ok(Literal(text, value))
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawField {
    Named(String),
    Prime {
        #[serde(rename = "Fp")]
        fp: u64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    points: Vec<String>,
    #[serde(default)]
    opens: Vec<Vec<String>>,
}

type PointMap<T> = BTreeMap<String, T>;
type RawMatrix = Vec<Vec<Literal>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    format: String,
    space: RawSpace,
    field: RawField,
    rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    form: Option<PointMap<RawMatrix>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pairings: BTreeMap<String, PointMap<RawMatrix>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    submodules: BTreeMap<String, PointMap<RawMatrix>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    morphisms: BTreeMap<String, PointMap<RawMatrix>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sections: BTreeMap<String, PointMap<Vec<Literal>>>,
}

/// A fully validated manifest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub module: FreeModuleSheaf,
    pub form: Option<TwoFormSheaf>,
    pub pairings: BTreeMap<String, PairingSheaf>,
    pub submodules: BTreeMap<String, SubmoduleSheaf>,
    pub morphisms: BTreeMap<String, MorphismSheaf>,
    pub sections: BTreeMap<String, Section>,
}

impl Manifest {
    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.module.space()
    }

    pub fn field(&self) -> Field {
        self.module.field()
    }

    pub fn point_name(&self, x: usize) -> &str {
        &self.space().points()[x]
    }
}

/// The point cap: 12, or lower if the environment variable asks for it.
pub fn point_limit() -> usize {
    std::env::var(MAX_POINTS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .map_or(MAX_POINTS, |v| v.min(MAX_POINTS))
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let raw: RawManifest = serde_json::from_str(text).map_err(|e| ManifestError::Parse {
        line: e.line(),
        col: e.column(),
        message: e.to_string(),
    })?;
    validate(raw)
}

fn validate(raw: RawManifest) -> Result<Manifest, ManifestError> {
    if raw.format != FORMAT {
        return Err(invalid("format", format!("expected {FORMAT:?}")));
    }
    let field = match raw.field {
        RawField::Named(ref s) if s == "Q" => Field::Rationals,
        RawField::Named(s) => return Err(invalid("field", format!("unknown field {s:?}"))),
        RawField::Prime { fp } => Field::prime(fp).map_err(|e| invalid("field", e.to_string()))?,
    };
    let space = Arc::new(build_space(&raw.space)?);
    let n = raw.rank;
    let module = FreeModuleSheaf::new(Arc::clone(&space), field, n);
    let ctx = Ctx {
        space: &space,
        field,
    };

    let form = match &raw.form {
        None => None,
        Some(map) => {
            let mats = ctx.per_point("form", map, |path, m| {
                let a = ctx.matrix(path, m, n, n)?;
                check_skew(path, &a)?;
                Ok(a)
            })?;
            Some(
                TwoFormSheaf::new(module.clone(), mats)
                    .map_err(|e| invalid("form", e.to_string()))?,
            )
        }
    };
    let mut pairings = BTreeMap::new();
    for (name, map) in &raw.pairings {
        let path = format!("pairings.{name}");
        let grams = ctx.per_point(&path, map, |p, m| ctx.matrix(p, m, n, n))?;
        let p = PairingSheaf::new(module.clone(), module.clone(), grams)
            .map_err(|e| invalid(&path, e.to_string()))?;
        pairings.insert(name.clone(), p);
    }
    let mut submodules = BTreeMap::new();
    for (name, map) in &raw.submodules {
        let path = format!("submodules.{name}");
        let stalks = ctx.per_point(&path, map, |p, rows| {
            let m = ctx.matrix(p, rows, rows.len(), n)?;
            Ok(Subspace::row_space(&m))
        })?;
        let f = SubmoduleSheaf::new(module.clone(), stalks)
            .map_err(|e| invalid(&path, e.to_string()))?;
        submodules.insert(name.clone(), f);
    }
    let mut morphisms = BTreeMap::new();
    for (name, map) in &raw.morphisms {
        let path = format!("morphisms.{name}");
        let mats = ctx.per_point(&path, map, |p, m| ctx.matrix(p, m, n, n))?;
        let m = MorphismSheaf::new(module.clone(), module.clone(), mats)
            .map_err(|e| invalid(&path, e.to_string()))?;
        morphisms.insert(name.clone(), m);
    }
    let mut sections = BTreeMap::new();
    for (name, map) in &raw.sections {
        let path = format!("sections.{name}");
        let mut values = BTreeMap::new();
        for (point, v) in map {
            let x = ctx.point(&format!("{path}.{point}"), point)?;
            values.insert(x, ctx.vector(&format!("{path}.{point}"), v, n)?);
        }
        let domain = PointSet::from_indices(values.keys().copied());
        let over = space
            .open_index(domain)
            .ok_or_else(|| invalid(&path, "the named points do not form an open set"))?;
        let s = module
            .section(over, values)
            .map_err(|e| invalid(&path, e.to_string()))?;
        sections.insert(name.clone(), s);
    }
    Ok(Manifest {
        module,
        form,
        pairings,
        submodules,
        morphisms,
        sections,
    })
}

fn build_space(raw: &RawSpace) -> Result<FiniteSpace, ManifestError> {
    let limit = point_limit();
    if raw.points.is_empty() {
        return Err(invalid("space.points", "at least one point is required"));
    }
    if raw.points.len() > limit {
        return Err(invalid(
            "space.points",
            format!("{} points exceed the limit of {limit}", raw.points.len()),
        ));
    }
    for (i, p) in raw.points.iter().enumerate() {
        if p.is_empty() || p == "*" {
            return Err(invalid(
                format!("space.points[{i}]"),
                "point names must be nonempty and not \"*\"",
            ));
        }
        if raw.points[..i].contains(p) {
            return Err(invalid(
                format!("space.points[{i}]"),
                format!("duplicate point {p:?}"),
            ));
        }
    }
    let mut opens = vec![PointSet::EMPTY, PointSet::full(raw.points.len())];
    for (k, open) in raw.opens.iter().enumerate() {
        let mut idx = Vec::new();
        for name in open {
            let i = raw.points.iter().position(|p| p == name).ok_or_else(|| {
                invalid(
                    format!("space.opens[{k}]"),
                    format!("unknown point {name:?}"),
                )
            })?;
            idx.push(i);
        }
        opens.push(PointSet::from_indices(idx));
    }
    opens.sort_by_key(|o| o.bits());
    opens.dedup();
    if opens.len() > MAX_OPENS {
        return Err(invalid(
            "space.opens",
            format!("more than {MAX_OPENS} opens"),
        ));
    }
    FiniteSpace::new(raw.points.clone(), opens).map_err(|e| invalid("space.opens", e.to_string()))
}

fn check_skew(path: &str, a: &Matrix) -> Result<(), ManifestError> {
    for i in 0..a.rows() {
        if !a[(i, i)].is_zero() {
            return Err(invalid(path, "diagonal must be zero"));
        }
        for j in 0..i {
            if !(&a[(i, j)] + &a[(j, i)]).is_zero() {
                return Err(invalid(
                    path,
                    format!("entries ({j},{i}) and ({i},{j}) must be negatives"),
                ));
            }
        }
    }
    Ok(())
}

struct Ctx<'a> {
    space: &'a FiniteSpace,
    field: Field,
}

impl Ctx<'_> {
    fn point(&self, path: &str, name: &str) -> Result<usize, ManifestError> {
        self.space
            .point_index(name)
            .ok_or_else(|| invalid(path, format!("unknown point {name:?}")))
    }

    /// Resolves a per-point map (with `"*"` as the default) into one value per point.
    fn per_point<T, R>(
        &self,
        path: &str,
        map: &PointMap<T>,
        build: impl Fn(&str, &T) -> Result<R, ManifestError>,
    ) -> Result<Vec<R>, ManifestError> {
        for key in map.keys() {
            if key != "*" {
                self.point(&format!("{path}.{key}"), key)?;
            }
        }
        self.space
            .points()
            .iter()
            .map(|name| {
                let (key, value) = map
                    .get_key_value(name)
                    .or_else(|| map.get_key_value("*"))
                    .ok_or_else(|| invalid(path, format!("no entry for point {name:?}")))?;
                build(&format!("{path}.{key}"), value)
            })
            .collect()
    }

    fn scalar(&self, path: &str, lit: &Literal) -> Result<Scalar, ManifestError> {
        self.field
            .parse_literal(&lit.0)
            .map_err(|e| invalid(path, e.to_string()))
    }

    fn vector(&self, path: &str, v: &[Literal], n: usize) -> Result<Vec<Scalar>, ManifestError> {
        if v.len() != n {
            return Err(invalid(
                path,
                format!("expected {n} entries, found {}", v.len()),
            ));
        }
        v.iter()
            .enumerate()
            .map(|(j, lit)| self.scalar(&format!("{path}[{j}]"), lit))
            .collect()
    }

    fn matrix(
        &self,
        path: &str,
        m: &RawMatrix,
        rows: usize,
        cols: usize,
    ) -> Result<Matrix, ManifestError> {
        if m.len() != rows {
            return Err(invalid(
                path,
                format!("expected a {rows}×{cols} matrix, found {} rows", m.len()),
            ));
        }
        let data = m
            .iter()
            .enumerate()
            .map(|(i, row)| self.vector(&format!("{path}[{i}]"), row, cols))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_rows(self.field, cols, data))
    }
}

pub fn scalar_text(s: &Scalar) -> String {
    s.to_string()
}

pub fn vector_json(v: &[Scalar]) -> Value {
    Value::Array(v.iter().map(|s| Value::String(scalar_text(s))).collect())
}

pub fn matrix_json(m: &Matrix) -> Value {
    Value::Array(m.row_vecs().iter().map(|r| vector_json(r)).collect())
}

pub fn basis_json(s: &Subspace) -> Value {
    Value::Array(s.basis().iter().map(|r| vector_json(r)).collect())
}

/// Canonical JSON for a manifest: every point listed explicitly, submodules
/// by echelon bases, all opens named.
pub fn emit(m: &Manifest) -> String {
    let space = m.space();
    let names = space.points();
    let per_point = |f: &dyn Fn(usize) -> Value| -> Value {
        Value::Object(
            names
                .iter()
                .enumerate()
                .map(|(x, name)| (name.clone(), f(x)))
                .collect(),
        )
    };
    let mut out = serde_json::Map::new();
    out.insert("format".into(), FORMAT.into());
    out.insert(
        "space".into(),
        serde_json::json!({
            "points": names,
            "opens": space.opens().iter()
                .map(|o| o.iter().map(|i| names[i].clone()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
    );
    out.insert(
        "field".into(),
        match m.field() {
            Field::Rationals => "Q".into(),
            Field::Prime(p) => serde_json::json!({ "Fp": p }),
        },
    );
    out.insert("rank".into(), m.module.rank().into());
    if let Some(w) = &m.form {
        out.insert("form".into(), per_point(&|x| matrix_json(w.coeff(x))));
    }
    let named = |items: Vec<(String, Value)>| Value::Object(items.into_iter().collect());
    if !m.pairings.is_empty() {
        out.insert(
            "pairings".into(),
            named(
                m.pairings
                    .iter()
                    .map(|(k, p)| (k.clone(), per_point(&|x| matrix_json(p.gram(x)))))
                    .collect(),
            ),
        );
    }
    if !m.submodules.is_empty() {
        out.insert(
            "submodules".into(),
            named(
                m.submodules
                    .iter()
                    .map(|(k, f)| (k.clone(), per_point(&|x| basis_json(f.stalk(x)))))
                    .collect(),
            ),
        );
    }
    if !m.morphisms.is_empty() {
        out.insert(
            "morphisms".into(),
            named(
                m.morphisms
                    .iter()
                    .map(|(k, s)| (k.clone(), per_point(&|x| matrix_json(s.mat(x)))))
                    .collect(),
            ),
        );
    }
    if !m.sections.is_empty() {
        out.insert(
            "sections".into(),
            named(
                m.sections
                    .iter()
                    .map(|(k, s)| {
                        let values = s
                            .values()
                            .iter()
                            .map(|(&x, v)| (names[x].clone(), vector_json(v)))
                            .collect();
                        (k.clone(), Value::Object(values))
                    })
                    .collect(),
            ),
        );
    }
    serde_json::to_string_pretty(&Value::Object(out)).expect("JSON values serialize") + "\n"
}
