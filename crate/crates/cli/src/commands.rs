//! Command dispatch: each command turns a manifest and its arguments into a [`Report`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use sheafplectic::checks::{self, CheckResult};
use sheafplectic::pairing::{
    annihilator, is_nondegenerate, MorphismSheaf, Nondegeneracy, PairingSheaf,
};
use sheafplectic::sheaf::{intersect_submodules, sum_submodules, Section, SubmoduleSheaf};
use sheafplectic::space::OpenId;
use sheafplectic::symplectic::{
    classify, darboux, reduce, reduce_lagrangian, DarbouxOptions, DarbouxResult, Pivot,
    SymplecticError, SymplecticModule, TwoFormSheaf,
};

use crate::manifest::{basis_json, matrix_json, scalar_text, vector_json, Manifest};
use crate::report::{Report, Verdict};

/// Randomized instances per driver in `check`.
pub const RANDOM_INSTANCES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Completeness,
    AnnihilatorTheorem,
    Transpose,
    HomExactness,
    Darboux,
    Reduction,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Completeness => "completeness",
            Suite::AnnihilatorTheorem => "annihilator-theorem",
            Suite::Transpose => "transpose",
            Suite::HomExactness => "hom-exactness",
            Suite::Darboux => "darboux",
            Suite::Reduction => "reduction",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Annihilator {
        pairing: String,
        sub: String,
    },
    Classify {
        sub: String,
    },
    Darboux {
        at: String,
        seed: Option<String>,
        abs_normalize: bool,
    },
    Reduce {
        sub: String,
        lagrangian: Option<String>,
    },
    Check {
        suite: Suite,
        seed_rng: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Annihilator { .. } => "annihilator",
            Command::Classify { .. } => "classify",
            Command::Darboux { .. } => "darboux",
            Command::Reduce { .. } => "reduce",
            Command::Check { .. } => "check",
        }
    }
}

/// Failure of a command; always reported with exit code 1.
#[derive(Debug)]
enum Failure {
    UnknownName { kind: &'static str, symbol: String },
    Missing(&'static str),
    Symplectic(SymplecticError),
}

impl From<SymplecticError> for Failure {
    fn from(e: SymplecticError) -> Self {
        Failure::Symplectic(e)
    }
}

pub fn run_command(m: &Manifest, cmd: &Command) -> Report {
    let outcome = match cmd {
        Command::Validate => Ok(validate(m)),
        Command::Annihilator { pairing, sub } => annihilator_cmd(m, pairing, sub),
        Command::Classify { sub } => classify_cmd(m, sub),
        Command::Darboux {
            at,
            seed,
            abs_normalize,
        } => darboux_cmd(m, at, seed.as_deref(), *abs_normalize),
        Command::Reduce { sub, lagrangian } => reduce_cmd(m, sub, lagrangian.as_deref()),
        Command::Check { suite, seed_rng } => Ok(check_cmd(m, *suite, *seed_rng)),
    };
    outcome.unwrap_or_else(|f| Report::new(cmd.name(), Verdict::Fail).witness(failure_json(m, &f)))
}

fn failure_json(m: &Manifest, f: &Failure) -> Value {
    match f {
        Failure::UnknownName { kind, symbol } => json!({
            "error": "unknown name",
            "kind": kind,
            "symbol": symbol,
        }),
        Failure::Missing(what) => json!({ "error": format!("the manifest has no {what}") }),
        Failure::Symplectic(e) => symplectic_witness(m, e),
    }
}

fn symplectic_witness(m: &Manifest, e: &SymplecticError) -> Value {
    let name = |x: &usize| Value::String(m.point_name(*x).to_string());
    let (kind, point) = match e {
        SymplecticError::NotSkew { point } => ("not skew", Some(name(point))),
        SymplecticError::ZeroFormAt(x) => ("zero form", Some(name(x))),
        SymplecticError::NoAdmissibleNeighborhood { witness } => {
            ("no admissible neighbourhood", Some(name(witness)))
        }
        SymplecticError::BadSeed { point, .. } => ("bad seed", Some(name(point))),
        SymplecticError::NegativePivot { point } => ("negative pivot", Some(name(point))),
        SymplecticError::Degenerate(w) => {
            return json!({
                "error": "degenerate form",
                "point": name(&w.point),
                "vector": vector_json(&w.vector),
            })
        }
        SymplecticError::NotLagrangian { point } => ("not lagrangian", Some(name(point))),
        SymplecticError::NotCoisotropic { point } => ("not coisotropic", Some(name(point))),
        SymplecticError::RankNotConstant(x, y) => {
            return json!({
                "error": "rank not constant",
                "points": [name(x), name(y)],
            })
        }
        _ => ("error", None),
    };
    let mut out = Map::new();
    out.insert("error".into(), kind.into());
    match point {
        Some(p) => out.insert("point".into(), p),
        None => out.insert("message".into(), e.to_string().into()),
    };
    Value::Object(out)
}

fn open_json(m: &Manifest, u: OpenId) -> Value {
    let space = m.space();
    Value::Array(
        space
            .open(u)
            .iter()
            .map(|x| m.point_name(x).into())
            .collect(),
    )
}

fn per_point(m: &Manifest, f: impl Fn(usize) -> Value) -> Value {
    Value::Object(
        (0..m.space().n_points())
            .map(|x| (m.point_name(x).to_string(), f(x)))
            .collect(),
    )
}

fn submodule<'a>(m: &'a Manifest, name: &str) -> Result<&'a SubmoduleSheaf, Failure> {
    m.submodules.get(name).ok_or_else(|| Failure::UnknownName {
        kind: "submodule",
        symbol: name.to_string(),
    })
}

fn form(m: &Manifest) -> Result<&TwoFormSheaf, Failure> {
    m.form.as_ref().ok_or(Failure::Missing("form"))
}

fn symplectic_module(m: &Manifest) -> Result<SymplecticModule, Failure> {
    Ok(SymplecticModule::new(form(m)?.clone())?)
}

/// A named pairing, `form` for the 2-form, or `canonical` for the standard dot product.
fn pairing(m: &Manifest, name: &str) -> Result<PairingSheaf, Failure> {
    if let Some(p) = m.pairings.get(name) {
        return Ok(p.clone());
    }
    match name {
        "form" => Ok(form(m)?.as_pairing()),
        "canonical" => Ok(PairingSheaf::canonical(&m.module)),
        _ => Err(Failure::UnknownName {
            kind: "pairing",
            symbol: name.to_string(),
        }),
    }
}

fn names<'a>(keys: impl Iterator<Item = &'a String>) -> Value {
    Value::Array(keys.map(|k| Value::String(k.clone())).collect())
}

fn validate(m: &Manifest) -> Report {
    let space = m.space();
    let mut report = Report::new("validate", Verdict::Pass)
        .with("field", m.field().to_string())
        .with("rank", m.module.rank())
        .with("points", space.points().to_vec())
        .with(
            "opens",
            Value::Array((0..space.n_opens()).map(|u| open_json(m, u)).collect()),
        )
        .with(
            "minimal_opens",
            per_point(m, |x| {
                open_json(m, space.minimal_open(x).expect("point in range"))
            }),
        )
        .with("pairings", names(m.pairings.keys()))
        .with("submodules", names(m.submodules.keys()))
        .with("morphisms", names(m.morphisms.keys()))
        .with("sections", names(m.sections.keys()));
    if let Some(w) = &m.form {
        let ranks = per_point(m, |x| sheafplectic::exactalg::rank_of(w.coeff(x)).into());
        let nondegenerate = is_nondegenerate(&w.as_pairing()).is_nondegenerate();
        report = report.with(
            "form",
            json!({ "rank_at": ranks, "nondegenerate": nondegenerate }),
        );
    }
    report
}

fn annihilator_cmd(m: &Manifest, p: &str, g: &str) -> Result<Report, Failure> {
    let p = pairing(m, p)?;
    let g = submodule(m, g)?;
    let perp = annihilator(&p, g).map_err(SymplecticError::from)?;
    let nondegenerate = is_nondegenerate(&p).is_nondegenerate();
    Ok(Report::new("annihilator", Verdict::Value)
        .with("pairing_nondegenerate", nondegenerate)
        .with("stalks", per_point(m, |x| basis_json(perp.stalk(x))))
        .with("dims", per_point(m, |x| perp.stalk(x).dim().into())))
}

fn classify_cmd(m: &Manifest, f: &str) -> Result<Report, Failure> {
    let sm = symplectic_module(m)?;
    let c = classify(&sm, submodule(m, f)?)?;
    let mut report = Report::new("classify", Verdict::Value)
        .with("isotropic", c.isotropic)
        .with("coisotropic", c.coisotropic)
        .with("symplectic", c.symplectic_sub)
        .with("lagrangian", c.lagrangian);
    if let Some(g) = &c.complement {
        report = report.with(
            "lagrangian_complement",
            per_point(m, |x| basis_json(g.stalk(x))),
        );
    }
    Ok(report)
}

fn pivot_json(p: &Pivot) -> Value {
    match p {
        Pivot::Index(i, j) => json!({ "indices": [i + 1, j + 1] }),
        Pivot::Seed(k) => json!({ "seed_index": k + 1 }),
    }
}

fn darboux_json(m: &Manifest, r: &DarbouxResult) -> Report {
    let nbhd = m.space().open(r.neighborhood);
    let covectors = Value::Object(
        nbhd.iter()
            .map(|y| {
                let rows = r
                    .pairs
                    .iter()
                    .flat_map(|(s, t)| [s, t])
                    .map(|s| vector_json(s.value(y).expect("defined on the neighbourhood")))
                    .collect();
                (m.point_name(y).to_string(), Value::Array(rows))
            })
            .collect(),
    );
    let trace = r
        .trace
        .iter()
        .map(|step| {
            json!({
                "pivot": pivot_json(&step.pivot),
                "value": scalar_text(&step.value),
                "neighborhood": open_json(m, step.neighborhood),
            })
        })
        .collect::<Vec<_>>();
    Report::new("darboux", Verdict::Value)
        .with("at", m.point_name(r.at))
        .with("neighborhood", open_json(m, r.neighborhood))
        .with("m", r.half_rank)
        .with("covectors", covectors)
        .with(
            "permutation",
            r.permutation.iter().map(|i| i + 1).collect::<Vec<_>>(),
        )
        .with("trace", trace)
}

fn darboux_cmd(
    m: &Manifest,
    at: &str,
    seed: Option<&str>,
    abs_normalize: bool,
) -> Result<Report, Failure> {
    let w = form(m)?;
    let x = m
        .space()
        .point_index(at)
        .ok_or_else(|| Failure::UnknownName {
            kind: "point",
            symbol: at.to_string(),
        })?;
    let seed = seed
        .map(|s| {
            m.sections
                .get(s)
                .cloned()
                .ok_or_else(|| Failure::UnknownName {
                    kind: "section",
                    symbol: s.to_string(),
                })
        })
        .transpose()?;
    let options = DarbouxOptions {
        seed: seed.clone(),
        abs_normalize,
    };
    let r = darboux(w, x, &options)?;
    let report = darboux_json(m, &r);
    // abs-normalised pairs only reconstruct for positive pivots, which darboux enforces
    match checks::check_darboux_result(w, &r, seed.as_ref()) {
        Ok(()) => Ok(report.with("reconstructs", true)),
        Err(msg) => Ok(Report {
            verdict: Verdict::Fail,
            ..report.with("reconstructs", false)
        }
        .witness(json!({ "error": msg }))),
    }
}

fn reduce_cmd(m: &Manifest, f: &str, lagrangian: Option<&str>) -> Result<Report, Failure> {
    let sm = symplectic_module(m)?;
    let fs = submodule(m, f)?;
    let perp = sm.perp(fs)?;
    if let Some(x) = (0..m.space().n_points()).find(|&x| !perp.stalk(x).is_subspace_of(fs.stalk(x)))
    {
        return Err(SymplecticError::NotCoisotropic { point: x }.into());
    }
    let g = lagrangian.map(|g| submodule(m, g)).transpose()?;
    let r = reduce(&sm, fs)?;
    let mut report = Report::new("reduce", Verdict::Value)
        .with("dim", per_point(m, |x| r.dim_at(x).into()))
        .with(
            "radical",
            per_point(m, |x| basis_json(r.radical().stalk(x))),
        )
        .with(
            "representatives",
            per_point(m, |x| basis_json(r.stalk(x).complement())),
        )
        .with(
            "reduced_form",
            per_point(m, |x| matrix_json(r.reduced_form(x))),
        )
        .with("nondegenerate", r.is_nondegenerate());
    if let Some(g) = g {
        let rl = reduce_lagrangian(&sm, fs, g)?;
        report = report.with(
            "lagrangian_image",
            json!({
                "stalks": per_point(m, |x| basis_json(&rl.stalks[x])),
                "isotropic": rl.is_isotropic(),
                "half_dimension": rl.has_half_dimension(),
            }),
        );
        if !(rl.is_isotropic() && rl.has_half_dimension()) {
            report.verdict = Verdict::Fail;
        }
    }
    if !r.is_nondegenerate() {
        report.verdict = Verdict::Fail;
    }
    Ok(report)
}

/// Collects labelled check outcomes for the `check` command.
struct Tally {
    manifest_checks: usize,
    random_instances: usize,
    failures: Vec<Value>,
    notes: Vec<Value>,
}

impl Tally {
    fn record(&mut self, label: String, r: CheckResult) {
        self.manifest_checks += 1;
        if let Err(msg) = r {
            self.failures.push(json!({ "check": label, "error": msg }));
        }
    }

    fn random(
        &mut self,
        label: &str,
        rng: &mut ChaCha8Rng,
        driver: impl Fn(&mut ChaCha8Rng) -> CheckResult,
    ) {
        for i in 0..RANDOM_INSTANCES {
            self.random_instances += 1;
            if let Err(msg) = driver(rng) {
                self.failures
                    .push(json!({ "check": format!("{label} #{}", i + 1), "error": msg }));
            }
        }
    }
}

/// The pairings of the manifest that are non-degenerate, by name.
fn nondegenerate_pairings(m: &Manifest) -> Vec<(String, PairingSheaf)> {
    let mut out = vec![("canonical".to_string(), PairingSheaf::canonical(&m.module))];
    if let Some(w) = &m.form {
        out.push(("form".to_string(), w.as_pairing()));
    }
    out.extend(m.pairings.iter().map(|(k, p)| (k.clone(), p.clone())));
    out.retain(|(_, p)| matches!(is_nondegenerate(p), Nondegeneracy::Nondegenerate));
    out
}

/// The manifest's sub-modules plus the zero and full ones.
fn submodules(m: &Manifest) -> Vec<(String, SubmoduleSheaf)> {
    let mut out = vec![
        ("0".to_string(), SubmoduleSheaf::zero(&m.module)),
        ("E".to_string(), SubmoduleSheaf::full(&m.module)),
    ];
    out.extend(m.submodules.iter().map(|(k, f)| (k.clone(), f.clone())));
    out
}

fn endomorphisms(m: &Manifest) -> Vec<(String, MorphismSheaf)> {
    let mut out = vec![("id".to_string(), MorphismSheaf::identity(&m.module))];
    out.extend(m.morphisms.iter().map(|(k, s)| (k.clone(), s.clone())));
    out
}

fn leaves_invariant(s: &MorphismSheaf, g: &SubmoduleSheaf) -> bool {
    g.stalks()
        .iter()
        .enumerate()
        .all(|(x, stalk)| stalk.image_under(s.mat(x)).is_subspace_of(stalk))
}

fn check_cmd(m: &Manifest, suite: Suite, seed: u64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally {
        manifest_checks: 0,
        random_instances: 0,
        failures: Vec::new(),
        notes: Vec::new(),
    };
    let subs = submodules(m);
    match suite {
        Suite::Completeness => {
            for (name, f) in &subs {
                t.record(
                    format!("sections of {name}"),
                    checks::check_sections_complete(f),
                );
            }
            for (pn, p) in nondegenerate_pairings(m) {
                for (name, f) in &m.submodules {
                    let r = annihilator(&p, f)
                        .map_err(|e| e.to_string())
                        .and_then(|a| checks::check_sections_complete(&a));
                    t.record(format!("sections of {name}^⊥ under {pn}"), r);
                }
            }
            let all: Vec<SubmoduleSheaf> = m.submodules.values().cloned().collect();
            if !all.is_empty() {
                let r = sum_submodules(&all)
                    .map_err(|e| e.to_string())
                    .and_then(|s| checks::check_sections_complete(&s));
                t.record("sections of the sum".into(), r);
                let r = intersect_submodules(&all)
                    .map_err(|e| e.to_string())
                    .and_then(|s| checks::check_sections_complete(&s));
                t.record("sections of the intersection".into(), r);
            }
            t.record(
                "constant presheaf is not complete".into(),
                checks::check_constant_counterexample(m.field()),
            );
            t.random("random completeness", &mut rng, checks::random_completeness);
        }
        Suite::AnnihilatorTheorem => {
            for (pn, p) in nondegenerate_pairings(m) {
                for (gn, g) in &subs {
                    for (hn, h) in &subs {
                        t.record(
                            format!("{pn}: laws for {gn}, {hn}"),
                            checks::check_annihilator_laws(&p, g, h),
                        );
                        t.record(
                            format!("{pn}: split for {gn}, {hn}"),
                            checks::check_direct_sum_split(&p, g, h),
                        );
                    }
                    for (sn, s) in endomorphisms(m) {
                        if leaves_invariant(&s, g) {
                            t.record(
                                format!("{pn}: induced structures for {sn} on {gn}"),
                                checks::check_induced_structures(&p, &s, g),
                            );
                        }
                    }
                }
            }
            t.random(
                "random annihilator laws",
                &mut rng,
                checks::random_annihilator_theorem,
            );
            t.random(
                "random induced structures",
                &mut rng,
                checks::random_induced_structures,
            );
        }
        Suite::Transpose => {
            let endos = endomorphisms(m);
            for (pn, p) in nondegenerate_pairings(m) {
                for (an, a) in &endos {
                    for (bn, b) in &endos {
                        t.record(
                            format!("{pn}: {an}, {bn}"),
                            checks::check_transpose_laws(&p, a, b),
                        );
                    }
                }
            }
            t.random(
                "random transpose laws",
                &mut rng,
                checks::random_transpose_laws,
            );
        }
        Suite::HomExactness => {
            for (name, f) in &subs {
                for k in 0..=2 {
                    t.record(
                        format!("{name} against rank {k}"),
                        checks::check_hom_sequences(f, &m.module.with_rank(k)),
                    );
                }
            }
            t.random(
                "random hom exactness",
                &mut rng,
                checks::random_hom_exactness,
            );
        }
        Suite::Darboux => {
            if let Some(w) = &m.form {
                for x in 0..m.space().n_points() {
                    let mut seeds: Vec<(String, Option<Section>)> = vec![("unseeded".into(), None)];
                    for (sn, s) in &m.sections {
                        if m.space().open(s.over()).contains(x) {
                            seeds.push((format!("seed {sn}"), Some(s.clone())));
                        }
                    }
                    for (label, seed) in seeds {
                        let label = format!("{label} at {}", m.point_name(x));
                        let options = DarbouxOptions {
                            seed: seed.clone(),
                            abs_normalize: false,
                        };
                        match darboux(w, x, &options) {
                            Ok(r) => {
                                t.record(label, checks::check_darboux_result(w, &r, seed.as_ref()))
                            }
                            Err(e)
                                if checks::is_expected_darboux_failure(&e)
                                    || matches!(e, SymplecticError::BadSeed { .. }) =>
                            {
                                let mut note = symplectic_witness(m, &e);
                                note["check"] = label.into();
                                t.notes.push(note);
                            }
                            Err(e) => t.record(label, Err(e.to_string())),
                        }
                    }
                }
            }
            t.random("random darboux", &mut rng, |r| {
                checks::random_darboux(r, false)
            });
            t.random("random seeded darboux", &mut rng, |r| {
                checks::random_darboux(r, true)
            });
        }
        Suite::Reduction => {
            if let Some(Ok(sm)) = m.form.as_ref().map(|w| SymplecticModule::new(w.clone())) {
                let lagrangians: Vec<(&String, &SubmoduleSheaf)> = m
                    .submodules
                    .iter()
                    .filter(|(_, g)| classify(&sm, g).is_ok_and(|c| c.lagrangian))
                    .collect();
                for (name, f) in &subs {
                    t.record(
                        format!("reduce {name}"),
                        checks::check_reduction(&sm, f, None),
                    );
                    let coisotropic = classify(&sm, f).is_ok_and(|c| c.coisotropic);
                    if coisotropic {
                        for (gn, g) in &lagrangians {
                            t.record(
                                format!("reduce {name} with {gn}"),
                                checks::check_reduction(&sm, f, Some(g)),
                            );
                        }
                    }
                }
            }
            t.random("random reduction", &mut rng, checks::random_reduction);
        }
    }
    let verdict = if t.failures.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut report = Report::new("check", verdict)
        .with("suite", suite.name())
        .with("seed_rng", seed)
        .with("manifest_checks", t.manifest_checks)
        .with("random_instances", t.random_instances);
    if !t.notes.is_empty() {
        report = report.with("expected_failures", t.notes);
    }
    report.witnesses = t.failures;
    report
}
