//! Scenario files: the group, named elements, K-theory data and the
//! computations to run on them.
//!
//! A scenario is TOML (or JSON when the file ends in `.json`). Complex
//! numbers are `[re, im]` pairs; scalar fields use the prefix grammar of
//! [`ScalarField::parse`]. The full grammar is documented in the README.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{CrossedForm, FormKey};
use crate::expr::{FieldSpec, ParseError, Region, ScalarField};
use crate::groupoid::{ConformalMap, Generator, GroupAction, GroupError, Label, MapSpec, OrderOpts, DEFAULT_WORK_RADIUS};
use crate::quadrature::QuadratureSpec;
use crate::tensoralg::{certify_idempotent, certify_inverse, Collapse, TKey, Trunc};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{at}: {msg}")]
    Invalid { at: String, msg: String },
}

fn invalid(at: impl Into<String>, msg: impl ToString) -> ScenarioError {
    ScenarioError::Invalid { at: at.into(), msg: msg.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupKindSpec {
    #[default]
    Trivial,
    Free,
    Cyclic,
    Mobius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub map: MapSpec,
    #[serde(default = "full_plane")]
    pub domain: Region,
}

fn full_plane() -> Region {
    Region::FullPlane
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default)]
    pub kind: GroupKindSpec,
    /// Order of a cyclic group.
    #[serde(default)]
    pub order: Option<u32>,
    #[serde(default)]
    pub work_radius: Option<f64>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
}

/// A field as a bare prefix expression or with an explicit cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldInput {
    Expr(String),
    Spec(FieldSpec),
}

impl FieldInput {
    pub fn build(&self) -> Result<ScalarField, ParseError> {
        match self {
            FieldInput::Expr(e) => ScalarField::parse(e),
            FieldInput::Spec(s) => s.build(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Generator names multiplied left to right; empty for the unit.
    #[serde(default)]
    pub label: Vec<String>,
    /// Form bidegree `[p, q]`.
    #[serde(default)]
    pub form: [u8; 2],
    /// Row-major square matrix of fields.
    pub matrix: Vec<FieldInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KSpec {
    /// `e = p + k` with `p` a constant idempotent matrix and `k` an element.
    Idempotent { p: Vec<C64>, k: String },
    /// `u = 1 + a` with inverse `1 + b`.
    Invertible { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalySpec {
    pub a: String,
    pub omega: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// `⟨K, φ⟩`, compared with `expect` when given.
    Pair {
        n: usize,
        z0: C64,
        phi: FieldInput,
        #[serde(default)]
        delta: Option<C64>,
        #[serde(default)]
        expect: Option<C64>,
        #[serde(default)]
        bound: Option<f64>,
    },
    Dolbeault {
        z0: C64,
        phi: FieldInput,
        #[serde(default)]
        bound: Option<f64>,
    },
    Covariance {
        n: usize,
        z0: C64,
        phi: FieldInput,
        h: MapSpec,
        #[serde(default)]
        bound: Option<f64>,
    },
}

/// Sample counts and bounds of the seeded suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub trace: usize,
    pub transport: usize,
    pub padding: usize,
    pub cocycle: usize,
    pub anomaly: usize,
    pub differential: usize,
    pub lifting: usize,
    pub lifting_lengths: Vec<usize>,
    pub trace_bound: f64,
    pub padding_bound: f64,
    pub differential_bound: f64,
    /// Matrix size of random elements.
    pub size: usize,
    /// Radius of the disk holding random bump centers.
    pub center_radius: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            trace: 20,
            transport: 10,
            padding: 10,
            cocycle: 2,
            anomaly: 3,
            differential: 10,
            lifting: 5,
            lifting_lengths: vec![2, 3, 4],
            trace_bound: 1e-9,
            padding_bound: 1e-10,
            differential_bound: 1e-9,
            size: 1,
            center_radius: 0.6,
        }
    }
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub group: GroupSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_trunc")]
    pub truncation: Trunc,
    /// Series length for liftings when the truncation does not fix it.
    #[serde(default = "default_terms")]
    pub terms: usize,
    #[serde(default)]
    pub jet_order: Option<usize>,
    #[serde(default)]
    pub collapse: Option<Collapse>,
    #[serde(default)]
    pub elements: BTreeMap<String, ElementSpec>,
    #[serde(default)]
    pub ktheory: BTreeMap<String, KSpec>,
    #[serde(default)]
    pub todd: Vec<[String; 3]>,
    #[serde(default)]
    pub anomaly: Vec<AnomalySpec>,
    #[serde(default)]
    pub dist: Vec<DistSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Expected values keyed `<command>.<item>`, checked by the command
    /// that produces them.
    #[serde(default)]
    pub expect: BTreeMap<String, Expectation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: C64,
    pub tol: f64,
}

fn default_trunc() -> Trunc {
    Trunc::Words(3)
}

fn default_terms() -> usize {
    3
}

impl ScenarioSpec {
    pub fn from_toml(src: &str, path: &str) -> Result<Self, ScenarioError> {
        toml::from_str(src).map_err(|source| ScenarioError::Toml { path: path.into(), source })
    }

    pub fn from_json(src: &str, path: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(src).map_err(|source| ScenarioError::Json { path: path.into(), source })
    }

    /// Reads a scenario and returns it with the raw bytes for digesting.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ScenarioError> {
        let shown = path.display().to_string();
        let raw = std::fs::read(path).map_err(|source| ScenarioError::Io { path: shown.clone(), source })?;
        let src = String::from_utf8_lossy(&raw);
        let spec = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&src, &shown)?
        } else {
            Self::from_toml(&src, &shown)?
        };
        Ok((spec, raw))
    }
}

/// K-theory data with certificates checked.
#[derive(Debug, Clone)]
pub enum KClass {
    Idempotent { p: Vec<C64>, k: CrossedForm },
    Invertible { a: CrossedForm, b: CrossedForm },
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub action: GroupAction,
    pub elements: BTreeMap<String, CrossedForm>,
    pub ktheory: BTreeMap<String, KClass>,
}

fn build_group(g: &GroupSpec, jet_order: Option<usize>) -> Result<GroupAction, ScenarioError> {
    let mut gens = Vec::with_capacity(g.generators.len());
    for (i, s) in g.generators.iter().enumerate() {
        let at = format!("group.generators[{i}]");
        s.domain.validate().map_err(|e| invalid(format!("{at}.domain"), e))?;
        let map = s.map.build(s.domain).map_err(|e| invalid(format!("{at}.map"), e))?;
        if gens.iter().any(|x: &Generator| x.name == s.name) {
            return Err(invalid(at, format!("duplicate generator `{}`", s.name)));
        }
        gens.push(Generator { name: s.name.clone(), map });
    }
    let action = match g.kind {
        GroupKindSpec::Trivial => {
            if !gens.is_empty() {
                return Err(invalid("group", "trivial group takes no generators"));
            }
            GroupAction::trivial()
        }
        GroupKindSpec::Free => GroupAction::free(gens),
        GroupKindSpec::Mobius => GroupAction::mobius(gens).map_err(|e| invalid("group", e))?,
        GroupKindSpec::Cyclic => {
            let order = g.order.ok_or_else(|| invalid("group.order", "cyclic group needs an order"))?;
            let [gen]: [Generator; 1] =
                gens.try_into().map_err(|_| invalid("group.generators", "cyclic group needs exactly one generator"))?;
            GroupAction::cyclic(order, gen).map_err(|e| invalid("group", e))?
        }
    };
    let action = action.with_work_radius(g.work_radius.unwrap_or(DEFAULT_WORK_RADIUS));
    Ok(match jet_order {
        Some(k) => {
            let opts = OrderOpts { jet_order: k, ..*action.order_opts() };
            action.with_order_opts(opts)
        }
        None => action,
    })
}

fn build_label(action: &GroupAction, names: &[String], at: &str) -> Result<Label, ScenarioError> {
    action.word(names).map_err(|e: GroupError| invalid(at, e))
}

fn build_field(f: &FieldInput, at: &str) -> Result<ScalarField, ScenarioError> {
    f.build().map_err(|e| invalid(at, e))
}

fn build_element(action: &GroupAction, name: &str, e: &ElementSpec) -> Result<CrossedForm, ScenarioError> {
    let mut out: Option<CrossedForm> = None;
    for (i, t) in e.terms.iter().enumerate() {
        let at = format!("elements.{name}.terms[{i}]");
        let n = (t.matrix.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != t.matrix.len() {
            return Err(invalid(format!("{at}.matrix"), format!("{} entries is not a square matrix", t.matrix.len())));
        }
        if let Some(prev) = &out {
            if prev.n() != n {
                return Err(invalid(format!("{at}.matrix"), format!("size {n} differs from earlier terms ({})", prev.n())));
            }
        }
        let [p, q] = t.form;
        if p > 1 || q > 1 {
            return Err(invalid(format!("{at}.form"), "bidegrees are 0 or 1"));
        }
        let label = build_label(action, &t.label, &format!("{at}.label"))?;
        let fields = t
            .matrix
            .iter()
            .enumerate()
            .map(|(j, f)| build_field(f, &format!("{at}.matrix[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let term = CrossedForm::term(n, FormKey::new(label, TKey::empty(), p, q), fields);
        out = Some(match out {
            Some(x) => x.add(&term),
            None => term,
        });
    }
    out.ok_or_else(|| invalid(format!("elements.{name}"), "element has no terms"))
}

impl Scenario {
    pub fn build(spec: ScenarioSpec) -> Result<Scenario, ScenarioError> {
        if let Some(Collapse::GroupCocycle1 { weights }) = &spec.collapse {
            if weights.len() != spec.group.generators.len() {
                return Err(invalid("collapse.weights", "one weight per generator"));
            }
        }
        if spec.quadrature.tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(invalid("quadrature.tol", "must be positive"));
        }
        let action = build_group(&spec.group, spec.jet_order)?;
        let mut elements = BTreeMap::new();
        for (name, e) in &spec.elements {
            elements.insert(name.clone(), build_element(&action, name, e)?);
        }
        let lookup = |name: &str, at: String| -> Result<CrossedForm, ScenarioError> {
            elements.get(name).cloned().ok_or_else(|| invalid(at, format!("undeclared element `{name}`")))
        };
        let mut ktheory = BTreeMap::new();
        for (name, k) in &spec.ktheory {
            let at = format!("ktheory.{name}");
            let class = match k {
                KSpec::Idempotent { p, k } => {
                    let k = lookup(k, format!("{at}.k"))?;
                    if p.len() != k.n() * k.n() {
                        return Err(invalid(format!("{at}.p"), format!("expected {} entries", k.n() * k.n())));
                    }
                    certify_idempotent(p, &k, &action).map_err(|e| invalid(&at, e))?;
                    KClass::Idempotent { p: p.clone(), k }
                }
                KSpec::Invertible { a, b } => {
                    let a = lookup(a, format!("{at}.a"))?;
                    let b = lookup(b, format!("{at}.b"))?;
                    certify_inverse(&a, &b, &action).map_err(|e| invalid(&at, e))?;
                    KClass::Invertible { a, b }
                }
            };
            ktheory.insert(name.clone(), class);
        }
        for (i, t) in spec.todd.iter().enumerate() {
            for n in t {
                lookup(n, format!("todd[{i}]"))?;
            }
        }
        for (i, a) in spec.anomaly.iter().enumerate() {
            lookup(&a.a, format!("anomaly[{i}].a"))?;
            lookup(&a.omega, format!("anomaly[{i}].omega"))?;
        }
        for (i, d) in spec.dist.iter().enumerate() {
            let (phi, h) = match d {
                DistSpec::Pair { phi, .. } | DistSpec::Dolbeault { phi, .. } => (phi, None),
                DistSpec::Covariance { phi, h, .. } => (phi, Some(h)),
            };
            build_field(phi, &format!("dist[{i}].phi"))?;
            if let Some(h) = h {
                h.build(Region::FullPlane).map_err(|e| invalid(format!("dist[{i}].h"), e))?;
            }
        }
        Ok(Scenario { spec, action, elements, ktheory })
    }

    pub fn element(&self, name: &str) -> &CrossedForm {
        &self.elements[name]
    }
}

/// A map given by a [`MapSpec`] on the full plane.
pub fn full_plane_map(spec: &MapSpec) -> Result<ConformalMap, GroupError> {
    spec.build(Region::FullPlane)
}
