//! Command execution and versioned JSON reports.
//!
//! Reports are deterministic given the scenario bytes, the overriding flags
//! and the seed; wall-clock timings are only included on request.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::algebra::Ctx;
use crate::cocycles::{phi_trace, todd_paths, Contribution};
use crate::dist::{check_covariance, check_dolbeault, pair_kernel, RenormKernel};
use crate::groupoid::{GroupAction, Label, Order};
use crate::index::{anomaly_delta0, anomaly_delta1_paths, pair_even, pair_odd, PairingOpts, PairingResult};
use crate::scenario::{full_plane_map, DistSpec, KClass, Scenario, ScenarioError, ScenarioSpec};
use crate::suite::{self, Check, Sampler, SamplerOpts};
use crate::tensoralg::{TKey, Trunc};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Automorphisms,
    Trace,
    Todd,
    PairEven,
    PairOdd,
    Anomaly,
    DistCheck,
    Verify,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Automorphisms,
        Command::Trace,
        Command::Todd,
        Command::PairEven,
        Command::PairOdd,
        Command::Anomaly,
        Command::DistCheck,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Automorphisms => "automorphisms",
            Command::Trace => "trace",
            Command::Todd => "todd",
            Command::PairEven => "pair-even",
            Command::PairOdd => "pair-odd",
            Command::Anomaly => "anomaly",
            Command::DistCheck => "dist-check",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Flags {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    /// Word-length truncation `L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trunc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jet_order: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub timings: bool,
}

impl Flags {
    pub fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(t) = self.tol {
            spec.quadrature.tol = t;
        }
        if let Some(d) = self.depth {
            spec.quadrature.max_depth = d;
        }
        if let Some(l) = self.trunc {
            spec.truncation = Trunc::Words(l);
        }
        if let Some(k) = self.jet_order {
            spec.jet_order = Some(k);
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{op}: {msg}")]
    Op { op: String, msg: String },
}

fn op_err(op: impl Into<String>) -> impl FnOnce(&dyn fmt::Display) -> RunError {
    let op = op.into();
    move |e| RunError::Op { op, msg: e.to_string() }
}

macro_rules! ctx {
    ($op:expr, $res:expr) => {
        $res.map_err(|e| op_err($op)(&e))
    };
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub tol: f64,
    pub max_depth: u32,
    pub truncation: Trunc,
    pub terms: usize,
    pub jet_order: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: Command,
    pub scenario: String,
    /// SHA-256 of the scenario bytes and the overriding flags.
    pub inputs_digest: String,
    pub seed: u64,
    pub settings: Settings,
    pub values: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are serializable") + "\n"
    }
}

/// `{re, im}`, with negative zeros cleared.
pub fn cx(c: C64) -> Value {
    json!({ "re": c.re + 0.0, "im": c.im + 0.0 })
}

/// Coefficients up to the last nonzero one.
fn trimmed(cs: &[C64]) -> Vec<Value> {
    let len = cs.iter().rposition(|c| *c != C64::new(0.0, 0.0)).map_or(0, |i| i + 1);
    cs[..len].iter().map(|c| cx(*c)).collect()
}

fn label_name(action: &GroupAction, l: &Label) -> String {
    action.label_name(l)
}

pub fn key_name(action: &GroupAction, key: &TKey) -> String {
    let word = |w: &[Label]| w.iter().map(|l| label_name(action, l)).collect::<Vec<_>>().join(" ⊗ ");
    match key {
        TKey::Word(w) if w.is_empty() => "1".into(),
        TKey::Word(w) => word(w),
        TKey::Form { x, b, y } => {
            let mut parts = Vec::new();
            if !x.is_empty() {
                parts.push(word(x));
            }
            parts.push(format!("d({})", label_name(action, b)));
            if !y.is_empty() {
                parts.push(word(y));
            }
            parts.join(" ⊗ ")
        }
    }
}

fn contributions_json(action: &GroupAction, cs: &[Contribution]) -> Value {
    Value::Array(
        cs.iter()
            .map(|c| {
                json!({
                    "label": label_name(action, &c.label),
                    "tensor": key_name(action, &c.tensor),
                    "z0": cx(c.z0),
                    "order": c.order,
                    "value": cx(c.value),
                })
            })
            .collect(),
    )
}

fn keyed_json(action: &GroupAction, m: &BTreeMap<TKey, C64>) -> Value {
    Value::Array(m.iter().map(|(k, v)| json!({ "key": key_name(action, k), "value": cx(*v) })).collect())
}

fn pairing_json(action: &GroupAction, r: &PairingResult) -> Value {
    let mut v = serde_json::to_value(r).expect("serializable");
    let obj = v.as_object_mut().expect("struct");
    obj.insert("collapsed".into(), r.collapsed.map_or(Value::Null, cx));
    obj.insert("words".into(), keyed_json(action, &r.words));
    obj.insert("phi_part".into(), keyed_json(action, &r.phi_part));
    obj.insert("integral_part".into(), keyed_json(action, &r.integral_part));
    obj.insert("contributions".into(), contributions_json(action, &r.contributions));
    v
}

/// Single-sample check `|got − want| < bound`.
fn point_check(name: String, defect: f64, bound: f64) -> Check {
    Check {
        name,
        samples: 1,
        rejected: 0,
        max_defect: if defect.is_nan() { f64::INFINITY } else { defect },
        bound,
        pass: defect < bound,
        detail: BTreeMap::new(),
    }
}

struct Runner<'a> {
    sc: &'a Scenario,
    flags: &'a Flags,
    checks: Vec<Check>,
    timings: BTreeMap<String, f64>,
}

impl Runner<'_> {
    fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(name.into(), t.elapsed().as_secs_f64());
        out
    }

    fn expect(&mut self, key: String, got: Option<C64>) {
        if let Some(e) = self.sc.spec.expect.get(&key) {
            let defect = got.map_or(f64::INFINITY, |g| (g - e.value).norm());
            self.checks.push(point_check(format!("expect.{key}"), defect, e.tol));
        }
    }

    fn pairing_opts(&self) -> PairingOpts {
        PairingOpts {
            trunc: self.sc.spec.truncation,
            terms: self.sc.spec.terms,
            quadrature: self.sc.spec.quadrature,
            collapse: self.sc.spec.collapse.clone(),
        }
    }

    fn automorphisms(&mut self) -> Result<Value, RunError> {
        let action = &self.sc.action;
        let mut labels: Vec<&Label> = Vec::new();
        for x in self.sc.elements.values() {
            for k in x.terms().keys() {
                if !labels.contains(&&k.label) {
                    labels.push(&k.label);
                }
            }
        }
        labels.sort();
        let (auts, germs) = ctx!("automorphisms", action.enumerate_automorphisms(labels.into_iter()))?;
        let points: Vec<Value> = auts
            .iter()
            .map(|a| {
                json!({
                    "label": label_name(action, &a.label),
                    "z0": cx(a.z0),
                    "order": match a.order { Order::Finite(n) => json!(n), Order::Infinite => json!("infinite") },
                    "h_jet": a.h_jet.as_ref().map(|j| trimmed(j.coeffs())),
                })
            })
            .collect();
        let germs: Vec<String> = germs.iter().map(|l| label_name(action, l)).collect();
        Ok(json!({ "isolated": points, "identity_germs": germs }))
    }

    fn trace(&mut self) -> Result<Value, RunError> {
        let ctx = Ctx::new(&self.sc.action, Trunc::Full);
        let mut out = serde_json::Map::new();
        for (name, x) in &self.sc.elements {
            let v = self.timed(&format!("trace.{name}"), || phi_trace(x, &ctx));
            let v = ctx!(format!("trace({name})"), v)?;
            self.expect(format!("trace.{name}"), Some(v.value));
            out.insert(
                name.clone(),
                json!({
                    "value": cx(v.value),
                    "est_error": v.est_error,
                    "contributions": contributions_json(&self.sc.action, &v.contributions),
                }),
            );
        }
        Ok(Value::Object(out))
    }

    fn todd(&mut self) -> Result<Value, RunError> {
        let ctx = Ctx::new(&self.sc.action, Trunc::Full);
        let spec = self.sc.spec.quadrature;
        let mut out = Vec::new();
        for (i, names) in self.sc.spec.todd.iter().enumerate() {
            let args: Vec<_> = names.iter().map(|n| self.sc.element(n).clone()).collect();
            let t = self.timed(&format!("todd[{i}]"), || todd_paths(&args, &ctx, &spec));
            let t = ctx!(format!("todd[{i}]"), t)?;
            self.checks.push(point_check(format!("todd_dual_path[{i}]"), t.defect, 2.0 * spec.tol));
            self.expect(format!("todd.{i}"), Some(t.value.value));
            out.push(json!({
                "args": names,
                "value": cx(t.value.value),
                "fundamental": cx(t.fundamental.value),
                "chern1": cx(t.chern1.value),
                "direct": cx(t.direct.value),
                "defect": t.defect,
                "est_error": t.value.est_error + t.direct.est_error,
                "converged": t.value.converged && t.direct.converged,
            }));
        }
        Ok(Value::Array(out))
    }

    fn pairings(&mut self, even: bool) -> Result<Value, RunError> {
        let opts = self.pairing_opts();
        let cmd = if even { "pair-even" } else { "pair-odd" };
        let mut out = serde_json::Map::new();
        for (name, k) in &self.sc.ktheory {
            let r = match (k, even) {
                (KClass::Idempotent { p, k }, true) => self.timed(&format!("{cmd}.{name}"), || pair_even(p, k, &self.sc.action, &opts)),
                (KClass::Invertible { a, b }, false) => self.timed(&format!("{cmd}.{name}"), || pair_odd(a, b, &self.sc.action, &opts)),
                _ => continue,
            };
            let r = ctx!(format!("{cmd}({name})"), r)?;
            self.expect(format!("{cmd}.{name}"), r.collapsed);
            out.insert(name.clone(), pairing_json(&self.sc.action, &r));
        }
        Ok(Value::Object(out))
    }

    fn anomaly(&mut self) -> Result<Value, RunError> {
        let ctx = Ctx::new(&self.sc.action, Trunc::Full);
        let spec = self.sc.spec.quadrature;
        let mut out = Vec::new();
        for (i, a) in self.sc.spec.anomaly.iter().enumerate() {
            let (x, w) = (self.sc.element(&a.a), self.sc.element(&a.omega));
            let d0 = ctx!(format!("anomaly[{i}].delta0"), anomaly_delta0(w, &ctx))?;
            let d1 = self.timed(&format!("anomaly[{i}]"), || anomaly_delta1_paths(x, w, &ctx, &spec));
            let d1 = ctx!(format!("anomaly[{i}].delta1"), d1)?;
            self.checks.push(point_check(format!("anomaly_delta1[{i}]"), d1.defect, 2.0 * spec.tol));
            out.push(json!({
                "a": a.a,
                "omega": a.omega,
                "delta0": keyed_json(&self.sc.action, &d0),
                "delta1_explicit": keyed_json(&self.sc.action, &d1.explicit),
                "delta1_intrinsic": keyed_json(&self.sc.action, &d1.intrinsic),
                "defect": d1.defect,
                "est_error": d1.est_error,
            }));
        }
        Ok(Value::Array(out))
    }

    fn dist(&mut self) -> Result<Value, RunError> {
        let spec = self.sc.spec.quadrature;
        let mut out = Vec::new();
        for (i, d) in self.sc.spec.dist.iter().enumerate() {
            let op = format!("dist[{i}]");
            let row = match d {
                DistSpec::Pair { n, z0, phi, delta, expect, bound } => {
                    let phi = ctx!(op.clone(), phi.build())?;
                    let k = RenormKernel::new(*n, *z0).with_delta(delta.unwrap_or_default());
                    let q = ctx!(op.clone(), pair_kernel(&k, &phi, &spec))?;
                    if let Some(e) = expect {
                        self.checks.push(point_check(format!("{op}.pair"), (q.value - e).norm(), bound.unwrap_or(1e-6)));
                    }
                    json!({ "kind": "pair", "n": n, "z0": cx(*z0), "value": cx(q.value), "est_error": q.est_error, "converged": q.converged })
                }
                DistSpec::Dolbeault { z0, phi, bound } => {
                    let phi = ctx!(op.clone(), phi.build())?;
                    let r = ctx!(op.clone(), check_dolbeault(*z0, &phi, &spec))?;
                    self.checks.push(point_check(format!("{op}.dolbeault"), r.defect, bound.unwrap_or(1e-5)));
                    json!({ "kind": "dolbeault", "z0": cx(*z0), "lhs": cx(r.lhs), "rhs": cx(r.rhs), "defect": r.defect, "est_error": r.est_error })
                }
                DistSpec::Covariance { n, z0, phi, h, bound } => {
                    let phi = ctx!(op.clone(), phi.build())?;
                    let h = ctx!(op.clone(), full_plane_map(h))?;
                    let r = ctx!(op.clone(), check_covariance(*n, &h, *z0, &phi, &spec))?;
                    let default = if *n >= 3 { 1e-4 } else { 1e-5 };
                    self.checks.push(point_check(format!("{op}.covariance"), r.defect, bound.unwrap_or(default)));
                    json!({ "kind": "covariance", "n": n, "z0": cx(*z0), "lhs": cx(r.lhs), "rhs": cx(r.rhs), "defect": r.defect, "est_error": r.est_error })
                }
            };
            out.push(row);
        }
        Ok(Value::Array(out))
    }

    fn verify(&mut self) -> Result<Value, RunError> {
        let v = &self.sc.spec.verify;
        let action = &self.sc.action;
        let spec = self.sc.spec.quadrature;
        let opts = SamplerOpts { size: v.size, center_radius: v.center_radius, ..SamplerOpts::default() };
        let mut s = Sampler::with_opts(self.flags.seed, opts);
        let wrap = |e: suite::SuiteError| RunError::Op { op: "verify".into(), msg: e.to_string() };
        let mut checks = Vec::new();
        let t = Instant::now();
        checks.push(suite::trace_property(action, &mut s, v.trace, v.trace_bound).map_err(wrap)?);
        checks.push(suite::coordinate_invariance(action, &mut s, v.transport, v.trace_bound).map_err(wrap)?);
        checks.push(suite::order_padding(action, &mut s, v.padding, v.padding_bound).map_err(wrap)?);
        self.timings.insert("verify.trace".into(), t.elapsed().as_secs_f64());
        let t = Instant::now();
        checks.extend(suite::cocycle_laws(action, &mut s, v.cocycle, &spec).map_err(wrap)?);
        self.timings.insert("verify.cocycles".into(), t.elapsed().as_secs_f64());
        let t = Instant::now();
        checks.push(suite::anomaly_delta0_equality(action, &mut s, v.anomaly).map_err(wrap)?);
        let actions = vec![action.clone(); v.anomaly];
        checks.push(suite::anomaly_delta1_agreement(&actions, &mut s, &spec).map_err(wrap)?);
        self.timings.insert("verify.anomaly".into(), t.elapsed().as_secs_f64());
        let t = Instant::now();
        checks.extend(suite::differential_suite(action, &mut s, v.differential, v.differential_bound).map_err(wrap)?);
        checks.push(suite::lifting_exactness(action, &mut s, v.lifting, &v.lifting_lengths).map_err(wrap)?);
        self.timings.insert("verify.algebra".into(), t.elapsed().as_secs_f64());
        let summary: Vec<Value> = checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass })).collect();
        self.checks.extend(checks);
        Ok(Value::Array(summary))
    }
}

fn digest(raw: &[u8], command: Command, flags: &Flags) -> String {
    let mut h = Sha256::new();
    h.update(raw);
    h.update([0u8]);
    h.update(command.name().as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(flags).expect("flags serialize"));
    hex::encode(h.finalize())
}

/// Builds the scenario with `flags` applied and runs `command` on it.
pub fn run(command: Command, spec: ScenarioSpec, raw: &[u8], flags: &Flags) -> Result<Report, RunError> {
    let mut spec = spec;
    flags.apply(&mut spec);
    let sc = Scenario::build(spec)?;
    let mut r = Runner { sc: &sc, flags, checks: Vec::new(), timings: BTreeMap::new() };
    let t = Instant::now();
    let values = match command {
        Command::Automorphisms => r.automorphisms()?,
        Command::Trace => r.trace()?,
        Command::Todd => r.todd()?,
        Command::PairEven => r.pairings(true)?,
        Command::PairOdd => r.pairings(false)?,
        Command::Anomaly => r.anomaly()?,
        Command::DistCheck => r.dist()?,
        Command::Verify => r.verify()?,
    };
    r.timings.insert("total".into(), t.elapsed().as_secs_f64());
    let pass = r.checks.iter().all(|c| c.pass);
    Ok(Report {
        schema: SCHEMA,
        command,
        scenario: sc.spec.name.clone(),
        inputs_digest: digest(raw, command, flags),
        seed: flags.seed,
        settings: Settings {
            tol: sc.spec.quadrature.tol,
            max_depth: sc.spec.quadrature.max_depth,
            truncation: sc.spec.truncation,
            terms: sc.spec.terms,
            jet_order: sc.action.order_opts().jet_order,
        },
        values,
        checks: r.checks,
        pass,
        timings: flags.timings.then_some(r.timings),
    })
}
