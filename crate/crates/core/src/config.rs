//! Experiment configuration files.
//!
//! A configuration is a JSON object:
//!
//! ```text
//! {
//!   "version": 1,
//!   "potential": {"kind": "lennard_jones", "c1": 1, "c2": 2},
//!   "load": {"kind": "dead_load", "f": "x - 0.5"},
//!   "ell": {"gamma_multiple": 2},
//!   "n_list": [64, 128, 256],
//!   "solver": {"restarts": 8, "seed": 1}
//! }
//! ```
//!
//! Expressions may use `gamma` and `ell`, which are bound once the effective
//! profile is known. Parsing checks everything that can be checked without
//! building that profile and reports every problem at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::continuum::InfOpts;
use crate::discrete::MinimizeOpts;
use crate::effective::{EffectiveProfile, SearchParams};
use crate::error::{Error, FieldError, Result};
use crate::gamma_dev::{DegenerateCriterion, SweepConfig};
use crate::potentials::{Constants, Expr, ExternalLoad, InteractionModel, PairPotential, DEFAULT_BARRIER_GUARD};

pub const CONFIG_VERSION: u64 = 1;

pub const LOAD_KINDS: [&str; 5] = ["zero", "dead_load", "live_load", "quadratic_well", "one_sided_quartic"];

const TOP_LEVEL_KEYS: [&str; 12] = [
    "version",
    "potential",
    "load",
    "ell",
    "theta0",
    "theta1",
    "n_list",
    "solver",
    "effective",
    "continuum",
    "sweep",
    "output_dir",
];

/// Load as written in the file; expressions are compiled by
/// [`ExperimentConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSpec {
    Zero,
    DeadLoad { f: String },
    LiveLoad { f: String },
    QuadraticWell { w_tilde: String },
    OneSidedQuartic { w_tilde: String, sign: i8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EllSpec {
    Absolute(f64),
    GammaMultiple(f64),
}

impl EllSpec {
    pub fn value(&self, gamma: f64) -> f64 {
        match *self {
            EllSpec::Absolute(v) => v,
            EllSpec::GammaMultiple(k) => k * gamma,
        }
    }
}

/// Solver options that can be set from a file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub gradient_steps: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = MinimizeOpts::default();
        Self { tol: d.tol, max_iter: d.max_iter, restarts: d.restarts, seed: d.seed, gradient_steps: d.gradient_steps }
    }
}

/// Sweep-only settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub eps: Vec<f64>,
    pub degenerate: DegenerateCriterion,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { eps: vec![0.02, 0.05], degenerate: DegenerateCriterion::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub version: u64,
    pub potential: InteractionModel,
    pub load: LoadSpec,
    pub ell: EllSpec,
    /// Boundary slopes; min(ℓ, γ), the slope of the unloaded limit, when
    /// absent.
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
    pub n_list: Vec<usize>,
    pub solver: SolverSpec,
    pub effective: SearchParams,
    pub continuum: InfOpts,
    pub sweep: SweepSpec,
    pub output_dir: Option<PathBuf>,
}

/// The parts of a configuration that depend on γ.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub load: ExternalLoad,
    pub ell: f64,
    pub theta0: f64,
    pub theta1: f64,
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(obj) = root else {
        return Err(Error::Validation(vec![FieldError::new("$", "the configuration must be a JSON object")]));
    };
    let mut errs = Vec::new();
    for key in obj.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            errs.push(FieldError::new(
                key.clone(),
                format!("unknown field; expected one of {}", TOP_LEVEL_KEYS.join(", ")),
            ));
        }
    }

    let version = match obj.get("version") {
        None => {
            errs.push(FieldError::new("version", "missing"));
            CONFIG_VERSION
        }
        Some(v) => match v.as_u64() {
            Some(CONFIG_VERSION) => CONFIG_VERSION,
            _ => {
                errs.push(FieldError::new("version", format!("unsupported version {v}; expected {CONFIG_VERSION}")));
                CONFIG_VERSION
            }
        },
    };
    let potential = parse_potential(obj.get("potential"), &mut errs);
    let load = parse_load(obj.get("load"), &mut errs);
    let ell = parse_ell(obj.get("ell"), &mut errs);
    let theta0 = parse_positive(obj.get("theta0"), "theta0", &mut errs);
    let theta1 = parse_positive(obj.get("theta1"), "theta1", &mut errs);
    let n_list = parse_n_list(obj.get("n_list"), &mut errs);
    let solver: SolverSpec = parse_section(&obj, "solver", &mut errs);
    if !(solver.tol > 0.0) {
        errs.push(FieldError::new("solver.tol", "must be positive"));
    }
    let effective: SearchParams = parse_section(&obj, "effective", &mut errs);
    if let Err(e) = effective.validate() {
        errs.push(FieldError::new("effective", e.to_string()));
    }
    let continuum: InfOpts = parse_section(&obj, "continuum", &mut errs);
    if continuum.resolutions.is_empty() || continuum.resolutions.iter().any(|&r| r < 2) {
        errs.push(FieldError::new("continuum.resolutions", "needs at least one entry, each ≥ 2"));
    }
    let sweep: SweepSpec = parse_section(&obj, "sweep", &mut errs);
    for (i, e) in sweep.eps.iter().enumerate() {
        if !(*e > 0.0 && e.is_finite()) {
            errs.push(FieldError::new(format!("sweep.eps[{i}]"), "must be positive"));
        }
    }
    if sweep.degenerate.windows == 0 {
        errs.push(FieldError::new("sweep.degenerate.windows", "must be at least 1"));
    }
    let output_dir = match obj.get("output_dir") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            errs.push(FieldError::new("output_dir", "must be a string"));
            None
        }
    };

    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    Ok(ExperimentConfig {
        version,
        potential: potential.expect("reported above"),
        load: load.expect("reported above"),
        ell: ell.expect("reported above"),
        theta0,
        theta1,
        n_list,
        solver,
        effective,
        continuum,
        sweep,
        output_dir,
    })
}

fn parse_section<T: Default + for<'de> Deserialize<'de>>(
    obj: &Map<String, Value>,
    key: &str,
    errs: &mut Vec<FieldError>,
) -> T {
    match obj.get(key) {
        None => T::default(),
        Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
            errs.push(FieldError::new(key, e.to_string()));
            T::default()
        }),
    }
}

fn parse_potential(v: Option<&Value>, errs: &mut Vec<FieldError>) -> Option<InteractionModel> {
    let Some(v) = v else {
        return Some(InteractionModel::default());
    };
    let Value::Object(map) = v else {
        errs.push(FieldError::new("potential", "must be an object"));
        return None;
    };
    let mut map = map.clone();
    let guard = match map.remove("barrier_guard") {
        None => DEFAULT_BARRIER_GUARD,
        Some(g) => match g.as_f64() {
            Some(g) if g > 0.0 => g,
            _ => {
                errs.push(FieldError::new("potential.barrier_guard", "must be a positive number"));
                DEFAULT_BARRIER_GUARD
            }
        },
    };
    let next = map.remove("next");
    let kind = match serde_json::from_value::<PairPotential>(Value::Object(map)) {
        Ok(k) => k,
        Err(e) => {
            errs.push(FieldError::new("potential", e.to_string()));
            return None;
        }
    };
    let mut model = InteractionModel { kind, next: None, barrier_guard: guard };
    if let Some(next) = next {
        match serde_json::from_value::<PairPotential>(next) {
            Ok(p) => model.next = Some(p),
            Err(e) => {
                errs.push(FieldError::new("potential.next", e.to_string()));
                return None;
            }
        }
    }
    if let Err(e) = model.validate() {
        errs.push(FieldError::new("potential", e.to_string()));
        return None;
    }
    Some(model)
}

/// Binds the names an expression may use; the values only matter for
/// evaluation.
fn expression_constants(gamma: f64, ell: f64) -> Constants {
    Constants::new().with("gamma", gamma).with("ell", ell)
}

fn parse_load(v: Option<&Value>, errs: &mut Vec<FieldError>) -> Option<LoadSpec> {
    let Some(v) = v else {
        return Some(LoadSpec::Zero);
    };
    let kind = v.get("kind").and_then(Value::as_str);
    match kind {
        None => {
            errs.push(FieldError::new("load.kind", format!("missing; supported kinds: {}", LOAD_KINDS.join(", "))));
            return None;
        }
        Some(k) if !LOAD_KINDS.contains(&k) => {
            errs.push(FieldError::new(
                "load.kind",
                format!("unknown load kind {k:?}; supported kinds: {}", LOAD_KINDS.join(", ")),
            ));
            return None;
        }
        _ => {}
    }
    let spec: LoadSpec = match serde_json::from_value(v.clone()) {
        Ok(s) => s,
        Err(e) => {
            errs.push(FieldError::new("load", e.to_string()));
            return None;
        }
    };
    let constants = expression_constants(1.0, 1.0);
    let mut check = |field: &str, src: &str, allow_w: bool| match Expr::parse(src, &constants) {
        Ok(e) if !allow_w && e.uses_w() => {
            errs.push(FieldError::new(format!("load.{field}"), "may only depend on x"));
        }
        Ok(_) => {}
        Err(e) => errs.push(FieldError::new(format!("load.{field}"), e.to_string())),
    };
    match &spec {
        LoadSpec::Zero => {}
        LoadSpec::DeadLoad { f } => check("f", f, false),
        LoadSpec::LiveLoad { f } => check("f", f, true),
        LoadSpec::QuadraticWell { w_tilde } => check("w_tilde", w_tilde, false),
        LoadSpec::OneSidedQuartic { w_tilde, sign } => {
            check("w_tilde", w_tilde, false);
            if !matches!(sign, 1 | -1) {
                errs.push(FieldError::new("load.sign", "must be 1 or -1"));
            }
        }
    }
    Some(spec)
}

fn parse_ell(v: Option<&Value>, errs: &mut Vec<FieldError>) -> Option<EllSpec> {
    let spec = match v {
        None => {
            errs.push(FieldError::new("ell", "missing"));
            return None;
        }
        Some(Value::Number(n)) => EllSpec::Absolute(n.as_f64().unwrap_or(f64::NAN)),
        Some(Value::Object(m)) if m.len() == 1 && m.contains_key("gamma_multiple") => {
            match m["gamma_multiple"].as_f64() {
                Some(k) => EllSpec::GammaMultiple(k),
                None => {
                    errs.push(FieldError::new("ell.gamma_multiple", "must be a number"));
                    return None;
                }
            }
        }
        Some(_) => {
            errs.push(FieldError::new("ell", "must be a number or {\"gamma_multiple\": k}"));
            return None;
        }
    };
    let (EllSpec::Absolute(x) | EllSpec::GammaMultiple(x)) = spec;
    if !(x > 0.0 && x.is_finite()) {
        let path = if matches!(spec, EllSpec::Absolute(_)) { "ell" } else { "ell.gamma_multiple" };
        errs.push(FieldError::new(path, format!("must be positive, got {x}")));
        return None;
    }
    Some(spec)
}

fn parse_positive(v: Option<&Value>, path: &str, errs: &mut Vec<FieldError>) -> Option<f64> {
    match v {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Some(x),
            _ => {
                errs.push(FieldError::new(path, format!("must be a positive number, got {v}")));
                None
            }
        },
    }
}

fn parse_n_list(v: Option<&Value>, errs: &mut Vec<FieldError>) -> Vec<usize> {
    let Some(v) = v else {
        return Vec::new();
    };
    let Some(items) = v.as_array() else {
        errs.push(FieldError::new("n_list", "must be an array of integers"));
        return Vec::new();
    };
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        match item.as_u64() {
            Some(n) if n >= 4 => out.push(n as usize),
            _ => errs.push(FieldError::new(format!("n_list[{i}]"), format!("must be an integer ≥ 4, got {item}"))),
        }
    }
    out
}

impl ExperimentConfig {
    pub fn build_effective(&self) -> Result<EffectiveProfile> {
        EffectiveProfile::build(&self.potential, &self.effective)
    }

    /// Compiles the load with `gamma` and `ell` bound.
    pub fn load(&self, gamma: f64, ell: f64) -> Result<ExternalLoad> {
        let c = expression_constants(gamma, ell);
        Ok(match &self.load {
            LoadSpec::Zero => ExternalLoad::zero(),
            LoadSpec::DeadLoad { f } => ExternalLoad::dead_load(Expr::parse(f, &c)?),
            LoadSpec::LiveLoad { f } => ExternalLoad::live_load(Expr::parse(f, &c)?),
            LoadSpec::QuadraticWell { w_tilde } => ExternalLoad::quadratic_well(Expr::parse(w_tilde, &c)?),
            LoadSpec::OneSidedQuartic { w_tilde, sign } => {
                ExternalLoad::one_sided_quartic(Expr::parse(w_tilde, &c)?, *sign)
            }
        })
    }

    pub fn resolve(&self, effective: &EffectiveProfile) -> Result<Resolved> {
        let gamma = effective.gamma();
        let ell = self.ell.value(gamma);
        let theta = ell.min(gamma);
        Ok(Resolved {
            load: self.load(gamma, ell)?,
            ell,
            theta0: self.theta0.unwrap_or(theta),
            theta1: self.theta1.unwrap_or(theta),
        })
    }

    pub fn minimize_opts(&self) -> MinimizeOpts {
        let s = &self.solver;
        MinimizeOpts {
            tol: s.tol,
            max_iter: s.max_iter,
            restarts: s.restarts,
            seed: s.seed,
            gradient_steps: s.gradient_steps,
            ..MinimizeOpts::default()
        }
    }

    pub fn sweep_config(&self, effective: &EffectiveProfile) -> Result<SweepConfig> {
        let r = self.resolve(effective)?;
        Ok(SweepConfig {
            model: self.potential.clone(),
            load: r.load,
            ell: r.ell,
            theta0: r.theta0,
            theta1: r.theta1,
            n_list: self.n_list.clone(),
            minimize: self.minimize_opts(),
            inf: self.continuum.clone(),
            eps_list: self.sweep.eps.clone(),
            quad: self.continuum.quad,
            degenerate: self.sweep.degenerate,
        })
    }
}
