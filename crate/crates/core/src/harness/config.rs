//! Flat `key = value` experiment configuration with dotted sections.
//!
//! ```text
//! # comment
//! experiment = gn-vs-cl
//! grid.n = 512
//! sweep.mu_list = 4e-3, 1e-3, 2.5e-4
//! threshold.slope_min = 0.9
//! ```
//!
//! Every key has a default that depends on the selected experiment; the
//! filled-in map is what gets echoed into reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value as Json};

use super::experiments::Experiment;
use crate::cl_model::{BbmFrame, ClParams};
use crate::diagnostics::EnergyForm;
use crate::elliptic::SolverOptions;
use crate::error::{Error, Result};
use crate::integrator::{DiagSettings, StepConfig};
use crate::params::{RegimeBounds, RegimeParams};

/// A typed configuration value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::Num(x) => json!(x),
            Value::Int(n) => json!(n),
            Value::Bool(b) => json!(b),
            Value::Text(s) => json!(s),
            Value::List(xs) => json!(xs),
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:e}"),
            Value::Int(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::List(xs) => xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", "),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Num,
    Int,
    Bool,
    Choice(&'static [&'static str]),
    Path,
    List,
}

struct KeySpec {
    key: &'static str,
    kind: Kind,
    doc: &'static str,
}

const PROFILES: &[&str] = &["gaussian", "sech2", "cosine-mode"];
const ENERGY_FORMS: &[&str] = &["es", "symmetrizer"];
const FRAMES: &[&str] = &["laboratory", "moving"];

const KEYS: &[KeySpec] = &[
    KeySpec { key: "output.dir", kind: Kind::Path, doc: "directory receiving CSV, report and SVG files" },
    KeySpec { key: "output.svg", kind: Kind::Bool, doc: "emit SVG line plots" },
    KeySpec { key: "regime.mu", kind: Kind::Num, doc: "shallowness parameter" },
    KeySpec { key: "regime.eps", kind: Kind::Num, doc: "nonlinearity parameter, 0 <= eps <= 1" },
    KeySpec { key: "regime.delta", kind: Kind::Num, doc: "depth ratio" },
    KeySpec { key: "regime.gamma", kind: Kind::Num, doc: "density ratio, 0 <= gamma < 1" },
    KeySpec { key: "regime.bo_inv", kind: Kind::Num, doc: "inverse Bond number (0 = no surface tension)" },
    KeySpec { key: "regime.force", kind: Kind::Bool, doc: "run even when parameters leave the Camassa-Holm regime" },
    KeySpec { key: "bounds.mu_max", kind: Kind::Num, doc: "upper bound on mu" },
    KeySpec { key: "bounds.m", kind: Kind::Num, doc: "eps <= m sqrt(mu)" },
    KeySpec { key: "bounds.delta_min", kind: Kind::Num, doc: "lower bound on delta" },
    KeySpec { key: "bounds.delta_max", kind: Kind::Num, doc: "upper bound on delta" },
    KeySpec { key: "bounds.bo_min_inv", kind: Kind::Num, doc: "upper bound on bo_inv" },
    KeySpec { key: "bounds.nu0", kind: Kind::Num, doc: "lower bound on nu" },
    KeySpec { key: "grid.length", kind: Kind::Num, doc: "period L" },
    KeySpec { key: "grid.n", kind: Kind::Int, doc: "number of nodes (even, >= 16)" },
    KeySpec { key: "step.dt", kind: Kind::Num, doc: "largest time step" },
    KeySpec { key: "step.t_end", kind: Kind::Num, doc: "final time" },
    KeySpec { key: "step.cfl", kind: Kind::Num, doc: "Courant factor" },
    KeySpec { key: "step.sample_every", kind: Kind::Int, doc: "diagnostics cadence in steps" },
    KeySpec { key: "step.blowup_factor", kind: Kind::Num, doc: "abort when the X^s norm exceeds this multiple of its initial value" },
    KeySpec { key: "diag.s", kind: Kind::Num, doc: "Sobolev index of norms and energies" },
    KeySpec { key: "diag.energy_form", kind: Kind::Choice(ENERGY_FORMS), doc: "normalization of the velocity block of the energy" },
    KeySpec { key: "solver.tol", kind: Kind::Num, doc: "relative residual target of the elliptic solver" },
    KeySpec { key: "solver.max_iter", kind: Kind::Int, doc: "iteration cap of the elliptic solver" },
    KeySpec { key: "cl.theta", kind: Kind::Num, doc: "decoupled-model parameter theta" },
    KeySpec { key: "cl.lambda", kind: Kind::Num, doc: "decoupled-model parameter lambda" },
    KeySpec { key: "cl.frame", kind: Kind::Choice(FRAMES), doc: "time derivative used by the BBM term" },
    KeySpec { key: "init.profile", kind: Kind::Choice(PROFILES), doc: "initial elevation shape" },
    KeySpec { key: "init.amplitude", kind: Kind::Num, doc: "initial amplitude" },
    KeySpec { key: "init.width", kind: Kind::Num, doc: "initial width (gaussian, sech2)" },
    KeySpec { key: "init.center_frac", kind: Kind::Num, doc: "initial center as a fraction of L" },
    KeySpec { key: "init.mode", kind: Kind::Int, doc: "Fourier mode index (cosine-mode)" },
    KeySpec { key: "sweep.mu_list", kind: Kind::List, doc: "comma-separated mu values" },
    KeySpec { key: "sweep.eps_list", kind: Kind::List, doc: "comma-separated eps values" },
    KeySpec { key: "run.samples", kind: Kind::Int, doc: "number of random samples" },
    KeySpec { key: "run.seed", kind: Kind::Int, doc: "random seed" },
    KeySpec { key: "run.perturbation", kind: Kind::Num, doc: "twin-run perturbation amplitude" },
    KeySpec { key: "run.residual_s", kind: Kind::Num, doc: "Sobolev index of expansion residuals" },
    KeySpec { key: "run.mu_per_eps", kind: Kind::Num, doc: "mu = mu_per_eps * eps along an eps sweep" },
    KeySpec { key: "run.eps_per_sqrt_mu", kind: Kind::Num, doc: "eps = eps_per_sqrt_mu * sqrt(mu) along a mu sweep" },
    KeySpec { key: "run.horizon", kind: Kind::Num, doc: "final time in units of 1/eps" },
];

/// Documentation of every recognized key, in declaration order.
pub fn key_docs() -> impl Iterator<Item = (&'static str, &'static str)> {
    KEYS.iter().map(|k| (k.key, k.doc))
}

fn key_spec(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == key)
}

fn base_defaults() -> BTreeMap<String, Value> {
    let b = RegimeBounds::<f64>::default();
    let num = Value::Num;
    let int = Value::Int;
    let text = |s: &str| Value::Text(s.into());
    [
        ("output.dir", text("gnch-out")),
        ("output.svg", Value::Bool(false)),
        ("regime.mu", num(0.1)),
        ("regime.eps", num(0.1)),
        ("regime.delta", num(1.0)),
        ("regime.gamma", num(0.0)),
        ("regime.bo_inv", num(0.0)),
        ("regime.force", Value::Bool(false)),
        ("bounds.mu_max", num(b.mu_max)),
        ("bounds.m", num(b.m)),
        ("bounds.delta_min", num(b.delta_min)),
        ("bounds.delta_max", num(b.delta_max)),
        ("bounds.bo_min_inv", num(b.bo_min_inv)),
        ("bounds.nu0", num(b.nu0)),
        ("grid.length", num(40.0)),
        ("grid.n", int(256)),
        ("step.dt", num(0.05)),
        ("step.t_end", num(1.0)),
        ("step.cfl", num(0.5)),
        ("step.sample_every", int(1)),
        ("step.blowup_factor", num(100.0)),
        ("diag.s", num(1.0)),
        ("diag.energy_form", text("es")),
        ("solver.tol", num(1e-11)),
        ("solver.max_iter", int(500)),
        ("cl.theta", num(1.0)),
        ("cl.lambda", num(0.0)),
        ("cl.frame", text("laboratory")),
        ("init.profile", text("gaussian")),
        ("init.amplitude", num(1.0)),
        ("init.width", num(2.0)),
        ("init.center_frac", num(0.5)),
        ("init.mode", int(1)),
        ("sweep.mu_list", Value::List(vec![])),
        ("sweep.eps_list", Value::List(vec![])),
        ("run.samples", int(20)),
        ("run.seed", int(7)),
        ("run.perturbation", num(1e-6)),
        ("run.residual_s", num(2.0)),
        ("run.mu_per_eps", num(2.0)),
        ("run.eps_per_sqrt_mu", num(1.0)),
        ("run.horizon", num(1.0)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

/// Initial elevation shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Gaussian,
    Sech2,
    CosineMode,
}

/// Initial-data descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialData {
    pub profile: Profile,
    pub amplitude: f64,
    pub width: f64,
    /// Fraction of the period.
    pub center: f64,
    pub mode: usize,
}

/// A validated configuration: the experiment plus every key with defaults filled in.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    values: BTreeMap<String, Value>,
    lines: BTreeMap<String, usize>,
}

/// Source line numbers do not take part in equality.
impl PartialEq for ExperimentConfig {
    fn eq(&self, other: &Self) -> bool {
        self.experiment == other.experiment && self.values == other.values
    }
}

impl ExperimentConfig {
    /// Defaults of `experiment` with no overrides.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut values = base_defaults();
        for (k, v) in experiment.default_overrides() {
            values.insert(k.to_owned(), v);
        }
        for t in experiment.thresholds() {
            values.insert(format!("threshold.{}", t.name), Value::Num(t.default));
        }
        ExperimentConfig {
            experiment,
            values,
            lines: BTreeMap::new(),
        }
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(None, None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(Some(line), None, format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::config(Some(line), None, "empty key"));
            }
            if let Some((first, _, _)) = entries.iter().find(|(_, k, _)| k == key) {
                return Err(Error::config(Some(line), Some(key), format!("duplicate key (first set on line {first})")));
            }
            entries.push((line, key.to_owned(), value.to_owned()));
        }

        let (exp_line, _, exp_name) = entries
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .ok_or_else(|| Error::config(None, Some("experiment"), "missing required key"))?;
        let experiment = Experiment::from_name(exp_name).ok_or_else(|| {
            Error::config(
                Some(*exp_line),
                Some("experiment"),
                format!("unknown experiment `{exp_name}` (known: {})", Experiment::names().join(", ")),
            )
        })?;

        let mut cfg = Self::defaults(experiment);
        for (line, key, raw) in entries.iter().filter(|(_, k, _)| k != "experiment") {
            let value = if let Some(name) = key.strip_prefix("threshold.") {
                if !experiment.thresholds().iter().any(|t| t.name == name) {
                    let known: Vec<&str> = experiment.thresholds().iter().map(|t| t.name).collect();
                    return Err(Error::config(
                        Some(*line),
                        Some(key),
                        format!("unknown threshold for {} (known: {})", experiment.name(), known.join(", ")),
                    ));
                }
                parse_value(Kind::Num, raw).map_err(|m| Error::config(Some(*line), Some(key), m))?
            } else {
                let spec = key_spec(key).ok_or_else(|| Error::config(Some(*line), Some(key), "unknown key"))?;
                parse_value(spec.kind, raw).map_err(|m| Error::config(Some(*line), Some(key), m))?
            };
            cfg.values.insert(key.clone(), value);
            cfg.lines.insert(key.clone(), *line);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key programmatically with the same checks as a config line.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let kind = if key.starts_with("threshold.") {
            if !self.values.contains_key(key) {
                return Err(Error::config(None, Some(key), "unknown threshold"));
            }
            Kind::Num
        } else {
            key_spec(key).ok_or_else(|| Error::config(None, Some(key), "unknown key"))?.kind
        };
        let v = parse_value(kind, raw).map_err(|m| Error::config(None, Some(key), m))?;
        self.values.insert(key.to_owned(), v);
        self.validate()
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::config(self.lines.get(key).copied(), Some(key), message)
    }

    fn validate(&self) -> Result<()> {
        let eps = self.num("regime.eps");
        if !(0.0..=1.0).contains(&eps) {
            return Err(self.err("regime.eps", format!("eps = {eps} lies outside [0, 1]")));
        }
        self.regime().map_err(|e| self.err(regime_key(&e), e.to_string()))?;
        self.bounds().validate().map_err(|e| self.err("bounds.m", e.to_string()))?;
        let (l, n) = (self.num("grid.length"), self.int("grid.n"));
        if !(l > 0.0 && l.is_finite()) {
            return Err(self.err("grid.length", "must be positive"));
        }
        if n < 16 || !n.is_multiple_of(2) {
            return Err(self.err("grid.n", "must be even and at least 16"));
        }
        let step = self.step();
        step.validate().map_err(|e| {
            let key = match () {
                _ if !(step.dt > 0.0) => "step.dt",
                _ if !(step.t_end >= 0.0) => "step.t_end",
                _ if !(step.cfl > 0.0) => "step.cfl",
                _ if step.sample_every == 0 => "step.sample_every",
                _ => "step.blowup_factor",
            };
            self.err(key, e.to_string())
        })?;
        if !(self.num("solver.tol") > 0.0) {
            return Err(self.err("solver.tol", "must be positive"));
        }
        if self.int("solver.max_iter") == 0 {
            return Err(self.err("solver.max_iter", "must be at least 1"));
        }
        let init = self.init();
        if !(init.width > 0.0) {
            return Err(self.err("init.width", "must be positive"));
        }
        if init.mode == 0 || init.mode >= n / 2 {
            return Err(self.err("init.mode", format!("must lie in 1..{}", n / 2)));
        }
        for key in ["sweep.mu_list", "sweep.eps_list"] {
            let list = self.list(key);
            if self.experiment.sweeps().contains(&key) && list.len() < 2 {
                return Err(self.err(key, format!("{} needs at least two sweep values", self.experiment.name())));
            }
            if list.iter().any(|x| !(*x > 0.0)) {
                return Err(self.err(key, "entries must be positive"));
            }
        }
        if let Some(bad) = self.list("sweep.eps_list").iter().find(|e| **e > 1.0) {
            return Err(self.err("sweep.eps_list", format!("eps = {bad} exceeds 1")));
        }
        for key in ["run.horizon", "run.mu_per_eps", "run.eps_per_sqrt_mu", "run.perturbation"] {
            if !(self.num(key) > 0.0) {
                return Err(self.err(key, "must be positive"));
            }
        }
        if self.int("run.samples") == 0 {
            return Err(self.err("run.samples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn num(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Num(x)) => *x,
            other => panic!("config key {key} is not numeric: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> usize {
        match self.values.get(key) {
            Some(Value::Int(n)) => *n as usize,
            other => panic!("config key {key} is not an integer: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.values.get(key) {
            Some(Value::Bool(b)) => *b,
            other => panic!("config key {key} is not a flag: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Text(s)) => s,
            other => panic!("config key {key} is not text: {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::List(xs)) => xs,
            other => panic!("config key {key} is not a list: {other:?}"),
        }
    }

    pub fn threshold(&self, name: &str) -> f64 {
        self.num(&format!("threshold.{name}"))
    }

    pub fn regime(&self) -> Result<RegimeParams<f64>> {
        RegimeParams::new(
            self.num("regime.mu"),
            self.num("regime.eps"),
            self.num("regime.delta"),
            self.num("regime.gamma"),
            self.num("regime.bo_inv"),
        )
    }

    pub fn bounds(&self) -> RegimeBounds<f64> {
        RegimeBounds {
            mu_max: self.num("bounds.mu_max"),
            m: self.num("bounds.m"),
            delta_min: self.num("bounds.delta_min"),
            delta_max: self.num("bounds.delta_max"),
            bo_min_inv: self.num("bounds.bo_min_inv"),
            nu0: self.num("bounds.nu0"),
        }
    }

    pub fn force(&self) -> bool {
        self.flag("regime.force")
    }

    pub fn step(&self) -> StepConfig<f64> {
        StepConfig {
            dt: self.num("step.dt"),
            t_end: self.num("step.t_end"),
            cfl: self.num("step.cfl"),
            sample_every: self.int("step.sample_every"),
            diag: DiagSettings {
                sobolev_index: self.num("diag.s"),
                energy_form: self.energy_form(),
            },
            blowup_factor: self.num("step.blowup_factor"),
        }
    }

    pub fn energy_form(&self) -> EnergyForm {
        match self.text("diag.energy_form") {
            "symmetrizer" => EnergyForm::Symmetrizer,
            _ => EnergyForm::Es,
        }
    }

    pub fn solver(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol: self.num("solver.tol"),
            max_iter: self.int("solver.max_iter"),
        }
    }

    pub fn cl_params(&self) -> ClParams<f64> {
        ClParams {
            theta: self.num("cl.theta"),
            lambda: self.num("cl.lambda"),
        }
    }

    pub fn cl_frame(&self) -> BbmFrame {
        match self.text("cl.frame") {
            "moving" => BbmFrame::Moving,
            _ => BbmFrame::Laboratory,
        }
    }

    pub fn init(&self) -> InitialData {
        InitialData {
            profile: match self.text("init.profile") {
                "sech2" => Profile::Sech2,
                "cosine-mode" => Profile::CosineMode,
                _ => Profile::Gaussian,
            },
            amplitude: self.num("init.amplitude"),
            width: self.num("init.width"),
            center: self.num("init.center_frac"),
            mode: self.int("init.mode"),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.text("output.dir"))
    }

    /// All keys and values, defaults included.
    pub fn echo_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("experiment".into(), json!(self.experiment.name()));
        for (k, v) in &self.values {
            m.insert(k.clone(), v.to_json());
        }
        Json::Object(m)
    }

    /// The same content in config syntax; parsing it reproduces `self`.
    pub fn echo_text(&self) -> String {
        let mut out = format!("experiment = {}\n", self.experiment.name());
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {}\n", v.render()));
        }
        out
    }

    /// Thresholds in effect, by name.
    pub fn thresholds(&self) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .filter_map(|(k, v)| match (k.strip_prefix("threshold."), v) {
                (Some(name), Value::Num(x)) => Some((name.to_owned(), *x)),
                _ => None,
            })
            .collect()
    }
}

fn regime_key(e: &Error) -> &'static str {
    let msg = e.to_string();
    ["mu", "eps", "delta", "gamma", "bo_inv"]
        .into_iter()
        .find(|k| msg.contains(&format!("{k} must")))
        .map(|k| match k {
            "mu" => "regime.mu",
            "eps" => "regime.eps",
            "delta" => "regime.delta",
            "gamma" => "regime.gamma",
            _ => "regime.bo_inv",
        })
        .unwrap_or("regime.mu")
}

fn parse_num(raw: &str) -> Result<f64, String> {
    raw.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a finite number, found `{raw}`"))
}

fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    match kind {
        Kind::Num => parse_num(raw).map(Value::Num),
        Kind::Int => raw
            .parse::<u64>()
            .map(Value::Int)
            .map_err(|_| format!("expected a non-negative integer, found `{raw}`")),
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("expected `true` or `false`, found `{raw}`")),
        },
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_owned()))
            } else {
                Err(format!("expected one of {}, found `{raw}`", options.join(", ")))
            }
        }
        Kind::Path => {
            if raw.is_empty() {
                Err("expected a path".into())
            } else {
                Ok(Value::Text(raw.to_owned()))
            }
        }
        Kind::List => {
            if raw.is_empty() {
                return Ok(Value::List(vec![]));
            }
            raw.split(',').map(|item| parse_num(item.trim())).collect::<Result<Vec<_>, _>>().map(Value::List)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_error(text: &str) -> (Option<usize>, Option<String>, String) {
        match ExperimentConfig::parse_str(text).unwrap_err() {
            Error::ConfigInvalid { line, key, message } => (line, key, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let cfg = ExperimentConfig::parse_str("experiment = dispersion\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Experiment::Dispersion));
        let echo = cfg.echo_json();
        assert_eq!(echo["experiment"], "dispersion");
        assert_eq!(echo["regime.mu"], 0.1);
        assert_eq!(echo["threshold.phase_rel_max"], 1e-3);
        let again = ExperimentConfig::parse_str(&cfg.echo_text()).unwrap();
        assert_eq!(again.echo_json(), echo);
    }

    #[test]
    fn overrides_comments_and_lists() {
        let text = "# sweep\nexperiment = gn-vs-cl\n\ngrid.n = 128 # coarse\nsweep.mu_list = 1e-2, 5e-3\nthreshold.slope_min = 0.8\n";
        let cfg = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(cfg.int("grid.n"), 128);
        assert_eq!(cfg.list("sweep.mu_list"), &[1e-2, 5e-3]);
        assert_eq!(cfg.threshold("slope_min"), 0.8);
    }

    #[test]
    fn unknown_key_names_line_and_key() {
        let (line, key, msg) = config_error("experiment = dispersion\ngrid.nn = 3\n");
        assert_eq!(line, Some(2));
        assert_eq!(key.as_deref(), Some("grid.nn"));
        assert!(msg.contains("unknown key"));
    }

    #[test]
    fn foreign_threshold_is_rejected() {
        let (line, key, _) = config_error("experiment = dispersion\nthreshold.slope_min = 1\n");
        assert_eq!(line, Some(2));
        assert_eq!(key.as_deref(), Some("threshold.slope_min"));
    }

    #[test]
    fn eps_above_one_is_invalid() {
        let (line, key, _) = config_error("experiment = dispersion\nregime.eps = 1.5\n");
        assert_eq!((line, key.as_deref()), (Some(2), Some("regime.eps")));
        let (_, key, _) = config_error("experiment = energy-growth\nsweep.eps_list = 0.5, 2\n");
        assert_eq!(key.as_deref(), Some("sweep.eps_list"));
    }

    #[test]
    fn malformed_input() {
        assert_eq!(config_error("grid.n = 64\n").1.as_deref(), Some("experiment"));
        assert_eq!(config_error("experiment = nope\n").0, Some(1));
        assert_eq!(config_error("experiment = dispersion\ngrid.n\n").0, Some(2));
        assert_eq!(config_error("experiment = dispersion\ngrid.n = 64\ngrid.n = 32\n").0, Some(3));
        assert_eq!(config_error("experiment = dispersion\ngrid.n = 63\n").1.as_deref(), Some("grid.n"));
        assert_eq!(config_error("experiment = dispersion\nregime.mu = abc\n").1.as_deref(), Some("regime.mu"));
        assert_eq!(config_error("experiment = dispersion\nregime.gamma = 1\n").1.as_deref(), Some("regime.gamma"));
        assert_eq!(config_error("experiment = dispersion\ninit.profile = box\n").1.as_deref(), Some("init.profile"));
        assert_eq!(config_error("experiment = gn-vs-cl\nsweep.mu_list =\n").1.as_deref(), Some("sweep.mu_list"));
    }
}
