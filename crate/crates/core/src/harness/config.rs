//! Experiment configuration: a TOML document with typed sections.
//!
//! Unknown keys are reported as warnings so that newer files still load;
//! missing required keys and type errors are parse errors with line numbers.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::{Table, Value};

use crate::analysis::AbsoluteConstants;
use crate::error::{Error, Result};
use crate::interpolants::{InterpolantKind, InterpolantSpec};
use crate::schemes::{GmresSettings, Scheme, SolverSettings};
use crate::schemes::write_atomic;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    pub length: f64,
    pub n: usize,
    pub nu: f64,
    pub beta: f64,
    /// Galerkin cutoff eigenvalue; `None` keeps the whole dealiasing band.
    pub lambda_cut: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingKind {
    /// `(a sin(2 pi kappa y / L), 0)`.
    Kolmogorov { kappa: i64 },
    /// Random phases with amplitudes `|k|^{-exponent}` on `0 < |k|^2 <= max_k2`.
    PowerLaw { exponent: f64, max_k2: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingConfig {
    pub kind: ForcingKind,
    /// Target Grashof number; sets the forcing amplitude.
    pub grashof: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthKind {
    /// Numerical truth stored along a trajectory.
    NseIntegrate,
    /// Numerical truth relaxed to its steady state.
    NseSteady,
    TaylorGreen,
    Kolmogorov,
}

impl fmt::Display for TruthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NseIntegrate => "nse_integrate",
            Self::NseSteady => "nse_steady",
            Self::TaylorGreen => "analytic:taylor_green",
            Self::Kolmogorov => "analytic:kolmogorov",
        })
    }
}

impl FromStr for TruthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nse_integrate" => Ok(Self::NseIntegrate),
            "nse_steady" => Ok(Self::NseSteady),
            "analytic:taylor_green" => Ok(Self::TaylorGreen),
            "analytic:kolmogorov" => Ok(Self::Kolmogorov),
            other => Err(Error::Config(format!("unknown truth source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthConfig {
    pub source: TruthKind,
    /// Truth step is the experiment step divided by this ratio.
    pub tau_ratio: usize,
    /// Interval between stored truth snapshots.
    pub store_every: f64,
    /// Length of the unrecorded run before `t = 0`.
    pub spin_up: f64,
    /// `||u_0|| = initial_fraction * M_1` for the random initial state.
    pub initial_fraction: f64,
    /// Spectral decay exponent of the random initial state.
    pub initial_decay: f64,
    pub taylor_green_kappa: i64,
    /// Relaxation stops when `|u^{k+1} - u^k| / tau <= steady_tol * |f|`.
    pub steady_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Random,
    Zero,
    PerturbedTruth,
}

impl fmt::Display for InitialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Zero => "zero",
            Self::PerturbedTruth => "perturbed_truth",
        })
    }
}

impl FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "zero" => Ok(Self::Zero),
            "perturbed_truth" => Ok(Self::PerturbedTruth),
            other => Err(Error::Config(format!("unknown initial condition '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// `||v_0|| = fraction * M_1` for random data; relative `V`-size of the
    /// perturbation for perturbed truth.
    pub fraction: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepConfig {
    pub tau: Vec<f64>,
    pub lambda_cut: Vec<f64>,
    pub beta: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    /// Interval between recorded CSV rows.
    pub record_every: f64,
    /// Orders of magnitude the twin error must lose before flooring.
    pub min_decades: f64,
    /// The unnudged control may lose at most this many orders.
    pub control_max_decades: f64,
    pub run_control: bool,
    pub contraction_steps: usize,
    /// `||perturbation|| / M_1` for contraction runs.
    pub contraction_perturbation: f64,
    pub soak_steps: usize,
    /// Step sizes for stability soaks; empty means the main `tau` only.
    pub soak_taus: Vec<f64>,
    /// Largest acceptable ratio of the step-size floor to the cutoff error in N-sweeps.
    pub tau_floor_ratio: f64,
    pub c0_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scheme: Scheme,
    pub tau: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub output_dir: PathBuf,
    pub physics: PhysicsConfig,
    pub forcing: ForcingConfig,
    pub interpolant: InterpolantSpec,
    pub truth: TruthConfig,
    pub initial: InitialConfig,
    pub sweep: SweepConfig,
    pub constants: AbsoluteConstants,
    pub solver: SolverSettings,
    pub checks: CheckConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.tau, "tau")?;
        positive(self.t_end, "t_end")?;
        positive(self.physics.nu, "physics.nu")?;
        positive(self.physics.length, "physics.length")?;
        positive(self.checks.record_every, "checks.record_every")?;
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return Err(Error::Config(format!(
                "burn_in = {} must lie in [0, t_end = {})",
                self.burn_in, self.t_end
            )));
        }
        if self.physics.beta < 0.0 {
            return Err(Error::Config("physics.beta must be nonnegative".into()));
        }
        if self.truth.tau_ratio == 0 {
            return Err(Error::Config("truth.tau_ratio must be at least 1".into()));
        }
        for (name, list) in [
            ("sweep.tau", &self.sweep.tau),
            ("sweep.lambda_cut", &self.sweep.lambda_cut),
            ("sweep.beta", &self.sweep.beta),
            ("sweep.h", &self.sweep.h),
        ] {
            if list.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config(format!("{name} entries must be positive")));
            }
        }
        Ok(())
    }
}

/// A parse warning, e.g. an unrecognized key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigWarning {
    pub line: usize,
    pub message: String,
}

struct Reader<'a> {
    text: &'a str,
    path: &'a Path,
    root: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn line_of(&self, section: Option<&str>, key: &str) -> usize {
        let mut current: Option<String> = None;
        for (i, line) in self.text.lines().enumerate() {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix('[') {
                current = Some(rest.trim_end_matches(']').trim().to_string());
                if section.is_some_and(|s| s == current.as_deref().unwrap_or("")) && key.is_empty() {
                    return i + 1;
                }
                continue;
            }
            if current.as_deref() == section {
                if let Some(rest) = t.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return i + 1;
                    }
                }
            }
        }
        0
    }

    fn error(&self, section: Option<&str>, key: &str, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line_of(section, key),
            message,
        }
    }

    fn full_key(section: Option<&str>, key: &str) -> String {
        match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        }
    }

    fn raw(&mut self, section: Option<&str>, key: &str) -> Result<Option<&'a Value>> {
        let table = match section {
            None => self.root,
            Some(s) => match self.root.get(s) {
                None => return Ok(None),
                Some(Value::Table(t)) => t,
                Some(_) => return Err(self.error(None, s, format!("'{s}' must be a table"))),
            },
        };
        self.used.insert(Self::full_key(section, key));
        Ok(table.get(key))
    }

    fn required(&mut self, section: Option<&str>, key: &str) -> Result<&'a Value> {
        self.raw(section, key)?.ok_or_else(|| Error::Parse {
            path: self.path.to_path_buf(),
            line: section.map(|s| self.line_of(Some(s), "")).unwrap_or(0),
            message: format!("missing required key '{}'", Self::full_key(section, key)),
        })
    }

    fn as_f64(&self, section: Option<&str>, key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) if s == "inf" => Ok(f64::INFINITY),
            other => Err(self.error(
                section,
                key,
                format!("'{}' must be a number, got {}", Self::full_key(section, key), other.type_str()),
            )),
        }
    }

    fn as_i64(&self, section: Option<&str>, key: &str, v: &Value) -> Result<i64> {
        match v {
            Value::Integer(i) => Ok(*i),
            other => Err(self.error(
                section,
                key,
                format!("'{}' must be an integer, got {}", Self::full_key(section, key), other.type_str()),
            )),
        }
    }

    fn as_str(&self, section: Option<&str>, key: &str, v: &'a Value) -> Result<&'a str> {
        match v {
            Value::String(s) => Ok(s),
            other => Err(self.error(
                section,
                key,
                format!("'{}' must be a string, got {}", Self::full_key(section, key), other.type_str()),
            )),
        }
    }

    fn f64_req(&mut self, section: Option<&str>, key: &str) -> Result<f64> {
        let v = self.required(section, key)?;
        self.as_f64(section, key, v)
    }

    fn f64_or(&mut self, section: Option<&str>, key: &str, default: f64) -> Result<f64> {
        match self.raw(section, key)? {
            Some(v) => self.as_f64(section, key, v),
            None => Ok(default),
        }
    }

    fn usize_req(&mut self, section: Option<&str>, key: &str) -> Result<usize> {
        let v = self.required(section, key)?;
        let i = self.as_i64(section, key, v)?;
        usize::try_from(i).map_err(|_| self.error(section, key, format!("'{key}' must be nonnegative")))
    }

    fn usize_or(&mut self, section: Option<&str>, key: &str, default: usize) -> Result<usize> {
        match self.raw(section, key)? {
            Some(v) => {
                let i = self.as_i64(section, key, v)?;
                usize::try_from(i).map_err(|_| self.error(section, key, format!("'{key}' must be nonnegative")))
            }
            None => Ok(default),
        }
    }

    fn i64_or(&mut self, section: Option<&str>, key: &str, default: i64) -> Result<i64> {
        match self.raw(section, key)? {
            Some(v) => self.as_i64(section, key, v),
            None => Ok(default),
        }
    }

    fn bool_or(&mut self, section: Option<&str>, key: &str, default: bool) -> Result<bool> {
        match self.raw(section, key)? {
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(self.error(section, key, format!("'{key}' must be a boolean"))),
            None => Ok(default),
        }
    }

    fn str_req(&mut self, section: Option<&str>, key: &str) -> Result<&'a str> {
        let v = self.required(section, key)?;
        self.as_str(section, key, v)
    }

    fn str_or(&mut self, section: Option<&str>, key: &str, default: &'a str) -> Result<&'a str> {
        match self.raw(section, key)? {
            Some(v) => self.as_str(section, key, v),
            None => Ok(default),
        }
    }

    fn list_or(&mut self, section: Option<&str>, key: &str) -> Result<Vec<f64>> {
        match self.raw(section, key)? {
            Some(Value::Array(items)) => items.iter().map(|v| self.as_f64(section, key, v)).collect(),
            Some(_) => Err(self.error(section, key, format!("'{key}' must be an array"))),
            None => Ok(Vec::new()),
        }
    }

    fn parsed<T: FromStr<Err = Error>>(&self, section: Option<&str>, key: &str, s: &str) -> Result<T> {
        s.parse().map_err(|e: Error| self.error(section, key, e.to_string()))
    }

    fn unknown_keys(&self) -> Vec<ConfigWarning> {
        let mut out = Vec::new();
        for (k, v) in self.root {
            match v {
                Value::Table(t) => {
                    for key in t.keys() {
                        if !self.used.contains(&format!("{k}.{key}")) {
                            out.push(ConfigWarning {
                                line: self.line_of(Some(k), key),
                                message: format!("unknown key '{k}.{key}' ignored"),
                            });
                        }
                    }
                }
                _ => {
                    if !self.used.contains(k) {
                        out.push(ConfigWarning {
                            line: self.line_of(None, k),
                            message: format!("unknown key '{k}' ignored"),
                        });
                    }
                }
            }
        }
        out
    }
}

/// Parses configuration text; `path` only labels error messages.
pub fn parse_config(text: &str, path: &Path) -> Result<(ExperimentConfig, Vec<ConfigWarning>)> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.message().to_string(),
        }
    })?;
    let mut r = Reader {
        text,
        path,
        root: &root,
        used: BTreeSet::new(),
    };
    let phys = Some("physics");
    let forc = Some("forcing");
    let intp = Some("interpolant");
    let trth = Some("truth");
    let init = Some("initial");
    let swp = Some("sweep");
    let cons = Some("constants");
    let solv = Some("solver");
    let chk = Some("checks");

    let seed_v = r.required(None, "seed")?;
    let seed = r.as_i64(None, "seed", seed_v)? as u64;
    let scheme_s = r.str_req(None, "scheme")?;
    let scheme: Scheme = r.parsed(None, "scheme", scheme_s)?;
    let tau = r.f64_req(None, "tau")?;
    let t_end = r.f64_req(None, "t_end")?;
    let burn_in = r.f64_req(None, "burn_in")?;
    let output_dir = PathBuf::from(r.str_or(None, "output_dir", "out")?);

    let lambda_cut = match r.raw(phys, "lambda_cut")? {
        None => None,
        Some(Value::String(s)) if s == "full" => None,
        Some(v) => Some(r.as_f64(phys, "lambda_cut", v)?),
    };
    let physics = PhysicsConfig {
        length: r.f64_req(phys, "length")?,
        n: r.usize_req(phys, "n")?,
        nu: r.f64_req(phys, "nu")?,
        beta: r.f64_req(phys, "beta")?,
        lambda_cut,
    };

    let kind_s = r.str_req(forc, "kind")?;
    let kind = match kind_s {
        "kolmogorov" => ForcingKind::Kolmogorov {
            kappa: r.i64_or(forc, "kappa", 2)?,
        },
        "power_law" => ForcingKind::PowerLaw {
            exponent: r.f64_or(forc, "exponent", 1.0)?,
            max_k2: r.f64_or(forc, "max_k2", f64::INFINITY)?,
        },
        "none" => ForcingKind::None,
        other => {
            return Err(r.error(forc, "kind", format!("unknown forcing kind '{other}'")));
        }
    };
    let forcing = ForcingConfig {
        kind,
        grashof: r.f64_or(forc, "grashof", 0.0)?,
    };

    let ik = r.str_req(intp, "kind")?;
    let ik: InterpolantKind = r.parsed(intp, "kind", ik)?;
    let h = r.f64_req(intp, "h")?;
    let interpolant = InterpolantSpec::new(ik, h).map_err(|e| r.error(intp, "h", e.to_string()))?;

    let source = r.str_req(trth, "source")?;
    let truth = TruthConfig {
        source: r.parsed(trth, "source", source)?,
        tau_ratio: r.usize_or(trth, "tau_ratio", 50)?,
        store_every: r.f64_or(trth, "store_every", 0.05)?,
        spin_up: r.f64_or(trth, "spin_up", 0.0)?,
        initial_fraction: r.f64_or(trth, "initial_fraction", 0.5)?,
        initial_decay: r.f64_or(trth, "initial_decay", 2.0)?,
        taylor_green_kappa: r.i64_or(trth, "taylor_green_kappa", 1)?,
        steady_tol: r.f64_or(trth, "steady_tol", 1e-10)?,
    };

    let init_kind = r.str_or(init, "kind", "random")?;
    let initial = InitialConfig {
        kind: r.parsed(init, "kind", init_kind)?,
        fraction: r.f64_or(init, "fraction", 0.9)?,
        decay: r.f64_or(init, "decay", 1.0)?,
    };

    let sweep = SweepConfig {
        tau: r.list_or(swp, "tau")?,
        lambda_cut: r.list_or(swp, "lambda_cut")?,
        beta: r.list_or(swp, "beta")?,
        h: r.list_or(swp, "h")?,
    };

    let d = AbsoluteConstants::default();
    let constants = AbsoluteConstants {
        c_beta: r.f64_or(cons, "c_beta", d.c_beta)?,
        c4: r.f64_or(cons, "c4", d.c4)?,
        c_tail: r.f64_or(cons, "c_tail", d.c_tail)?,
        c_alpha: r.f64_or(cons, "c_alpha", d.c_alpha)?,
        alpha: r.f64_or(cons, "alpha", d.alpha)?,
    };

    let ds = SolverSettings::default();
    let solver = SolverSettings {
        linear: GmresSettings {
            tol: r.f64_or(solv, "linear_tol", ds.linear.tol)?,
            max_iter: r.usize_or(solv, "max_linear_iter", ds.linear.max_iter)?,
            restart: r.usize_or(solv, "restart", ds.linear.restart)?,
        },
        picard_tol: r.f64_or(solv, "picard_tol", ds.picard_tol)?,
        max_picard: r.usize_or(solv, "max_picard", ds.max_picard)?,
    };

    let checks = CheckConfig {
        record_every: r.f64_or(chk, "record_every", tau)?,
        min_decades: r.f64_or(chk, "min_decades", 6.0)?,
        control_max_decades: r.f64_or(chk, "control_max_decades", 1.0)?,
        run_control: r.bool_or(chk, "run_control", true)?,
        contraction_steps: r.usize_or(chk, "contraction_steps", 2000)?,
        contraction_perturbation: r.f64_or(chk, "contraction_perturbation", 1e-3)?,
        soak_steps: r.usize_or(chk, "soak_steps", 10_000)?,
        soak_taus: r.list_or(chk, "soak_taus")?,
        tau_floor_ratio: r.f64_or(chk, "tau_floor_ratio", 0.1)?,
        c0_trials: r.usize_or(chk, "c0_trials", 200)?,
    };

    let warnings = r.unknown_keys();
    let cfg = ExperimentConfig {
        seed,
        scheme,
        tau,
        t_end,
        burn_in,
        output_dir,
        physics,
        forcing,
        interpolant,
        truth,
        initial,
        sweep,
        constants,
        solver,
        checks,
    };
    cfg.validate().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok((cfg, warnings))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let (cfg, warnings) = parse_config(&text, path)?;
    for w in warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.message);
    }
    Ok(cfg)
}

fn float(v: f64) -> Value {
    if v.is_infinite() {
        Value::String("inf".into())
    } else {
        Value::Float(v)
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| float(*x)).collect())
}

fn table(entries: Vec<(&str, Value)>) -> Value {
    Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// Serializes a configuration so that [`parse_config`] reproduces it exactly.
pub fn config_to_string(cfg: &ExperimentConfig) -> String {
    let mut root = Table::new();
    root.insert("seed".into(), Value::Integer(cfg.seed as i64));
    root.insert("scheme".into(), Value::String(cfg.scheme.to_string()));
    root.insert("tau".into(), float(cfg.tau));
    root.insert("t_end".into(), float(cfg.t_end));
    root.insert("burn_in".into(), float(cfg.burn_in));
    root.insert("output_dir".into(), Value::String(cfg.output_dir.display().to_string()));
    let p = &cfg.physics;
    root.insert(
        "physics".into(),
        table(vec![
            ("length", float(p.length)),
            ("n", Value::Integer(p.n as i64)),
            ("nu", float(p.nu)),
            ("beta", float(p.beta)),
            (
                "lambda_cut",
                p.lambda_cut.map(float).unwrap_or_else(|| Value::String("full".into())),
            ),
        ]),
    );
    let mut forcing = vec![("grashof", float(cfg.forcing.grashof))];
    match &cfg.forcing.kind {
        ForcingKind::Kolmogorov { kappa } => {
            forcing.push(("kind", Value::String("kolmogorov".into())));
            forcing.push(("kappa", Value::Integer(*kappa)));
        }
        ForcingKind::PowerLaw { exponent, max_k2 } => {
            forcing.push(("kind", Value::String("power_law".into())));
            forcing.push(("exponent", float(*exponent)));
            forcing.push(("max_k2", float(*max_k2)));
        }
        ForcingKind::None => forcing.push(("kind", Value::String("none".into()))),
    }
    root.insert("forcing".into(), table(forcing));
    root.insert(
        "interpolant".into(),
        table(vec![
            ("kind", Value::String(cfg.interpolant.kind.to_string())),
            ("h", float(cfg.interpolant.h)),
        ]),
    );
    let t = &cfg.truth;
    root.insert(
        "truth".into(),
        table(vec![
            ("source", Value::String(t.source.to_string())),
            ("tau_ratio", Value::Integer(t.tau_ratio as i64)),
            ("store_every", float(t.store_every)),
            ("spin_up", float(t.spin_up)),
            ("initial_fraction", float(t.initial_fraction)),
            ("initial_decay", float(t.initial_decay)),
            ("taylor_green_kappa", Value::Integer(t.taylor_green_kappa)),
            ("steady_tol", float(t.steady_tol)),
        ]),
    );
    root.insert(
        "initial".into(),
        table(vec![
            ("kind", Value::String(cfg.initial.kind.to_string())),
            ("fraction", float(cfg.initial.fraction)),
            ("decay", float(cfg.initial.decay)),
        ]),
    );
    let s = &cfg.sweep;
    root.insert(
        "sweep".into(),
        table(vec![
            ("tau", floats(&s.tau)),
            ("lambda_cut", floats(&s.lambda_cut)),
            ("beta", floats(&s.beta)),
            ("h", floats(&s.h)),
        ]),
    );
    let c = &cfg.constants;
    root.insert(
        "constants".into(),
        table(vec![
            ("c_beta", float(c.c_beta)),
            ("c4", float(c.c4)),
            ("c_tail", float(c.c_tail)),
            ("c_alpha", float(c.c_alpha)),
            ("alpha", float(c.alpha)),
        ]),
    );
    let sv = &cfg.solver;
    root.insert(
        "solver".into(),
        table(vec![
            ("linear_tol", float(sv.linear.tol)),
            ("max_linear_iter", Value::Integer(sv.linear.max_iter as i64)),
            ("restart", Value::Integer(sv.linear.restart as i64)),
            ("picard_tol", float(sv.picard_tol)),
            ("max_picard", Value::Integer(sv.max_picard as i64)),
        ]),
    );
    let k = &cfg.checks;
    root.insert(
        "checks".into(),
        table(vec![
            ("record_every", float(k.record_every)),
            ("min_decades", float(k.min_decades)),
            ("control_max_decades", float(k.control_max_decades)),
            ("run_control", Value::Boolean(k.run_control)),
            ("contraction_steps", Value::Integer(k.contraction_steps as i64)),
            ("contraction_perturbation", float(k.contraction_perturbation)),
            ("soak_steps", Value::Integer(k.soak_steps as i64)),
            ("soak_taus", floats(&k.soak_taus)),
            ("tau_floor_ratio", float(k.tau_floor_ratio)),
            ("c0_trials", Value::Integer(k.c0_trials as i64)),
        ]),
    );
    toml::to_string(&root).expect("tables of plain values always serialize")
}

/// Writes the configuration atomically.
pub fn write_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(path, config_to_string(cfg).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
scheme = "semi"
tau = 0.01
t_end = 1.0
burn_in = 0.5

[physics]
length = 6.283185307179586
n = 16
nu = 0.1
beta = 5.0

[forcing]
kind = "kolmogorov"
kappa = 2
grashof = 2.0

[interpolant]
kind = "fourier_truncation"
h = 0.2

[truth]
source = "analytic:kolmogorov"
"#;

    fn parse(text: &str) -> Result<(ExperimentConfig, Vec<ConfigWarning>)> {
        parse_config(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let (cfg, warnings) = parse(MINIMAL).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cfg.scheme, Scheme::SemiImplicit);
        assert_eq!(cfg.physics.lambda_cut, None);
        assert_eq!(cfg.truth.tau_ratio, 50);
        assert_eq!(cfg.checks.record_every, 0.01);
        assert_eq!(cfg.constants, AbsoluteConstants::default());
    }

    #[test]
    fn round_trip() {
        let (mut cfg, _) = parse(MINIMAL).unwrap();
        cfg.sweep.tau = vec![0.02, 0.01];
        cfg.physics.lambda_cut = Some(20.0);
        cfg.forcing.kind = ForcingKind::PowerLaw {
            exponent: 0.3,
            max_k2: f64::INFINITY,
        };
        let text = config_to_string(&cfg);
        let (back, warnings) = parse(&text).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(back, cfg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        write_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("nu = 0.1\n", "");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("physics.nu"), "{err}");
    }

    #[test]
    fn unknown_key_is_a_warning() {
        let text = MINIMAL.replace("kappa = 2", "kappa = 2\ncolour = \"blue\"");
        let (_, warnings) = parse(&text).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].message.contains("forcing.colour"));
        assert_eq!(warnings[0].line, 17);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = MINIMAL.replace("n = 16", "n = \"sixteen\"");
        match parse(&text).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 10);
                assert!(message.contains("physics.n"));
            }
            other => panic!("unexpected {other}"),
        }
        let text = MINIMAL.replace("tau = 0.01", "tau = = 0.01");
        match parse(&text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn burn_in_must_precede_end() {
        let text = MINIMAL.replace("burn_in = 0.5", "burn_in = 2.0");
        assert!(parse(&text).is_err());
    }
}
