//! Run configuration files.
//!
//! A configuration is a plain text file of `key = value` lines. Blank lines
//! and everything after `#` are ignored; list values are comma separated.
//! Every key except `scenario` has a default, and command-line overrides
//! (`key=value`) are applied after the file.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `scenario` | required | `isolator`, `pmc`, `pec`, `isolator_type` or `none` |
//! | `epsilon` | `0.01` | penalization parameter of a single run |
//! | `epsilon_list` | `0.1, 0.03, 0.01, 0.003, 0.001` | sweep values, strictly decreasing |
//! | `d` | `2` | dimension |
//! | `L` | `1` | half side of the torus `[-L, L]^d` |
//! | `n` | `128` | cells per axis |
//! | `R_O`, `R_I` | `0.7`, `0.3` | outer and inner radius (`R_I = 0`: no inner solid) |
//! | `transition_cells` | `4` | mollifier band width in cells |
//! | `a`, `gamma` | `1`, `1.4` | pressure law `p = a ρ^γ` |
//! | `nu_F`, `lambda_F` | `0.05`, `0` | fluid viscosities |
//! | `mu_F`, `mu_int`, `mu_ext` | `1`, `2`, `1` | permeabilities (`mu_ext` used by `isolator`) |
//! | `eta_F`, `eta_int`, `eta_ext` | `0.05`, `0.1`, `0.05` | resistivities (`eta_ext` used by `pmc`) |
//! | `T` | `0.5` | final time |
//! | `cfl` | `0.4` | CFL number, in `(0, 1)` |
//! | `dt_min`, `dt_max` | `1e-9`, `0.05` | step size clamp |
//! | `theta` | `auto` | implicitness in `[0.5, 1]`; `auto` is 1, or 0.5 for `none` |
//! | `cg_tol`, `cg_maxit` | `1e-10`, `20000` | linear solver settings |
//! | `output_every` | `1` | diagnostics cadence in steps |
//! | `snapshot_times` | empty | times at which `run` writes snapshots |
//! | `snapshot_every_step` | `false` | write a snapshot after every step |
//! | `rho0`, `velocity`, `field` | `1`, `0.5`, `0.5` | initial density and amplitudes |
//! | `background` | `0.6, 0.3` | uniform part of the initial magnetic field |
//! | `weak` | scenario limit identity | weak identities evaluated along a sweep |
//! | `mms_cells` | `32, 64, 128` | grids of `verify-convergence` |
//! | `mms_T` | `0.25` | final time of `verify-convergence` |
//! | `seed` | `20240601` | seed of the randomized operator checks |

use crate::coefficients::{Scenario, ScenarioTag};
use crate::diagnostics::Equation;
use crate::error::{Error, Result};
use crate::solver::{RunConfig, Setup};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// Every recognised key, in echo order.
pub const KEYS: [&str; 37] = [
    "scenario",
    "epsilon",
    "epsilon_list",
    "d",
    "L",
    "n",
    "R_O",
    "R_I",
    "transition_cells",
    "a",
    "gamma",
    "nu_F",
    "lambda_F",
    "mu_F",
    "mu_int",
    "mu_ext",
    "eta_F",
    "eta_int",
    "eta_ext",
    "T",
    "cfl",
    "dt_min",
    "dt_max",
    "theta",
    "cg_tol",
    "cg_maxit",
    "output_every",
    "snapshot_times",
    "snapshot_every_step",
    "rho0",
    "velocity",
    "field",
    "background",
    "weak",
    "mms_cells",
    "mms_T",
    "seed",
];

/// A validated configuration: one run plus sweep and verification settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub run: RunConfig,
    pub epsilon_list: Vec<f64>,
    /// Weak identities certified along a sweep.
    pub weak: Vec<Equation>,
    pub mms_cells: Vec<usize>,
    pub mms_t: f64,
    /// Seed of the randomized operator checks.
    pub seed: u64,
}

impl Config {
    /// Defaults for `scenario`.
    pub fn new(tag: ScenarioTag) -> Self {
        let mut run = RunConfig::new(tag, 0.01);
        run.scenario = Scenario::new(tag);
        Self {
            run,
            epsilon_list: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            weak: limit_equation(tag).into_iter().collect(),
            mms_cells: vec![32, 64, 128],
            mms_t: 0.25,
            seed: 20240601,
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let r = &mut self.run;
        let s = &mut r.scenario;
        match key {
            "scenario" => {
                let tag: ScenarioTag = value.parse()?;
                let old = s.tag;
                s.tag = tag;
                if self.weak == limit_equation(old).into_iter().collect::<Vec<_>>() {
                    self.weak = limit_equation(tag).into_iter().collect();
                }
            }
            "epsilon" => r.epsilon = num(key, value)?,
            "epsilon_list" => self.epsilon_list = list(key, value)?,
            "d" => r.dim = num(key, value)?,
            "L" => r.half_len = num(key, value)?,
            "n" => r.cells = num(key, value)?,
            "R_O" => r.r_outer = num(key, value)?,
            "R_I" => r.r_inner = num(key, value)?,
            "transition_cells" => r.transition_cells = num(key, value)?,
            "a" => r.eos.a = num(key, value)?,
            "gamma" => r.eos.gamma = num(key, value)?,
            "nu_F" => s.nu_f = num(key, value)?,
            "lambda_F" => s.lambda_f = num(key, value)?,
            "mu_F" => s.mu_f = num(key, value)?,
            "mu_int" => s.mu_int = num(key, value)?,
            "mu_ext" => s.mu_ext = num(key, value)?,
            "eta_F" => s.eta_f = num(key, value)?,
            "eta_int" => s.eta_int = num(key, value)?,
            "eta_ext" => s.eta_ext = num(key, value)?,
            "T" => r.t_final = num(key, value)?,
            "cfl" => r.cfl = num(key, value)?,
            "dt_min" => r.dt_min = num(key, value)?,
            "dt_max" => r.dt_max = num(key, value)?,
            "theta" => {
                r.theta = if value.trim() == "auto" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "cg_tol" => r.cg_tol = num(key, value)?,
            "cg_maxit" => r.cg_maxit = num(key, value)?,
            "output_every" => r.output_every = num(key, value)?,
            "snapshot_times" => r.snapshot_times = list(key, value)?,
            "snapshot_every_step" => r.snapshot_every_step = num(key, value)?,
            "rho0" => r.initial.rho0 = num(key, value)?,
            "velocity" => r.initial.velocity = num(key, value)?,
            "field" => r.initial.field = num(key, value)?,
            "background" => {
                let b: Vec<f64> = list(key, value)?;
                if b.len() != 2 {
                    return Err(Error::Config(format!("key `background`: expected 2 numbers, got {}", b.len())));
                }
                r.initial.background = [b[0], b[1]];
            }
            "weak" => {
                self.weak = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(|v| {
                        Equation::ALL
                            .into_iter()
                            .find(|e| e.name().eq_ignore_ascii_case(v))
                            .ok_or_else(|| Error::Config(format!("key `weak`: unknown identity `{v}`")))
                    })
                    .collect::<Result<_>>()?
            }
            "mms_cells" => self.mms_cells = list(key, value)?,
            "mms_T" => self.mms_t = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Effective value of `key` in the file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        let r = &self.run;
        let s = &r.scenario;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        Some(match key {
            "scenario" => s.tag.as_str().to_string(),
            "epsilon" => r.epsilon.to_string(),
            "epsilon_list" => join(&self.epsilon_list),
            "d" => r.dim.to_string(),
            "L" => r.half_len.to_string(),
            "n" => r.cells.to_string(),
            "R_O" => r.r_outer.to_string(),
            "R_I" => r.r_inner.to_string(),
            "transition_cells" => r.transition_cells.to_string(),
            "a" => r.eos.a.to_string(),
            "gamma" => r.eos.gamma.to_string(),
            "nu_F" => s.nu_f.to_string(),
            "lambda_F" => s.lambda_f.to_string(),
            "mu_F" => s.mu_f.to_string(),
            "mu_int" => s.mu_int.to_string(),
            "mu_ext" => s.mu_ext.to_string(),
            "eta_F" => s.eta_f.to_string(),
            "eta_int" => s.eta_int.to_string(),
            "eta_ext" => s.eta_ext.to_string(),
            "T" => r.t_final.to_string(),
            "cfl" => r.cfl.to_string(),
            "dt_min" => r.dt_min.to_string(),
            "dt_max" => r.dt_max.to_string(),
            "theta" => r.theta.map_or("auto".to_string(), |t| t.to_string()),
            "cg_tol" => r.cg_tol.to_string(),
            "cg_maxit" => r.cg_maxit.to_string(),
            "output_every" => r.output_every.to_string(),
            "snapshot_times" => join(&r.snapshot_times),
            "snapshot_every_step" => r.snapshot_every_step.to_string(),
            "rho0" => r.initial.rho0.to_string(),
            "velocity" => r.initial.velocity.to_string(),
            "field" => r.initial.field.to_string(),
            "background" => join(&r.initial.background),
            "weak" => self.weak.iter().map(|e| e.name()).collect::<Vec<_>>().join(", "),
            "mms_cells" => self.mms_cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "),
            "mms_T" => self.mms_t.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// `key = value` for every key, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<String> {
        KEYS.iter().map(|k| format!("{k} = {}", self.get(k).unwrap_or_default())).collect()
    }

    /// Checks every invariant, including the geometry and coefficient ones.
    pub fn validate(&mut self) -> Result<()> {
        self.run.validate()?;
        Setup::new(&self.run).map_err(|e| Error::Config(e.to_string()))?;
        if self.epsilon_list.len() < 2 || self.epsilon_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("epsilon_list needs at least two strictly decreasing values".into()));
        }
        if let Some(e) = self.epsilon_list.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::Config(format!("epsilon_list values must lie in (0, 1], got {e}")));
        }
        if self.mms_cells.len() < 2 || self.mms_cells.windows(2).any(|w| w[1] != 2 * w[0]) || self.mms_cells[0] < 8 {
            return Err(Error::Config("mms_cells needs at least two successively doubled grids of at least 8 cells".into()));
        }
        if !(self.mms_t > 0.0) {
            return Err(Error::Config(format!("mms_T must be positive, got {}", self.mms_t)));
        }
        Ok(())
    }
}

/// Limit identity whose residual is tracked along a sweep of `tag`.
pub fn limit_equation(tag: ScenarioTag) -> Option<Equation> {
    match tag {
        ScenarioTag::Isolator => Some(Equation::IsolatorLimit),
        ScenarioTag::Pmc => Some(Equation::PmcLimit),
        ScenarioTag::Pec => Some(Equation::PecLimit),
        ScenarioTag::IsolatorType => Some(Equation::IsolatorTypeLimit),
        ScenarioTag::None => None,
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("key `{key}`: cannot parse `{}`: {e}", value.trim())))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| num(key, v))
        .collect()
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(format!("override `{s}` is not of the form key=value"))),
    }
}

/// Parses file text, applies `overrides` and validates.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<Config> {
    let mut pairs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", ln + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    pairs.extend(overrides.iter().cloned());
    let tag = pairs
        .iter()
        .rev()
        .find(|(k, _)| k == "scenario")
        .map(|(_, v)| v.parse::<ScenarioTag>())
        .transpose()?
        .ok_or_else(|| Error::Config("missing required key `scenario`".into()))?;
    let mut cfg = Config::new(tag);
    for (k, v) in &pairs {
        if k != "scenario" {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}
