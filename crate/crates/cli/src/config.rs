//! Experiment configuration: a strict JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use entlqc_core::{random_instance, EnvModel, Method, Policy, StopRule, TauMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Rpg,
    Ipo,
    Gn,
    Transfer,
    ModelfreeCheck,
    Solve,
}

impl MethodName {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::Rpg => "rpg",
            MethodName::Ipo => "ipo",
            MethodName::Gn => "gn",
            MethodName::Transfer => "transfer",
            MethodName::ModelfreeCheck => "modelfree-check",
            MethodName::Solve => "solve",
        }
    }
}

/// How `τ` is chosen for a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSpec {
    SigmaMinR,
    Fixed(f64),
    /// `τ = s·σ_min(R)`.
    ScaledSigmaMinR(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceSpec {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    /// `None` keeps a loaded instance's `τ` and means `sigma_min_r` otherwise.
    pub tau_mode: Option<TauSpec>,
    pub seed: u64,
    /// Serialized instance; when set, `n`, `k`, `gamma` and `seed` are ignored.
    pub path: Option<PathBuf>,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            n: 40,
            k: 20,
            gamma: 0.9,
            tau_mode: None,
            seed: 7,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSpec {
    pub k0_fill: f64,
    /// `Σ⁽⁰⁾ = sigma0·I`.
    pub sigma0: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            k0_fill: 0.01,
            sigma0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopSpec {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            max_iters: 100,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpgBlock {
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnBlock {
    pub sigma: f64,
}

impl Default for GnBlock {
    fn default() -> Self {
        GnBlock { sigma: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferBlock {
    pub epsilon: f64,
    pub perturb_seed: u64,
    /// Radius for the certificate constants; defaults to the core choice.
    pub rho: Option<f64>,
}

impl Default for TransferBlock {
    fn default() -> Self {
        TransferBlock {
            epsilon: 1e-3,
            perturb_seed: 0,
            rho: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelFreeBlock {
    pub m: Vec<usize>,
    pub r: Vec<f64>,
    /// Rollout length; defaults to the smallest `l` with `γˡ ≤ 10⁻⁶`.
    pub l: Option<usize>,
    pub base_seed: u64,
    /// Number of estimator repetitions per grid point.
    pub seeds: usize,
}

impl Default for ModelFreeBlock {
    fn default() -> Self {
        ModelFreeBlock {
            m: vec![500, 2000],
            r: vec![0.05],
            l: None,
            base_seed: 0,
            seeds: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    /// Update rule for `run`; other commands ignore it unless it names a
    /// different command.
    pub method: Option<MethodName>,
    pub init: InitSpec,
    pub stop: StopSpec,
    pub rpg: RpgBlock,
    pub gn: GnBlock,
    pub transfer: TransferBlock,
    pub modelfree: ModelFreeBlock,
    /// Output directory.
    pub output: Option<PathBuf>,
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub method: Option<MethodName>,
    pub tau: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative instance paths are taken relative to the config file.
        if let (Some(p), Some(dir)) = (cfg.instance.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.instance.seed = seed;
        }
        if let Some(m) = o.method {
            self.method = Some(m);
        }
        if let Some(tau) = o.tau {
            self.instance.tau_mode = Some(TauSpec::Fixed(tau));
        }
        if let Some(n) = o.max_iters {
            self.stop.max_iters = n;
        }
        if let Some(tol) = o.tol {
            self.stop.tol = tol;
        }
    }

    /// Checks everything that can be checked without building the instance.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let inst = &self.instance;
        if inst.path.is_none() {
            if inst.n == 0 || inst.k == 0 {
                return bad(format!(
                    "instance.n = {} and instance.k = {} must be positive",
                    inst.n, inst.k
                ));
            }
            if !(inst.gamma > 0.0 && inst.gamma < 1.0) {
                return bad(format!("instance.gamma = {} violates 0 < gamma < 1", inst.gamma));
            }
        }
        match inst.tau_mode {
            Some(TauSpec::Fixed(t)) | Some(TauSpec::ScaledSigmaMinR(t)) if !(t > 0.0 && t.is_finite()) => {
                return bad(format!("tau = {t} violates tau > 0"));
            }
            _ => {}
        }
        if !self.init.k0_fill.is_finite() {
            return bad("init.k0_fill must be finite".into());
        }
        if !(self.init.sigma0 > 0.0 && self.init.sigma0.is_finite()) {
            return bad(format!("init.sigma0 = {} violates sigma0 > 0", self.init.sigma0));
        }
        if !(self.stop.tol >= 0.0) {
            return bad(format!("stop.tol = {} must be non-negative", self.stop.tol));
        }
        match (self.rpg.eta1, self.rpg.eta2) {
            (None, None) => {}
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() => {}
            (Some(_), Some(_)) => return bad("rpg.eta1 and rpg.eta2 must be positive".into()),
            _ => return bad("rpg.eta1 and rpg.eta2 must be given together".into()),
        }
        if !(self.gn.sigma > 0.0 && self.gn.sigma.is_finite()) {
            return bad(format!("gn.sigma = {} violates sigma > 0", self.gn.sigma));
        }
        if !(self.transfer.epsilon >= 0.0 && self.transfer.epsilon.is_finite()) {
            return bad(format!(
                "transfer.epsilon = {} must be non-negative",
                self.transfer.epsilon
            ));
        }
        let mf = &self.modelfree;
        if mf.m.is_empty() || mf.r.is_empty() || mf.m.contains(&0) {
            return bad("modelfree.m and modelfree.r must be non-empty with m > 0".into());
        }
        if mf.r.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("modelfree.r entries must be positive".into());
        }
        if mf.l == Some(0) || mf.seeds == 0 {
            return bad("modelfree.l and modelfree.seeds must be positive".into());
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iters: self.stop.max_iters,
            tol: self.stop.tol,
        }
    }

    pub fn init_policy(&self, env: &EnvModel) -> Policy {
        Policy::constant(env.n(), env.k(), self.init.k0_fill, self.init.sigma0)
    }

    /// The update rule used by `run`.
    pub fn run_method(&self) -> Result<Method, CliError> {
        match self.method {
            Some(MethodName::Rpg) => Ok(Method::Rpg {
                eta: self.rpg.eta1.zip(self.rpg.eta2),
            }),
            Some(MethodName::Ipo) => Ok(Method::Ipo),
            Some(MethodName::Gn) => Ok(Method::GaussNewton { sigma: self.gn.sigma }),
            Some(other) => Err(CliError::Config(format!(
                "method '{}' is a command, run needs rpg, ipo or gn",
                other.as_str()
            ))),
            None => Err(CliError::Config("run needs a method (rpg, ipo or gn)".into())),
        }
    }

    pub fn build_env(&self) -> Result<EnvModel, CliError> {
        let inst = &self.instance;
        let mut env = match &inst.path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                EnvModel::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?
            }
            None => random_instance(inst.n, inst.k, inst.seed, inst.gamma, TauMode::SigmaMinR)
                .map_err(|e| CliError::Config(e.to_string()))?,
        };
        let tau = match inst.tau_mode {
            None if inst.path.is_some() => return Ok(env),
            None | Some(TauSpec::SigmaMinR) => env.sigma_min_r(),
            Some(TauSpec::Fixed(t)) => t,
            Some(TauSpec::ScaledSigmaMinR(s)) => s * env.sigma_min_r(),
        };
        env.tau = tau;
        Ok(env)
    }
}
