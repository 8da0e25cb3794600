use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval;
use crate::linalg;
use crate::model::{EnvModel, Policy};
use crate::riccati::OptimalSolution;

use super::constants::rpg_rates;
use super::steps;
use super::trace::{IterateRecord, IterateTrace, MethodTag, TraceStatus};

/// Gaps below this multiple of `eps·|C*|` are rounding noise and are left
/// out of the ratio columns.
pub const NOISE_FLOOR_ULPS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// `eta = None` uses the prescribed rates computed from the initial policy.
    Rpg {
        eta: Option<(f64, f64)>,
    },
    Ipo,
    GaussNewton {
        sigma: f64,
    },
}

impl Method {
    pub fn tag(&self) -> MethodTag {
        match self {
            Method::Rpg { .. } => MethodTag::Rpg,
            Method::Ipo => MethodTag::Ipo,
            Method::GaussNewton { .. } => MethodTag::GaussNewton,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    /// Target normalized error.
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub keep_iterates: bool,
}

pub fn noise_floor(cost_star: f64) -> f64 {
    NOISE_FLOOR_ULPS * f64::EPSILON * cost_star.abs()
}

pub fn run(
    env: &EnvModel,
    method: Method,
    init: &Policy,
    stop: StopRule,
    reference: &OptimalSolution,
) -> Result<IterateTrace> {
    run_with(env, method, init, stop, reference, RunOptions::default())
}

/// Applies `method` from `init` until the normalized error is at most
/// `stop.tol` or `stop.max_iters` steps have been taken. Errors from the
/// initial evaluation are returned; errors from a step end the trace with
/// `StepError`.
pub fn run_with(
    env: &EnvModel,
    method: Method,
    init: &Policy,
    stop: StopRule,
    reference: &OptimalSolution,
    opts: RunOptions,
) -> Result<IterateTrace> {
    env.check_policy_dims(&init.k, Some(&init.sigma))?;
    env.ensure_admissible(&init.k)?;
    let eta = match method {
        Method::Rpg { eta: Some(e) } => Some(e),
        Method::Rpg { eta: None } => {
            let rates = rpg_rates(env, init)?;
            Some((rates.eta1, rates.eta2))
        }
        _ => None,
    };

    let cost_star = reference.cost_star;
    let floor = noise_floor(cost_star);
    let mut records = Vec::new();
    let mut policy = init.clone();
    let mut prev_gap: Option<f64> = None;
    let mut t = 0;
    let status = loop {
        // Every step rejects inadmissible gains, so only the start needs the check.
        let ev = match eval::evaluate_admissible(env, &policy.k, &policy.sigma, &Default::default()) {
            Ok(ev) => ev,
            Err(e) if t > 0 => break TraceStatus::StepError(e.to_string()),
            Err(e) => return Err(e),
        };
        let gap = ev.cost - cost_star;
        let (step_ratio, superlinear_ratio) = match prev_gap {
            Some(pg) if pg > floor && gap > floor => (gap / pg, gap / pg.powf(1.5)),
            _ => (f64::NAN, f64::NAN),
        };
        let eigs = linalg::sym_eigenvalues(&policy.sigma);
        let normalized_error = gap / cost_star.abs();
        records.push(IterateRecord {
            t,
            k: opts.keep_iterates.then(|| policy.k.clone()),
            sigma: opts.keep_iterates.then(|| policy.sigma.clone()),
            cost: ev.cost,
            gap,
            normalized_error,
            grad_k_norm: ev.grad_k.norm(),
            grad_sigma_norm: ev.grad_sigma.norm(),
            sigma_min_sigma: eigs[0],
            sigma_max_sigma: eigs[eigs.len() - 1],
            step_ratio,
            superlinear_ratio,
        });
        if normalized_error <= stop.tol {
            break TraceStatus::Converged;
        }
        if t >= stop.max_iters {
            break TraceStatus::MaxIters;
        }
        let next = match method {
            Method::Rpg { .. } => {
                let (e1, e2) = eta.expect("rates resolved above");
                steps::rpg_step_from(env, &policy, &ev.p, e1, e2)
            }
            Method::Ipo => steps::ipo_step_from(env, &policy, &ev.p),
            Method::GaussNewton { sigma } => steps::gauss_newton_step_from(env, &policy.k, &ev.p, sigma),
        };
        match next {
            Ok(p) => policy = p,
            Err(e) => break TraceStatus::StepError(e.to_string()),
        }
        prev_gap = Some(gap);
        t += 1;
    };
    Ok(IterateTrace {
        method: method.tag(),
        records,
        status,
        cost_star,
    })
}
