use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use entlqc_core::linalg::{self, Mat};
use entlqc_core::modelfree::{self, EstimatorSettings};
use entlqc_core::optim::trace::format_float;
use entlqc_core::optim::{self, default_rho, IterateTrace, TraceStatus};
use entlqc_core::riccati::stationarity_report;
use entlqc_core::transfer::{closeness_certificate, perturb_env, solve_pair, transfer_run};
use entlqc_core::{eval, solve_optimal_default, EnvModel, Error, StationarityReport};
use serde::Serialize;

use crate::config::{ExperimentConfig, MethodName};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Run,
    Transfer,
    ModelfreeCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Run => "run",
            Command::Transfer => "transfer",
            Command::ModelfreeCheck => "modelfree-check",
        }
    }

    fn method_name(&self) -> Option<MethodName> {
        match self {
            Command::Solve => Some(MethodName::Solve),
            Command::Transfer => Some(MethodName::Transfer),
            Command::ModelfreeCheck => Some(MethodName::ModelfreeCheck),
            Command::Run => None,
        }
    }
}

/// Ordered `key=value` pairs written to `summary.txt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn float(&mut self, key: &str, value: f64) {
        self.push(key, format_float(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    /// Line printed to standard output.
    pub headline: String,
    pub files: Vec<PathBuf>,
}

/// Runs `cmd`, writing its files into the configured output directory. A run
/// that ends in a step error still writes its trace before failing.
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    if let (Some(own), Some(m)) = (cmd.method_name(), cfg.method) {
        if matches!(m, MethodName::Solve | MethodName::Transfer | MethodName::ModelfreeCheck) && m != own {
            return Err(CliError::Config(format!(
                "config method '{}' does not match command '{}'",
                m.as_str(),
                cmd.name()
            )));
        }
    }
    let env = cfg.build_env()?;
    let out = cfg.output_dir();
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    match cmd {
        Command::Solve => solve(cfg, &env, &out),
        Command::Run => run(cfg, &env, &out),
        Command::Transfer => transfer(cfg, &env, &out),
        Command::ModelfreeCheck => modelfree_check(cfg, &env, &out),
    }
}

fn write(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn instance_summary(s: &mut Summary, cfg: &ExperimentConfig, env: &EnvModel) {
    s.push("n", env.n());
    s.push("k", env.k());
    s.float("gamma", env.gamma);
    s.float("tau", env.tau);
    match &cfg.instance.path {
        Some(p) => s.push("instance", p.display()),
        None => s.push("seed", cfg.instance.seed),
    }
}

#[derive(Serialize)]
struct SolutionDoc {
    n: usize,
    k: usize,
    gamma: f64,
    tau: f64,
    cost_star: f64,
    q: f64,
    iterations: usize,
    riccati_residual: f64,
    k_star: Vec<Vec<f64>>,
    sigma_star: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    stationarity: StationarityReport,
}

fn solve(cfg: &ExperimentConfig, env: &EnvModel, out: &Path) -> Result<Outcome, CliError> {
    let sol = solve_optimal_default(env)?;
    let rep = stationarity_report(env, &sol)?;
    let doc = SolutionDoc {
        n: env.n(),
        k: env.k(),
        gamma: env.gamma,
        tau: env.tau,
        cost_star: sol.cost_star,
        q: sol.q,
        iterations: sol.iterations,
        riccati_residual: sol.riccati_residual,
        k_star: rows(&sol.k_star),
        sigma_star: rows(&sol.sigma_star),
        p: rows(&sol.p),
        s: rows(&sol.s),
        stationarity: rep,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))? + "\n";

    let mut s = Summary::default();
    s.push("command", "solve");
    instance_summary(&mut s, cfg, env);
    s.float("cost_star", sol.cost_star);
    s.push("riccati_iterations", sol.iterations);
    s.float("riccati_residual", rep.riccati_residual);
    s.float("e_norm", rep.e_norm);
    s.float("sigma_gap", rep.sigma_gap);
    s.float("grad_sigma_norm", rep.grad_sigma_norm);
    s.float("closed_loop_norm", env.closed_loop_norm(&sol.k_star));
    let files = vec![
        write(&out.join("solution.json"), &json)?,
        write(&out.join("summary.txt"), &s.render())?,
    ];
    Ok(Outcome {
        headline: format!(
            "solve cost_star={} e_norm={} sigma_gap={}",
            format_float(sol.cost_star),
            format_float(rep.e_norm),
            format_float(rep.sigma_gap)
        ),
        summary: s,
        files,
    })
}

fn trace_summary(s: &mut Summary, prefix: &str, tr: &IterateTrace) {
    s.push(&format!("{prefix}status"), &tr.status);
    s.push(&format!("{prefix}iterations"), tr.iterations());
    s.float(&format!("{prefix}final_normalized_error"), tr.final_normalized_error());
    if let Some(last) = tr.records.last() {
        s.float(&format!("{prefix}final_cost"), last.cost);
    }
}

fn run(cfg: &ExperimentConfig, env: &EnvModel, out: &Path) -> Result<Outcome, CliError> {
    let method = cfg.run_method()?;
    let sol = solve_optimal_default(env)?;
    let init = cfg.init_policy(env);
    let tr = optim::run(env, method, &init, cfg.stop_rule(), &sol)?;

    let mut s = Summary::default();
    s.push("command", "run");
    s.push("method", tr.method);
    instance_summary(&mut s, cfg, env);
    if let entlqc_core::Method::Rpg { eta } = method {
        let (e1, e2) = match eta {
            Some(e) => e,
            None => {
                let r = optim::rpg_rates(env, &init)?;
                (r.eta1, r.eta2)
            }
        };
        s.float("eta1", e1);
        s.float("eta2", e2);
    }
    s.float("cost_star", sol.cost_star);
    trace_summary(&mut s, "", &tr);
    let files = vec![
        write(&out.join("trace.csv"), &tr.to_csv_string())?,
        write(&out.join("summary.txt"), &s.render())?,
    ];
    if let TraceStatus::StepError(msg) = &tr.status {
        return Err(CliError::Solver(format!(
            "{} stopped after {} iterations: {msg}",
            tr.method,
            tr.iterations()
        )));
    }
    Ok(Outcome {
        headline: format!(
            "method={} iterations={} final_normalized_error={}",
            tr.method,
            tr.iterations(),
            format_float(tr.final_normalized_error())
        ),
        summary: s,
        files,
    })
}

fn transfer(cfg: &ExperimentConfig, env: &EnvModel, out: &Path) -> Result<Outcome, CliError> {
    let tb = &cfg.transfer;
    let pair = perturb_env(env, tb.epsilon, tb.perturb_seed)?;
    let sols = solve_pair(&pair)?;
    let stop = cfg.stop_rule();
    let mut s = Summary::default();
    s.push("command", "transfer");
    instance_summary(&mut s, cfg, env);
    s.float("epsilon", tb.epsilon);
    s.push("perturb_seed", tb.perturb_seed);
    s.float("cost_star_source", sols.source.cost_star);
    s.float("cost_star_target", sols.target.cost_star);

    let rho = tb.rho.unwrap_or_else(|| default_rho(&pair.target, &sols.target));
    match closeness_certificate(&pair, &sols, rho) {
        Ok(c) => {
            s.float("rho", c.rho);
            s.float("lhs", c.lhs);
            s.float("rhs", c.rhs);
            s.push("satisfied", c.satisfied);
            s.float("delta_prime", c.delta_prime);
            s.float("c_gamma_rho", c.c_gamma_rho);
            s.float("norm_b_source", c.norm_b_source);
            s.float("norm_b_target", c.norm_b_target);
            s.float("norm_k_star_source", c.norm_k_star_source);
        }
        Err(e) => {
            s.float("rho", rho);
            s.push("certificate_error", e);
        }
    }

    let mut files = Vec::new();
    let warm_iters = match transfer_run(&pair, &sols, stop) {
        Ok(tr) => {
            trace_summary(&mut s, "warm_", &tr);
            files.push(write(&out.join("trace.csv"), &tr.to_csv_string())?);
            Some(tr.iterations())
        }
        Err(e @ Error::WarmStartInadmissible { .. }) => {
            s.push("warm_status", "warm_start_inadmissible");
            s.push("warm_error", e);
            None
        }
        Err(e) => return Err(e.into()),
    };
    let cold_iters = match optim::run(
        &pair.target,
        entlqc_core::Method::Ipo,
        &cfg.init_policy(env),
        stop,
        &sols.target,
    ) {
        Ok(cold) => {
            trace_summary(&mut s, "cold_", &cold);
            files.push(write(&out.join("cold_trace.csv"), &cold.to_csv_string())?);
            Some(cold.iterations())
        }
        Err(e @ Error::NotAdmissible { .. }) => {
            s.push("cold_status", "init_inadmissible");
            s.push("cold_error", e);
            None
        }
        Err(e) => return Err(e.into()),
    };
    files.push(write(&out.join("summary.txt"), &s.render())?);
    let count = |n: Option<usize>| n.map_or("none".to_string(), |n| n.to_string());
    Ok(Outcome {
        headline: format!(
            "transfer warm_iterations={} cold_iterations={} satisfied={}",
            count(warm_iters),
            count(cold_iters),
            s.get("satisfied").unwrap_or("unknown")
        ),
        summary: s,
        files,
    })
}

pub const MODELFREE_HEADER: &str =
    "m,r,l,seeds,median_grad_k_rel_err,median_grad_sigma_rel_err,median_s_rel_err,max_grad_k_rel_err";

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn modelfree_check(cfg: &ExperimentConfig, env: &EnvModel, out: &Path) -> Result<Outcome, CliError> {
    let mf = &cfg.modelfree;
    let policy = cfg.init_policy(env);
    let exact = eval::evaluate_policy(env, &policy)?;
    let l = mf.l.unwrap_or_else(|| modelfree::horizon_for(env.gamma, 1e-6));
    let mut table = format!("{MODELFREE_HEADER}\n");
    let mut worst_median = 0.0f64;
    for &m in &mf.m {
        for &r in &mf.r {
            let mut ek = Vec::with_capacity(mf.seeds);
            let mut es = Vec::with_capacity(mf.seeds);
            let mut ec = Vec::with_capacity(mf.seeds);
            for i in 0..mf.seeds {
                let settings = EstimatorSettings {
                    m,
                    r,
                    l,
                    base_seed: mf.base_seed.wrapping_add(i as u64),
                };
                let est = modelfree::estimate(env, &policy, settings)?;
                ek.push(modelfree::relative_error(&est.grad_k_hat, &exact.grad_k));
                es.push(modelfree::relative_error(&est.grad_sigma_hat, &exact.grad_sigma));
                ec.push(modelfree::relative_error(&est.s_hat, &exact.s));
            }
            let max_k = ek.iter().copied().fold(0.0, f64::max);
            let med_k = median(&mut ek);
            worst_median = worst_median.max(med_k);
            table.push_str(&format!(
                "{m},{},{l},{},{},{},{},{}\n",
                format_float(r),
                mf.seeds,
                format_float(med_k),
                format_float(median(&mut es)),
                format_float(median(&mut ec)),
                format_float(max_k)
            ));
        }
    }
    let mut s = Summary::default();
    s.push("command", "modelfree-check");
    instance_summary(&mut s, cfg, env);
    s.push("rows", mf.m.len() * mf.r.len());
    s.push("rollout_length", l);
    s.push("base_seed", mf.base_seed);
    s.float("grad_k_norm", exact.grad_k.norm());
    s.float("s_norm", linalg::spectral_norm(&exact.s));
    s.float("worst_median_grad_k_rel_err", worst_median);
    let files = vec![
        write(&out.join("modelfree.csv"), &table)?,
        write(&out.join("summary.txt"), &s.render())?,
    ];
    Ok(Outcome {
        headline: format!(
            "modelfree-check rows={} worst_median_grad_k_rel_err={}",
            mf.m.len() * mf.r.len(),
            format_float(worst_median)
        ),
        summary: s,
        files,
    })
}
