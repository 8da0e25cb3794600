//! Exact policy evaluation.
//!
//! For a Gaussian policy `N(-Kx, Σ)` the value is `J(x) = xᵀP_K x + q_{K,Σ}`,
//! where `P_K` solves `P = Q + KᵀRK + γ(A-BK)ᵀP(A-BK)`. The discounted state
//! correlation `S_{K,Σ} = E[Σ γᵗ x_t x_tᵀ]` solves the dual equation
//! `S = D0 + γ(A-BK)S(A-BK)ᵀ + γ/(1-γ) (BΣBᵀ + W)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, SolveOptions};
use crate::model::{EnvModel, Policy};
use crate::riccati::OptimalSolution;

/// Everything the optimizers need about one (env, policy) pair.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub p: Mat,
    pub q: f64,
    pub s: Mat,
    pub cost: f64,
    /// `E_K = -γBᵀP(A-BK) + RK`.
    pub e: Mat,
    pub grad_k: Mat,
    pub grad_sigma: Mat,
}

/// Solves for the quadratic value coefficient `P_K`.
pub fn solve_pk(env: &EnvModel, k: &Mat, opts: &SolveOptions) -> Result<Mat> {
    env.ensure_admissible(k)?;
    pk_admissible(env, k, opts)
}

fn pk_admissible(env: &EnvModel, k: &Mat, opts: &SolveOptions) -> Result<Mat> {
    let closed = env.closed_loop(k);
    let c = &env.q + k.transpose() * &env.r * k;
    let (p, _) = linalg::solve_discounted_lyapunov(&c, &closed, env.gamma, opts)?;
    Ok(p)
}

/// Solves for the discounted state correlation `S_{K,Σ}`.
pub fn solve_s(env: &EnvModel, k: &Mat, sigma: &Mat, opts: &SolveOptions) -> Result<Mat> {
    env.ensure_admissible(k)?;
    env.check_policy_dims(k, Some(sigma))?;
    s_admissible(env, k, sigma, opts)
}

fn s_admissible(env: &EnvModel, k: &Mat, sigma: &Mat, opts: &SolveOptions) -> Result<Mat> {
    let g = env.gamma;
    let closed_t = env.closed_loop(k).transpose();
    let c = &env.d0 + (&env.b * sigma * env.b.transpose() + &env.w) * (g / (1.0 - g));
    let (s, _) = linalg::solve_discounted_lyapunov(&c, &closed_t, g, opts)?;
    Ok(s)
}

/// `R + γBᵀPB`, the curvature of the one-step objective in the action.
pub fn action_curvature(env: &EnvModel, p: &Mat) -> Mat {
    linalg::symmetrize(&(&env.r + env.b.transpose() * p * &env.b * env.gamma))
}

/// The constant offset `q_{K,Σ}` of the value function.
pub fn solve_q(env: &EnvModel, sigma: &Mat, p: &Mat) -> Result<f64> {
    let g = env.gamma;
    let k = env.k() as f64;
    let logdet = linalg::spd_logdet(sigma)?;
    let m = action_curvature(env, p);
    let entropy = 0.5 * env.tau * (k + k * (2.0 * PI).ln() + logdet);
    Ok((linalg::trace_product(sigma, &m) - entropy + g * linalg::trace_product(&env.w, p)) / (1.0 - g))
}

pub fn e_matrix(env: &EnvModel, k: &Mat, p: &Mat) -> Mat {
    let closed = env.closed_loop(k);
    -(env.b.transpose() * p * closed) * env.gamma + &env.r * k
}

pub fn grad_sigma(env: &EnvModel, sigma: &Mat, p: &Mat) -> Result<Mat> {
    let inv = linalg::spd_inverse(sigma)?;
    let m = action_curvature(env, p);
    Ok(linalg::symmetrize(&((m - inv * (0.5 * env.tau)) / (1.0 - env.gamma))))
}

pub fn evaluate(env: &EnvModel, k: &Mat, sigma: &Mat) -> Result<Evaluation> {
    evaluate_with(env, k, sigma, &SolveOptions::default())
}

pub fn evaluate_policy(env: &EnvModel, policy: &Policy) -> Result<Evaluation> {
    evaluate(env, &policy.k, &policy.sigma)
}

pub fn evaluate_with(env: &EnvModel, k: &Mat, sigma: &Mat, opts: &SolveOptions) -> Result<Evaluation> {
    env.check_policy_dims(k, Some(sigma))?;
    env.ensure_admissible(k)?;
    evaluate_admissible(env, k, sigma, opts)
}

/// `evaluate_with` for a gain already known to satisfy `||A - BK|| < 1/√γ`.
pub(crate) fn evaluate_admissible(env: &EnvModel, k: &Mat, sigma: &Mat, opts: &SolveOptions) -> Result<Evaluation> {
    let p = pk_admissible(env, k, opts)?;
    let q = solve_q(env, sigma, &p)?;
    let s = s_admissible(env, k, sigma, opts)?;
    let cost = linalg::trace_product(&p, &env.d0) + q;
    let e = e_matrix(env, k, &p);
    let grad_k = &e * &s * 2.0;
    let grad_sigma = grad_sigma(env, sigma, &p)?;
    Ok(Evaluation {
        p,
        q,
        s,
        cost,
        e,
        grad_k,
        grad_sigma,
    })
}

/// Cost only; skips the `S` solve.
pub fn cost(env: &EnvModel, k: &Mat, sigma: &Mat) -> Result<f64> {
    let p = solve_pk(env, k, &SolveOptions::default())?;
    Ok(linalg::trace_product(&p, &env.d0) + solve_q(env, sigma, &p)?)
}

/// `f_K(Σ) = τ/(2(1-γ)) log det Σ - 1/(1-γ) Tr(Σ(R + γBᵀP_K B))`.
pub fn f_of_sigma(env: &EnvModel, p: &Mat, sigma: &Mat) -> Result<f64> {
    let g = env.gamma;
    let logdet = linalg::spd_logdet(sigma)?;
    let m = action_curvature(env, p);
    Ok(env.tau / (2.0 * (1.0 - g)) * logdet - linalg::trace_product(sigma, &m) / (1.0 - g))
}

/// The maximizer of `f_K`: `(τ/2)(R + γBᵀP_K B)⁻¹`.
pub fn optimal_sigma_for(env: &EnvModel, p: &Mat) -> Result<Mat> {
    Ok(linalg::spd_inverse(&action_curvature(env, p))? * (0.5 * env.tau))
}

/// `M_τ = τk/(2(1-γ)) log(σ_min(R)/(πτ))`.
pub fn m_tau(env: &EnvModel) -> f64 {
    env.tau * env.k() as f64 / (2.0 * (1.0 - env.gamma)) * (env.sigma_min_r() / (PI * env.tau)).ln()
}

/// Absolute residual of the exact cost-difference identity
///
/// `C(K',Σ') - C(K,Σ) = Tr(S'ΔᵀMΔ) + 2Tr(S'ΔᵀE_K) + f_K(Σ) - f_K(Σ')`
///
/// with `Δ = K' - K` and `M = R + γBᵀP_K B`. Both sides are computed
/// independently, so a nonzero residual exposes an evaluation bug.
pub fn cost_difference_residual(env: &EnvModel, from: &Policy, to: &Policy) -> Result<f64> {
    let ev = evaluate_policy(env, from)?;
    let ev_to = evaluate_policy(env, to)?;
    let delta = &to.k - &from.k;
    let m = action_curvature(env, &ev.p);
    let s_to = &ev_to.s;
    let quad = linalg::trace_product(&(s_to * delta.transpose()), &(&m * &delta));
    let lin = 2.0 * linalg::trace_product(&(s_to * delta.transpose()), &ev.e);
    let f_gap = f_of_sigma(env, &ev.p, &from.sigma)? - f_of_sigma(env, &ev.p, &to.sigma)?;
    Ok((ev_to.cost - ev.cost - (quad + lin + f_gap)).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct DominanceGap {
    /// `C(K,Σ) - C(K*,Σ*)`.
    pub lhs: f64,
    pub upper: f64,
    pub lower: f64,
}

impl DominanceGap {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower <= self.lhs + slack && self.lhs <= self.upper + slack
    }
}

/// Gradient-dominance sandwich for a policy with `Σ ⪯ I`:
///
/// `μ/||R+γBᵀP_K B|| · Tr(E_KᵀE_K) <= C - C* <=
///  ||S*||/(4μ²σ_min(R)) ||∇_K C||²_F + (1-γ)/σ_min(R) ||∇_Σ C||²_F`.
pub fn gradient_dominance_gap(env: &EnvModel, policy: &Policy, opt: &OptimalSolution) -> Result<DominanceGap> {
    let max_eig = linalg::max_eigenvalue(&policy.sigma);
    if max_eig > 1.0 + 1e-12 {
        return Err(Error::SigmaOutOfRange { max_eig });
    }
    let ev = evaluate_policy(env, policy)?;
    let mu = env.mu();
    let smin_r = env.sigma_min_r();
    let s_star = linalg::spectral_norm(&opt.s);
    let upper = s_star / (4.0 * mu * mu * smin_r) * ev.grad_k.norm_squared()
        + (1.0 - env.gamma) / smin_r * ev.grad_sigma.norm_squared();
    let m_norm = linalg::spectral_norm(&action_curvature(env, &ev.p));
    let lower = mu / m_norm * ev.e.norm_squared();
    Ok(DominanceGap {
        lhs: ev.cost - opt.cost_star,
        upper,
        lower,
    })
}

/// Returns `(C(K,Σ), (μ + γ/(1-γ) σ_min(W)) ||P_K|| + M_τ)`; the first is never
/// below the second.
pub fn lower_bound_check(env: &EnvModel, policy: &Policy) -> Result<(f64, f64)> {
    let p = solve_pk(env, &policy.k, &SolveOptions::default())?;
    let cost = linalg::trace_product(&p, &env.d0) + solve_q(env, &policy.sigma, &p)?;
    let g = env.gamma;
    let bound = (env.mu() + g / (1.0 - g) * env.sigma_min_w()) * linalg::spectral_norm(&p) + m_tau(env);
    Ok((cost, bound))
}
