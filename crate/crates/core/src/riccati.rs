//! The exact regularized optimum.
//!
//! The optimal policy is Gaussian with `K* = γ(R+γBᵀPB)⁻¹BᵀPA` and
//! `Σ* = (τ/2)(R+γBᵀPB)⁻¹`, where `P` is the fixed point of the discounted
//! Riccati map. The entropy term only shifts the constant `q`, so `P` is the
//! same as for the unregularized problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::linalg::{self, Mat, SolveOptions};
use crate::model::{EnvModel, Policy};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub k_star: Mat,
    pub sigma_star: Mat,
    pub p: Mat,
    pub q: f64,
    pub cost_star: f64,
    /// `S_{K*,Σ*}`, needed by most convergence constants.
    pub s: Mat,
    pub iterations: usize,
    pub riccati_residual: f64,
}

impl OptimalSolution {
    pub fn policy(&self) -> Policy {
        Policy::new(self.k_star.clone(), self.sigma_star.clone())
    }
}

/// One application of `P ↦ Q + γAᵀPA - γ²AᵀPB(R+γBᵀPB)⁻¹BᵀPA`.
pub fn riccati_map(env: &EnvModel, p: &Mat) -> Result<Mat> {
    let g = env.gamma;
    let m = eval::action_curvature(env, p);
    let bpa = env.b.transpose() * p * &env.a;
    let gain = linalg::spd_solve(&m, &bpa)?;
    let next = &env.q + env.a.transpose() * p * &env.a * g - bpa.transpose() * gain * (g * g);
    Ok(linalg::symmetrize(&next))
}

/// Relative residual `||P - map(P)||_F / (1 + ||P||_F)`.
pub fn riccati_residual(env: &EnvModel, p: &Mat) -> Result<f64> {
    Ok((p - riccati_map(env, p)?).norm() / (1.0 + p.norm()))
}

pub fn solve_optimal_default(env: &EnvModel) -> Result<OptimalSolution> {
    solve_optimal(env, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Iterates the Riccati map from `P = Q` until the relative residual is at
/// most `tol`, then recovers `K*`, `Σ*`, `q` and `S*`.
pub fn solve_optimal(env: &EnvModel, tol: f64, max_iter: usize) -> Result<OptimalSolution> {
    let mut p = env.q.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iter {
        let next = riccati_map(env, &p)?;
        residual = (&next - &p).norm() / (1.0 + p.norm());
        p = next;
        iterations = it;
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(Error::NoConvergence {
            what: "Riccati value iteration",
            iters: max_iter,
            residual,
        });
    }

    let m = eval::action_curvature(env, &p);
    let k_star = linalg::spd_solve(&m, &(env.b.transpose() * &p * &env.a))? * env.gamma;
    let sigma_star = linalg::spd_inverse(&m)? * (0.5 * env.tau);

    let norm = env.closed_loop_norm(&k_star);
    let bound = env.stability_bound();
    if norm >= bound {
        return Err(Error::OptimalNotAdmissible { norm, bound });
    }

    let q = eval::solve_q(env, &sigma_star, &p)?;
    let cost_star = linalg::trace_product(&p, &env.d0) + q;
    let s = eval::solve_s(env, &k_star, &sigma_star, &SolveOptions::default())?;
    let riccati_residual = riccati_residual(env, &p)?;
    Ok(OptimalSolution {
        k_star,
        sigma_star,
        p,
        q,
        cost_star,
        s,
        iterations,
        riccati_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// `||E_{K*}||_F` with `P_{K*}` recomputed from the gain.
    pub e_norm: f64,
    /// `||Σ* - (τ/2)(R+γBᵀP_{K*}B)⁻¹||_F`.
    pub sigma_gap: f64,
    pub grad_sigma_norm: f64,
    pub riccati_residual: f64,
}

impl StationarityReport {
    pub fn within(&self, tol: f64) -> bool {
        self.e_norm <= tol && self.sigma_gap <= tol && self.grad_sigma_norm <= tol
    }
}

/// Certifies that a candidate optimum is stationary for the exact cost.
pub fn stationarity_report(env: &EnvModel, sol: &OptimalSolution) -> Result<StationarityReport> {
    let p_k = eval::solve_pk(env, &sol.k_star, &SolveOptions::default())?;
    let e_norm = eval::e_matrix(env, &sol.k_star, &p_k).norm();
    let sigma_gap = (&sol.sigma_star - eval::optimal_sigma_for(env, &p_k)?).norm();
    let grad_sigma_norm = eval::grad_sigma(env, &sol.sigma_star, &p_k)?.norm();
    Ok(StationarityReport {
        e_norm,
        sigma_gap,
        grad_sigma_norm,
        riccati_residual: riccati_residual(env, &sol.p)?,
    })
}
