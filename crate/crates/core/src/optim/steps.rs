//! Single-step update rules. Each public step recomputes `P_K`; the `*_from`
//! variants reuse an existing value coefficient so the driver pays for one
//! evaluation per iteration.

use crate::error::{Error, Result};
use crate::eval;
use crate::linalg::{self, Mat, SolveOptions};
use crate::model::{EnvModel, Policy};

fn check_admissible(env: &EnvModel, k: &Mat) -> Result<()> {
    let norm = env.closed_loop_norm(k);
    let bound = env.stability_bound();
    if norm < bound {
        Ok(())
    } else {
        Err(Error::InadmissibleStep { norm, bound })
    }
}

/// Regularized policy gradient:
/// `K' = K - 2η₁E_K`, `Σ' = Σ - η₂/(1-γ) Σ(R + γBᵀP_K B - (τ/2)Σ⁻¹)Σ`.
pub fn rpg_step(env: &EnvModel, policy: &Policy, eta1: f64, eta2: f64) -> Result<Policy> {
    let p = eval::solve_pk(env, &policy.k, &SolveOptions::default())?;
    rpg_step_from(env, policy, &p, eta1, eta2)
}

pub fn rpg_step_from(env: &EnvModel, policy: &Policy, p: &Mat, eta1: f64, eta2: f64) -> Result<Policy> {
    let e = eval::e_matrix(env, &policy.k, p);
    let k_next = &policy.k - e * (2.0 * eta1);
    check_admissible(env, &k_next)?;

    let sigma = &policy.sigma;
    let m = eval::action_curvature(env, p);
    // Σ(M - (τ/2)Σ⁻¹)Σ = ΣMΣ - (τ/2)Σ, which avoids inverting Σ.
    let drift = sigma * m * sigma - sigma * (0.5 * env.tau);
    let sigma_next = linalg::symmetrize(&(sigma - drift * (eta2 / (1.0 - env.gamma))));
    let min_eig = linalg::min_eigenvalue(&sigma_next);
    if !(min_eig > linalg::EIG_FLOOR) {
        return Err(Error::SingularSigma { min_eig });
    }
    Ok(Policy {
        k: k_next,
        sigma: sigma_next,
    })
}

/// The Newton-type gain update shared by IPO and Gauss-Newton:
/// `K' = K - (R + γBᵀP_K B)⁻¹E_K`. Returns the gain and `R + γBᵀP_K B`.
fn newton_gain(env: &EnvModel, k: &Mat, p: &Mat) -> Result<(Mat, Mat)> {
    let m = eval::action_curvature(env, p);
    let e = eval::e_matrix(env, k, p);
    let k_next = k - linalg::spd_solve(&m, &e)?;
    check_admissible(env, &k_next)?;
    Ok((k_next, m))
}

/// Iterative policy optimization: exact minimizer of the one-step objective,
/// `K' = K - (R + γBᵀP_K B)⁻¹E_K`, `Σ' = (τ/2)(R + γBᵀP_K B)⁻¹`.
pub fn ipo_step(env: &EnvModel, policy: &Policy) -> Result<Policy> {
    let p = eval::solve_pk(env, &policy.k, &SolveOptions::default())?;
    ipo_step_from(env, policy, &p)
}

pub fn ipo_step_from(env: &EnvModel, policy: &Policy, p: &Mat) -> Result<Policy> {
    let (k_next, m) = newton_gain(env, &policy.k, p)?;
    let sigma_next = linalg::spd_inverse(&m)? * (0.5 * env.tau);
    Ok(Policy {
        k: k_next,
        sigma: sigma_next,
    })
}

/// Gauss-Newton on the gain with the covariance pinned at `σI`.
pub fn gauss_newton_step(env: &EnvModel, k: &Mat, sigma: f64) -> Result<Policy> {
    let p = eval::solve_pk(env, k, &SolveOptions::default())?;
    gauss_newton_step_from(env, k, &p, sigma)
}

pub fn gauss_newton_step_from(env: &EnvModel, k: &Mat, p: &Mat, sigma: f64) -> Result<Policy> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Newton sigma must be positive, got {sigma}"
        )));
    }
    let (k_next, _) = newton_gain(env, k, p)?;
    let kk = env.k();
    Ok(Policy {
        k: k_next,
        sigma: Mat::identity(kk, kk) * sigma,
    })
}
