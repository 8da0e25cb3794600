//! Step sizes and convergence constants prescribed by the theory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::linalg;
use crate::model::{EnvModel, Policy};
use crate::riccati::OptimalSolution;

/// Step sizes of the regularized policy gradient method and the quantities
/// they are derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpgRates {
    pub eta1: f64,
    pub eta2: f64,
    pub r0: f64,
    pub m_tau: f64,
    /// `C(K⁰, Σ⁰)`.
    pub initial_cost: f64,
}

impl RpgRates {
    /// Lower eigenvalue bound `a = τ/(2r₀)` kept by every Σ iterate.
    pub fn sigma_floor(&self, tau: f64) -> f64 {
        tau / (2.0 * self.r0)
    }

    /// Per-step contraction `ζ = min{2μη₁σ_min(R)/||S*||, η₂aσ_min(R)/(2(1-γ))}`.
    pub fn contraction(&self, env: &EnvModel, s_star_norm: f64) -> f64 {
        let smin_r = env.sigma_min_r();
        let a = self.sigma_floor(env.tau);
        let k_part = 2.0 * env.mu() * self.eta1 * smin_r / s_star_norm;
        let sigma_part = self.eta2 * a * smin_r / (2.0 * (1.0 - env.gamma));
        k_part.min(sigma_part)
    }

    /// Iterations sufficient for a gap of at most `eps` starting from `gap0`:
    /// `max{||S*|| r₀/(μσ_min(R)), 8r₀³/(τ²σ_min(R))} · log(gap0/eps)`.
    pub fn iteration_bound(&self, env: &EnvModel, s_star_norm: f64, gap0: f64, eps: f64) -> f64 {
        let smin_r = env.sigma_min_r();
        let lead =
            (s_star_norm * self.r0 / (env.mu() * smin_r)).max(8.0 * self.r0.powi(3) / (env.tau * env.tau * smin_r));
        lead * (gap0 / eps).ln().max(0.0)
    }
}

/// Step sizes `η₁ = 1/(2r₀)`, `η₂ = τ(1-γ)/(2r₀²)` with
/// `r₀ = max{2/(τσ_min(Σ⁰)), ||R|| + γ||BᵀB||(C(K⁰,Σ⁰) - M_τ)/(μ + γσ_min(W)/(1-γ))}`.
pub fn rpg_rates(env: &EnvModel, init: &Policy) -> Result<RpgRates> {
    let tau = env.tau;
    let smin_r = env.sigma_min_r();
    if !(tau > 0.0 && tau <= 2.0 * smin_r) {
        return Err(Error::TauOutOfRange {
            tau,
            upper: 2.0 * smin_r,
        });
    }
    let max_eig = linalg::max_eigenvalue(&init.sigma);
    if max_eig > 1.0 + 1e-12 {
        return Err(Error::SigmaTooLarge { max_eig });
    }
    let g = env.gamma;
    let initial_cost = eval::cost(env, &init.k, &init.sigma)?;
    let m_tau = eval::m_tau(env);
    let smin_sigma = linalg::min_eigenvalue(&init.sigma);
    let btb = linalg::spectral_norm(&(env.b.transpose() * &env.b));
    let denom = env.mu() + g / (1.0 - g) * env.sigma_min_w();
    let r0 = (2.0 / (tau * smin_sigma)).max(linalg::spectral_norm(&env.r) + g * btb * (initial_cost - m_tau) / denom);
    Ok(RpgRates {
        eta1: 1.0 / (2.0 * r0),
        eta2: tau * (1.0 - g) / (2.0 * r0 * r0),
        r0,
        m_tau,
        initial_cost,
    })
}

/// Constants of the IPO convergence analysis and the transfer certificate,
/// evaluated for a concrete instance and admissibility radius `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub rho: f64,
    pub xi: f64,
    pub zeta: f64,
    pub omega: f64,
    pub kappa: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub m_tau: f64,
    pub r0: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// `1 - μ/||S*||`.
    pub contraction_ipo: f64,
    /// `max{γ/(1-γ), γρ/(1-γρ²)}`.
    pub c_gamma_rho: f64,
    /// Gap below which the order-1.5 bound applies:
    /// `(1/μ - 1/||S*||)⁻¹ σ_min(R+γBᵀP*B) δ²`.
    pub superlinear_region: f64,
    /// `(c₁+c₂) / (σ_min(S*) √(μ σ_min(R+γBᵀP*B)))`.
    pub superlinear_coeff: f64,
}

/// `ξ_{γ,ρ}`, `ζ_{γ,ρ}`, `ω_{γ,ρ}`.
pub fn xi_zeta_omega(gamma: f64, rho: f64) -> (f64, f64, f64) {
    let r2 = rho * rho;
    let grr = 1.0 - gamma * r2;
    let xi = (grr + gamma) / (grr * grr);
    let one_r2 = 1.0 - r2;
    let zeta = (2.0 - r2) / (one_r2 * one_r2 * (1.0 - gamma)) + 1.0 / (one_r2 * one_r2 * grr);
    let omega = 1.0 / (one_r2 * (1.0 - gamma)) + 1.0 / (one_r2 * grr);
    (xi, zeta, omega)
}

/// Midpoint between `||A - BK*||` and the largest radius the constants
/// accept, `min{1/√γ, 1}`.
pub fn default_rho(env: &EnvModel, sol: &OptimalSolution) -> f64 {
    let closed = env.closed_loop_norm(&sol.k_star);
    0.5 * (closed + env.stability_bound().min(1.0))
}

pub fn theory_constants(env: &EnvModel, sol: &OptimalSolution, rho: f64, init: &Policy) -> Result<TheoryConstants> {
    let (n, k) = (env.n(), env.k());
    let smin_b = if k <= n { linalg::sigma_min(&env.b) } else { 0.0 };
    if !(smin_b > 0.0) {
        return Err(Error::SingularB {
            n,
            k,
            sigma_min: smin_b,
        });
    }
    let closed = env.closed_loop_norm(&sol.k_star);
    let bound = env.stability_bound();
    if !(rho >= closed) {
        return Err(Error::RhoInvalid {
            rho,
            reason: format!("below ||A - BK*|| = {closed:.6e}"),
        });
    }
    if !(rho < bound) {
        return Err(Error::RhoInvalid {
            rho,
            reason: format!("not below 1/sqrt(gamma) = {bound:.6e}"),
        });
    }
    if !(rho < 1.0) {
        return Err(Error::RhoInvalid {
            rho,
            reason: "zeta and omega need rho < 1".into(),
        });
    }

    let g = env.gamma;
    let tau = env.tau;
    let mu = env.mu();
    let smin_r = env.sigma_min_r();
    let norm_a = linalg::spectral_norm(&env.a);
    let norm_b = linalg::spectral_norm(&env.b);
    let norm_q = linalg::spectral_norm(&env.q);
    let norm_r = linalg::spectral_norm(&env.r);
    let norm_k = linalg::spectral_norm(&sol.k_star);
    let s_norm = linalg::spectral_norm(&sol.s);
    let s_min = linalg::min_eigenvalue(&sol.s);
    let m_star = eval::action_curvature(env, &sol.p);
    let m_star_norm = linalg::spectral_norm(&m_star);
    let m_star_min = linalg::min_eigenvalue(&m_star);

    let (xi, zeta, omega) = xi_zeta_omega(g, rho);
    let kappa = (rho + norm_a) / smin_b;
    let c = 2.0 * rho * xi * norm_b * (norm_q + norm_r * kappa * kappa) + s_norm * norm_r * (kappa + norm_k) / mu;
    let noise = linalg::spectral_norm(&(&env.b * &sol.sigma_star * env.b.transpose() + &env.w));
    let c1 = (xi * linalg::spectral_norm(&env.d0) + zeta * noise)
        * 2.0
        * rho
        * norm_b
        * (1.0 + smin_r * m_star_norm + c * g * smin_r * (norm_b * norm_a + norm_b * norm_b * kappa));
    let c2 = c * tau * g * omega * norm_b.powi(4) / (2.0 * smin_r * smin_r);
    let delta = (s_min / (c1 + c2)).min((rho - closed) / norm_b);

    let rates = rpg_rates(env, init)?;
    let inv_gap = 1.0 / mu - 1.0 / s_norm;
    let superlinear_region = if inv_gap > 0.0 {
        m_star_min * delta * delta / inv_gap
    } else {
        f64::INFINITY
    };
    Ok(TheoryConstants {
        rho,
        xi,
        zeta,
        omega,
        kappa,
        c,
        c1,
        c2,
        delta,
        m_tau: rates.m_tau,
        r0: rates.r0,
        eta1: rates.eta1,
        eta2: rates.eta2,
        contraction_ipo: 1.0 - mu / s_norm,
        c_gamma_rho: (g / (1.0 - g)).max(g * rho / (1.0 - g * rho * rho)),
        superlinear_region,
        superlinear_coeff: (c1 + c2) / (s_min * (mu * m_star_min).sqrt()),
    })
}
