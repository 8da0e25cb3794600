//! Warm starts across nearby environments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::linalg;
use crate::model::{EnvModel, Policy};
use crate::optim::{self, IterateTrace, Method, StopRule, TheoryConstants};
use crate::riccati::OptimalSolution;

/// A source environment and a target that differs from it only in `A`, `B`.
#[derive(Debug, Clone)]
pub struct EnvPair {
    pub source: EnvModel,
    pub target: EnvModel,
    pub perturbation_scale: f64,
}

/// Adds i.i.d. `U[0, ε]` noise to every entry of `A` and `B`, drawing all of
/// `A`'s offsets first, row-major. `ε = 0` returns an exact copy.
pub fn perturb_env(source: &EnvModel, epsilon: f64, seed: u64) -> Result<EnvPair> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "perturbation scale must be non-negative, got {epsilon}"
        )));
    }
    let mut target = source.clone();
    if epsilon > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in [&mut target.a, &mut target.b] {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    m[(i, j)] += rng.random_range(0.0..=epsilon);
                }
            }
        }
    }
    Ok(EnvPair {
        source: source.clone(),
        target,
        perturbation_scale: epsilon,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    /// `||A - Ā|| + ||B - B̄||`.
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub rho: f64,
    pub delta_prime: f64,
    pub c_gamma_rho: f64,
    /// Norms of the normalization assumptions, reported but not enforced.
    pub norm_b_source: f64,
    pub norm_b_target: f64,
    pub norm_k_star_source: f64,
}

/// Both optima of a pair.
#[derive(Debug, Clone)]
pub struct PairSolutions {
    pub source: OptimalSolution,
    pub target: OptimalSolution,
}

pub fn solve_pair(pair: &EnvPair) -> Result<PairSolutions> {
    Ok(PairSolutions {
        source: crate::riccati::solve_optimal_default(&pair.source)?,
        target: crate::riccati::solve_optimal_default(&pair.target)?,
    })
}

/// Sufficient condition for the source optimum to land inside the target's
/// super-linear region, with spectral norms throughout:
///
/// `||A-Ā|| + ||B-B̄|| <= (1/μ - 1/||S*||)⁻¹ σ_min(R+γB̄ᵀP̄B̄) δ'²
///   / (4 c_{γ,ρ} (||D0+W|| + γ/(1-γ) + 1)(||Q||+||R||)/(1-γρ²))`
///
/// `S*` is the source optimum's state correlation; `δ'` and `P̄` come from
/// the target.
pub fn closeness_certificate(pair: &EnvPair, sols: &PairSolutions, rho: f64) -> Result<Certificate> {
    let target = &pair.target;
    let init = Policy::constant(target.n(), target.k(), 0.01, 1.0);
    let tc: TheoryConstants = optim::theory_constants(target, &sols.target, rho, &init)?;
    let src = &pair.source;
    let g = src.gamma;
    let lhs = linalg::spectral_norm(&(&src.a - &target.a)) + linalg::spectral_norm(&(&src.b - &target.b));
    let mu = src.mu();
    let s_norm = linalg::spectral_norm(&sols.source.s);
    let inv_gap = 1.0 / mu - 1.0 / s_norm;
    let m_bar_min = linalg::min_eigenvalue(&eval::action_curvature(target, &sols.target.p));
    let numer = m_bar_min * tc.delta * tc.delta / inv_gap;
    let denom = 4.0
        * tc.c_gamma_rho
        * (linalg::spectral_norm(&(&src.d0 + &src.w)) + g / (1.0 - g) + 1.0)
        * (linalg::spectral_norm(&src.q) + linalg::spectral_norm(&src.r))
        / (1.0 - g * rho * rho);
    let rhs = if inv_gap > 0.0 { numer / denom } else { f64::INFINITY };
    Ok(Certificate {
        lhs,
        rhs,
        satisfied: lhs <= rhs,
        rho,
        delta_prime: tc.delta,
        c_gamma_rho: tc.c_gamma_rho,
        norm_b_source: linalg::spectral_norm(&src.b),
        norm_b_target: linalg::spectral_norm(&target.b),
        norm_k_star_source: linalg::spectral_norm(&sols.source.k_star),
    })
}

/// IPO on the target started from the source optimum.
pub fn transfer_run(pair: &EnvPair, sols: &PairSolutions, stop: StopRule) -> Result<IterateTrace> {
    let warm = sols.source.policy();
    let norm = pair.target.closed_loop_norm(&warm.k);
    let bound = pair.target.stability_bound();
    if norm >= bound {
        return Err(Error::WarmStartInadmissible { norm, bound });
    }
    optim::run(&pair.target, Method::Ipo, &warm, stop, &sols.target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_instance, TauMode};
    use crate::optim::TraceStatus;

    #[test]
    fn zero_perturbation_is_identity() {
        let env = random_instance(4, 2, 7, 0.9, TauMode::SigmaMinR).unwrap();
        let pair = perturb_env(&env, 0.0, 1).unwrap();
        assert_eq!(pair.source.a, pair.target.a);
        assert_eq!(pair.source.b, pair.target.b);
        let sols = solve_pair(&pair).unwrap();
        let tr = transfer_run(
            &pair,
            &sols,
            StopRule {
                max_iters: 5,
                tol: 1e-10,
            },
        )
        .unwrap();
        assert_eq!(tr.status, TraceStatus::Converged);
        assert_eq!(tr.iterations(), 0);
    }

    #[test]
    fn perturbation_is_bounded_and_deterministic() {
        let env = random_instance(5, 3, 2, 0.9, TauMode::SigmaMinR).unwrap();
        let p1 = perturb_env(&env, 1e-3, 9).unwrap();
        let p2 = perturb_env(&env, 1e-3, 9).unwrap();
        assert_eq!(p1.target.a, p2.target.a);
        assert_eq!(p1.target.b, p2.target.b);
        let da = &p1.target.a - &env.a;
        let db = &p1.target.b - &env.b;
        assert!(da.iter().chain(db.iter()).all(|d| (0.0..=1e-3).contains(d)));
        assert!(perturb_env(&env, -1.0, 0).is_err());
    }
}
