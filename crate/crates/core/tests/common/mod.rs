#![allow(dead_code)]

use entlqc_core::linalg::{self, Mat};
use entlqc_core::nalgebra::DVector;
use entlqc_core::{random_instance, solve_optimal_default, EnvModel, Error, OptimalSolution, Policy, TauMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Direct solve of `X = C + γFᵀXF` through `(I - γ Fᵀ⊗Fᵀ) vec X = vec C`.
pub fn kron_lyapunov(c: &Mat, f: &Mat, gamma: f64) -> Mat {
    let n = c.nrows();
    let ft = f.transpose();
    let op = Mat::identity(n * n, n * n) - ft.kronecker(&ft) * gamma;
    let rhs = DVector::from_column_slice(c.as_slice());
    let x = op.lu().solve(&rhs).expect("nonsingular");
    Mat::from_column_slice(n, n, x.as_slice())
}

/// Oracle `P_K` from the Kronecker solve.
pub fn oracle_pk(env: &EnvModel, k: &Mat) -> Mat {
    let c = &env.q + k.transpose() * &env.r * k;
    kron_lyapunov(&c, &env.closed_loop(k), env.gamma)
}

/// Oracle `S_{K,Σ}` from the Kronecker solve of the transposed equation.
pub fn oracle_s(env: &EnvModel, k: &Mat, sigma: &Mat) -> Mat {
    let g = env.gamma;
    let c = &env.d0 + (&env.b * sigma * env.b.transpose() + &env.w) * (g / (1.0 - g));
    kron_lyapunov(&c, &env.closed_loop(k).transpose(), g)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    normal(rng, n, n).qr().q()
}

/// Random SPD matrix with eigenvalues uniform in `[lo, hi]`.
pub fn spd_between(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Mat {
    let q = orthogonal(rng, n);
    let d = DVector::from_fn(n, |_, _| rng.random_range(lo..=hi));
    linalg::symmetrize(&(&q * Mat::from_diagonal(&d) * q.transpose()))
}

/// Gain within `frac` of the admissibility margin around `center`.
pub fn admissible_gain(rng: &mut ChaCha8Rng, env: &EnvModel, center: &Mat, frac: f64) -> Mat {
    let margin = env.stability_bound() - env.closed_loop_norm(center);
    assert!(margin > 0.0);
    let dir = normal(rng, center.nrows(), center.ncols());
    let scale = rng.random_range(0.0..frac) * margin / (linalg::spectral_norm(&env.b) * linalg::spectral_norm(&dir));
    center + dir * scale
}

/// Random admissible policy near the optimum with `Σ ⪯ I`.
pub fn random_policy(rng: &mut ChaCha8Rng, env: &EnvModel, sol: &OptimalSolution) -> Policy {
    let k = admissible_gain(rng, env, &sol.k_star, 0.9);
    let sigma = spd_between(rng, env.k(), 0.05, 1.0);
    Policy::new(k, sigma)
}

/// The first `count` seeds (from `start`) whose optimum satisfies the
/// standing admissibility assumption, with their solutions.
pub fn instances(n: usize, k: usize, gamma: f64, count: usize) -> Vec<(u64, EnvModel, OptimalSolution)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let env = random_instance(n, k, seed, gamma, TauMode::SigmaMinR).unwrap();
        match solve_optimal_default(&env) {
            Ok(sol) => out.push((seed, env, sol)),
            Err(Error::OptimalNotAdmissible { .. }) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
        seed += 1;
    }
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
