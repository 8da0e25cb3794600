//! Trajectory simulation and zeroth-order gradient estimation.
//!
//! Every random quantity of sample `i` comes from a ChaCha stream keyed by
//! `(base_seed, i)`, so results do not depend on how the samples are
//! scheduled across threads.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{EnvModel, Policy};

type Vector = DVector<f64>;

/// Random source for sample `index` under `base_seed`.
pub fn stream_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Smallest horizon with `γ^l <= target`.
pub fn horizon_for(gamma: f64, target: f64) -> usize {
    (target.ln() / gamma.ln()).ceil().max(1.0) as usize
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Uniform draw from the Frobenius sphere of radius `r` in `ℝ^len`.
pub fn sphere_sample<R: Rng + ?Sized>(rng: &mut R, len: usize, r: f64) -> Vector {
    loop {
        let z = gaussian_vector(rng, len);
        let norm = z.norm();
        if norm > 0.0 {
            return z * (r / norm);
        }
    }
}

/// Precomputed factors of a Gaussian policy's covariance.
struct NoiseModel {
    chol: Mat,
    sigma_inv: Mat,
    /// `k log 2π + log det Σ`.
    log_norm: f64,
}

impl NoiseModel {
    fn new(sigma: &Mat) -> Result<Self> {
        let logdet = linalg::spd_logdet(sigma)?;
        let sigma_inv = linalg::spd_inverse(sigma)?;
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or(Error::SingularSigma {
                min_eig: linalg::min_eigenvalue(sigma),
            })?
            .l();
        let k = sigma.nrows() as f64;
        Ok(Self {
            chol,
            sigma_inv,
            log_norm: k * (2.0 * PI).ln() + logdet,
        })
    }

    fn log_density(&self, eps: &Vector) -> f64 {
        -0.5 * (self.log_norm + (eps.transpose() * &self.sigma_inv * eps)[(0, 0)])
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `x_0 .. x_l`.
    pub states: Vec<Vector>,
    /// `u_0 .. u_{l-1}`.
    pub actions: Vec<Vector>,
    /// Exploration noise `ε_t = u_t + K x_t`.
    pub exploration: Vec<Vector>,
    /// Process noise `w_t`.
    pub process_noise: Vec<Vector>,
    /// `c_t = x_tᵀQx_t + u_tᵀRu_t + τ log π(u_t|x_t)`.
    pub costs: Vec<f64>,
    /// `Σ_t γᵗ c_t`.
    pub c_hat: f64,
    /// `Σ_t γᵗ x_t x_tᵀ`.
    pub s_hat: Mat,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// States regenerated from `x_0` and the logged actions and noise.
    pub fn replay_states(&self, env: &EnvModel) -> Vec<Vector> {
        let mut xs = vec![self.states[0].clone()];
        for (u, w) in self.actions.iter().zip(&self.process_noise) {
            let x = xs.last().expect("non-empty");
            xs.push(&env.a * x + &env.b * u + w);
        }
        xs
    }

    /// `(Ĉ, Ŝ)` recomputed from the logged states and actions.
    pub fn recompute(&self, env: &EnvModel, k: &Mat, sigma: &Mat) -> Result<(f64, Mat)> {
        let noise = NoiseModel::new(sigma)?;
        let mut c_hat = 0.0;
        let mut s_hat = Mat::zeros(env.n(), env.n());
        let mut disc = 1.0;
        for (x, u) in self.states.iter().zip(&self.actions) {
            let eps = u + k * x;
            let c = x.dot(&(&env.q * x)) + u.dot(&(&env.r * u)) + env.tau * noise.log_density(&eps);
            c_hat += disc * c;
            s_hat += x * x.transpose() * disc;
            disc *= env.gamma;
        }
        Ok((c_hat, s_hat))
    }
}

/// Simulates `l` steps of `x_{t+1} = Ax_t + Bu_t + w_t` with
/// `x_0 ~ N(0, D0)`, `u_t ~ N(-Kx_t, Σ)` and `w_t ~ N(0, W)`.
pub fn rollout<R: Rng + ?Sized>(env: &EnvModel, k: &Mat, sigma: &Mat, l: usize, rng: &mut R) -> Result<Trajectory> {
    if l == 0 {
        return Err(Error::InvalidArgument("rollout horizon must be at least 1".into()));
    }
    env.check_policy_dims(k, Some(sigma))?;
    let n = env.n();
    let noise = NoiseModel::new(sigma)?;
    let d0_sqrt = linalg::psd_sqrt(&env.d0);
    let w_sqrt = linalg::psd_sqrt(&env.w);

    let mut x = &d0_sqrt * gaussian_vector(rng, n);
    let mut states = Vec::with_capacity(l + 1);
    let mut actions = Vec::with_capacity(l);
    let mut exploration = Vec::with_capacity(l);
    let mut process_noise = Vec::with_capacity(l);
    let mut costs = Vec::with_capacity(l);
    let mut c_hat = 0.0;
    let mut s_hat = Mat::zeros(n, n);
    let mut disc = 1.0;
    for _ in 0..l {
        let eps = &noise.chol * gaussian_vector(rng, env.k());
        let u = -(k * &x) + &eps;
        let w = &w_sqrt * gaussian_vector(rng, n);
        let c = x.dot(&(&env.q * &x)) + u.dot(&(&env.r * &u)) + env.tau * noise.log_density(&eps);
        c_hat += disc * c;
        s_hat += &x * x.transpose() * disc;
        disc *= env.gamma;
        let next = &env.a * &x + &env.b * &u + &w;
        states.push(std::mem::replace(&mut x, next));
        actions.push(u);
        exploration.push(eps);
        process_noise.push(w);
        costs.push(c);
    }
    states.push(x);
    Ok(Trajectory {
        states,
        actions,
        exploration,
        process_noise,
        costs,
        c_hat,
        s_hat,
    })
}

/// Sample means and standard errors of `Ĉ` and `Ŝ` over independent rollouts.
#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub trajectories: usize,
    pub cost_mean: f64,
    pub cost_stderr: f64,
    pub first_cost_mean: f64,
    pub first_cost_stderr: f64,
    pub s_mean: Mat,
    pub s_stderr: Mat,
}

pub fn monte_carlo(
    env: &EnvModel,
    policy: &Policy,
    trajectories: usize,
    l: usize,
    base_seed: u64,
) -> Result<MonteCarloSummary> {
    if trajectories < 2 {
        return Err(Error::InvalidArgument("need at least two trajectories".into()));
    }
    let samples: Vec<(f64, f64, Mat)> = (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(base_seed, i as u64);
            rollout(env, &policy.k, &policy.sigma, l, &mut rng).map(|tr| (tr.c_hat, tr.costs[0], tr.s_hat))
        })
        .collect::<Result<_>>()?;
    let (cost_mean, cost_stderr) = mean_stderr(samples.iter().map(|s| s.0));
    let (first_cost_mean, first_cost_stderr) = mean_stderr(samples.iter().map(|s| s.1));
    let (s_mean, s_stderr) = matrix_mean_stderr(samples.iter().map(|s| &s.2), env.n(), env.n());
    Ok(MonteCarloSummary {
        trajectories,
        cost_mean,
        cost_stderr,
        first_cost_mean,
        first_cost_stderr,
        s_mean,
        s_stderr,
    })
}

fn mean_stderr(xs: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.clone().sum::<f64>() / m;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn matrix_mean_stderr<'a>(xs: impl ExactSizeIterator<Item = &'a Mat> + Clone, rows: usize, cols: usize) -> (Mat, Mat) {
    let m = xs.len() as f64;
    let mut mean = Mat::zeros(rows, cols);
    for x in xs.clone() {
        mean += x;
    }
    mean /= m;
    let mut var = Mat::zeros(rows, cols);
    for x in xs {
        let d = x - &mean;
        var += d.component_mul(&d);
    }
    let stderr = (var / (m - 1.0) / m).map(f64::sqrt);
    (mean, stderr)
}

/// Number of free entries of a lower-triangular `k×k` factor.
pub fn tri_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Lower-triangular index pairs `(i, j)`, `i >= j`, in row-major order.
pub fn tri_indices(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (0..=i).map(move |j| (i, j))).collect()
}

pub fn tri_vec(l: &Mat) -> Vector {
    Vector::from_iterator(
        tri_len(l.nrows()),
        tri_indices(l.nrows()).into_iter().map(|(i, j)| l[(i, j)]),
    )
}

pub fn tri_mat(k: usize, v: &Vector) -> Mat {
    let mut l = Mat::zeros(k, k);
    for (idx, (i, j)) in tri_indices(k).into_iter().enumerate() {
        l[(i, j)] = v[idx];
    }
    l
}

fn check_diagonal(l: &Mat) -> Result<()> {
    for i in 0..l.nrows() {
        let value = l[(i, i)];
        if !(value > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i, value });
        }
    }
    Ok(())
}

/// `J[(i,j),(p,q)] = ∂Σ_ij/∂L_pq` for `Σ = LLᵀ`, both index pairs running
/// over the lower triangle in row-major order. Only the lower-triangular
/// part of `l` is read.
pub fn cholesky_jacobian(l: &Mat) -> Result<Mat> {
    let k = l.nrows();
    if l.ncols() != k {
        return Err(Error::Dimension(format!(
            "Cholesky factor must be square, got {}x{}",
            k,
            l.ncols()
        )));
    }
    check_diagonal(l)?;
    let lo = |i: usize, j: usize| if i >= j { l[(i, j)] } else { 0.0 };
    let idx = tri_indices(k);
    let d = idx.len();
    let mut jac = Mat::zeros(d, d);
    for (row, &(i, j)) in idx.iter().enumerate() {
        for (col, &(p, q)) in idx.iter().enumerate() {
            // Σ_ij = Σ_r L_ir L_jr.
            let mut v = 0.0;
            if p == i {
                v += lo(j, q);
            }
            if p == j {
                v += lo(i, q);
            }
            jac[(row, col)] = v;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone)]
pub struct GradientEstimate {
    pub grad_k_hat: Mat,
    pub grad_sigma_hat: Mat,
    pub s_hat: Mat,
    /// Entrywise standard error of `s_hat` across samples.
    pub s_hat_stderr: Mat,
    pub m: usize,
    pub r: f64,
    pub l: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimatorSettings {
    /// Number of perturbation pairs.
    pub m: usize,
    /// Smoothing radius.
    pub r: f64,
    /// Rollout horizon.
    pub l: usize,
    pub base_seed: u64,
}

struct Sample {
    sigma_term: Vector,
    k_term: Mat,
    s_hat: Mat,
}

/// One-point sphere estimates of `∇_K C`, `∇_Σ C` and `S_{K,Σ}` from
/// simulated rollouts. `Σ` is perturbed through its Cholesky factor and the
/// resulting gradient is mapped back with the Cholesky Jacobian.
pub fn estimate(env: &EnvModel, policy: &Policy, settings: EstimatorSettings) -> Result<GradientEstimate> {
    let EstimatorSettings { m, r, l, base_seed } = settings;
    if m == 0 || !(r > 0.0) || l == 0 {
        return Err(Error::InvalidArgument(format!(
            "estimator needs m >= 1, r > 0, l >= 1 (got m={m}, r={r}, l={l})"
        )));
    }
    env.check_policy_dims(&policy.k, Some(&policy.sigma))?;
    let (n, kk) = (env.n(), env.k());
    let chol = policy
        .sigma
        .clone()
        .cholesky()
        .ok_or(Error::SingularSigma {
            min_eig: linalg::min_eigenvalue(&policy.sigma),
        })?
        .l();
    let l_vec = tri_vec(&chol);
    let d_sigma = tri_len(kk) as f64;
    let d_k = (kk * n) as f64;
    let bound = env.stability_bound();

    let samples: Vec<Sample> = (0..m)
        .into_par_iter()
        .map(|i| -> Result<Sample> {
            let mut rng = stream_rng(base_seed, i as u64);
            let u = sphere_sample(&mut rng, tri_len(kk), r);
            let l_hat = tri_mat(kk, &(&l_vec + &u));
            check_diagonal(&l_hat)?;
            let sigma_hat = &l_hat * l_hat.transpose();
            let c_sigma = rollout(env, &policy.k, &sigma_hat, l, &mut rng)?.c_hat;

            let u_k = Mat::from_column_slice(kk, n, sphere_sample(&mut rng, kk * n, r).as_slice());
            let k_hat = &policy.k + &u_k;
            let norm = env.closed_loop_norm(&k_hat);
            if norm >= bound {
                return Err(Error::PerturbationInadmissible { sample: i, norm });
            }
            let tr = rollout(env, &k_hat, &policy.sigma, l, &mut rng)?;
            Ok(Sample {
                sigma_term: u * (d_sigma / (r * r) * c_sigma),
                k_term: u_k * (d_k / (r * r) * tr.c_hat),
                s_hat: tr.s_hat,
            })
        })
        .collect::<Result<_>>()?;

    let mf = m as f64;
    let mut g_l = Vector::zeros(tri_len(kk));
    let mut grad_k_hat = Mat::zeros(kk, n);
    for s in &samples {
        g_l += &s.sigma_term;
        grad_k_hat += &s.k_term;
    }
    g_l /= mf;
    grad_k_hat /= mf;
    let (s_hat, s_hat_stderr) = if m >= 2 {
        matrix_mean_stderr(samples.iter().map(|s| &s.s_hat), n, n)
    } else {
        (samples[0].s_hat.clone(), Mat::from_element(n, n, f64::NAN))
    };

    let jac = cholesky_jacobian(&chol)?;
    let x = jac
        .transpose()
        .lu()
        .solve(&g_l)
        .ok_or_else(|| Error::InvalidArgument("Cholesky Jacobian is singular".into()))?;
    Ok(GradientEstimate {
        grad_k_hat,
        grad_sigma_hat: embed_sigma_gradient(kk, &x),
        s_hat: linalg::symmetrize(&s_hat),
        s_hat_stderr,
        m,
        r,
        l,
    })
}

/// Maps a gradient with respect to the lower-triangular entries of `Σ` to
/// the symmetric matrix gradient. An off-diagonal lower entry stands for
/// both `Σ_ij` and `Σ_ji`, so its derivative is twice the symmetric one.
pub fn embed_sigma_gradient(k: usize, x: &Vector) -> Mat {
    let mut g = Mat::zeros(k, k);
    for (idx, (i, j)) in tri_indices(k).into_iter().enumerate() {
        if i == j {
            g[(i, i)] = x[idx];
        } else {
            g[(i, j)] = 0.5 * x[idx];
            g[(j, i)] = 0.5 * x[idx];
        }
    }
    g
}

pub fn relative_error(estimate: &Mat, exact: &Mat) -> f64 {
    (estimate - exact).norm() / exact.norm()
}
