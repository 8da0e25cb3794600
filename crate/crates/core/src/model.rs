//! Problem instances: the discounted, entropy-regularized LQ control model
//! `x_{t+1} = A x_t + B u_t + w_t` with Gaussian policies `u ~ N(-Kx, Σ)`.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Relative tolerance for symmetry and PSD checks.
pub const TOL_SYM: f64 = 1e-10;

/// Fraction of the stability margin `1/√γ` that random instances place `σ_max(A)` at.
pub const RANDOM_A_SCALE: f64 = 0.9;

/// Spectral norm of `B` in random instances.
pub const RANDOM_B_SCALE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
    /// Noise covariance `E[w wᵀ]`.
    pub w: Mat,
    pub gamma: f64,
    pub tau: f64,
    /// Initial-state second moment `E[x₀x₀ᵀ]`.
    pub d0: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    /// Feedback gain, `k × n`; the action mean is `-Kx`.
    pub k: Mat,
    /// Exploration covariance, `k × k`.
    pub sigma: Mat,
}

impl Policy {
    pub fn new(k: Mat, sigma: Mat) -> Self {
        Self {
            k,
            sigma: linalg::symmetrize(&sigma),
        }
    }

    /// The default experiment initialization: every gain entry equal to `fill`
    /// and `Σ = sigma_scale · I`.
    pub fn constant(n: usize, k: usize, fill: f64, sigma_scale: f64) -> Self {
        Self {
            k: Mat::from_element(k, n, fill),
            sigma: Mat::identity(k, k) * sigma_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension(String),
    NonFinite(&'static str),
    NotSymmetric { name: &'static str, asymmetry: f64 },
    QNotPsd { min_eig: f64 },
    RNotPd { min_eig: f64 },
    WNotPsd { min_eig: f64 },
    D0NotPd { min_eig: f64 },
    GammaOutOfRange(f64),
    TauNotPositive(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension(s) => write!(f, "dimension mismatch: {s}"),
            Violation::NonFinite(name) => write!(f, "{name} has non-finite entries"),
            Violation::NotSymmetric { name, asymmetry } => {
                write!(f, "{name} not symmetric (relative asymmetry {asymmetry:.3e})")
            }
            Violation::QNotPsd { min_eig } => {
                write!(f, "Q not positive semidefinite (min eigenvalue {min_eig:.6e})")
            }
            Violation::RNotPd { min_eig } => {
                write!(f, "R not positive definite (min eigenvalue {min_eig:.6e})")
            }
            Violation::WNotPsd { min_eig } => {
                write!(f, "W not positive semidefinite (min eigenvalue {min_eig:.6e})")
            }
            Violation::D0NotPd { min_eig } => {
                write!(f, "D0 not positive definite (min eigenvalue {min_eig:.6e})")
            }
            Violation::GammaOutOfRange(g) => write!(f, "gamma out of (0,1): {g}"),
            Violation::TauNotPositive(t) => write!(f, "tau not positive: {t}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn relative_asymmetry(m: &Mat) -> f64 {
    (m - m.transpose()).norm() / (1.0 + m.norm())
}

impl EnvModel {
    /// Builds an instance, symmetrizing Q, R, W and D0, and rejects it unless
    /// [`validate_instance`] reports no violations.
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: Mat, b: Mat, q: Mat, r: Mat, w: Mat, gamma: f64, tau: f64, d0: Mat) -> Result<Self> {
        let env = Self::from_parts(a, b, q, r, w, gamma, tau, d0);
        let report = validate_instance(&env);
        if report.is_valid() {
            Ok(env)
        } else {
            Err(Error::InvalidInstance(report))
        }
    }

    /// Same as [`EnvModel::new`] without validation. Square inputs are
    /// symmetrized; non-square ones are kept so validation can report them.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(a: Mat, b: Mat, q: Mat, r: Mat, w: Mat, gamma: f64, tau: f64, d0: Mat) -> Self {
        let sym = |m: Mat| if m.is_square() { linalg::symmetrize(&m) } else { m };
        Self {
            a,
            b,
            q: sym(q),
            r: sym(r),
            w: sym(w),
            gamma,
            tau,
            d0: sym(d0),
        }
    }

    /// Scalar (n = k = 1) instance, mostly for hand-checkable examples.
    #[allow(clippy::too_many_arguments)]
    pub fn scalar(a: f64, b: f64, q: f64, r: f64, w: f64, gamma: f64, tau: f64, d0: f64) -> Self {
        let s = |v: f64| Mat::from_element(1, 1, v);
        Self::from_parts(s(a), s(b), s(q), s(r), s(w), gamma, tau, s(d0))
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.b.ncols()
    }

    /// `μ = σ_min(D0)`.
    pub fn mu(&self) -> f64 {
        linalg::min_eigenvalue(&self.d0)
    }

    pub fn sigma_min_r(&self) -> f64 {
        linalg::min_eigenvalue(&self.r)
    }

    pub fn sigma_min_w(&self) -> f64 {
        linalg::min_eigenvalue(&self.w).max(0.0)
    }

    /// `1/√γ`, the admissibility radius for `||A - BK||`.
    pub fn stability_bound(&self) -> f64 {
        1.0 / self.gamma.sqrt()
    }

    pub fn closed_loop(&self, k: &Mat) -> Mat {
        &self.a - &self.b * k
    }

    pub fn closed_loop_norm(&self, k: &Mat) -> f64 {
        linalg::spectral_norm(&self.closed_loop(k))
    }

    pub fn check_policy_dims(&self, k: &Mat, sigma: Option<&Mat>) -> Result<()> {
        let (n, kk) = (self.n(), self.k());
        if k.shape() != (kk, n) {
            return Err(Error::Dimension(format!(
                "gain is {}x{}, expected {kk}x{n}",
                k.nrows(),
                k.ncols()
            )));
        }
        if let Some(s) = sigma {
            if s.shape() != (kk, kk) {
                return Err(Error::Dimension(format!(
                    "covariance is {}x{}, expected {kk}x{kk}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Errors with `NotAdmissible` unless `||A - BK|| < 1/√γ`.
    pub fn ensure_admissible(&self, k: &Mat) -> Result<f64> {
        self.check_policy_dims(k, None)?;
        let norm = self.closed_loop_norm(k);
        let bound = self.stability_bound();
        if norm < bound {
            Ok(norm)
        } else {
            Err(Error::NotAdmissible { norm, bound })
        }
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            n: self.n(),
            k: self.k(),
            gamma: self.gamma,
            tau: self.tau,
            a: linalg::to_row_major(&self.a),
            b: linalg::to_row_major(&self.b),
            q: linalg::to_row_major(&self.q),
            r: linalg::to_row_major(&self.r),
            w: linalg::to_row_major(&self.w),
            d0: linalg::to_row_major(&self.d0),
        }
    }

    /// Loads and validates an instance document. Inputs whose asymmetry
    /// exceeds [`TOL_SYM`] are rejected before symmetrization.
    pub fn from_doc(doc: &InstanceDoc) -> Result<Self> {
        let (n, k) = (doc.n, doc.k);
        let a = linalg::from_row_major(n, n, &doc.a)?;
        let b = linalg::from_row_major(n, k, &doc.b)?;
        let q = linalg::from_row_major(n, n, &doc.q)?;
        let r = linalg::from_row_major(k, k, &doc.r)?;
        let w = linalg::from_row_major(n, n, &doc.w)?;
        let d0 = linalg::from_row_major(n, n, &doc.d0)?;
        let mut report = ValidationReport::default();
        for (name, m) in [("Q", &q), ("R", &r), ("W", &w), ("D0", &d0)] {
            let asymmetry = relative_asymmetry(m);
            if asymmetry > TOL_SYM {
                report.violations.push(Violation::NotSymmetric { name, asymmetry });
            }
        }
        let env = Self::from_parts(a, b, q, r, w, doc.gamma, doc.tau, d0);
        report.violations.extend(validate_instance(&env).violations);
        if report.is_valid() {
            Ok(env)
        } else {
            Err(Error::InvalidInstance(report))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(s)?;
        Self::from_doc(&doc)
    }
}

/// Serialized instance: dimensions, scalars, and row-major matrix arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub tau: f64,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(rename = "W")]
    pub w: Vec<f64>,
    #[serde(rename = "D0")]
    pub d0: Vec<f64>,
}

/// Lists every violated standing assumption of an instance.
pub fn validate_instance(env: &EnvModel) -> ValidationReport {
    let mut v = Vec::new();
    let n = env.a.nrows();
    let k = env.b.ncols();
    let shapes = [
        ("A", env.a.shape(), (n, n)),
        ("B", env.b.shape(), (n, k)),
        ("Q", env.q.shape(), (n, n)),
        ("R", env.r.shape(), (k, k)),
        ("W", env.w.shape(), (n, n)),
        ("D0", env.d0.shape(), (n, n)),
    ];
    let mut dims_ok = n > 0 && k > 0;
    if !dims_ok {
        v.push(Violation::Dimension(format!("n = {n}, k = {k} must be positive")));
    }
    for (name, got, want) in shapes {
        if got != want {
            dims_ok = false;
            v.push(Violation::Dimension(format!(
                "{name} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            )));
        }
    }
    for (name, m) in [
        ("A", &env.a),
        ("B", &env.b),
        ("Q", &env.q),
        ("R", &env.r),
        ("W", &env.w),
        ("D0", &env.d0),
    ] {
        if m.iter().any(|x| !x.is_finite()) {
            dims_ok = false;
            v.push(Violation::NonFinite(name));
        }
    }
    if dims_ok {
        let q_min = linalg::min_eigenvalue(&env.q);
        if q_min < -TOL_SYM * (1.0 + linalg::spectral_norm(&env.q)) {
            v.push(Violation::QNotPsd { min_eig: q_min });
        }
        let r_min = linalg::min_eigenvalue(&env.r);
        if !(r_min > 0.0) {
            v.push(Violation::RNotPd { min_eig: r_min });
        }
        let w_min = linalg::min_eigenvalue(&env.w);
        if w_min < -TOL_SYM * (1.0 + linalg::spectral_norm(&env.w)) {
            v.push(Violation::WNotPsd { min_eig: w_min });
        }
        let d_min = linalg::min_eigenvalue(&env.d0);
        if !(d_min > 0.0) {
            v.push(Violation::D0NotPd { min_eig: d_min });
        }
    }
    if !(env.gamma > 0.0 && env.gamma < 1.0) {
        v.push(Violation::GammaOutOfRange(env.gamma));
    }
    if !(env.tau > 0.0 && env.tau.is_finite()) {
        v.push(Violation::TauNotPositive(env.tau));
    }
    ValidationReport { violations: v }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    Fixed(f64),
    /// `τ = σ_min(R)`.
    SigmaMinR,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Mat::from_row_slice(rows, cols, &data)
}

/// Random instance: standard normal `A`, `B`, with `A` rescaled to
/// `σ_max(A) = 0.9/√γ` and `B` to `σ_max(B) = 1`; `Q = GᵀG + 10⁻³I`,
/// `R = HᵀH + 10⁻¹I`; `W = 10⁻²I`; `D0 = I`. Deterministic in `seed`.
///
/// Without the `B` normalization the all-`0.01` starting gain is already
/// outside `||A - BK|| < 1/√γ` at `n = 40`.
pub fn random_instance(n: usize, k: usize, seed: u64, gamma: f64, tau_mode: TauMode) -> Result<EnvModel> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!("n = {n}, k = {k} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = normal_matrix(&mut rng, n, n);
    let mut b = normal_matrix(&mut rng, n, k);
    let g = normal_matrix(&mut rng, n, n);
    let h = normal_matrix(&mut rng, k, k);

    let target = RANDOM_A_SCALE / gamma.sqrt();
    let smax = linalg::spectral_norm(&a);
    if smax > 0.0 {
        a *= target / smax;
    }
    let bmax = linalg::spectral_norm(&b);
    if bmax > 0.0 {
        b *= RANDOM_B_SCALE / bmax;
    }
    let q = g.transpose() * &g + Mat::identity(n, n) * 1e-3;
    let r = h.transpose() * &h + Mat::identity(k, k) * 1e-1;
    let w = Mat::identity(n, n) * 1e-2;
    let d0 = Mat::identity(n, n);
    let r = linalg::symmetrize(&r);
    let tau = match tau_mode {
        TauMode::Fixed(t) => t,
        TauMode::SigmaMinR => linalg::min_eigenvalue(&r),
    };
    EnvModel::new(a, b, q, r, w, gamma, tau, d0)
}

/// `1/√γ - ||A - BK||`; positive iff the gain is admissible.
pub fn admissibility_margin(env: &EnvModel, policy: &Policy) -> f64 {
    env.stability_bound() - env.closed_loop_norm(&policy.k)
}
