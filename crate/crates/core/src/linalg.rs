//! Dense linear-algebra helpers shared by every solver.
//!
//! Everything works on `DMatrix<f64>`; dimensions in this problem are small
//! enough (n <= a few hundred) that dense factorizations are the right tool.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Eigenvalue floor below which a covariance is treated as singular.
pub const EIG_FLOOR: f64 = 1e-14;

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Largest singular value, from the top eigenvalue of the smaller Gram matrix.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn sigma_min(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().min()
}

/// Eigenvalues of a symmetric matrix (the input is symmetrized first).
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Inverse of a symmetric positive-definite matrix through its
/// eigendecomposition. Eigenvalues below [`EIG_FLOOR`] are an error.
pub fn spd_inverse(m: &Mat) -> Result<Mat> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > EIG_FLOOR) {
        return Err(Error::SingularSigma { min_eig });
    }
    let inv_vals = eig.eigenvalues.map(|v| 1.0 / v);
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * Mat::from_diagonal(&inv_vals) * v.transpose())))
}

/// `log det` of a symmetric positive-definite matrix.
pub fn spd_logdet(m: &Mat) -> Result<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > EIG_FLOOR) {
        return Err(Error::SingularSigma { min_eig });
    }
    Ok(eig.eigenvalues.iter().map(|v| v.ln()).sum())
}

/// Symmetric square root factor `F` with `F Fᵀ = M` for a PSD matrix.
/// Negative round-off eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &Mat) -> Mat {
    let eig = SymmetricEigen::new(symmetrize(m));
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&vals)
}

/// Solves `M X = B` for symmetric positive-definite `M`.
pub fn spd_solve(m: &Mat, b: &Mat) -> Result<Mat> {
    match m.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::SingularSigma {
            min_eig: min_eigenvalue(m),
        }),
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LyapunovMethod {
    /// Plain fixed-point iteration `X <- C + γ FᵀXF` from `X = 0`.
    FixedPoint,
    /// Squared-operator (Smith) doubling: after `j` steps the iterate holds the
    /// first `2^j` terms of the same series.
    #[default]
    Doubling,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Stop when `||X - C - γFᵀXF||_F <= tol (1 + ||X||_F)`.
    pub tol: f64,
    /// Iteration cap; `None` derives it from the contraction rate.
    pub max_iter: Option<usize>,
    pub method: LyapunovMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: None,
            method: LyapunovMethod::Doubling,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn fixed_point(tol: f64, max_iter: Option<usize>) -> Self {
        Self {
            tol,
            max_iter,
            method: LyapunovMethod::FixedPoint,
        }
    }
}

/// Doubling step cap when none is given: `2^64` series terms.
pub const DOUBLING_MAX_STEPS: usize = 64;

/// Fixed-point iteration count needed for the series to reach `tol`, given the
/// per-term contraction `γ ||F||²`, plus 50 iterations of headroom.
pub fn default_fixed_point_iters(tol: f64, gamma: f64, f_norm: f64) -> usize {
    let rate = gamma * f_norm * f_norm;
    if rate <= 0.0 || !rate.is_finite() {
        return 50;
    }
    if rate >= 1.0 {
        return 100_000;
    }
    let base = (tol.ln() / rate.ln()).ceil().max(0.0) as usize;
    base + 50
}

fn lyapunov_residual(x: &Mat, c: &Mat, f: &Mat, gamma: f64) -> f64 {
    (x - c - (f.transpose() * x * f) * gamma).norm()
}

/// Solves the discounted Lyapunov equation `X = C + γ Fᵀ X F`.
///
/// Requires `γ ||F||² < 1` for the series `Σ γᵗ (Fᵗ)ᵀ C Fᵗ` to converge; the
/// caller is responsible for that check. Returns the solution and the number
/// of iterations performed.
pub fn solve_discounted_lyapunov(c: &Mat, f: &Mat, gamma: f64, opts: &SolveOptions) -> Result<(Mat, usize)> {
    let n = c.nrows();
    if c.ncols() != n || f.nrows() != n || f.ncols() != n {
        return Err(Error::Dimension(format!(
            "Lyapunov: C is {}x{}, F is {}x{}",
            c.nrows(),
            c.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    match opts.method {
        LyapunovMethod::FixedPoint => {
            let fp_iters = opts
                .max_iter
                .unwrap_or_else(|| default_fixed_point_iters(opts.tol, gamma, spectral_norm(f)));
            let ft = f.transpose();
            let mut x = Mat::zeros(n, n);
            let mut residual = f64::INFINITY;
            for it in 1..=fp_iters {
                let next = symmetrize(&(c + (&ft * &x * f) * gamma));
                // ||X_t - C - γFᵀX_tF|| is exactly ||X_t - X_{t+1}||.
                residual = (&next - &x).norm();
                let done = residual <= opts.tol * (1.0 + x.norm()) && it > 1;
                x = next;
                if done {
                    return Ok((x, it));
                }
            }
            Err(Error::NoConvergence {
                what: "fixed-point Lyapunov iteration",
                iters: fp_iters,
                residual,
            })
        }
        LyapunovMethod::Doubling => {
            let max_steps = opts.max_iter.map(|m| m.max(1)).unwrap_or(DOUBLING_MAX_STEPS);
            let mut x = symmetrize(c);
            let mut g = f * gamma.sqrt();
            let mut residual = f64::INFINITY;
            for step in 1..=max_steps {
                let inc = g.transpose() * &x * &g;
                let small = inc.norm() <= opts.tol * (1.0 + x.norm());
                x = symmetrize(&(&x + inc));
                g = &g * &g;
                // The full residual costs two products; only pay for it once
                // the increments have died out.
                if small {
                    residual = lyapunov_residual(&x, c, f, gamma);
                    if residual <= opts.tol * (1.0 + x.norm()) {
                        return Ok((x, step));
                    }
                }
            }
            Err(Error::NoConvergence {
                what: "doubling Lyapunov iteration",
                iters: max_steps,
                residual,
            })
        }
    }
}

/// Row-major flattening used by every serialized matrix.
pub fn to_row_major(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Mat> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "expected {rows}x{cols} = {} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(Mat::from_row_slice(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -5.0, 1.0]));
        assert!((spectral_norm(&m) - 5.0).abs() < 1e-14);
        assert!((sigma_min(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_rejects_singular() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_inverse(&m), Err(Error::SingularSigma { .. })));
        assert!(matches!(spd_logdet(&m), Err(Error::SingularSigma { .. })));
    }

    #[test]
    fn logdet_matches_product_of_eigenvalues() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let det: f64 = 2.0 * 1.0 - 0.25;
        assert!((spd_logdet(&m).unwrap() - det.ln()).abs() < 1e-14);
    }

    #[test]
    fn scalar_lyapunov_is_geometric_series() {
        let c = Mat::from_element(1, 1, 1.0);
        let f = Mat::from_element(1, 1, 0.5);
        for method in [LyapunovMethod::FixedPoint, LyapunovMethod::Doubling] {
            let opts = SolveOptions {
                tol: 1e-14,
                max_iter: None,
                method,
            };
            let (x, _) = solve_discounted_lyapunov(&c, &f, 0.8, &opts).unwrap();
            assert!((x[(0, 0)] - 1.25).abs() < 1e-12, "{method:?}: {}", x[(0, 0)]);
        }
    }

    #[test]
    fn fixed_point_reports_no_convergence() {
        let c = Mat::from_element(1, 1, 1.0);
        let f = Mat::from_element(1, 1, 0.99);
        let opts = SolveOptions::fixed_point(1e-14, Some(5));
        assert!(matches!(
            solve_discounted_lyapunov(&c, &f, 0.99, &opts),
            Err(Error::NoConvergence { iters: 5, .. })
        ));
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_row_slice(3, 2, &[0.5, -1.0, 2.0, 0.0, 1.0, 3.0]);
        assert!((trace_product(&a, &b) - (&a * &b).trace()).abs() < 1e-14);
    }

    #[test]
    fn row_major_roundtrip() {
        let m = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = to_row_major(&m);
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(from_row_major(2, 3, &v).unwrap(), m);
        assert!(from_row_major(3, 3, &v).is_err());
    }
}
