//! Fréchet distance between Gaussian fits of two feature sets.

use crate::eval::{EvalError, EvalFeatures};
use ndarray::{Array1, Array2};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns).
pub fn symmetric_eig(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eig needs a square matrix");
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = Array1::from_iter((0..n).map(|i| m[(i, i)]));
    (eigenvalues, v)
}

fn mean_rows(x: &Array2<f64>) -> Array1<f64> {
    x.mean_axis(ndarray::Axis(0)).expect("non-empty")
}

/// Sample covariance (N-1 denominator).
fn covariance(x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let d = x.ncols();
    let mu = mean_rows(x);
    let mut cov = Array2::zeros((d, d));
    for row in x.rows() {
        for i in 0..d {
            let di = row[i] - mu[i];
            for j in i..d {
                cov[(i, j)] += di * (row[j] - mu[j]);
            }
        }
    }
    let denom = (n - 1).max(1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Symmetric PSD square root via eigendecomposition (negative rounding
/// clamped to zero).
fn psd_sqrt(a: &Array2<f64>) -> Array2<f64> {
    let (vals, vecs) = symmetric_eig(a);
    let n = a.nrows();
    let mut out = Array2::zeros((n, n));
    for k in 0..n {
        let s = vals[k].max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += s * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    out
}

pub const FID_REGULARIZER: f64 = 1e-6;
pub const FID_MIN_SAMPLES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidOutput {
    pub value: f64,
    /// Regularization kicked in because a side had fewer than d+1 samples.
    pub regularized: bool,
}

/// `||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^(1/2))` with the
/// symmetric-safe square root `S_r^(1/2) S_g S_r^(1/2)`.
pub fn fid(real: &EvalFeatures, generated: &EvalFeatures) -> Result<FidOutput, EvalError> {
    let d = real.rows.ncols();
    if generated.rows.ncols() != d {
        return Err(EvalError::DimensionMismatch { left: d, right: generated.rows.ncols() });
    }
    for (name, side) in [("real", real), ("generated", generated)] {
        if side.rows.nrows() < FID_MIN_SAMPLES {
            return Err(EvalError::TooFewSamples {
                what: format!("fid {name} side"),
                have: side.rows.nrows(),
                need: FID_MIN_SAMPLES,
            });
        }
    }
    let regularized = real.rows.nrows() < d + 1 || generated.rows.nrows() < d + 1;
    let mu_r = mean_rows(&real.rows);
    let mu_g = mean_rows(&generated.rows);
    let mut sigma_r = covariance(&real.rows);
    let mut sigma_g = covariance(&generated.rows);
    if regularized {
        for i in 0..d {
            sigma_r[(i, i)] += FID_REGULARIZER;
            sigma_g[(i, i)] += FID_REGULARIZER;
        }
    }
    let mean_term: f64 = mu_r.iter().zip(mu_g.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    let sqrt_r = psd_sqrt(&sigma_r);
    let inner = sqrt_r.dot(&sigma_g).dot(&sqrt_r);
    let (inner_vals, _) = symmetric_eig(&inner);
    let tr_sqrt: f64 = inner_vals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    let trace_term: f64 = (0..d).map(|i| sigma_r[(i, i)] + sigma_g[(i, i)]).sum::<f64>()
        - 2.0 * tr_sqrt;
    Ok(FidOutput { value: mean_term + trace_term, regularized })
}
