//! Gaussian smoothness prior over velocity fields and the quadratic
//! regularizer it induces on the parameters.
//!
//! The covariance is assembled in coefficient space as a squared-exponential
//! kernel over cell centers, applied independently to slopes and intercepts,
//! and then projected onto the parameter space through the velocity basis.

use serde::{Deserialize, Serialize};

use crate::cpab::{Tessellation, VelocityBasis};
use crate::error::{Error, Result};

/// Diagonal jitter added before inversion.
pub const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorMatrix {
    tess: Tessellation,
    dim: usize,
    /// Row-major `dim x dim` inverse covariance.
    sigma_inv: Vec<f64>,
    length_scale: f64,
    variance: f64,
}

impl PriorMatrix {
    pub fn new(tess: &Tessellation, length_scale: f64, variance: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::Input(format!("length_scale must be > 0, got {length_scale}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Input(format!("variance must be > 0, got {variance}")));
        }
        if tess.n_cells() < 2 {
            return Err(Error::Input("prior needs at least two cells".into()));
        }
        let basis = VelocityBasis::new(tess);
        let n = tess.n_cells();
        let d = basis.dim();
        let h = tess.cell_width();
        let centers: Vec<f64> = (0..n).map(|c| tess.a() + (c as f64 + 0.5) * h).collect();
        let kernel = |i: usize, j: usize| {
            let diff = centers[i] - centers[j];
            variance * (-diff * diff / (2.0 * length_scale * length_scale)).exp()
        };

        // Sigma_theta = B^T (K kron I2) B; the kron structure only couples
        // slope rows with slope rows and intercept rows with intercept rows.
        let mut cov = vec![0.0; d * d];
        for p in 0..d {
            for q in p..d {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let k = kernel(i, j);
                        acc += k
                            * (basis.get(2 * i, p) * basis.get(2 * j, q)
                                + basis.get(2 * i + 1, p) * basis.get(2 * j + 1, q));
                    }
                }
                cov[p * d + q] = acc;
                cov[q * d + p] = acc;
            }
            cov[p * d + p] += JITTER;
        }
        let sigma_inv = spd_inverse(&cov, d)?;
        Ok(Self {
            tess: tess.clone(),
            dim: d,
            sigma_inv,
            length_scale,
            variance,
        })
    }

    /// Prior with length scale `0.1 * (b - a)` and unit variance.
    pub fn with_defaults(tess: &Tessellation) -> Result<Self> {
        Self::new(tess, 0.1 * (tess.b() - tess.a()), 1.0)
    }

    /// Wraps an explicit inverse covariance. Used for fixtures.
    pub fn from_inverse(tess: &Tessellation, sigma_inv: Vec<f64>) -> Result<Self> {
        let d = tess.n_cells().saturating_sub(1);
        if sigma_inv.len() != d * d {
            return Err(Error::Input(format!(
                "inverse covariance has {} entries, expected {}",
                sigma_inv.len(),
                d * d
            )));
        }
        Ok(Self {
            tess: tess.clone(),
            dim: d,
            sigma_inv,
            length_scale: f64::NAN,
            variance: f64::NAN,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tessellation(&self) -> &Tessellation {
        &self.tess
    }

    pub fn sigma_inv(&self) -> &[f64] {
        &self.sigma_inv
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `theta^T Sigma^-1 theta` and its gradient `2 Sigma^-1 theta`.
    pub fn quadratic(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        if theta.len() != self.dim {
            return Err(Error::Input(format!(
                "theta has length {}, prior expects {}",
                theta.len(),
                self.dim
            )));
        }
        let d = self.dim;
        let mut grad = vec![0.0; d];
        let mut value = 0.0;
        for (i, g) in grad.iter_mut().enumerate() {
            let row = &self.sigma_inv[i * d..(i + 1) * d];
            let s: f64 = row.iter().zip(theta).map(|(a, t)| a * t).sum();
            value += theta[i] * s;
            *g = 2.0 * s;
        }
        Ok((value, grad))
    }
}

/// Sum of the quadratic forms over all layers, with one gradient per layer.
pub fn regularizer(prior: &PriorMatrix, thetas: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(thetas.len());
    for theta in thetas {
        let (v, g) = prior.quadratic(theta)?;
        total += v;
        grads.push(g);
    }
    Ok((total, grads))
}

/// Cholesky factor `L` (row-major, lower triangular) with `A = L L^T`.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky factor.
pub fn spd_inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for e in 0..n {
        // forward solve L y = e_e
        for i in 0..n {
            let mut s = if i == e { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * n + k] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        // back solve L^T x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[k * n + i] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for i in 0..n {
            inv[i * n + e] = col[i];
        }
    }
    // symmetrize away rounding asymmetry
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = m;
            inv[j * n + i] = m;
        }
    }
    Ok(inv)
}
