//! The diffeomorphic activation: rescale into the unit domain, transform,
//! rescale back, identity outside `[-r, r]`.
//!
//! ```
//! use digraf::activation::Digraf;
//! use digraf::nn::{GraphIndex, Tensor};
//!
//! let unit = Digraf::new(5.0, 2).unwrap();
//! let h = Tensor::from_vec(1, 3, vec![-2.5, 0.0, 7.0]).unwrap();
//! let theta = Tensor::from_vec(1, 1, vec![1.0]).unwrap();
//! let index = GraphIndex::single(1).unwrap();
//! let (out, _) = unit.forward(&h, &theta, &index, false).unwrap();
//! assert!((out.get(0, 0) - (10.0 * 0.445328 - 5.0)).abs() < 1e-5);
//! assert_eq!(out.get(0, 2), 7.0);
//! ```

mod hyper;

use serde::{Deserialize, Serialize};

use crate::cpab::{CpaField, Tessellation, VelocityBasis};
use crate::error::{Error, Result};
use crate::nn::{GraphIndex, ParamId, Params, PoolMode, Tensor};

pub use hyper::{Conv, HyperNetwork, HYPER_HIDDEN};

/// Slack allowed on the `|theta| <= 1` contract.
pub const THETA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationConfig {
    pub omega_half_width: f64,
    pub n_cells: usize,
    pub adaptive: bool,
    pub pool: PoolMode,
    pub lambda_reg: f64,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        Self {
            omega_half_width: 5.0,
            n_cells: 16,
            adaptive: true,
            pool: PoolMode::Mean,
            lambda_reg: 1e-3,
        }
    }
}

impl ActivationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_half_width > 0.0 && self.omega_half_width.is_finite()) {
            return Err(Error::Input(format!(
                "omega half width must be positive, got {}",
                self.omega_half_width
            )));
        }
        if self.n_cells < 2 {
            return Err(Error::Input(format!("need at least 2 cells, got {}", self.n_cells)));
        }
        if !(self.lambda_reg >= 0.0 && self.lambda_reg.is_finite()) {
            return Err(Error::Input(format!("lambda_reg must be >= 0, got {}", self.lambda_reg)));
        }
        Ok(())
    }

    pub fn theta_dim(&self) -> usize {
        self.n_cells - 1
    }

    pub fn unit(&self) -> Result<Digraf> {
        self.validate()?;
        Digraf::new(self.omega_half_width, self.n_cells)
    }
}

/// The elementwise activation for a fixed `r` and unit-domain tessellation.
#[derive(Debug, Clone)]
pub struct Digraf {
    r: f64,
    basis: VelocityBasis,
    bounded: bool,
}

/// Saved forward state for [`Digraf::backward`].
#[derive(Debug, Clone)]
pub struct DigrafCache {
    shape: [usize; 2],
    graphs: Vec<usize>,
    n_graphs: usize,
    grad_x: Vec<f64>,
    grad_theta: Vec<f64>,
}

impl Digraf {
    pub fn new(r: f64, n_cells: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Input(format!("omega half width must be positive, got {r}")));
        }
        let tess = Tessellation::unit(n_cells)?;
        Ok(Self {
            r,
            basis: VelocityBasis::new(&tess),
            bounded: true,
        })
    }

    /// Drops the `|theta| <= 1` contract, for fitting without a bounding head.
    pub fn unbounded(mut self) -> Self {
        self.bounded = false;
        self
    }

    pub fn half_width(&self) -> f64 {
        self.r
    }

    pub fn basis(&self) -> &VelocityBasis {
        &self.basis
    }

    pub fn theta_dim(&self) -> usize {
        self.basis.dim()
    }

    /// Scalar evaluation returning `(value, d/dh, d/dtheta)`.
    pub fn apply(&self, theta: &[f64], h: f64) -> Result<(f64, f64, Vec<f64>)> {
        self.check_theta(theta, 1)?;
        let field = CpaField::new(&self.basis, theta)?;
        let mut gt = vec![0.0; self.theta_dim()];
        let (y, gx) = self.entry(&field, h, Some(&mut gt));
        Ok((y, gx, gt))
    }

    fn entry(&self, field: &CpaField<'_>, h: f64, grad_theta: Option<&mut [f64]>) -> (f64, f64) {
        let r = self.r;
        if !(h.abs() <= r) {
            if let Some(g) = grad_theta {
                g.fill(0.0);
            }
            return (h, 1.0);
        }
        let u = ((h + r) / (2.0 * r)).clamp(0.0, 1.0);
        let (y, gx) = field.integrate(u, grad_theta);
        (2.0 * r * y - r, gx)
    }

    fn check_theta(&self, theta: &[f64], rows: usize) -> Result<()> {
        let d = self.theta_dim();
        if theta.len() != rows * d {
            return Err(Error::shape(
                "digraf",
                format!("{} theta values for {rows} graphs of dimension {d}", theta.len()),
            ));
        }
        if let Some(v) = theta.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite theta entry {v}")));
        }
        if self.bounded {
            if let Some(v) = theta.iter().find(|v| v.abs() > 1.0 + THETA_SLACK) {
                return Err(Error::Contract(format!("theta entry {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// Applies the activation to `h` with `theta` row `g` for rows of graph `g`.
    pub fn forward(
        &self,
        h: &Tensor,
        theta: &Tensor,
        index: &GraphIndex,
        keep_cache: bool,
    ) -> Result<(Tensor, Option<DigrafCache>)> {
        if h.rows() != index.n_rows() {
            return Err(Error::shape(
                "digraf",
                format!("{} rows, index covers {}", h.rows(), index.n_rows()),
            ));
        }
        if theta.rows() != index.n_graphs() {
            return Err(Error::shape(
                "digraf",
                format!("{} theta rows for {} graphs", theta.rows(), index.n_graphs()),
            ));
        }
        self.check_theta(theta.data(), theta.rows())?;
        if !h.is_finite() {
            return Err(Error::Input("digraf: non-finite features".into()));
        }
        let fields = (0..theta.rows())
            .map(|g| CpaField::new(&self.basis, theta.row(g)))
            .collect::<Result<Vec<_>>>()?;
        let (rows, cols) = (h.rows(), h.cols());
        let d = self.theta_dim();
        let mut out = Tensor::zeros(rows, cols);
        let mut cache = keep_cache.then(|| DigrafCache {
            shape: [rows, cols],
            graphs: index.index().to_vec(),
            n_graphs: index.n_graphs(),
            grad_x: vec![0.0; rows * cols],
            grad_theta: vec![0.0; rows * cols * d],
        });
        for (row, &g) in index.index().iter().enumerate() {
            let field = &fields[g];
            for j in 0..cols {
                let k = row * cols + j;
                let x = h.data()[k];
                out.data_mut()[k] = match cache.as_mut() {
                    Some(c) => {
                        let (y, gx) = self.entry(field, x, Some(&mut c.grad_theta[k * d..(k + 1) * d]));
                        c.grad_x[k] = gx;
                        y
                    }
                    None => self.entry(field, x, None).0,
                };
            }
        }
        Ok((out, cache))
    }

    /// Returns gradients with respect to the features and to each theta row.
    pub fn backward(&self, upstream: &Tensor, cache: &DigrafCache) -> Result<(Tensor, Tensor)> {
        if upstream.shape() != cache.shape {
            return Err(Error::shape(
                "digraf backward",
                format!("upstream {:?}, forward {:?}", upstream.shape(), cache.shape),
            ));
        }
        let [rows, cols] = cache.shape;
        let d = self.theta_dim();
        let two_r = 2.0 * self.r;
        let mut gh = Tensor::zeros(rows, cols);
        let mut gt = Tensor::zeros(cache.n_graphs, d);
        for (row, &g) in cache.graphs.iter().enumerate() {
            for j in 0..cols {
                let k = row * cols + j;
                let up = upstream.data()[k];
                gh.data_mut()[k] = up * cache.grad_x[k];
                let src = &cache.grad_theta[k * d..(k + 1) * d];
                for (o, v) in gt.row_mut(g).iter_mut().zip(src) {
                    *o += up * two_r * v;
                }
            }
        }
        Ok((gh, gt))
    }
}

/// One zero-initialized raw theta per backbone layer; use through `tanh`.
pub fn direct_theta_variant(params: &mut Params, layers: usize, config: &ActivationConfig) -> Result<Vec<ParamId>> {
    config.validate()?;
    if config.adaptive {
        return Err(Error::Input("direct theta requires adaptive = false".into()));
    }
    Ok((0..layers)
        .map(|l| params.add(format!("theta.{l}"), Tensor::zeros(1, config.theta_dim())))
        .collect())
}
