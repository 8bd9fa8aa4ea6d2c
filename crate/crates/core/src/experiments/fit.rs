use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::linspace;
use crate::activation::Digraf;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, softplus, Adam, Baseline, GraphIndex, Params, Tensor};
use crate::rng::Rng;

pub const GRID_POINTS: usize = 1024;
pub const RESTARTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitTarget {
    Elu,
    Tanh,
    Sigmoid,
    Softplus,
    Identity,
}

impl FitTarget {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            FitTarget::Elu => Baseline::Elu.apply(x),
            FitTarget::Tanh => x.tanh(),
            FitTarget::Sigmoid => sigmoid(x),
            FitTarget::Softplus => softplus(x),
            FitTarget::Identity => x,
        }
    }
}

impl fmt::Display for FitTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitTarget::Elu => "elu",
            FitTarget::Tanh => "tanh",
            FitTarget::Sigmoid => "sigmoid",
            FitTarget::Softplus => "softplus",
            FitTarget::Identity => "identity",
        })
    }
}

impl FromStr for FitTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elu" => Ok(FitTarget::Elu),
            "tanh" => Ok(FitTarget::Tanh),
            "sigmoid" => Ok(FitTarget::Sigmoid),
            "softplus" => Ok(FitTarget::Softplus),
            "identity" => Ok(FitTarget::Identity),
            other => Err(Error::Input(format!("unknown fit target `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub target: FitTarget,
    pub r: f64,
    pub n_cells: usize,
    pub iters: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            target: FitTarget::Elu,
            r: 5.0,
            n_cells: 16,
            iters: 2000,
            lr: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub target: FitTarget,
    pub theta: Vec<f64>,
    /// Mean squared error of the fitted activation on the grid.
    pub cpab_error: f64,
    pub prelu_k1_error: f64,
    pub prelu_k2_error: f64,
    pub prelu_k3_error: f64,
    /// CPAB training loss per iteration.
    pub curve: Vec<f64>,
    pub grid: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl FitReport {
    pub fn prelu_error(&self, k: usize) -> Option<f64> {
        match k {
            1 => Some(self.prelu_k1_error),
            2 => Some(self.prelu_k2_error),
            3 => Some(self.prelu_k3_error),
            _ => None,
        }
    }
}

fn diverged(what: &str, iter: usize, loss: f64) -> Error {
    Error::Diverged(format!("{what} fit: loss {loss} at iteration {iter}"))
}

/// The activation output mapped affinely so that its endpoints match the
/// target's, which the endpoint-fixing transform cannot move on its own.
struct Endpoints {
    lo: f64,
    scale: f64,
    r: f64,
}

impl Endpoints {
    fn new(target: FitTarget, r: f64) -> Result<Self> {
        let (lo, hi) = (target.eval(-r), target.eval(r));
        if !(hi > lo) {
            return Err(Error::Input(format!("{target} is not increasing on [-{r}, {r}]")));
        }
        Ok(Self {
            lo,
            scale: (hi - lo) / (2.0 * r),
            r,
        })
    }

    fn map(&self, y: f64) -> f64 {
        self.lo + self.scale * (y + self.r)
    }
}

/// Fits the activation with a directly learned, unbounded theta, and the
/// piecewise-ReLU baselines with `K = 1, 2, 3` hinges, all on the same grid
/// and iteration budget.
pub fn fit_activation(config: &FitConfig) -> Result<FitReport> {
    if !(config.r > 0.0 && config.r.is_finite()) {
        return Err(Error::Input(format!("r must be positive, got {}", config.r)));
    }
    if config.iters == 0 || !(config.lr > 0.0) {
        return Err(Error::Input(format!(
            "need iters >= 1 and lr > 0, got {} and {}",
            config.iters, config.lr
        )));
    }
    let unit = Arc::new(Digraf::new(config.r, config.n_cells)?.unbounded());
    let grid = linspace(-config.r, config.r, GRID_POINTS);
    let target: Vec<f64> = grid.iter().map(|&x| config.target.eval(x)).collect();
    let ends = Endpoints::new(config.target, config.r)?;

    let h = Tensor::from_vec(1, GRID_POINTS, grid.clone())?;
    let index = GraphIndex::single(1)?;
    let mut params = Params::new();
    let theta_id = params.add("theta", Tensor::zeros(1, unit.theta_dim()));
    let mut adam = Adam::new(&params, config.lr);
    let n = GRID_POINTS as f64;
    let mut curve = Vec::with_capacity(config.iters);

    let evaluate = |theta: &Tensor, cache: bool| unit.forward(&h, theta, &index, cache);
    for iter in 0..config.iters {
        let (out, cache) = evaluate(params.get(theta_id), true)?;
        let mut loss = 0.0;
        let mut up = Tensor::zeros(1, GRID_POINTS);
        for (k, (&y, &t)) in out.data().iter().zip(&target).enumerate() {
            let d = ends.map(y) - t;
            loss += d * d / n;
            up.data_mut()[k] = 2.0 * d * ends.scale / n;
        }
        if !loss.is_finite() {
            return Err(diverged("cpab", iter, loss));
        }
        curve.push(loss);
        let (_, grad) = unit.backward(&up, cache.as_ref().expect("cache requested"))?;
        adam.step(&mut params, &[grad])?;
    }

    let theta = params.get(theta_id).clone();
    let (out, _) = evaluate(&theta, false)?;
    let fitted: Vec<f64> = out.data().iter().map(|&y| ends.map(y)).collect();
    let cpab_error = mse(&fitted, &target);

    let mut rng = Rng::new(config.seed);
    let mut prelu = [0.0; 3];
    for (slot, k) in prelu.iter_mut().zip(1..=3) {
        *slot = (0..RESTARTS)
            .map(|_| fit_piecewise_relu(&grid, &target, k, config, &mut rng.fork(k as u64)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
    }

    Ok(FitReport {
        target: config.target,
        theta: theta.into_vec(),
        cpab_error,
        prelu_k1_error: prelu[0],
        prelu_k2_error: prelu[1],
        prelu_k3_error: prelu[2],
        curve,
        grid,
        fitted,
    })
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// `c + sum_k s_k relu(x - t_k)`, returning the final grid MSE.
fn fit_piecewise_relu(grid: &[f64], target: &[f64], k: usize, config: &FitConfig, rng: &mut Rng) -> Result<f64> {
    let r = config.r;
    let mut params = Params::new();
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let c = params.add("c", Tensor::scalar(mean));
    let s = params.add(
        "s",
        Tensor::from_vec(1, k, (0..k).map(|_| rng.uniform(-1.0, 1.0)).collect())?,
    );
    let t = params.add(
        "t",
        Tensor::from_vec(1, k, (0..k).map(|_| rng.uniform(-r, r)).collect())?,
    );
    let mut adam = Adam::new(&params, config.lr);
    let n = grid.len() as f64;
    let predict = |p: &Params, x: f64| {
        let (s, t) = (p.get(s).data(), p.get(t).data());
        p.get(c).item() + s.iter().zip(t).map(|(s, t)| s * (x - t).max(0.0)).sum::<f64>()
    };
    for iter in 0..config.iters {
        let mut gc = 0.0;
        let mut gs = vec![0.0; k];
        let mut gt = vec![0.0; k];
        let mut loss = 0.0;
        for (&x, &y) in grid.iter().zip(target) {
            let d = predict(&params, x) - y;
            loss += d * d / n;
            let w = 2.0 * d / n;
            gc += w;
            for j in 0..k {
                let (sj, tj) = (params.get(s).data()[j], params.get(t).data()[j]);
                if x > tj {
                    gs[j] += w * (x - tj);
                    gt[j] -= w * sj;
                }
            }
        }
        if !loss.is_finite() {
            return Err(diverged("piecewise-relu", iter, loss));
        }
        let grads = [
            Tensor::scalar(gc),
            Tensor::from_vec(1, k, gs)?,
            Tensor::from_vec(1, k, gt)?,
        ];
        adam.step(&mut params, &grads)?;
    }
    let fitted: Vec<f64> = grid.iter().map(|&x| predict(&params, x)).collect();
    Ok(mse(&fitted, target))
}
