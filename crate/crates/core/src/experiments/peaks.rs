use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{CurvePoint, SeedRun};
use crate::activation::{direct_theta_variant, ActivationConfig, Digraf};
use crate::cpab::Tessellation;
use crate::data::{sample_peaks, TabularDataset};
use crate::error::{Error, Result};
use crate::nn::{
    glorot, Adam, Baseline, GraphIndex, ParamId, Params, PoolMode, RegressionLoss, Tape, Tensor,
    Var,
};
use crate::prior::PriorMatrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeaksActivation {
    Relu,
    Tanh,
    Digraf,
}

impl fmt::Display for PeaksActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeaksActivation::Relu => "relu",
            PeaksActivation::Tanh => "tanh",
            PeaksActivation::Digraf => "digraf",
        })
    }
}

impl FromStr for PeaksActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(PeaksActivation::Relu),
            "tanh" => Ok(PeaksActivation::Tanh),
            "digraf" => Ok(PeaksActivation::Digraf),
            other => Err(Error::Input(format!("unknown peaks activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeaksConfig {
    pub activation: PeaksActivation,
    pub n_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden: usize,
    pub omega_half_width: f64,
    pub n_cells: usize,
    pub lambda_reg: f64,
    pub seed: u64,
}

impl Default for PeaksConfig {
    fn default() -> Self {
        Self {
            activation: PeaksActivation::Digraf,
            n_samples: 50_000,
            epochs: 200,
            batch_size: 512,
            lr: 1e-3,
            hidden: 64,
            omega_half_width: 5.0,
            n_cells: 16,
            lambda_reg: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeaksRun {
    pub test_mse: f64,
    /// Training objective per epoch (task loss plus regularizer) and test MSE.
    pub curve: Vec<CurvePoint>,
    /// Bounded theta of each activation layer; empty for fixed activations.
    pub thetas: Vec<Vec<f64>>,
    pub wall_seconds: f64,
}

impl PeaksRun {
    pub fn to_seed_run(&self, seed: u64) -> SeedRun {
        SeedRun {
            seed,
            metrics: [("test_mse".to_string(), self.test_mse)].into_iter().collect(),
            curve: self.curve.clone(),
            wall_seconds: self.wall_seconds,
        }
    }
}

/// Bias-free `2 -> hidden -> hidden -> 1` perceptron.
struct Mlp {
    weights: [ParamId; 3],
    thetas: Vec<ParamId>,
    unit: Option<Arc<Digraf>>,
    prior: Option<Arc<PriorMatrix>>,
    kind: PeaksActivation,
}

impl Mlp {
    fn new(params: &mut Params, rng: &mut Rng, config: &PeaksConfig) -> Result<Self> {
        let h = config.hidden;
        let weights = [
            params.add("w1", glorot(rng, 2, h)),
            params.add("w2", glorot(rng, h, h)),
            params.add("w3", glorot(rng, h, 1)),
        ];
        let (mut thetas, mut unit, mut prior) = (Vec::new(), None, None);
        if config.activation == PeaksActivation::Digraf {
            let act = ActivationConfig {
                omega_half_width: config.omega_half_width,
                n_cells: config.n_cells,
                adaptive: false,
                pool: PoolMode::Mean,
                lambda_reg: config.lambda_reg,
            };
            thetas = direct_theta_variant(params, 2, &act)?;
            unit = Some(Arc::new(act.unit()?));
            prior = Some(Arc::new(PriorMatrix::with_defaults(&Tessellation::unit(config.n_cells)?)?));
        }
        Ok(Self {
            weights,
            thetas,
            unit,
            prior,
            kind: config.activation,
        })
    }

    fn activate(&self, tape: &mut Tape, params: &Params, h: Var, layer: usize, index: &Arc<GraphIndex>) -> Result<Var> {
        match self.kind {
            PeaksActivation::Relu => tape.activation(h, Baseline::Relu),
            PeaksActivation::Tanh => tape.activation(h, Baseline::Tanh),
            PeaksActivation::Digraf => {
                let raw = tape.param(params, self.thetas[layer]);
                let theta = tape.activation(raw, Baseline::Tanh)?;
                tape.digraf(self.unit.as_ref().expect("digraf unit"), h, theta, index)
            }
        }
    }

    fn forward(&self, tape: &mut Tape, params: &Params, x: Tensor) -> Result<Var> {
        let index = Arc::new(GraphIndex::single(x.rows())?);
        let mut h = tape.constant(x);
        for layer in 0..2 {
            let w = tape.param(params, self.weights[layer]);
            h = tape.matmul(h, w)?;
            h = self.activate(tape, params, h, layer, &index)?;
        }
        let w = tape.param(params, self.weights[2]);
        tape.matmul(h, w)
    }

    fn regularizer(&self, tape: &mut Tape, params: &Params, lambda: f64) -> Result<Option<Var>> {
        let Some(prior) = &self.prior else { return Ok(None) };
        if lambda == 0.0 {
            return Ok(None);
        }
        let mut total: Option<Var> = None;
        for &id in &self.thetas {
            let raw = tape.param(params, id);
            let theta = tape.activation(raw, Baseline::Tanh)?;
            let q = tape.quad_form(theta, prior, lambda)?;
            total = Some(match total {
                Some(t) => tape.add(t, q)?,
                None => q,
            });
        }
        Ok(total)
    }

    fn bounded_thetas(&self, params: &Params) -> Vec<Vec<f64>> {
        self.thetas
            .iter()
            .map(|&id| params.get(id).data().iter().map(|v| v.tanh()).collect())
            .collect()
    }
}

fn test_mse(mlp: &Mlp, params: &Params, data: &TabularDataset) -> Result<f64> {
    let mut total = 0.0;
    for start in (0..data.len()).step_by(4096) {
        let rows: Vec<usize> = (start..(start + 4096).min(data.len())).collect();
        let mut tape = Tape::inference();
        let out = mlp.forward(&mut tape, params, data.inputs.select_rows(&rows))?;
        for (p, &i) in tape.value(out).data().iter().zip(&rows) {
            total += (p - data.targets.get(i, 0)).powi(2);
        }
    }
    Ok(total / data.len() as f64)
}

/// Samples the data, splits 80/20 and trains.
pub fn run_peaks(config: &PeaksConfig) -> Result<PeaksRun> {
    let data = sample_peaks(config.n_samples, config.seed)?;
    let (train, test) = data.split(0.8, &mut Rng::new(config.seed).fork(1));
    run_peaks_on(&train, &test, config)
}

/// Trains the perceptron on `train` with minibatch Adam and reports the
/// held-out MSE on `test`.
pub fn run_peaks_on(train: &TabularDataset, test: &TabularDataset, config: &PeaksConfig) -> Result<PeaksRun> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::Input("peaks needs non-empty train and test sets".into()));
    }
    if config.batch_size == 0 || config.hidden == 0 {
        return Err(Error::Input("batch_size and hidden must be positive".into()));
    }
    let start = Instant::now();
    let mut rng = Rng::new(config.seed).fork(2);
    let mut params = Params::new();
    let mlp = Mlp::new(&mut params, &mut rng, config)?;
    let mut adam = Adam::new(&params, config.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let out = mlp.forward(&mut tape, &params, train.inputs.select_rows(batch))?;
            let target = Arc::new(train.targets.select_rows(batch));
            let mask = Arc::new((0..batch.len()).collect());
            let mut loss = tape.regression(out, &target, &mask, RegressionLoss::Mse)?;
            if let Some(reg) = mlp.regularizer(&mut tape, &params, config.lambda_reg)? {
                loss = tape.add(loss, reg)?;
            }
            let value = tape.value(loss).item();
            if !value.is_finite() {
                return Err(Error::Diverged(format!("peaks loss {value} in epoch {epoch}")));
            }
            epoch_loss += value * batch.len() as f64;
            let grads = tape.backward(loss)?.for_params(&params);
            adam.step(&mut params, &grads)?;
        }
        curve.push(CurvePoint {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            eval_metric: test_mse(&mlp, &params, test)?,
        });
    }
    Ok(PeaksRun {
        test_mse: test_mse(&mlp, &params, test)?,
        curve,
        thetas: mlp.bounded_thetas(&params),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
