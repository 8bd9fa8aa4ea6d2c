use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{CurvePoint, ExperimentReport, SeedRun};
use crate::activation::{direct_theta_variant, ActivationConfig, Conv, Digraf, HyperNetwork};
use crate::cpab::Tessellation;
use crate::data::GraphDataset;
use crate::error::{Error, Result};
use crate::nn::{
    gcn_layer, glorot, Adam, Baseline, GraphIndex, ParamId, Params, PoolMode, SparseOp, Tape,
    Tensor, Var,
};
use crate::prior::PriorMatrix;
use crate::rng::Rng;

/// Activation used between the two graph convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    Fixed(Baseline),
    Digraf,
    DigrafAdaptive,
}

impl Arm {
    pub fn new(activation: &str, adaptive: bool) -> Result<Self> {
        match (activation, adaptive) {
            ("digraf", false) => Ok(Arm::Digraf),
            ("digraf", true) => Ok(Arm::DigrafAdaptive),
            (other, false) => Ok(Arm::Fixed(other.parse()?)),
            (other, true) => Err(Error::Input(format!("`{other}` has no adaptive variant"))),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::Fixed(b) => write!(f, "{b}"),
            Arm::Digraf => f.write_str("digraf"),
            Arm::DigrafAdaptive => f.write_str("digraf-adaptive"),
        }
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "digraf-adaptive" => Ok(Arm::DigrafAdaptive),
            other => Arm::new(other, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub arm: Arm,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    pub omega_half_width: f64,
    pub n_cells: usize,
    pub lambda_reg: f64,
    pub pool: PoolMode,
    pub seeds: Vec<u64>,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            arm: Arm::Fixed(Baseline::Relu),
            epochs: 200,
            lr: 1e-2,
            weight_decay: 5e-4,
            hidden: 64,
            omega_half_width: 5.0,
            n_cells: 16,
            lambda_reg: 1e-3,
            pool: PoolMode::Mean,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

impl NodeConfig {
    fn activation(&self) -> ActivationConfig {
        ActivationConfig {
            omega_half_width: self.omega_half_width,
            n_cells: self.n_cells,
            adaptive: self.arm == Arm::DigrafAdaptive,
            pool: self.pool,
            lambda_reg: self.lambda_reg,
        }
    }
}

enum Theta {
    None,
    Direct(ParamId),
    Adaptive(HyperNetwork),
}

/// Two bias-free graph convolutions with the chosen activation between.
struct Gcn {
    w1: ParamId,
    w2: ParamId,
    arm: Arm,
    theta: Theta,
    unit: Option<Arc<Digraf>>,
    prior: Option<Arc<PriorMatrix>>,
}

impl Gcn {
    fn new(params: &mut Params, rng: &mut Rng, config: &NodeConfig, in_dim: usize, classes: usize) -> Result<Self> {
        let w1 = params.add("gcn1.weight", glorot(rng, in_dim, config.hidden));
        let w2 = params.add("gcn2.weight", glorot(rng, config.hidden, classes));
        let act = config.activation();
        let (theta, unit, prior) = match config.arm {
            Arm::Fixed(_) => (Theta::None, None, None),
            arm => {
                let theta = if arm == Arm::DigrafAdaptive {
                    act.validate()?;
                    Theta::Adaptive(HyperNetwork::new(
                        params,
                        rng,
                        Conv::Gcn,
                        config.hidden,
                        act.theta_dim(),
                        config.pool,
                    ))
                } else {
                    Theta::Direct(direct_theta_variant(params, 1, &act)?[0])
                };
                let prior = PriorMatrix::with_defaults(&Tessellation::unit(config.n_cells)?)?;
                (theta, Some(Arc::new(act.unit()?)), Some(Arc::new(prior)))
            }
        };
        Ok(Self {
            w1,
            w2,
            arm: config.arm,
            theta,
            unit,
            prior,
        })
    }

    /// Returns `(logits, theta)`.
    fn forward(
        &self,
        tape: &mut Tape,
        params: &Params,
        op: &Arc<SparseOp>,
        index: &Arc<GraphIndex>,
        x: &Tensor,
    ) -> Result<(Var, Option<Var>)> {
        let x = tape.constant(x.clone());
        let w1 = tape.param(params, self.w1);
        let pre = gcn_layer(tape, op, x, w1)?;
        let (h, theta) = match (&self.theta, self.arm) {
            (Theta::None, Arm::Fixed(b)) => (tape.activation(pre, b)?, None),
            (Theta::Direct(id), _) => {
                let raw = tape.param(params, *id);
                let theta = tape.activation(raw, Baseline::Tanh)?;
                let unit = self.unit.as_ref().expect("digraf unit");
                (tape.digraf(unit, pre, theta, index)?, Some(theta))
            }
            (Theta::Adaptive(hyper), _) => {
                let theta = hyper.forward(tape, params, pre, op, index)?;
                let unit = self.unit.as_ref().expect("digraf unit");
                (tape.digraf(unit, pre, theta, index)?, Some(theta))
            }
            (Theta::None, _) => unreachable!("digraf arms always carry theta"),
        };
        let w2 = tape.param(params, self.w2);
        Ok((gcn_layer(tape, op, h, w2)?, theta))
    }
}

fn accuracy(logits: &Tensor, labels: &[Option<usize>], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let correct = rows
        .iter()
        .filter(|&&r| {
            let row = logits.row(r);
            let pred = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0;
            labels[r] == Some(pred)
        })
        .count();
    correct as f64 / rows.len() as f64
}

fn run_seed(dataset: &GraphDataset, config: &NodeConfig, seed: u64) -> Result<SeedRun> {
    let start = Instant::now();
    let batch = dataset.node_batch()?;
    let splits = &dataset.splits;
    if splits.train.is_empty() || splits.test.is_empty() {
        return Err(Error::Input("node classification needs train and test nodes".into()));
    }
    let labels: Vec<usize> = batch.labels.iter().map(|l| l.unwrap_or(0)).collect();
    if let Some(&v) = splits.train.iter().find(|&&v| batch.labels[v].is_none()) {
        return Err(Error::Input(format!("train node {v} is unlabeled")));
    }
    let labels = Arc::new(labels);
    let train = Arc::new(splits.train.clone());
    let op = Arc::new(batch.adjacency.gcn_operator());
    let index = Arc::new(batch.graph_index.clone());
    if index.n_graphs() != 1 {
        return Err(Error::Input("node classification expects a single graph".into()));
    }

    let mut rng = Rng::new(seed);
    let mut params = Params::new();
    let model = Gcn::new(&mut params, &mut rng, config, batch.features.cols(), dataset.num_classes)?;
    let mut adam = Adam::new(&params, config.lr).with_weight_decay(config.weight_decay);

    let mut curve = Vec::with_capacity(config.epochs);
    let mut best = (f64::NEG_INFINITY, 0.0, 0usize);
    for epoch in 1..=config.epochs {
        let mut tape = Tape::new();
        let (logits, theta) = model.forward(&mut tape, &params, &op, &index, &batch.features)?;
        let mut loss = tape.cross_entropy(logits, &labels, &train)?;
        if let (Some(theta), Some(prior)) = (theta, &model.prior) {
            if config.lambda_reg > 0.0 {
                let n_graphs = tape.value(theta).rows() as f64;
                let reg = tape.quad_form(theta, prior, config.lambda_reg / n_graphs)?;
                loss = tape.add(loss, reg)?;
            }
        }
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::Diverged(format!("node loss {value} in epoch {epoch}")));
        }
        let grads = tape.backward(loss)?.for_params(&params);
        adam.step(&mut params, &grads)?;

        let mut eval = Tape::inference();
        let (logits, _) = model.forward(&mut eval, &params, &op, &index, &batch.features)?;
        let logits = eval.value(logits);
        let val = accuracy(logits, &batch.labels, &splits.val);
        let test = accuracy(logits, &batch.labels, &splits.test);
        if splits.val.is_empty() || val > best.0 {
            best = (val, test, epoch);
        }
        curve.push(CurvePoint {
            epoch,
            train_loss: value,
            eval_metric: val,
        });
    }
    let metrics = [
        ("test_accuracy", best.1),
        ("best_val_accuracy", best.0),
        ("best_epoch", best.2 as f64),
        ("final_train_loss", curve.last().map_or(f64::NAN, |c| c.train_loss)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Ok(SeedRun {
        seed,
        metrics,
        curve,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Trains one two-layer GCN per seed and reports test accuracy at the
/// best-validation epoch (the last epoch when there is no validation split).
pub fn run_node_classification(dataset: &GraphDataset, config: &NodeConfig) -> Result<ExperimentReport> {
    dataset.validate()?;
    if config.seeds.is_empty() {
        return Err(Error::Input("at least one seed is required".into()));
    }
    let mut report = ExperimentReport::new(format!("train-node/{}", config.arm), config)?;
    for &seed in &config.seeds {
        report.push(run_seed(dataset, config, seed)?);
    }
    Ok(report)
}
