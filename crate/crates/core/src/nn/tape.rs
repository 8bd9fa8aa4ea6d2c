use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tensor::{gemm, gemm_tn};
use super::{Baseline, GraphIndex, ParamId, Params, SparseOp, Tensor};
use crate::activation::{Digraf, DigrafCache};
use crate::error::{Error, Result};
use crate::prior::PriorMatrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    Mean,
    Max,
    Sum,
}

impl fmt::Display for PoolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolMode::Mean => "mean",
            PoolMode::Max => "max",
            PoolMode::Sum => "sum",
        })
    }
}

impl FromStr for PoolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolMode::Mean),
            "max" => Ok(PoolMode::Max),
            "sum" => Ok(PoolMode::Sum),
            other => Err(Error::Input(format!("unknown pooling `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressionLoss {
    Mse,
    Mae,
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Activation(Var, Baseline),
    Propagate(Var, Arc<SparseOp>),
    Pool {
        input: Var,
        index: Arc<GraphIndex>,
        mode: PoolMode,
        argmax: Vec<usize>,
    },
    Digraf {
        input: Var,
        theta: Var,
        unit: Arc<Digraf>,
        cache: Option<DigrafCache>,
    },
    CrossEntropy {
        logits: Var,
        labels: Arc<Vec<usize>>,
        mask: Arc<Vec<usize>>,
        probs: Tensor,
    },
    Regression {
        pred: Var,
        target: Arc<Tensor>,
        mask: Arc<Vec<usize>>,
        kind: RegressionLoss,
    },
    QuadForm {
        theta: Var,
        prior: Arc<PriorMatrix>,
        scale: f64,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Reverse-mode recorder. Build a fresh tape per forward pass.
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    grad_enabled: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: HashMap::new(),
            grad_enabled: true,
        }
    }

    /// A tape that never records gradient state. `backward` on it fails.
    pub fn inference() -> Self {
        Self {
            grad_enabled: false,
            ..Self::new()
        }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Result<Var> {
        if cfg!(debug_assertions) && !value.is_finite() {
            return Err(Error::Diverged("non-finite value recorded on tape".into()));
        }
        self.nodes.push(Node {
            value,
            op,
            needs_grad: needs_grad && self.grad_enabled,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Records an input that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a leaf whose gradient is tracked.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        let needs_grad = self.grad_enabled;
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf for a parameter. Repeated calls return the same handle.
    pub fn param(&mut self, params: &Params, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.leaf(params.get(id).clone());
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.cols() != y.rows() {
            return Err(Error::shape(
                "matmul",
                format!("{:?} x {:?}", x.shape(), y.shape()),
            ));
        }
        let value = x.matmul(y)?;
        let ng = self.needs(a) || self.needs(b);
        self.push(value, Op::MatMul(a, b), ng)
    }

    /// Adds a `1 x C` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (x, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != x.cols() {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + row {:?}", x.shape(), r.shape()),
            ));
        }
        let mut value = x.clone();
        let cols = x.cols();
        for chunk in value.data_mut().chunks_mut(cols.max(1)) {
            for (o, b) in chunk.iter_mut().zip(r.data()) {
                *o += b;
            }
        }
        let ng = self.needs(a) || self.needs(row);
        self.push(value, Op::AddRow(a, row), ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::shape("add", format!("{:?} + {:?}", x.shape(), y.shape())));
        }
        let mut value = x.clone();
        value.add_assign(y);
        let ng = self.needs(a) || self.needs(b);
        self.push(value, Op::Add(a, b), ng)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let value = self.value(a).map(|x| s * x);
        let ng = self.needs(a);
        self.push(value, Op::Scale(a, s), ng)
    }

    pub fn activation(&mut self, a: Var, kind: Baseline) -> Result<Var> {
        let value = self.value(a).map(|x| kind.apply(x));
        let ng = self.needs(a);
        self.push(value, Op::Activation(a, kind), ng)
    }

    /// Applies a fixed sparse operator on the node dimension.
    pub fn propagate(&mut self, op: &Arc<SparseOp>, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.rows() != op.size() {
            return Err(Error::shape(
                "propagate",
                format!("operator over {} nodes, input {:?}", op.size(), x.shape()),
            ));
        }
        let value = Tensor::from_vec(x.rows(), x.cols(), op.apply(x.data(), x.cols()))?;
        let ng = self.needs(a);
        self.push(value, Op::Propagate(a, Arc::clone(op)), ng)
    }

    /// Per-graph reduction; max routes to the first argmax.
    pub fn pool(&mut self, a: Var, index: &Arc<GraphIndex>, mode: PoolMode) -> Result<Var> {
        let x = self.value(a);
        if x.rows() != index.n_rows() {
            return Err(Error::shape(
                "pool",
                format!("{} rows, index covers {}", x.rows(), index.n_rows()),
            ));
        }
        let (g, c) = (index.n_graphs(), x.cols());
        let mut out = Tensor::filled(
            g,
            c,
            if mode == PoolMode::Max { f64::NEG_INFINITY } else { 0.0 },
        );
        let mut argmax = Vec::new();
        if mode == PoolMode::Max {
            argmax = vec![usize::MAX; g * c];
        }
        for (row, &gi) in index.index().iter().enumerate() {
            let src = x.row(row);
            let dst = out.row_mut(gi);
            match mode {
                PoolMode::Max => {
                    for (j, (o, &v)) in dst.iter_mut().zip(src).enumerate() {
                        if v > *o || argmax[gi * c + j] == usize::MAX {
                            *o = v;
                            argmax[gi * c + j] = row;
                        }
                    }
                }
                _ => {
                    for (o, v) in dst.iter_mut().zip(src) {
                        *o += v;
                    }
                }
            }
        }
        if mode == PoolMode::Mean {
            for (gi, &n) in index.counts().iter().enumerate() {
                for o in out.row_mut(gi) {
                    *o /= n as f64;
                }
            }
        }
        let ng = self.needs(a);
        self.push(
            out,
            Op::Pool {
                input: a,
                index: Arc::clone(index),
                mode,
                argmax,
            },
            ng,
        )
    }

    /// Elementwise diffeomorphic activation with one parameter row per graph.
    pub fn digraf(
        &mut self,
        unit: &Arc<Digraf>,
        input: Var,
        theta: Var,
        index: &Arc<GraphIndex>,
    ) -> Result<Var> {
        let ng = self.needs(input) || self.needs(theta);
        let (value, cache) = unit.forward(self.value(input), self.value(theta), index, ng)?;
        self.push(
            value,
            Op::Digraf {
                input,
                theta,
                unit: Arc::clone(unit),
                cache,
            },
            ng,
        )
    }

    /// Mean cross-entropy over `mask` rows, log-softmax applied internally.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        labels: &Arc<Vec<usize>>,
        mask: &Arc<Vec<usize>>,
    ) -> Result<Var> {
        let x = self.value(logits);
        if labels.len() != x.rows() {
            return Err(Error::shape(
                "cross_entropy",
                format!("{} labels for {} rows", labels.len(), x.rows()),
            ));
        }
        if mask.is_empty() {
            return Err(Error::Input("cross_entropy: empty mask".into()));
        }
        let c = x.cols();
        let mut probs = Tensor::zeros(x.rows(), c);
        let mut loss = 0.0;
        for &row in mask.iter() {
            let label = labels[row];
            if row >= x.rows() || label >= c {
                return Err(Error::Input(format!(
                    "cross_entropy: row {row} label {label} out of range"
                )));
            }
            let z = x.row(row);
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - z[label];
            for (p, v) in probs.row_mut(row).iter_mut().zip(z) {
                *p = (v - lse).exp();
            }
        }
        let value = Tensor::scalar(loss / mask.len() as f64);
        let ng = self.needs(logits);
        self.push(
            value,
            Op::CrossEntropy {
                logits,
                labels: Arc::clone(labels),
                mask: Arc::clone(mask),
                probs,
            },
            ng,
        )
    }

    /// Mean squared or absolute error over the entries of `mask` rows.
    pub fn regression(
        &mut self,
        pred: Var,
        target: &Arc<Tensor>,
        mask: &Arc<Vec<usize>>,
        kind: RegressionLoss,
    ) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return Err(Error::shape(
                "regression",
                format!("{:?} vs target {:?}", p.shape(), target.shape()),
            ));
        }
        if mask.is_empty() {
            return Err(Error::Input("regression: empty mask".into()));
        }
        let mut loss = 0.0;
        for &row in mask.iter() {
            if row >= p.rows() {
                return Err(Error::Input(format!("regression: row {row} out of range")));
            }
            for (a, b) in p.row(row).iter().zip(target.row(row)) {
                let d = a - b;
                loss += match kind {
                    RegressionLoss::Mse => d * d,
                    RegressionLoss::Mae => d.abs(),
                };
            }
        }
        let value = Tensor::scalar(loss / (mask.len() * p.cols()) as f64);
        let ng = self.needs(pred);
        self.push(
            value,
            Op::Regression {
                pred,
                target: Arc::clone(target),
                mask: Arc::clone(mask),
                kind,
            },
            ng,
        )
    }

    /// `scale * sum_g theta_g^T Sigma^-1 theta_g` over the rows of `theta`.
    pub fn quad_form(&mut self, theta: Var, prior: &Arc<PriorMatrix>, scale: f64) -> Result<Var> {
        let t = self.value(theta);
        let mut total = 0.0;
        for g in 0..t.rows() {
            total += prior.quadratic(t.row(g))?.0;
        }
        let ng = self.needs(theta);
        self.push(
            Tensor::scalar(scale * total),
            Op::QuadForm {
                theta,
                prior: Arc::clone(prior),
                scale,
            },
            ng,
        )
    }

    /// Reverse sweep from a scalar output.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        if !self.grad_enabled {
            return Err(Error::Contract("backward on an inference tape".into()));
        }
        if self.value(output).len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("output has shape {:?}", self.value(output).shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(Tensor::scalar(1.0));
        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                grads[i] = Some(g);
                continue;
            }
            self.backward_node(node, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients {
            grads,
            params: self.params.clone(),
        })
    }

    fn backward_node(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let send = |v: Var, t: Tensor, grads: &mut [Option<Tensor>]| {
            if !self.needs(v) {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&t),
                slot => *slot = Some(t),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let (m, k, n) = (x.rows(), x.cols(), y.cols());
                if self.needs(*a) {
                    let yt = y.transpose();
                    let mut ga = vec![0.0; m * k];
                    gemm(g.data(), yt.data(), &mut ga, m, n, k);
                    send(*a, Tensor::from_vec(m, k, ga)?, grads);
                }
                if self.needs(*b) {
                    let mut gb = vec![0.0; k * n];
                    gemm_tn(x.data(), g.data(), &mut gb, m, k, n);
                    send(*b, Tensor::from_vec(k, n, gb)?, grads);
                }
            }
            Op::AddRow(a, row) => {
                send(*a, g.clone(), grads);
                if self.needs(*row) {
                    let mut r = Tensor::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (o, v) in r.data_mut().iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    send(*row, r, grads);
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone(), grads);
                send(*b, g.clone(), grads);
            }
            Op::Scale(a, s) => send(*a, g.map(|v| s * v), grads),
            Op::Activation(a, kind) => {
                let x = self.value(*a);
                let mut out = g.clone();
                for (o, xv) in out.data_mut().iter_mut().zip(x.data()) {
                    *o *= kind.derivative(*xv);
                }
                send(*a, out, grads);
            }
            Op::Propagate(a, op) => {
                let data = op.apply_transpose(g.data(), g.cols());
                send(*a, Tensor::from_vec(g.rows(), g.cols(), data)?, grads);
            }
            Op::Pool {
                input,
                index,
                mode,
                argmax,
            } => {
                let x = self.value(*input);
                let c = x.cols();
                let mut out = Tensor::zeros(x.rows(), c);
                match mode {
                    PoolMode::Max => {
                        for (slot, &row) in argmax.iter().enumerate() {
                            let (gi, j) = (slot / c, slot % c);
                            out.data_mut()[row * c + j] += g.get(gi, j);
                        }
                    }
                    PoolMode::Mean | PoolMode::Sum => {
                        for (row, &gi) in index.index().iter().enumerate() {
                            let w = if *mode == PoolMode::Mean {
                                1.0 / index.counts()[gi] as f64
                            } else {
                                1.0
                            };
                            for (o, v) in out.row_mut(row).iter_mut().zip(g.row(gi)) {
                                *o = w * v;
                            }
                        }
                    }
                }
                send(*input, out, grads);
            }
            Op::Digraf {
                input,
                theta,
                unit,
                cache,
            } => {
                let cache = cache
                    .as_ref()
                    .ok_or_else(|| Error::Contract("digraf node recorded without cache".into()))?;
                let (gh, gt) = unit.backward(g, cache)?;
                send(*input, gh, grads);
                send(*theta, gt, grads);
            }
            Op::CrossEntropy {
                logits,
                labels,
                mask,
                probs,
            } => {
                let scale = g.item() / mask.len() as f64;
                let mut out = Tensor::zeros(probs.rows(), probs.cols());
                for &row in mask.iter() {
                    let dst = out.row_mut(row);
                    for (o, p) in dst.iter_mut().zip(probs.row(row)) {
                        *o += scale * p;
                    }
                    dst[labels[row]] -= scale;
                }
                send(*logits, out, grads);
            }
            Op::Regression {
                pred,
                target,
                mask,
                kind,
            } => {
                let p = self.value(*pred);
                let scale = g.item() / (mask.len() * p.cols()) as f64;
                let mut out = Tensor::zeros(p.rows(), p.cols());
                for &row in mask.iter() {
                    let dst = out.row_mut(row);
                    for ((o, a), b) in dst.iter_mut().zip(p.row(row)).zip(target.row(row)) {
                        let d = a - b;
                        *o += scale
                            * match kind {
                                RegressionLoss::Mse => 2.0 * d,
                                RegressionLoss::Mae => d.signum() * (d != 0.0) as u8 as f64,
                            };
                    }
                }
                send(*pred, out, grads);
            }
            Op::QuadForm {
                theta,
                prior,
                scale,
            } => {
                let t = self.value(*theta);
                let mut out = Tensor::zeros(t.rows(), t.cols());
                let s = scale * g.item();
                for r in 0..t.rows() {
                    let (_, grad) = prior.quadratic(t.row(r))?;
                    for (o, v) in out.row_mut(r).iter_mut().zip(grad) {
                        *o = s * v;
                    }
                }
                send(*theta, out, grads);
            }
        }
        Ok(())
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: HashMap<ParamId, Var>,
}

impl Gradients {
    /// Gradient of a recorded value, `None` if nothing flowed into it.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradients aligned with `params`; unused parameters get zeros.
    pub fn for_params(&self, params: &Params) -> Vec<Tensor> {
        params
            .ids()
            .map(|id| {
                self.params
                    .get(&id)
                    .and_then(|v| self.get(*v))
                    .cloned()
                    .unwrap_or_else(|| {
                        let p = params.get(id);
                        Tensor::zeros(p.rows(), p.cols())
                    })
            })
            .collect()
    }
}
