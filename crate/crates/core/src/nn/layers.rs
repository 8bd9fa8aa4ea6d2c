use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{glorot, Baseline, ParamId, Params, SparseOp, Tape, Tensor, Var};
use crate::error::Result;
use crate::rng::Rng;

/// `x W (+ b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

impl Linear {
    pub fn new(params: &mut Params, rng: &mut Rng, name: &str, fan_in: usize, fan_out: usize, bias: bool) -> Self {
        let weight = params.add(format!("{name}.weight"), glorot(rng, fan_in, fan_out));
        let bias = bias.then(|| params.add(format!("{name}.bias"), Tensor::zeros(1, fan_out)));
        Self { weight, bias }
    }

    /// Weight and bias both start at zero.
    pub fn zeros(params: &mut Params, name: &str, fan_in: usize, fan_out: usize) -> Self {
        let weight = params.add(format!("{name}.weight"), Tensor::zeros(fan_in, fan_out));
        let bias = Some(params.add(format!("{name}.bias"), Tensor::zeros(1, fan_out)));
        Self { weight, bias }
    }

    pub fn forward(&self, tape: &mut Tape, params: &Params, x: Var) -> Result<Var> {
        let w = tape.param(params, self.weight);
        match self.bias {
            Some(b) => {
                let b = tape.param(params, b);
                embed(tape, x, w, b)
            }
            None => tape.matmul(x, w),
        }
    }
}

/// Two affine maps with a fixed activation between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mlp {
    pub first: Linear,
    pub second: Linear,
    pub inner: Baseline,
}

impl Mlp {
    pub fn new(
        params: &mut Params,
        rng: &mut Rng,
        name: &str,
        dims: [usize; 3],
        inner: Baseline,
    ) -> Self {
        Self {
            first: Linear::new(params, rng, &format!("{name}.0"), dims[0], dims[1], true),
            second: Linear::new(params, rng, &format!("{name}.1"), dims[1], dims[2], true),
            inner,
        }
    }

    pub fn forward(&self, tape: &mut Tape, params: &Params, x: Var) -> Result<Var> {
        let h = self.first.forward(tape, params, x)?;
        let h = tape.activation(h, self.inner)?;
        self.second.forward(tape, params, h)
    }
}

/// `H0 = X W + b`.
pub fn embed(tape: &mut Tape, x: Var, weight: Var, bias: Var) -> Result<Var> {
    let h = tape.matmul(x, weight)?;
    tape.add_row(h, bias)
}

/// `D^-1/2 (A + I) D^-1/2 H W`; `op` comes from [`super::SparseAdjacency::gcn_operator`].
pub fn gcn_layer(tape: &mut Tape, op: &Arc<SparseOp>, h: Var, weight: Var) -> Result<Var> {
    let hw = tape.matmul(h, weight)?;
    tape.propagate(op, hw)
}

/// `MLP((1 + eps) H + A H)`; `op` comes from [`super::SparseAdjacency::gin_operator`].
pub fn gin_layer(tape: &mut Tape, params: &Params, op: &Arc<SparseOp>, h: Var, mlp: &Mlp) -> Result<Var> {
    let agg = tape.propagate(op, h)?;
    mlp.forward(tape, params, agg)
}
