use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    gcn_layer, gin_layer, Baseline, GraphIndex, Linear, Mlp, Params, PoolMode, SparseAdjacency,
    SparseOp, Tape, Tensor, Var,
};
use crate::rng::Rng;

pub const HYPER_HIDDEN: usize = 64;

/// Message-passing layer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conv {
    Gcn,
    Gin,
}

impl Conv {
    /// The fixed propagation operator for this layer family.
    pub fn operator(self, adj: &SparseAdjacency) -> SparseOp {
        match self {
            Conv::Gcn => adj.gcn_operator(),
            Conv::Gin => adj.gin_operator(0.0),
        }
    }
}

impl fmt::Display for Conv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conv::Gcn => "gcn",
            Conv::Gin => "gin",
        })
    }
}

impl FromStr for Conv {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(Conv::Gcn),
            "gin" => Ok(Conv::Gin),
            other => Err(Error::Input(format!("unknown layer type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Layer {
    Gcn(Linear),
    Gin(Mlp),
}

/// Graph network mapping pre-activation features to one bounded theta per
/// graph. Two message-passing layers with ReLU, pooling, then a
/// zero-initialized projection and `tanh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperNetwork {
    conv: Conv,
    layers: Vec<Layer>,
    pub head: Linear,
    pool: PoolMode,
    in_dim: usize,
    theta_dim: usize,
}

impl HyperNetwork {
    pub fn new(
        params: &mut Params,
        rng: &mut Rng,
        conv: Conv,
        in_dim: usize,
        theta_dim: usize,
        pool: PoolMode,
    ) -> Self {
        Self::with_hidden(params, rng, conv, in_dim, HYPER_HIDDEN, theta_dim, pool)
    }

    pub fn with_hidden(
        params: &mut Params,
        rng: &mut Rng,
        conv: Conv,
        in_dim: usize,
        hidden: usize,
        theta_dim: usize,
        pool: PoolMode,
    ) -> Self {
        let layers = (0..2)
            .map(|l| {
                let fan_in = if l == 0 { in_dim } else { hidden };
                let name = format!("hyper.conv{l}");
                match conv {
                    Conv::Gcn => Layer::Gcn(Linear::new(params, rng, &name, fan_in, hidden, false)),
                    Conv::Gin => Layer::Gin(Mlp::new(
                        params,
                        rng,
                        &name,
                        [fan_in, hidden, hidden],
                        Baseline::Relu,
                    )),
                }
            })
            .collect();
        let head = Linear::zeros(params, "hyper.head", hidden, theta_dim);
        Self {
            conv,
            layers,
            head,
            pool,
            in_dim,
            theta_dim,
        }
    }

    pub fn conv(&self) -> Conv {
        self.conv
    }

    pub fn pool(&self) -> PoolMode {
        self.pool
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    /// Weight parameter of message-passing layer `l` (first affine map for GIN).
    pub fn layer_weight(&self, l: usize) -> crate::nn::ParamId {
        match &self.layers[l] {
            Layer::Gcn(lin) => lin.weight,
            Layer::Gin(mlp) => mlp.first.weight,
        }
    }

    /// Records the forward pass. `op` must come from [`Conv::operator`].
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &Params,
        x: Var,
        op: &Arc<SparseOp>,
        index: &Arc<GraphIndex>,
    ) -> Result<Var> {
        if tape.value(x).cols() != self.in_dim {
            return Err(Error::shape(
                "hyper-network",
                format!("expected {} features, got {}", self.in_dim, tape.value(x).cols()),
            ));
        }
        let mut h = x;
        for layer in &self.layers {
            h = match layer {
                Layer::Gcn(lin) => {
                    let w = tape.param(params, lin.weight);
                    gcn_layer(tape, op, h, w)?
                }
                Layer::Gin(mlp) => gin_layer(tape, params, op, h, mlp)?,
            };
            h = tape.activation(h, Baseline::Relu)?;
        }
        let pooled = tape.pool(h, index, self.pool)?;
        let raw = self.head.forward(tape, params, pooled)?;
        tape.activation(raw, Baseline::Tanh)
    }

    /// One theta row per graph.
    pub fn predict_theta(
        &self,
        params: &Params,
        features: &Tensor,
        adj: &SparseAdjacency,
        index: &GraphIndex,
    ) -> Result<Tensor> {
        if !features.is_finite() {
            return Err(Error::Input("hyper-network: non-finite features".into()));
        }
        if adj.num_nodes() != features.rows() {
            return Err(Error::shape(
                "hyper-network",
                format!("{} nodes, {} feature rows", adj.num_nodes(), features.rows()),
            ));
        }
        let op = Arc::new(self.conv.operator(adj));
        let index = Arc::new(index.clone());
        let mut tape = Tape::inference();
        let x = tape.constant(features.clone());
        let theta = self.forward(&mut tape, params, x, &op, &index)?;
        Ok(tape.value(theta).clone())
    }
}
