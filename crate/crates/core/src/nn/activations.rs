use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Fixed pointwise activations. ELU uses `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Identity,
    Relu,
    Tanh,
    Elu,
}

impl Baseline {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Baseline::Identity => x,
            Baseline::Relu => x.max(0.0),
            Baseline::Tanh => x.tanh(),
            Baseline::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
        }
    }

    /// Derivative at `x`. ReLU uses 0 at the kink.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Baseline::Identity => 1.0,
            Baseline::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Baseline::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Baseline::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Baseline::Identity => "identity",
            Baseline::Relu => "relu",
            Baseline::Tanh => "tanh",
            Baseline::Elu => "elu",
        };
        f.write_str(s)
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Baseline::Identity),
            "relu" => Ok(Baseline::Relu),
            "tanh" => Ok(Baseline::Tanh),
            "elu" => Ok(Baseline::Elu),
            other => Err(Error::Input(format!("unknown activation `{other}`"))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
