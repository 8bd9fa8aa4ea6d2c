use serde::{Deserialize, Serialize};

use super::{GraphBatch, GraphDataset, Splits, TaskKind};
use crate::error::{Error, Result};
use crate::nn::{GraphIndex, SparseAdjacency, Tensor};
use crate::rng::Rng;

pub const TRAIN_PER_CLASS: usize = 20;
pub const TEST_NODES: usize = 1000;
pub const VAL_NODES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n_per_block: usize,
    pub n_blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n_per_block: 400,
            n_blocks: 4,
            p_in: 0.02,
            p_out: 0.004,
            feature_dim: 8,
            noise: 1.5,
            seed: 0,
        }
    }
}

/// Undirected stochastic block model with one-hot block features plus
/// Gaussian noise. Train takes 20 nodes per class, test up to 1000 of the
/// rest, validation up to 500 of what remains.
pub fn generate_sbm(config: &SbmConfig) -> Result<GraphDataset> {
    let SbmConfig {
        n_per_block,
        n_blocks,
        p_in,
        p_out,
        feature_dim,
        noise,
        seed,
    } = *config;
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(Error::Input(format!(
            "need 0 <= p_out < p_in <= 1, got p_in = {p_in}, p_out = {p_out}"
        )));
    }
    if n_blocks == 0 || n_per_block == 0 {
        return Err(Error::Input("sbm needs at least one block of one node".into()));
    }
    if feature_dim < n_blocks {
        return Err(Error::Input(format!(
            "feature_dim {feature_dim} cannot hold a one-hot code for {n_blocks} blocks"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Input(format!("noise must be >= 0, got {noise}")));
    }
    let n = n_per_block * n_blocks;
    let block = |v: usize| v / n_per_block;
    let mut rng = Rng::new(seed);

    let mut edge_rng = rng.fork(1);
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if block(u) == block(v) { p_in } else { p_out };
            if edge_rng.bernoulli(p) {
                pairs.push((u, v));
            }
        }
    }
    let adjacency = SparseAdjacency::from_undirected(n, &pairs)?;

    let mut feat_rng = rng.fork(2);
    let mut features = Tensor::zeros(n, feature_dim);
    for v in 0..n {
        let row = features.row_mut(v);
        for x in row.iter_mut() {
            *x = noise * feat_rng.normal();
        }
        row[block(v)] += 1.0;
    }

    let mut split_rng = rng.fork(3);
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for b in 0..n_blocks {
        let mut members: Vec<usize> = (b * n_per_block..(b + 1) * n_per_block).collect();
        split_rng.shuffle(&mut members);
        let k = TRAIN_PER_CLASS.min(members.len());
        train.extend_from_slice(&members[..k]);
        rest.extend_from_slice(&members[k..]);
    }
    split_rng.shuffle(&mut rest);
    let n_test = TEST_NODES.min(rest.len());
    let test = rest[..n_test].to_vec();
    let n_val = VAL_NODES.min(rest.len() - n_test);
    let val = rest[n_test..n_test + n_val].to_vec();
    train.sort_unstable();

    Ok(GraphDataset {
        batches: vec![GraphBatch {
            adjacency,
            features,
            labels: (0..n).map(|v| Some(block(v))).collect(),
            graph_index: GraphIndex::single(n)?,
        }],
        splits: Splits { train, val, test },
        task: TaskKind::NodeClass,
        num_classes: n_blocks,
    })
}
