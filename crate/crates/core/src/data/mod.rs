//! Synthetic datasets and the plain-text graph format.

mod graph_file;
mod peaks;
mod sbm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{GraphIndex, SparseAdjacency, Tensor};
use crate::rng::Rng;

pub use graph_file::{load_graph_file, parse_graph, write_graph, write_graph_file, ParseError};
pub use peaks::{peaks, sample_peaks};
pub use sbm::{generate_sbm, SbmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    NodeClass,
    GraphClass,
    GraphRegress,
    TabularRegress,
}

/// Row indices of each partition. Node indices for node tasks, graph
/// indices for graph tasks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn check_disjoint(&self, bound: usize) -> Result<()> {
        let mut seen = vec![false; bound];
        for (name, part) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in part {
                if i >= bound {
                    return Err(Error::Input(format!("{name} index {i} >= {bound}")));
                }
                if seen[i] {
                    return Err(Error::Input(format!("index {i} appears in more than one split")));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// One or more graphs sharing a node numbering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBatch {
    pub adjacency: SparseAdjacency,
    pub features: Tensor,
    /// `None` marks an unlabeled node.
    pub labels: Vec<Option<usize>>,
    pub graph_index: GraphIndex,
}

impl GraphBatch {
    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub batches: Vec<GraphBatch>,
    pub splits: Splits,
    pub task: TaskKind,
    pub num_classes: usize,
}

impl GraphDataset {
    pub fn validate(&self) -> Result<()> {
        for b in &self.batches {
            if b.features.rows() != b.adjacency.num_nodes()
                || b.labels.len() != b.adjacency.num_nodes()
                || b.graph_index.n_rows() != b.adjacency.num_nodes()
            {
                return Err(Error::Input(format!(
                    "batch with {} nodes has {} feature rows and {} labels",
                    b.adjacency.num_nodes(),
                    b.features.rows(),
                    b.labels.len()
                )));
            }
            if let Some(l) = b.labels.iter().flatten().find(|&&l| l >= self.num_classes) {
                return Err(Error::Input(format!("label {l} >= {} classes", self.num_classes)));
            }
        }
        let bound = match self.task {
            TaskKind::NodeClass => self.batches.iter().map(GraphBatch::num_nodes).sum(),
            _ => self.batches.iter().map(|b| b.graph_index.n_graphs()).sum(),
        };
        self.splits.check_disjoint(bound)
    }

    /// The single batch of a node-classification dataset.
    pub fn node_batch(&self) -> Result<&GraphBatch> {
        match (self.task, self.batches.as_slice()) {
            (TaskKind::NodeClass, [b]) => Ok(b),
            _ => Err(Error::Input(format!(
                "expected a single-batch node-class dataset, got {:?} with {} batches",
                self.task,
                self.batches.len()
            ))),
        }
    }
}

/// Inputs and targets for plain regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub inputs: Tensor,
    pub targets: Tensor,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    /// Shuffles and splits off the first `fraction` of rows.
    pub fn split(&self, fraction: f64, rng: &mut Rng) -> (TabularDataset, TabularDataset) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        rng.shuffle(&mut order);
        let cut = ((self.len() as f64) * fraction).round() as usize;
        let take = |idx: &[usize]| TabularDataset {
            inputs: self.inputs.select_rows(idx),
            targets: self.targets.select_rows(idx),
        };
        (take(&order[..cut]), take(&order[cut..]))
    }
}
