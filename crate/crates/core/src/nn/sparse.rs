//! Edge-list graph structure and the fixed linear operators used for
//! message passing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed edge list over `num_nodes` nodes. Undirected graphs store both
/// directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseAdjacency {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl SparseAdjacency {
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(u, v)) = edges.iter().find(|(u, v)| *u >= num_nodes || *v >= num_nodes) {
            return Err(Error::Input(format!(
                "edge ({u}, {v}) out of range for {num_nodes} nodes"
            )));
        }
        Ok(Self { num_nodes, edges })
    }

    /// Builds a symmetric adjacency from undirected pairs listed once.
    pub fn from_undirected(num_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(2 * pairs.len());
        for &(u, v) in pairs {
            edges.push((u, v));
            if u != v {
                edges.push((v, u));
            }
        }
        Self::new(num_nodes, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, _) in &self.edges {
            deg[u] += 1;
        }
        deg
    }

    /// `D^-1/2 (A + I) D^-1/2` with `d_u = 1 + deg(u)`.
    pub fn gcn_operator(&self) -> SparseOp {
        let deg = self.out_degrees();
        let scale: Vec<f64> = deg.iter().map(|d| 1.0 / ((1 + d) as f64).sqrt()).collect();
        let mut entries: Vec<(usize, usize, f64)> = (0..self.num_nodes)
            .map(|u| (u, u, scale[u] * scale[u]))
            .collect();
        entries.extend(self.edges.iter().map(|&(s, t)| (t, s, scale[s] * scale[t])));
        SparseOp::new(self.num_nodes, entries)
    }

    /// `(1 + eps) I + A`, the unnormalized neighbour sum.
    pub fn gin_operator(&self, eps: f64) -> SparseOp {
        let mut entries: Vec<(usize, usize, f64)> =
            (0..self.num_nodes).map(|u| (u, u, 1.0 + eps)).collect();
        entries.extend(self.edges.iter().map(|&(s, t)| (t, s, 1.0)));
        SparseOp::new(self.num_nodes, entries)
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> SparseAdjacency {
        SparseAdjacency {
            num_nodes: self.num_nodes,
            edges: self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect(),
        }
    }
}

/// Square sparse operator stored as `(target, source, weight)` triples in
/// a fixed order, so products are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseOp {
    pub fn new(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Self { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// `out = S x` for row-major `x` with `cols` columns.
    pub fn apply(&self, x: &[f64], cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n * cols];
        for &(t, s, w) in &self.entries {
            let src = &x[s * cols..(s + 1) * cols];
            for (o, v) in out[t * cols..(t + 1) * cols].iter_mut().zip(src) {
                *o += w * v;
            }
        }
        out
    }

    /// `out = S^T g`.
    pub fn apply_transpose(&self, g: &[f64], cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n * cols];
        for &(t, s, w) in &self.entries {
            let src = &g[t * cols..(t + 1) * cols];
            for (o, v) in out[s * cols..(s + 1) * cols].iter_mut().zip(src) {
                *o += w * v;
            }
        }
        out
    }
}

/// Assignment of rows (nodes) to graphs in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphIndex {
    index: Vec<usize>,
    counts: Vec<usize>,
}

impl GraphIndex {
    pub fn new(index: Vec<usize>, n_graphs: usize) -> Result<Self> {
        let mut counts = vec![0; n_graphs];
        for &g in &index {
            if g >= n_graphs {
                return Err(Error::Input(format!("graph id {g} >= {n_graphs}")));
            }
            counts[g] += 1;
        }
        if let Some(g) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Input(format!("graph {g} has no nodes")));
        }
        Ok(Self { index, counts })
    }

    /// Every row in one graph.
    pub fn single(rows: usize) -> Result<Self> {
        Self::new(vec![0; rows], 1)
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_graphs(&self) -> usize {
        self.counts.len()
    }

    pub fn n_rows(&self) -> usize {
        self.index.len()
    }

    pub fn permuted(&self, perm: &[usize]) -> GraphIndex {
        let mut index = vec![0; self.index.len()];
        for (i, &g) in self.index.iter().enumerate() {
            index[perm[i]] = g;
        }
        GraphIndex {
            index,
            counts: self.counts.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_edges() {
        assert!(SparseAdjacency::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn empty_graph_is_rejected() {
        assert!(matches!(GraphIndex::new(vec![0, 0], 2), Err(Error::Input(_))));
    }

    #[test]
    fn gcn_rows_on_cycle_preserve_constants() {
        let n = 7;
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let adj = SparseAdjacency::from_undirected(n, &pairs).unwrap();
        let out = adj.gcn_operator().apply(&vec![1.0; n], 1);
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }
}
