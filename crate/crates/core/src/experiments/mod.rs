//! Reproducible desk-scale experiments. Every procedure is a pure function
//! of its configuration and seed, apart from wall-clock fields.

mod bench;
mod field;
mod fit;
mod node;
mod peaks;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use bench::{bench_scaling, BenchReport, BenchRow};
pub use field::{dump_field, field_csv, FieldRow};
pub use fit::{fit_activation, FitConfig, FitReport, FitTarget};
pub use node::{run_node_classification, Arm, NodeConfig};
pub use peaks::{run_peaks, run_peaks_on, PeaksActivation, PeaksConfig, PeaksRun};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub eval_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    pub curve: Vec<CurvePoint>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    pub seeds: Vec<SeedRun>,
    pub aggregate: BTreeMap<String, Aggregate>,
    pub wall_seconds: f64,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            config: serde_json::to_value(config)?,
            seeds: Vec::new(),
            aggregate: BTreeMap::new(),
            wall_seconds: 0.0,
        })
    }

    pub fn push(&mut self, run: SeedRun) {
        self.wall_seconds += run.wall_seconds;
        self.seeds.push(run);
        self.recompute();
    }

    /// Rebuilds `aggregate` from the per-seed metrics.
    pub fn recompute(&mut self) {
        let mut by_key: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for run in &self.seeds {
            for (k, v) in &run.metrics {
                by_key.entry(k.clone()).or_default().push(*v);
            }
        }
        self.aggregate = by_key.into_iter().map(|(k, v)| (k, Aggregate::of(&v))).collect();
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregate.get(metric).map(|a| a.mean)
    }

    /// Copy with every wall-clock field zeroed.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.wall_seconds = 0.0;
        for s in &mut r.seeds {
            s.wall_seconds = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Equally spaced points on `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_statistics() {
        let a = Aggregate::of(&[1.0, 2.0, 3.0]);
        assert_eq!(a.mean, 2.0);
        assert!((a.std - 1.0).abs() < 1e-15);
        assert_eq!(Aggregate::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn linspace_hits_both_ends() {
        let xs = linspace(-5.0, 5.0, 1024);
        assert_eq!(xs.len(), 1024);
        assert_eq!((xs[0], xs[1023]), (-5.0, 5.0));
    }
}
