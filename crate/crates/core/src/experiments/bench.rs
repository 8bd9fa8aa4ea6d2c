use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::activation::Digraf;
use crate::error::{Error, Result};
use crate::nn::{GraphIndex, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub size: usize,
    /// Raw wall-clock samples in seconds.
    pub samples: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `median[i + 1] / median[i]`.
    pub ratios: Vec<f64>,
}

fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Times the batched activation on `size` points drawn from `[-r, r]`.
/// Zero theta runs the same code path as any other.
pub fn bench_scaling(sizes: &[usize], theta: &[f64], r: f64, repeats: usize, seed: u64) -> Result<BenchReport> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input(format!("sizes must be non-empty and increasing, got {sizes:?}")));
    }
    if repeats == 0 {
        return Err(Error::Input("repeats must be at least 1".into()));
    }
    let unit = Digraf::new(r, theta.len() + 1)?.unbounded();
    let theta = Tensor::from_vec(1, theta.len(), theta.to_vec())?;
    let index = GraphIndex::single(1)?;
    let mut rng = Rng::new(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let h = Tensor::from_vec(1, size, (0..size).map(|_| rng.uniform(-r, r)).collect())?;
        unit.forward(&h, &theta, &index, false)?;
        let samples = (0..repeats)
            .map(|_| {
                let start = Instant::now();
                let out = unit.forward(&h, &theta, &index, false);
                let elapsed = start.elapsed().as_secs_f64();
                out.map(|o| {
                    std::hint::black_box(o);
                    elapsed
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(BenchRow {
            size,
            median: median(&samples),
            samples,
        });
    }
    let ratios = rows.windows(2).map(|w| w[1].median / w[0].median).collect();
    Ok(BenchReport { rows, ratios })
}
