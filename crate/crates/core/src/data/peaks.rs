use super::TabularDataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::rng::Rng;

pub fn peaks(x: f64, y: f64) -> f64 {
    3.0 * (1.0 - x).powi(2) * (-x * x - (y + 1.0).powi(2)).exp()
        - 10.0 * (x / 5.0 - x.powi(3) - y.powi(5)) * (-x * x - y * y).exp()
        - (-(x + 1.0).powi(2) - y * y).exp() / 3.0
}

/// `n` points uniform on `[-3, 3]^2` with exact targets.
pub fn sample_peaks(n: usize, seed: u64) -> Result<TabularDataset> {
    if n == 0 {
        return Err(Error::Input("sample_peaks needs at least one point".into()));
    }
    let mut rng = Rng::new(seed);
    let mut inputs = Vec::with_capacity(2 * n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.uniform(-3.0, 3.0);
        let y = rng.uniform(-3.0, 3.0);
        inputs.extend([x, y]);
        targets.push(peaks(x, y));
    }
    Ok(TabularDataset {
        inputs: Tensor::from_vec(n, 2, inputs)?,
        targets: Tensor::from_vec(n, 1, targets)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert!((peaks(0.0, 0.0) - 8.0 / 3.0 * (-1f64).exp()).abs() < 1e-15);
        assert!((peaks(0.0, 0.0) - 0.98101).abs() < 1e-5);
        assert!((peaks(0.0, -1.0) + 0.7239).abs() < 1e-4);
        assert!(peaks(50.0, 50.0).abs() < 1e-100);
    }

    #[test]
    fn samples_stay_in_the_box() {
        let d = sample_peaks(500, 3).unwrap();
        assert!(d.inputs.data().iter().all(|v| (-3.0..=3.0).contains(v)));
        for i in 0..d.len() {
            let r = d.inputs.row(i);
            assert_eq!(d.targets.get(i, 0), peaks(r[0], r[1]));
        }
        assert!(sample_peaks(0, 1).is_err());
        assert_eq!(sample_peaks(40, 9).unwrap(), sample_peaks(40, 9).unwrap());
    }
}
