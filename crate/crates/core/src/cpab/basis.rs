use serde::{Deserialize, Serialize};

use super::Tessellation;
use crate::error::{Error, Result};

/// Orthonormal basis of the continuous, zero-boundary piecewise-affine
/// velocity fields on a tessellation.
///
/// Stored row-major with shape `(2 * n_cells) x dim`: row `2c` holds the
/// slope of cell `c` for every basis field and row `2c + 1` the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityBasis {
    tess: Tessellation,
    dim: usize,
    matrix: Vec<f64>,
}

impl VelocityBasis {
    /// Builds the basis from the hat functions of the interior knots, which
    /// span the null space of the continuity and boundary constraints, then
    /// orthonormalizes them with modified Gram-Schmidt.
    ///
    /// Hat `k` first touches cell `k - 1`, so the input columns are already
    /// ordered by the index of their leading nonzero coefficient. Each output
    /// column is sign-fixed so that its first nonzero entry is positive.
    pub fn new(tess: &Tessellation) -> Self {
        let n = tess.n_cells();
        let dim = n - 1;
        let rows = 2 * n;
        let knots = tess.knots();
        let h = tess.cell_width();

        let mut columns: Vec<Vec<f64>> = (1..n)
            .map(|k| {
                let mut col = vec![0.0; rows];
                // rises from 0 at knot k-1 to 1 at knot k
                col[2 * (k - 1)] = 1.0 / h;
                col[2 * (k - 1) + 1] = -knots[k - 1] / h;
                // falls from 1 at knot k to 0 at knot k+1
                col[2 * k] = -1.0 / h;
                col[2 * k + 1] = knots[k + 1] / h;
                col
            })
            .collect();

        for j in 0..columns.len() {
            let (done, rest) = columns.split_at_mut(j);
            let col = &mut rest[0];
            for q in done.iter() {
                let proj: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (c, qv) in col.iter_mut().zip(q) {
                    *c -= proj * qv;
                }
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            for c in col.iter_mut() {
                *c /= norm;
            }
            let lead = col.iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(1.0);
            if lead < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
        }

        let mut matrix = vec![0.0; rows * dim];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                matrix[i * dim + j] = *v;
            }
        }
        Self {
            tess: tess.clone(),
            dim,
            matrix,
        }
    }

    pub fn tessellation(&self) -> &Tessellation {
        &self.tess
    }

    /// Number of free parameters, `n_cells - 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(row, column)` of the coefficient matrix.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    /// Stacked `(slope, intercept)` coefficients of basis field `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..2 * self.tess.n_cells()).map(|i| self.get(i, j)).collect()
    }

    /// Slope and intercept of every basis field on cell `c`, as two slices of length `dim`.
    pub fn cell_rows(&self, c: usize) -> (&[f64], &[f64]) {
        let d = self.dim;
        let start = 2 * c * d;
        (
            &self.matrix[start..start + d],
            &self.matrix[start + d..start + 2 * d],
        )
    }

    pub(crate) fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::Input(format!(
                "theta has length {}, expected {}",
                theta.len(),
                self.dim
            )));
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::Input(format!("theta contains non-finite value {bad}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_value(basis: &VelocityBasis, j: usize, c: usize, x: f64) -> f64 {
        basis.get(2 * c, j) * x + basis.get(2 * c + 1, j)
    }

    #[test]
    fn two_cell_basis_matches_hand_construction() {
        let basis = VelocityBasis::new(&Tessellation::unit(2).unwrap());
        assert_eq!(basis.dim(), 1);
        let norm = 2.0 * 3f64.sqrt();
        let expected = [2.0 / norm, 0.0, -2.0 / norm, 2.0 / norm];
        for (got, want) in basis.column(0).iter().zip(expected) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn single_cell_is_empty() {
        let basis = VelocityBasis::new(&Tessellation::unit(1).unwrap());
        assert_eq!(basis.dim(), 0);
    }

    #[test]
    fn columns_are_orthonormal_and_constrained() {
        for &(a, b, n) in &[(0.0, 1.0, 2), (0.0, 1.0, 7), (-5.0, 5.0, 16), (2.0, 3.5, 33)] {
            let tess = Tessellation::new(a, b, n).unwrap();
            let basis = VelocityBasis::new(&tess);
            assert_eq!(basis.dim(), n - 1);
            for i in 0..basis.dim() {
                let ci = basis.column(i);
                for j in 0..basis.dim() {
                    let cj = basis.column(j);
                    let dot: f64 = ci.iter().zip(&cj).map(|(x, y)| x * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-10);
                }
                let k = tess.knots();
                assert!(field_value(&basis, i, 0, a).abs() < 1e-10);
                assert!(field_value(&basis, i, n - 1, b).abs() < 1e-10);
                for c in 1..n {
                    let left = field_value(&basis, i, c - 1, k[c]);
                    let right = field_value(&basis, i, c, k[c]);
                    assert!((left - right).abs() < 1e-10);
                }
                let lead = ci.iter().find(|v| v.abs() > 1e-12).unwrap();
                assert!(*lead > 0.0);
            }
        }
    }
}
