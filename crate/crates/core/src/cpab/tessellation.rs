use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An equispaced partition of `[a, b]` into `n_cells` closed cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tessellation {
    a: f64,
    b: f64,
    knots: Vec<f64>,
}

impl Tessellation {
    pub fn new(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("bounds must be finite, got [{a}, {b}]")));
        }
        if b <= a {
            return Err(Error::Domain(format!("need b > a, got [{a}, {b}]")));
        }
        if n_cells == 0 {
            return Err(Error::Domain("tessellation needs at least one cell".into()));
        }
        let width = (b - a) / n_cells as f64;
        let mut knots: Vec<f64> = (0..=n_cells).map(|k| a + k as f64 * width).collect();
        knots[n_cells] = b;
        Ok(Self { a, b, knots })
    }

    /// The unit interval split into `n_cells` cells.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_cells)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_cells(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cell_width(&self) -> f64 {
        (self.b - self.a) / self.n_cells() as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Index of the cell holding `x`. A point on an interior knot belongs to
    /// the cell on its left; `a` belongs to cell 0.
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.n_cells();
        let guess = ((x - self.a) / self.cell_width()).ceil() as isize - 1;
        let mut c = guess.clamp(0, n as isize - 1) as usize;
        while c > 0 && x <= self.knots[c] {
            c -= 1;
        }
        while c + 1 < n && x > self.knots[c + 1] {
            c += 1;
        }
        c
    }

    pub(crate) fn check_point(&self, x: f64) -> Result<()> {
        if x.is_nan() || !self.contains(x) {
            return Err(Error::Domain(format!(
                "point {x} outside [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(())
    }
}
