use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::linspace;
use crate::activation::Digraf;
use crate::cpab::CpaField;
use crate::error::Result;
use crate::nn::{GraphIndex, Tensor};

/// One sample of the velocity field and the activation on `[-r, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub velocity: f64,
    pub transform: f64,
}

/// Samples the field on `[-r, r]`. The velocity is expressed in the
/// coordinates of `[-r, r]`, so integrating it for unit time gives the
/// `transform` column.
pub fn dump_field(theta: &[f64], r: f64, n_cells: usize, n_points: usize) -> Result<Vec<FieldRow>> {
    let unit = Digraf::new(r, n_cells)?.unbounded();
    let field = CpaField::new(unit.basis(), theta)?;
    let xs = linspace(-r, r, n_points);
    let theta_row = Tensor::from_vec(1, theta.len(), theta.to_vec())?;
    let h = Tensor::from_vec(1, xs.len(), xs.clone())?;
    let (out, _) = unit.forward(&h, &theta_row, &GraphIndex::single(1)?, false)?;
    xs.iter()
        .zip(out.data())
        .map(|(&x, &f)| {
            let u = ((x + r) / (2.0 * r)).clamp(0.0, 1.0);
            Ok(FieldRow {
                x,
                velocity: 2.0 * r * field.velocity(u)?,
                transform: f,
            })
        })
        .collect()
}

pub fn field_csv(rows: &[FieldRow]) -> String {
    let mut out = String::from("x,velocity,transform\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.x, row.velocity, row.transform);
    }
    out
}
