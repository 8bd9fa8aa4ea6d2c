//! Closed-form one-dimensional CPAB transforms.
//!
//! A parameter vector `theta` of length `n_cells - 1` selects a continuous,
//! piecewise-affine velocity field that vanishes at both ends of the domain.
//! Integrating that field to unit time gives an increasing diffeomorphism of
//! the domain. Inside each cell the flow of `v(y) = a*y + b` is an exponential
//! in time, so the trajectory, the knot crossing times, and the sensitivity
//! with respect to both the starting point and `theta` are all elementary.
//!
//! ```
//! use digraf::cpab::{Tessellation, VelocityBasis};
//!
//! let basis = VelocityBasis::new(&Tessellation::unit(2).unwrap());
//! let y = digraf::cpab::transform(&basis, &[1.0], 0.25).unwrap();
//! assert!((y - 0.25 * (1.0 / 3f64.sqrt()).exp()).abs() < 1e-12);
//! ```

mod basis;
mod field;
mod tessellation;

pub use basis::VelocityBasis;
pub use field::{CpaField, Evaluation, DEGENERACY};
pub use tessellation::Tessellation;

use crate::error::Result;

pub fn eval_velocity(basis: &VelocityBasis, theta: &[f64], x: f64) -> Result<f64> {
    CpaField::new(basis, theta)?.velocity(x)
}

/// Lipschitz constant of the velocity field, `sum_j |theta_j|`.
pub fn lipschitz_bound(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t.abs()).sum()
}

pub fn transform(basis: &VelocityBasis, theta: &[f64], x: f64) -> Result<f64> {
    CpaField::new(basis, theta)?.transform(x)
}

pub fn transform_grad_x(basis: &VelocityBasis, theta: &[f64], x: f64) -> Result<f64> {
    CpaField::new(basis, theta)?.grad_x(x)
}

pub fn transform_grad_theta(basis: &VelocityBasis, theta: &[f64], x: f64) -> Result<Vec<f64>> {
    CpaField::new(basis, theta)?.grad_theta(x)
}

/// Inverse map: the flow is autonomous, so running it backwards in time is
/// the same as flowing the negated field forwards.
pub fn inverse_transform(basis: &VelocityBasis, theta: &[f64], y: f64) -> Result<f64> {
    let negated: Vec<f64> = theta.iter().map(|t| -t).collect();
    CpaField::new(basis, &negated)?.transform(y)
}
