use super::VelocityBasis;
use crate::error::Result;

/// Slopes below `DEGENERACY * max(1, |intercept|)` are integrated as constant fields.
pub const DEGENERACY: f64 = 1e-10;

/// A concrete velocity field `v(x) = slope_c * x + intercept_c` obtained from
/// a parameter vector through a [`VelocityBasis`].
///
/// All transform queries integrate the flow of `v` to time 1 in closed form.
#[derive(Debug, Clone)]
pub struct CpaField<'a> {
    basis: &'a VelocityBasis,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    // Exact zero at both ends; interior values are taken from the left cell.
    knot_velocity: Vec<f64>,
}

/// Value and derivatives of the flow at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad_x: f64,
    pub grad_theta: Vec<f64>,
}

#[inline]
fn is_degenerate(slope: f64, intercept: f64) -> bool {
    slope.abs() < DEGENERACY * intercept.abs().max(1.0)
}

/// Returns `(e^{az}, (e^{az} - 1) / a, (z - (e^{az} - 1) / a) / a)` with the
/// `a -> 0` limits handled without cancellation.
#[inline]
fn growth(slope: f64, dt: f64) -> (f64, f64, f64) {
    if slope == 0.0 {
        return (1.0, dt, -0.5 * dt * dt);
    }
    let z = slope * dt;
    let e = z.exp();
    let g = z.exp_m1() / slope;
    let q = if z.abs() < 1e-3 {
        -dt * dt * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        (dt - g) / slope
    };
    (e, g, q)
}

impl<'a> CpaField<'a> {
    pub fn new(basis: &'a VelocityBasis, theta: &[f64]) -> Result<Self> {
        basis.check_theta(theta)?;
        let tess = basis.tessellation();
        let n = tess.n_cells();
        let mut slopes = vec![0.0; n];
        let mut intercepts = vec![0.0; n];
        for c in 0..n {
            let (sr, ir) = basis.cell_rows(c);
            slopes[c] = sr.iter().zip(theta).map(|(b, t)| b * t).sum();
            intercepts[c] = ir.iter().zip(theta).map(|(b, t)| b * t).sum();
        }
        let knots = tess.knots();
        let mut knot_velocity = vec![0.0; n + 1];
        for k in 1..n {
            knot_velocity[k] = slopes[k - 1] * knots[k] + intercepts[k - 1];
        }
        Ok(Self {
            basis,
            slopes,
            intercepts,
            knot_velocity,
        })
    }

    pub fn basis(&self) -> &VelocityBasis {
        self.basis
    }

    /// Per-cell `(slope, intercept)` pairs.
    pub fn coefficients(&self) -> Vec<(f64, f64)> {
        self.slopes
            .iter()
            .copied()
            .zip(self.intercepts.iter().copied())
            .collect()
    }

    pub fn velocity(&self, x: f64) -> Result<f64> {
        let tess = self.basis.tessellation();
        tess.check_point(x)?;
        Ok(self.velocity_unchecked(x))
    }

    fn velocity_unchecked(&self, x: f64) -> f64 {
        let tess = self.basis.tessellation();
        if x == tess.a() || x == tess.b() {
            return 0.0;
        }
        let c = tess.cell_of(x);
        self.slopes[c] * x + self.intercepts[c]
    }

    pub fn transform(&self, x: f64) -> Result<f64> {
        self.basis.tessellation().check_point(x)?;
        Ok(self.integrate(x, None).0)
    }

    pub fn grad_x(&self, x: f64) -> Result<f64> {
        self.basis.tessellation().check_point(x)?;
        Ok(self.integrate(x, None).1)
    }

    pub fn grad_theta(&self, x: f64) -> Result<Vec<f64>> {
        self.basis.tessellation().check_point(x)?;
        let mut out = vec![0.0; self.basis.dim()];
        self.integrate(x, Some(&mut out));
        Ok(out)
    }

    /// Value, input derivative and parameter gradient from a single pass
    /// along the trajectory.
    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        self.basis.tessellation().check_point(x)?;
        let mut grad_theta = vec![0.0; self.basis.dim()];
        let (value, grad_x) = self.integrate(x, Some(&mut grad_theta));
        Ok(Evaluation {
            value,
            grad_x,
            grad_theta,
        })
    }

    /// Transforms many points. Every point must lie in the domain.
    pub fn transform_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let tess = self.basis.tessellation();
        xs.iter()
            .map(|&x| {
                tess.check_point(x)?;
                Ok(self.integrate(x, None).0)
            })
            .collect()
    }

    /// Integrates the flow from `x` for unit time and returns `(phi(x), dphi/dx)`.
    /// When `grad_theta` is given it receives `dphi/dtheta`.
    ///
    /// The caller guarantees `x` lies in the domain.
    pub(crate) fn integrate(&self, x: f64, mut grad_theta: Option<&mut [f64]>) -> (f64, f64) {
        let tess = self.basis.tessellation();
        let knots = tess.knots();
        let n = tess.n_cells();
        if let Some(g) = grad_theta.as_deref_mut() {
            g.fill(0.0);
        }
        if x <= tess.a() || x >= tess.b() {
            // Fixed points: the trajectory never moves and no parameter changes it.
            let c = if x <= tess.a() { 0 } else { n - 1 };
            return (x, self.slopes[c].exp());
        }

        let mut cell = tess.cell_of(x);
        let mut y = x;
        let mut remaining = 1.0;
        let mut log_grad_x = 0.0;

        // The sign of v is constant along a trajectory, so at most n - 1 knots are crossed.
        for _ in 0..=n {
            let slope = self.slopes[cell];
            let v = if y == knots[cell] {
                self.knot_velocity[cell]
            } else if y == knots[cell + 1] {
                self.knot_velocity[cell + 1]
            } else {
                slope * y + self.intercepts[cell]
            };
            let slope = if is_degenerate(slope, self.intercepts[cell]) {
                0.0
            } else {
                slope
            };

            let mut crossing = None;
            if v != 0.0 {
                let target = if v > 0.0 { cell + 1 } else { cell };
                if target != 0 && target != n && self.knot_velocity[target] * v > 0.0 {
                    let dist = knots[target] - y;
                    let tau = if slope == 0.0 {
                        dist / v
                    } else {
                        (slope * dist / v).ln_1p() / slope
                    };
                    if tau.is_finite() && tau.max(0.0) < remaining {
                        crossing = Some((target, tau.max(0.0)));
                    }
                }
            }

            let (dt, y_end) = match crossing {
                Some((target, tau)) => (tau, knots[target]),
                None => {
                    let (_, g, _) = growth(slope, remaining);
                    let y_end = (y + v * g).clamp(knots[cell], knots[cell + 1]);
                    (remaining, y_end)
                }
            };

            log_grad_x += slope * dt;
            if let Some(grad) = grad_theta.as_deref_mut() {
                let (e, g, q) = growth(slope, dt);
                let intercept = v - slope * y;
                let p = dt * y_end + intercept * q;
                let (slope_rows, intercept_rows) = self.basis.cell_rows(cell);
                for ((gj, sj), ij) in grad.iter_mut().zip(slope_rows).zip(intercept_rows) {
                    *gj = *gj * e + sj * p + ij * g;
                }
            }

            match crossing {
                Some(_) => {
                    remaining -= dt;
                    y = y_end;
                    if v > 0.0 {
                        cell += 1;
                    } else {
                        cell -= 1;
                    }
                }
                None => return (y_end, log_grad_x.exp()),
            }
        }
        unreachable!("trajectory crossed more knots than the tessellation has")
    }
}
