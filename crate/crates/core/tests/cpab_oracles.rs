//! Independent checks of the closed-form flow: an RK4 integrator of the raw
//! velocity field, central finite differences, and the Lipschitz bounds.

use digraf::cpab::{
    inverse_transform, lipschitz_bound, transform, transform_grad_theta, transform_grad_x,
    CpaField, Tessellation, VelocityBasis,
};
use digraf::rng::Rng;
use proptest::prelude::*;

/// Velocity evaluated straight from the basis matrix, independent of `CpaField`.
fn raw_velocity(basis: &VelocityBasis, theta: &[f64], x: f64) -> f64 {
    let tess = basis.tessellation();
    let c = tess.cell_of(x);
    let mut v = 0.0;
    for (j, t) in theta.iter().enumerate() {
        v += t * (basis.get(2 * c, j) * x + basis.get(2 * c + 1, j));
    }
    v
}

fn rk4(basis: &VelocityBasis, theta: &[f64], x: f64, step: f64) -> f64 {
    let tess = basis.tessellation();
    let (a, b) = (tess.a(), tess.b());
    let f = |y: f64| raw_velocity(basis, theta, y.clamp(a, b));
    let steps = (1.0 / step).round() as usize;
    let h = 1.0 / steps as f64;
    let mut y = x;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

fn random_theta(rng: &mut Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

#[test]
fn matches_rk4() {
    let mut rng = Rng::new(11);
    for &n in &[2usize, 5, 16] {
        let basis = VelocityBasis::new(&Tessellation::new(-1.0, 2.0, n).unwrap());
        for _ in 0..34 {
            // scale up so that fields are strong enough to cross several knots
            let theta: Vec<f64> = random_theta(&mut rng, n - 1).iter().map(|t| 3.0 * t).collect();
            let x = rng.uniform(-1.0, 2.0);
            let exact = transform(&basis, &theta, x).unwrap();
            let oracle = rk4(&basis, &theta, x, 1e-5);
            assert!((exact - oracle).abs() <= 1e-6, "n={n} x={x}: {exact} vs {oracle}");
        }
    }
}

#[test]
fn tent_example_matches_rk4() {
    let basis = VelocityBasis::new(&Tessellation::unit(2).unwrap());
    let oracle = rk4(&basis, &[1.0], 0.25, 1e-5);
    assert!((oracle - 0.445328).abs() < 1e-6);
    assert!((transform(&basis, &[1.0], 0.25).unwrap() - oracle).abs() < 1e-9);
}

fn fd_grad_x(basis: &VelocityBasis, theta: &[f64], x: f64, h: f64) -> f64 {
    (transform(basis, theta, x + h).unwrap() - transform(basis, theta, x - h).unwrap()) / (2.0 * h)
}

fn fd_grad_theta(basis: &VelocityBasis, theta: &[f64], x: f64, h: f64) -> Vec<f64> {
    (0..theta.len())
        .map(|j| {
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[j] += h;
            dn[j] -= h;
            (transform(basis, &up, x).unwrap() - transform(basis, &dn, x).unwrap()) / (2.0 * h)
        })
        .collect()
}

#[test]
fn tent_example_gradients_match_fd() {
    let basis = VelocityBasis::new(&Tessellation::unit(2).unwrap());
    let fd = fd_grad_x(&basis, &[1.0], 0.25, 1e-6);
    assert!((fd - 1.781312).abs() < 1e-6);
    let fd = fd_grad_theta(&basis, &[1.0], 0.25, 1e-6);
    assert!((fd[0] - 0.257110).abs() < 1e-6);
}

#[test]
fn gradients_match_fd_away_from_knots() {
    let mut rng = Rng::new(5);
    let mut checked = 0;
    while checked < 100 {
        let n = [2usize, 4, 8, 16][checked % 4];
        let basis = VelocityBasis::new(&Tessellation::new(0.0, 1.0, n).unwrap());
        let theta: Vec<f64> = random_theta(&mut rng, n - 1).iter().map(|t| 2.0 * t).collect();
        let x = rng.uniform(0.0, 1.0);
        let h_cell = 1.0 / n as f64;
        let off = (x / h_cell - (x / h_cell).round()).abs() * h_cell;
        if off < 1e-4 || x < 1e-4 || x > 1.0 - 1e-4 {
            continue;
        }
        let field = CpaField::new(&basis, &theta).unwrap();
        let eval = field.evaluate(x).unwrap();
        let fd = fd_grad_x(&basis, &theta, x, 1e-6);
        assert!(rel_err(eval.grad_x, fd) <= 1e-4, "dx {} vs {fd}", eval.grad_x);
        let fdt = fd_grad_theta(&basis, &theta, x, 1e-6);
        for (g, f) in eval.grad_theta.iter().zip(&fdt) {
            assert!(rel_err(*g, *f) <= 1e-4, "n={n} x={x} dtheta {g} vs {f}");
        }
        checked += 1;
    }
}

#[test]
fn gradients_at_knots() {
    let mut rng = Rng::new(9);
    for _ in 0..50 {
        let n = 8;
        let basis = VelocityBasis::new(&Tessellation::unit(n).unwrap());
        let theta = random_theta(&mut rng, n - 1);
        let x = (1 + rng.index(n - 1)) as f64 / n as f64;
        let dx = transform_grad_x(&basis, &theta, x).unwrap();
        assert!(rel_err(dx, fd_grad_x(&basis, &theta, x, 1e-6)) <= 1e-3);
        let dt = transform_grad_theta(&basis, &theta, x).unwrap();
        for (g, f) in dt.iter().zip(fd_grad_theta(&basis, &theta, x, 1e-6)) {
            assert!(rel_err(*g, f) <= 1e-3);
        }
    }
}

#[test]
fn identity_on_dense_grid() {
    let basis = VelocityBasis::new(&Tessellation::new(-5.0, 5.0, 16).unwrap());
    let field = CpaField::new(&basis, &[0.0; 15]).unwrap();
    for i in 0..10_000 {
        let x = -5.0 + 10.0 * i as f64 / 9_999.0;
        assert!((field.transform(x).unwrap() - x).abs() <= 1e-12);
    }
}

#[test]
fn lipschitz_and_boundedness_bounds() {
    let mut rng = Rng::new(3);
    let basis = VelocityBasis::new(&Tessellation::new(-5.0, 5.0, 10).unwrap());
    for _ in 0..10_000 {
        let theta = random_theta(&mut rng, 9);
        let x = rng.uniform(-5.0, 5.0);
        let y = rng.uniform(-5.0, 5.0);
        let field = CpaField::new(&basis, &theta).unwrap();
        let diff = (field.transform(x).unwrap() - field.transform(y).unwrap()).abs();
        let lip = (x - y).abs() * lipschitz_bound(&theta).exp();
        assert!(diff <= lip + 1e-9);
        assert!(diff <= lip.min(10.0) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn strictly_increasing(
        theta in prop::collection::vec(-1.0f64..1.0, 7),
        x1 in 0.0f64..1.0,
        gap in 1e-6f64..1.0,
    ) {
        let basis = VelocityBasis::new(&Tessellation::unit(8).unwrap());
        let x2 = (x1 + gap).min(1.0);
        prop_assume!(x2 > x1);
        let f = CpaField::new(&basis, &theta).unwrap();
        prop_assert!(f.transform(x1).unwrap() < f.transform(x2).unwrap());
    }

    #[test]
    fn range_and_inverse(
        theta in prop::collection::vec(-1.0f64..1.0, 15),
        x in -5.0f64..=5.0,
    ) {
        let basis = VelocityBasis::new(&Tessellation::new(-5.0, 5.0, 16).unwrap());
        let y = transform(&basis, &theta, x).unwrap();
        prop_assert!((-5.0..=5.0).contains(&y));
        let back = inverse_transform(&basis, &theta, y).unwrap();
        prop_assert!((back - x).abs() <= 1e-6);
        prop_assert!(transform_grad_x(&basis, &theta, x).unwrap() > 0.0);
    }
}
