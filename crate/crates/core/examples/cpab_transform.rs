//! Closed-form CPA flow on [0, 1]: value, derivatives and inverse.

use digraf::cpab::{lipschitz_bound, CpaField, Tessellation, VelocityBasis};

fn main() -> digraf::Result<()> {
    let tess = Tessellation::unit(5)?;
    let basis = VelocityBasis::new(&tess);
    let theta = [0.8, -0.5, 0.3, 0.9];
    let field = CpaField::new(&basis, &theta)?;

    println!("basis dimension {}, lipschitz exponent {:.2}", basis.dim(), lipschitz_bound(&theta));
    println!("{:>6} {:>10} {:>10} {:>10}", "x", "T(x)", "dT/dx", "inverse");
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        let e = field.evaluate(x)?;
        let back = digraf::cpab::inverse_transform(&basis, &theta, e.value)?;
        println!("{x:>6.2} {:>10.6} {:>10.6} {back:>10.6}", e.value, e.grad_x);
    }
    let e = field.evaluate(0.37)?;
    println!("dT(0.37)/dtheta = {:?}", e.grad_theta);
    Ok(())
}
