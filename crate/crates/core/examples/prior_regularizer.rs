//! Smoothness prior over velocity parameters and the quadratic penalty it
//! induces: smooth fields are cheap, rough ones expensive.

use digraf::cpab::Tessellation;
use digraf::prior::{regularizer, PriorMatrix};

fn main() -> digraf::Result<()> {
    let tess = Tessellation::new(-5.0, 5.0, 8)?;
    let prior = PriorMatrix::with_defaults(&tess)?;
    println!("length scale {}, variance {}", prior.length_scale(), prior.variance());

    let smooth = vec![0.3; prior.dim()];
    let rough: Vec<f64> = (0..prior.dim()).map(|j| if j % 2 == 0 { 0.3 } else { -0.3 }).collect();
    for (name, theta) in [("smooth", &smooth), ("rough", &rough)] {
        let (value, grad) = prior.quadratic(theta)?;
        println!("{name:>7}: penalty {value:.4e}, |grad| {:.4e}", grad.iter().map(|g| g * g).sum::<f64>().sqrt());
    }
    let (total, _) = regularizer(&prior, &[smooth, rough])?;
    println!("summed over both layers: {total:.4e}");
    Ok(())
}
