//! Batched activation cost as the number of points doubles.

use digraf::experiments::bench_scaling;

fn main() -> digraf::Result<()> {
    let sizes: Vec<usize> = (0..8).map(|k| 10_000 << k).collect();
    let theta = [0.5, -0.3, 0.8, -0.6, 0.1, 0.9, -0.2, 0.4, -0.7, 0.3, 0.6, -0.5, 0.2, -0.8, 0.7];
    let report = bench_scaling(&sizes, &theta, 5.0, 7, 0)?;
    for (i, row) in report.rows.iter().enumerate() {
        let ratio = if i == 0 { String::from("-") } else { format!("{:.2}", report.ratios[i - 1]) };
        println!("{:>9} points  median {:.3e} s  ratio {ratio}", row.size, row.median);
    }
    Ok(())
}
