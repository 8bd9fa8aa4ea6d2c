//! Fit ELU and tanh on [-5, 5] with a 16-cell transform and compare with
//! piecewise-linear ReLU sums of one to three hinges.

use digraf::experiments::{fit_activation, FitConfig, FitTarget};

fn main() -> digraf::Result<()> {
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "target", "cpab", "k=1", "k=2", "k=3");
    for target in [FitTarget::Elu, FitTarget::Tanh] {
        let report = fit_activation(&FitConfig {
            target,
            ..FitConfig::default()
        })?;
        println!(
            "{:>8} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
            target.to_string(),
            report.cpab_error, report.prelu_k1_error, report.prelu_k2_error, report.prelu_k3_error
        );
    }
    Ok(())
}
