//! Regress the peaks surface with a 2-64-64-1 MLP under three activations.
//! The budget is cut down so it finishes in about a minute; pass an epoch
//! count as the first argument for a longer run.

use digraf::experiments::{run_peaks, PeaksActivation, PeaksConfig};

fn main() -> digraf::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    for activation in [PeaksActivation::Relu, PeaksActivation::Tanh, PeaksActivation::Digraf] {
        let run = run_peaks(&PeaksConfig {
            activation,
            n_samples: 20_000,
            epochs,
            lr: 3e-3,
            ..PeaksConfig::default()
        })?;
        let first = run.curve.first().map_or(f64::NAN, |p| p.train_loss);
        println!(
            "{activation:>7}: test mse {:.4e} (train loss {first:.3e} -> {:.3e}, {:.1}s)",
            run.test_mse,
            run.curve.last().map_or(f64::NAN, |p| p.train_loss),
            run.wall_seconds
        );
    }
    Ok(())
}
