//! Node classification on a noisy stochastic block model with fixed,
//! learned and graph-adaptive activations.

use digraf::data::{generate_sbm, SbmConfig};
use digraf::experiments::{run_node_classification, NodeConfig};

fn main() -> digraf::Result<()> {
    let dataset = generate_sbm(&SbmConfig::default())?;
    let batch = dataset.node_batch()?;
    println!(
        "{} nodes, {} directed edges, {} classes, {} train / {} val / {} test",
        batch.num_nodes(),
        batch.adjacency.edges().len(),
        dataset.num_classes,
        dataset.splits.train.len(),
        dataset.splits.val.len(),
        dataset.splits.test.len()
    );
    for arm in ["relu", "tanh", "digraf", "digraf-adaptive"] {
        let report = run_node_classification(
            &dataset,
            &NodeConfig {
                arm: arm.parse()?,
                epochs: 100,
                seeds: vec![0, 1, 2],
                ..NodeConfig::default()
            },
        )?;
        let acc = report.aggregate["test_accuracy"];
        println!("{arm:>16}: {:.4} ± {:.4} ({:.1}s)", acc.mean, acc.std, report.wall_seconds);
    }
    Ok(())
}
