//! Graph-adaptive theta: a GIN hyper-network reads node features and
//! predicts one bounded theta per graph.

use std::sync::Arc;

use digraf::activation::{Conv, Digraf, HyperNetwork};
use digraf::nn::{glorot, GraphIndex, Params, PoolMode, RegressionLoss, SparseAdjacency, Tape, Tensor};
use digraf::rng::Rng;

fn main() -> digraf::Result<()> {
    let mut rng = Rng::new(3);
    // A triangle and a path, batched as one disconnected graph.
    let adj = SparseAdjacency::from_undirected(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5)])?;
    let index = GraphIndex::new(vec![0, 0, 0, 1, 1, 1], 2)?;
    let x = Tensor::from_vec(6, 2, (0..12).map(|_| rng.uniform(-2.0, 2.0)).collect())?;

    let unit = Digraf::new(5.0, 8)?;
    let mut params = Params::new();
    let net = HyperNetwork::new(&mut params, &mut rng, Conv::Gin, 2, unit.theta_dim(), PoolMode::Mean);
    println!("fresh head: theta = {:?}", net.predict_theta(&params, &x, &adj, &index)?.row(0));

    // Pretend training moved the head away from zero.
    *params.get_mut(net.head.weight) = glorot(&mut rng, digraf::activation::HYPER_HIDDEN, unit.theta_dim());
    let theta = net.predict_theta(&params, &x, &adj, &index)?;
    for g in 0..2 {
        println!("graph {g}: theta = {:.3?}", theta.row(g));
    }

    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let op = Arc::new(net.conv().operator(&adj));
    let index = Arc::new(index);
    let theta = net.forward(&mut tape, &params, xv, &op, &index)?;
    let y = tape.digraf(&Arc::new(unit), xv, theta, &index)?;
    let target = Arc::new(x.map(f64::sin));
    let loss = tape.regression(y, &target, &Arc::new((0..6).collect()), RegressionLoss::Mse)?;
    let grads = tape.backward(loss)?.for_params(&params);
    println!("loss {:.4}", tape.value(loss).item());
    println!("head weight gradient, first entries: {:?}", &grads[net.head.weight.index()].data()[..4]);
    Ok(())
}
