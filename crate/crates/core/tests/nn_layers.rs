//! Hand-computed layer, pooling and loss values, plus training determinism.

use std::sync::Arc;

use digraf::nn::{
    embed, gcn_layer, gin_layer, Adam, Baseline, GraphIndex, Linear, Mlp, Params, PoolMode,
    RegressionLoss, SparseAdjacency, Tape, Tensor,
};
use digraf::rng::Rng;

fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
    Tensor::from_vec(rows, cols, data.to_vec()).unwrap()
}

#[test]
fn embed_examples() {
    let mut tape = Tape::new();
    let x = tape.constant(t(1, 2, &[1.0, 2.0]));
    let w = tape.constant(t(2, 1, &[1.0, 1.0]));
    let b = tape.constant(Tensor::zeros(1, 1));
    let h = embed(&mut tape, x, w, b).unwrap();
    assert_eq!(tape.value(h).item(), 3.0);

    let input = t(2, 3, &[0.5, -1.0, 2.0, 3.0, 0.0, 1.0]);
    let x = tape.constant(input.clone());
    let w = tape.constant(Tensor::identity(3));
    let b = tape.constant(Tensor::zeros(1, 3));
    let h = embed(&mut tape, x, w, b).unwrap();
    assert_eq!(tape.value(h), &input);

    let w = tape.constant(Tensor::zeros(3, 4));
    let b = tape.constant(Tensor::zeros(1, 4));
    let h = embed(&mut tape, x, w, b).unwrap();
    assert!(tape.value(h).data().iter().all(|&v| v == 0.0));

    let bad = tape.constant(Tensor::zeros(2, 4));
    assert!(embed(&mut tape, x, bad, b).is_err());
}

fn run_gcn(adj: &SparseAdjacency, features: Tensor) -> Tensor {
    let op = Arc::new(adj.gcn_operator());
    let mut tape = Tape::new();
    let w = tape.constant(Tensor::identity(features.cols()));
    let x = tape.constant(features);
    let h = gcn_layer(&mut tape, &op, x, w).unwrap();
    tape.value(h).clone()
}

#[test]
fn gcn_examples() {
    let single = SparseAdjacency::new(1, vec![]).unwrap();
    assert_eq!(run_gcn(&single, t(1, 2, &[0.3, -4.0])), t(1, 2, &[0.3, -4.0]));

    let pair = SparseAdjacency::from_undirected(2, &[(0, 1)]).unwrap();
    let out = run_gcn(&pair, Tensor::identity(2));
    assert!(out.max_abs_diff(&t(2, 2, &[0.5, 0.5, 0.5, 0.5])) < 1e-15);

    let zero = run_gcn(&pair, Tensor::zeros(2, 3));
    assert!(zero.data().iter().all(|&v| v == 0.0));
}

#[test]
fn gcn_preserves_constants_on_cycles() {
    for n in [3, 4, 9, 20] {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let adj = SparseAdjacency::from_undirected(n, &pairs).unwrap();
        let out = run_gcn(&adj, Tensor::filled(n, 2, 1.0));
        assert!(out.data().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }
}

fn identity_mlp(params: &mut Params, dim: usize) -> Mlp {
    let mut rng = Rng::new(0);
    let mlp = Mlp::new(params, &mut rng, "mlp", [dim, dim, dim], Baseline::Identity);
    *params.get_mut(mlp.first.weight) = Tensor::identity(dim);
    *params.get_mut(mlp.second.weight) = Tensor::identity(dim);
    mlp
}

fn run_gin(adj: &SparseAdjacency, eps: f64, features: Tensor) -> Tensor {
    let mut params = Params::new();
    let mlp = identity_mlp(&mut params, features.cols());
    let op = Arc::new(adj.gin_operator(eps));
    let mut tape = Tape::new();
    let x = tape.constant(features);
    let h = gin_layer(&mut tape, &params, &op, x, &mlp).unwrap();
    tape.value(h).clone()
}

#[test]
fn gin_examples() {
    let single = SparseAdjacency::new(1, vec![]).unwrap();
    assert_eq!(run_gin(&single, 0.0, t(1, 2, &[1.5, 2.0])), t(1, 2, &[1.5, 2.0]));

    let pair = SparseAdjacency::from_undirected(2, &[(0, 1)]).unwrap();
    let out = run_gin(&pair, 0.0, t(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    assert_eq!(out, t(2, 2, &[4.0, 6.0, 4.0, 6.0]));

    let triangle = SparseAdjacency::from_undirected(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
    let out = run_gin(&triangle, 1.0, Tensor::filled(3, 2, 1.0));
    assert!(out.data().iter().all(|&v| v == 4.0));
}

fn pool(x: &Tensor, index: &GraphIndex, mode: PoolMode) -> Tensor {
    let mut tape = Tape::new();
    let v = tape.constant(x.clone());
    let p = tape.pool(v, &Arc::new(index.clone()), mode).unwrap();
    tape.value(p).clone()
}

#[test]
fn pooling_examples() {
    let one = GraphIndex::single(1).unwrap();
    let row = t(1, 3, &[0.1, -2.0, 5.0]);
    for mode in [PoolMode::Mean, PoolMode::Max, PoolMode::Sum] {
        assert_eq!(pool(&row, &one, mode), row);
    }
    let two = GraphIndex::single(2).unwrap();
    assert_eq!(pool(&t(2, 1, &[1.0, 3.0]), &two, PoolMode::Mean).item(), 2.0);
}

#[test]
fn pooling_matches_per_graph_loop() {
    let mut rng = Rng::new(3);
    let ids: Vec<usize> = vec![1, 0, 2, 1, 1, 0, 2, 0];
    let index = GraphIndex::new(ids.clone(), 3).unwrap();
    let x = Tensor::from_vec(8, 2, (0..16).map(|_| rng.normal()).collect()).unwrap();
    let mean = pool(&x, &index, PoolMode::Mean);
    let max = pool(&x, &index, PoolMode::Max);
    let sum = pool(&x, &index, PoolMode::Sum);
    for g in 0..3 {
        for c in 0..2 {
            let members: Vec<f64> = (0..8).filter(|&i| ids[i] == g).map(|i| x.get(i, c)).collect();
            let s: f64 = members.iter().sum();
            let m = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((sum.get(g, c) - s).abs() < 1e-14);
            assert!((mean.get(g, c) - s / members.len() as f64).abs() < 1e-14);
            assert_eq!(max.get(g, c), m);
        }
    }
}

#[test]
fn max_pool_routes_to_first_argmax() {
    let mut tape = Tape::new();
    let x = tape.leaf(t(3, 1, &[2.0, 2.0, 1.0]));
    let p = tape.pool(x, &Arc::new(GraphIndex::single(3).unwrap()), PoolMode::Max).unwrap();
    let g = tape.backward(p).unwrap();
    assert_eq!(g.get(x).unwrap().data(), &[1.0, 0.0, 0.0]);
}

#[test]
fn loss_examples() {
    let mut tape = Tape::new();
    let logits = tape.constant(Tensor::filled(4, 5, 0.3));
    let labels = Arc::new(vec![0, 1, 4, 2]);
    let ce = tape.cross_entropy(logits, &labels, &Arc::new(vec![0, 1, 2, 3])).unwrap();
    assert!((tape.value(ce).item() - 5f64.ln()).abs() < 1e-14);

    let p = t(2, 1, &[0.0, 2.0]);
    let pred = tape.constant(p.clone());
    let all = Arc::new(vec![0, 1]);
    for kind in [RegressionLoss::Mse, RegressionLoss::Mae] {
        let l = tape.regression(pred, &Arc::new(p.clone()), &all, kind).unwrap();
        assert_eq!(tape.value(l).item(), 0.0);
    }
    let target = Arc::new(t(2, 1, &[1.0, 0.0]));
    let mae = tape.regression(pred, &target, &all, RegressionLoss::Mae).unwrap();
    assert_eq!(tape.value(mae).item(), 1.5);

    assert!(tape.cross_entropy(logits, &labels, &Arc::new(vec![])).is_err());
    assert!(tape.regression(pred, &target, &Arc::new(vec![]), RegressionLoss::Mse).is_err());
}

fn train(seed: u64, steps: usize) -> Params {
    let mut rng = Rng::new(seed);
    let mut params = Params::new();
    let l1 = Linear::new(&mut params, &mut rng, "l1", 3, 8, true);
    let l2 = Linear::new(&mut params, &mut rng, "l2", 8, 1, true);
    let x = Tensor::from_vec(16, 3, (0..48).map(|_| rng.normal()).collect()).unwrap();
    let y = Arc::new(Tensor::from_vec(16, 1, (0..16).map(|_| rng.normal()).collect()).unwrap());
    let mask = Arc::new((0..16).collect());
    let mut adam = Adam::new(&params, 1e-2).with_weight_decay(1e-4);
    for _ in 0..steps {
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let h = l1.forward(&mut tape, &params, xv).unwrap();
        let h = tape.activation(h, Baseline::Elu).unwrap();
        let out = l2.forward(&mut tape, &params, h).unwrap();
        let loss = tape.regression(out, &y, &mask, RegressionLoss::Mse).unwrap();
        let grads = tape.backward(loss).unwrap().for_params(&params);
        adam.step(&mut params, &grads).unwrap();
    }
    params
}

#[test]
fn training_is_bitwise_deterministic() {
    let a = train(21, 40);
    let b = train(21, 40);
    for (x, y) in a.tensors().iter().zip(b.tensors()) {
        assert!(x.data().iter().zip(y.data()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    let c = train(22, 40);
    assert_ne!(a, c);
}
