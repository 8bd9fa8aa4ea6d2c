//! Tape gradients against central finite differences, op by op.

use std::sync::Arc;

use digraf::activation::Digraf;
use digraf::cpab::Tessellation;
use digraf::nn::{
    Baseline, GraphIndex, PoolMode, RegressionLoss, SparseAdjacency, Tape, Tensor, Var,
};
use digraf::prior::PriorMatrix;
use digraf::rng::Rng;

const STEP: f64 = 1e-6;
const REL: f64 = 1e-5;

fn random(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| scale * rng.uniform(-1.0, 1.0)).collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

/// Compares the tape gradient of `build` with respect to every input against
/// central differences of the recorded scalar.
fn check<F>(inputs: &[Tensor], build: F)
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&mut tape, &vars);
    let grads = tape.backward(out).unwrap();

    let eval = |perturbed: &[Tensor]| {
        let mut tape = Tape::inference();
        let vars: Vec<Var> = perturbed.iter().map(|t| tape.constant(t.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.value(out).item()
    };

    for (i, input) in inputs.iter().enumerate() {
        let zeros = Tensor::zeros(input.rows(), input.cols());
        let analytic = grads.get(vars[i]).unwrap_or(&zeros);
        for k in 0..input.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[k] += STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[k] -= STEP;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * STEP);
            let a = analytic.data()[k];
            let tol = REL * a.abs().max(fd.abs()).max(1e-3);
            assert!(
                (a - fd).abs() <= tol,
                "input {i} entry {k}: tape {a} vs fd {fd}"
            );
        }
    }
}

/// Reduces any matrix to a scalar with a fixed random weighting.
fn weigh(tape: &mut Tape, v: Var, seed: u64) -> Var {
    let (r, c) = (tape.value(v).rows(), tape.value(v).cols());
    let target = Arc::new(random(&mut Rng::new(seed), r, c, 1.0));
    let mask = Arc::new((0..r).collect());
    tape.regression(v, &target, &mask, RegressionLoss::Mse).unwrap()
}

#[test]
fn matmul_add_row_add_scale() {
    let mut rng = Rng::new(1);
    let inputs = [
        random(&mut rng, 3, 4, 1.0),
        random(&mut rng, 4, 2, 1.0),
        random(&mut rng, 1, 2, 1.0),
        random(&mut rng, 3, 2, 1.0),
    ];
    check(&inputs, |t, v| {
        let m = t.matmul(v[0], v[1]).unwrap();
        let m = t.add_row(m, v[2]).unwrap();
        let m = t.add(m, v[3]).unwrap();
        let m = t.scale(m, -1.7).unwrap();
        weigh(t, m, 9)
    });
}

#[test]
fn baseline_activations() {
    for kind in [Baseline::Identity, Baseline::Relu, Baseline::Tanh, Baseline::Elu] {
        let mut rng = Rng::new(2);
        let inputs = [random(&mut rng, 4, 3, 2.0)];
        check(&inputs, |t, v| {
            let a = t.activation(v[0], kind).unwrap();
            weigh(t, a, 3)
        });
    }
}

#[test]
fn propagate_gcn_and_gin() {
    let adj = SparseAdjacency::from_undirected(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)])
        .unwrap();
    for op in [adj.gcn_operator(), adj.gin_operator(0.3)] {
        let op = Arc::new(op);
        let mut rng = Rng::new(4);
        let inputs = [random(&mut rng, 5, 3, 1.0)];
        check(&inputs, |t, v| {
            let p = t.propagate(&op, v[0]).unwrap();
            weigh(t, p, 5)
        });
    }
}

#[test]
fn pooling_modes() {
    let index = Arc::new(GraphIndex::new(vec![0, 1, 0, 2, 1, 0], 3).unwrap());
    for mode in [PoolMode::Mean, PoolMode::Max, PoolMode::Sum] {
        let mut rng = Rng::new(6);
        let inputs = [random(&mut rng, 6, 2, 1.0)];
        check(&inputs, |t, v| {
            let p = t.pool(v[0], &index, mode).unwrap();
            weigh(t, p, 7)
        });
    }
}

#[test]
fn losses() {
    let mut rng = Rng::new(8);
    let labels = Arc::new(vec![0, 2, 1, 1]);
    let mask = Arc::new(vec![0, 1, 3]);
    let inputs = [random(&mut rng, 4, 3, 2.0)];
    check(&inputs, |t, v| t.cross_entropy(v[0], &labels, &mask).unwrap());

    let target = Arc::new(random(&mut rng, 4, 3, 2.0));
    for kind in [RegressionLoss::Mse, RegressionLoss::Mae] {
        check(&inputs, |t, v| t.regression(v[0], &target, &mask, kind).unwrap());
    }
}

#[test]
fn quadratic_prior() {
    let tess = Tessellation::unit(6).unwrap();
    let prior = Arc::new(PriorMatrix::new(&tess, 0.3, 1.0).unwrap());
    let mut rng = Rng::new(10);
    let inputs = [random(&mut rng, 2, 5, 1.0)];
    check(&inputs, |t, v| t.quad_form(v[0], &prior, 0.5).unwrap());
}

#[test]
fn digraf_node() {
    let unit = Arc::new(Digraf::new(2.0, 5).unwrap());
    let index = Arc::new(GraphIndex::new(vec![0, 1, 1, 0], 2).unwrap());
    let mut rng = Rng::new(11);
    let inputs = [random(&mut rng, 4, 3, 2.5), random(&mut rng, 2, 4, 0.9)];
    check(&inputs, |t, v| {
        let a = t.digraf(&unit, v[0], v[1], &index).unwrap();
        weigh(t, a, 12)
    });
}

#[test]
fn reused_values_accumulate() {
    let mut rng = Rng::new(13);
    let inputs = [random(&mut rng, 3, 3, 1.0)];
    check(&inputs, |t, v| {
        let sq = t.matmul(v[0], v[0]).unwrap();
        let s = t.add(sq, v[0]).unwrap();
        let s = t.activation(s, Baseline::Tanh).unwrap();
        weigh(t, s, 14)
    });
}
