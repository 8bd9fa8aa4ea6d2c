//! Runtime registry of every module invariant, run by the `check` command.
//!
//! Each entry is a seeded property check returning a short diagnostic on
//! failure. The integration tests cover the same properties with independent
//! code; this registry exists so a built binary can verify itself.

use std::sync::Arc;

use serde::Serialize;

use crate::activation::{Conv, Digraf, HyperNetwork};
use crate::cpab::{
    inverse_transform, lipschitz_bound, transform, transform_grad_theta, transform_grad_x,
    Tessellation, VelocityBasis,
};
use crate::data::{generate_sbm, parse_graph, write_graph, SbmConfig};
use crate::experiments::{run_peaks_on, ExperimentReport, PeaksActivation, PeaksConfig};
use crate::nn::{
    glorot, Adam, Baseline, GraphIndex, Linear, Params, PoolMode, RegressionLoss,
    SparseAdjacency, Tape, Tensor, Var,
};
use crate::prior::PriorMatrix;
use crate::rng::Rng;

pub type Outcome = Result<(), String>;

pub struct Invariant {
    pub module: &'static str,
    pub name: &'static str,
    pub run: fn(u64) -> Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Every documented invariant, by module. The registry must match this list
/// one to one.
pub const LISTED: &[(&str, &[&str])] = &[
    (
        "cpab_core",
        &[
            "identity at zero",
            "strict monotonicity",
            "endpoint fixing and range",
            "inverse composition",
            "oracle equivalence",
            "gradient correctness",
            "lipschitz bound",
            "combined bound",
        ],
    ),
    ("prior_reg", &["non-negativity", "gradient consistency"]),
    (
        "digraf_layer",
        &[
            "permutation equivariance",
            "boundary continuity",
            "boundedness",
            "zero-init identity",
            "end-to-end gradient",
        ],
    ),
    ("nn_engine", &["autodiff soundness", "determinism", "gcn normalization"]),
    ("data", &["determinism", "sbm symmetry", "loader totality"]),
    (
        "experiments",
        &["pure function of config and seed", "json round trip", "convergence"],
    ),
    ("cli", &["idempotent reruns", "registry coverage"]),
];

pub fn registry() -> Vec<Invariant> {
    macro_rules! inv {
        ($m:literal, $n:literal, $f:expr) => {
            Invariant {
                module: $m,
                name: $n,
                run: $f,
            }
        };
    }
    vec![
        inv!("cpab_core", "identity at zero", cpab_identity),
        inv!("cpab_core", "strict monotonicity", cpab_monotone),
        inv!("cpab_core", "endpoint fixing and range", cpab_endpoints),
        inv!("cpab_core", "inverse composition", cpab_inverse),
        inv!("cpab_core", "oracle equivalence", cpab_rk4),
        inv!("cpab_core", "gradient correctness", cpab_gradients),
        inv!("cpab_core", "lipschitz bound", cpab_lipschitz),
        inv!("cpab_core", "combined bound", cpab_combined),
        inv!("prior_reg", "non-negativity", prior_nonneg),
        inv!("prior_reg", "gradient consistency", prior_gradient),
        inv!("digraf_layer", "permutation equivariance", digraf_equivariance),
        inv!("digraf_layer", "boundary continuity", digraf_continuity),
        inv!("digraf_layer", "boundedness", digraf_bounded),
        inv!("digraf_layer", "zero-init identity", digraf_zero_init),
        inv!("digraf_layer", "end-to-end gradient", digraf_end_to_end),
        inv!("nn_engine", "autodiff soundness", nn_autodiff),
        inv!("nn_engine", "determinism", nn_determinism),
        inv!("nn_engine", "gcn normalization", nn_gcn_constant),
        inv!("data", "determinism", data_determinism),
        inv!("data", "sbm symmetry", data_symmetry),
        inv!("data", "loader totality", data_totality),
        inv!("experiments", "pure function of config and seed", exp_purity),
        inv!("experiments", "json round trip", exp_roundtrip),
        inv!("experiments", "convergence", exp_convergence),
        inv!("cli", "idempotent reruns", cli_idempotent),
        inv!("cli", "registry coverage", registry_coverage),
    ]
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    registry()
        .into_iter()
        .map(|inv| {
            let outcome = std::panic::catch_unwind(|| (inv.run)(seed))
                .unwrap_or_else(|_| Err("panicked".to_string()));
            CheckResult {
                module: inv.module,
                name: inv.name,
                passed: outcome.is_ok(),
                detail: outcome.err().unwrap_or_default(),
            }
        })
        .collect()
}

fn rand_theta(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

fn basis(n: usize) -> VelocityBasis {
    VelocityBasis::new(&Tessellation::unit(n).expect("n > 0"))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn cpab_identity(_: u64) -> Outcome {
    for n in [2, 5, 16] {
        let b = basis(n);
        let zero = vec![0.0; b.dim()];
        for i in 0..10_000 {
            let x = i as f64 / 9_999.0;
            let y = transform(&b, &zero, x).map_err(err)?;
            ensure!((y - x).abs() <= 1e-12, "n={n}: T({x}) = {y}");
        }
    }
    Ok(())
}

fn cpab_monotone(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let b = basis(8);
    for _ in 0..1000 {
        let theta = rand_theta(&mut rng, b.dim());
        let (p, q) = (rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        if lo == hi {
            continue;
        }
        let (tl, th) = (transform(&b, &theta, lo).map_err(err)?, transform(&b, &theta, hi).map_err(err)?);
        ensure!(tl < th, "T({lo}) = {tl} >= T({hi}) = {th}");
    }
    Ok(())
}

fn cpab_endpoints(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let tess = Tessellation::new(-2.0, 3.0, 6).map_err(err)?;
    let b = VelocityBasis::new(&tess);
    for _ in 0..200 {
        let theta = rand_theta(&mut rng, b.dim());
        ensure!(transform(&b, &theta, -2.0).map_err(err)? == -2.0, "a moved");
        ensure!(transform(&b, &theta, 3.0).map_err(err)? == 3.0, "b moved");
        let y = transform(&b, &theta, rng.uniform(-2.0, 3.0)).map_err(err)?;
        ensure!((-2.0..=3.0).contains(&y), "{y} left the domain");
    }
    Ok(())
}

fn cpab_inverse(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let b = basis(10);
    for _ in 0..1000 {
        let theta = rand_theta(&mut rng, b.dim());
        let x = rng.uniform(0.0, 1.0);
        let y = transform(&b, &theta, x).map_err(err)?;
        let back = inverse_transform(&b, &theta, y).map_err(err)?;
        ensure!((back - x).abs() <= 1e-6, "inverse of T({x}) gave {back}");
    }
    Ok(())
}

fn rk4(b: &VelocityBasis, theta: &[f64], x: f64) -> f64 {
    let tess = b.tessellation();
    let f = |y: f64| {
        let y = y.clamp(tess.a(), tess.b());
        let c = tess.cell_of(y);
        theta
            .iter()
            .enumerate()
            .map(|(j, t)| t * (b.get(2 * c, j) * y + b.get(2 * c + 1, j)))
            .sum::<f64>()
    };
    let steps = 100_000;
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

fn cpab_rk4(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    for n in [2, 5, 16] {
        let b = basis(n);
        for _ in 0..10 {
            let theta = rand_theta(&mut rng, b.dim());
            let x = rng.uniform(0.0, 1.0);
            let (y, o) = (transform(&b, &theta, x).map_err(err)?, rk4(&b, &theta, x));
            ensure!((y - o).abs() <= 1e-6, "n={n} x={x}: {y} vs rk4 {o}");
        }
    }
    Ok(())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

fn cpab_gradients(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let b = basis(6);
    let h = 1e-6;
    for draw in 0..100 {
        let theta = rand_theta(&mut rng, b.dim());
        let at_knot = draw % 10 == 0;
        let x = if at_knot {
            (1 + rng.index(5)) as f64 / 6.0
        } else {
            rng.uniform(0.01, 0.99)
        };
        let tol = if at_knot { 1e-3 } else { 1e-4 };
        let t = |th: &[f64], x: f64| transform(&b, th, x).map_err(err);
        let fd = (t(&theta, x + h)? - t(&theta, x - h)?) / (2.0 * h);
        let gx = transform_grad_x(&b, &theta, x).map_err(err)?;
        ensure!(rel_close(gx, fd, tol), "dx at {x}: {gx} vs {fd}");
        let gt = transform_grad_theta(&b, &theta, x).map_err(err)?;
        for j in 0..theta.len() {
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (t(&p, x)? - t(&m, x)?) / (2.0 * h);
            ensure!(rel_close(gt[j], fd, tol), "dtheta[{j}] at {x}: {} vs {fd}", gt[j]);
        }
    }
    Ok(())
}

fn triples(seed: u64, mut f: impl FnMut(f64, f64, f64, f64, f64) -> Outcome) -> Outcome {
    let mut rng = Rng::new(seed);
    let tess = Tessellation::new(-5.0, 5.0, 8).map_err(err)?;
    let b = VelocityBasis::new(&tess);
    for _ in 0..10_000 {
        let theta = rand_theta(&mut rng, b.dim());
        let (x, y) = (rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        let d = (transform(&b, &theta, x).map_err(err)? - transform(&b, &theta, y).map_err(err)?).abs();
        f(x, y, d, lipschitz_bound(&theta), 10.0)?;
    }
    Ok(())
}

fn cpab_lipschitz(seed: u64) -> Outcome {
    triples(seed, |x, y, d, c, _| {
        ensure!(d <= (x - y).abs() * c.exp() + 1e-9, "({x}, {y}): {d} exceeds bound");
        Ok(())
    })
}

fn cpab_combined(seed: u64) -> Outcome {
    triples(seed, |x, y, d, c, width| {
        ensure!(d <= width.min((x - y).abs() * c.exp()) + 1e-9, "({x}, {y}): {d} exceeds bound");
        Ok(())
    })
}

fn prior_nonneg(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let tess = Tessellation::unit(8).map_err(err)?;
    let prior = PriorMatrix::with_defaults(&tess).map_err(err)?;
    let (zero, _) = prior.quadratic(&[0.0; 7]).map_err(err)?;
    ensure!(zero == 0.0, "value at zero is {zero}");
    for _ in 0..1000 {
        let theta: Vec<f64> = (0..7).map(|_| rng.normal() * 10f64.powi(rng.index(5) as i32 - 3)).collect();
        let (v, _) = prior.quadratic(&theta).map_err(err)?;
        ensure!(v > 0.0, "non-positive value {v} at non-zero theta");
    }
    Ok(())
}

fn prior_gradient(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let tess = Tessellation::new(0.0, 1.0, 4).map_err(err)?;
    let prior = PriorMatrix::with_defaults(&tess).map_err(err)?;
    for _ in 0..20 {
        let theta: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (_, g) = prior.quadratic(&theta).map_err(err)?;
        for j in 0..3 {
            // The value is quadratic, so a central difference is exact up to rounding.
            let h = 1e-3;
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (prior.quadratic(&p).map_err(err)?.0 - prior.quadratic(&m).map_err(err)?.0) / (2.0 * h);
            ensure!((g[j] - fd).abs() <= 1e-8 * g[j].abs().max(fd.abs()).max(1.0), "grad[{j}] {} vs {fd}", g[j]);
        }
    }
    Ok(())
}

fn toy_graph(rng: &mut Rng, n: usize, f: usize) -> (SparseAdjacency, Tensor) {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.bernoulli(0.4) {
                pairs.push((u, v));
            }
        }
    }
    let x = Tensor::from_vec(n, f, (0..n * f).map(|_| rng.uniform(-1.8, 1.8)).collect()).expect("shape");
    (SparseAdjacency::from_undirected(n, &pairs).expect("in range"), x)
}

fn digraf_equivariance(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let (adj, x) = toy_graph(&mut rng, 7, 3);
    let unit = Digraf::new(2.0, 6).map_err(err)?;
    let mut params = Params::new();
    let net = HyperNetwork::with_hidden(&mut params, &mut rng, Conv::Gcn, 3, 8, 5, PoolMode::Mean);
    *params.get_mut(net.head.weight) = glorot(&mut rng, 8, 5);
    let index = GraphIndex::single(7).map_err(err)?;
    let run = |x: &Tensor, adj: &SparseAdjacency| -> Result<Tensor, String> {
        let theta = net.predict_theta(&params, x, adj, &index).map_err(err)?;
        Ok(unit.forward(x, &theta, &index, false).map_err(err)?.0)
    };
    let base = run(&x, &adj)?;
    for _ in 0..50 {
        let mut perm: Vec<usize> = (0..7).collect();
        rng.shuffle(&mut perm);
        let mut px = Tensor::zeros(7, 3);
        for i in 0..7 {
            px.row_mut(perm[i]).copy_from_slice(x.row(i));
        }
        let out = run(&px, &adj.permuted(&perm))?;
        for i in 0..7 {
            for c in 0..3 {
                let d = (out.get(perm[i], c) - base.get(i, c)).abs();
                ensure!(d <= 1e-6, "node {i} channel {c} differs by {d}");
            }
        }
    }
    Ok(())
}

fn digraf_continuity(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let unit = Digraf::new(5.0, 16).map_err(err)?;
    for _ in 0..50 {
        let theta = rand_theta(&mut rng, 15);
        ensure!(unit.apply(&theta, 5.0).map_err(err)?.0 == 5.0, "moved +r");
        ensure!(unit.apply(&theta, -5.0).map_err(err)?.0 == -5.0, "moved -r");
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let gap = (unit.apply(&theta, 5.0 - eps).map_err(err)?.0 - (5.0 - eps)).abs()
                + (unit.apply(&theta, -5.0 + eps).map_err(err)?.0 - (-5.0 + eps)).abs();
            ensure!(gap <= prev + 1e-15, "gap grew to {gap} at eps {eps}");
            prev = gap;
        }
        ensure!(prev < 1e-6, "gap {prev} near the boundary");
    }
    Ok(())
}

fn digraf_bounded(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let unit = Digraf::new(3.0, 8).map_err(err)?;
    for _ in 0..2000 {
        let theta = rand_theta(&mut rng, 7);
        let h = rng.uniform(-3.0, 3.0);
        let y = unit.apply(&theta, h).map_err(err)?.0;
        ensure!(y.abs() <= 3.0, "{h} mapped to {y}");
    }
    Ok(())
}

fn digraf_zero_init(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let (adj, x) = toy_graph(&mut rng, 6, 4);
    let unit = Arc::new(Digraf::new(5.0, 8).map_err(err)?);
    let mut params = Params::new();
    let net = HyperNetwork::new(&mut params, &mut rng, Conv::Gin, 4, 7, PoolMode::Max);
    let op = Arc::new(adj.gcn_operator());
    let hop = Arc::new(net.conv().operator(&adj));
    let index = Arc::new(GraphIndex::single(6).map_err(err)?);
    let mut tape = Tape::inference();
    let xv = tape.constant(x.clone());
    let w = tape.constant(glorot(&mut rng, 4, 4));
    let pre = crate::nn::gcn_layer(&mut tape, &op, xv, w).map_err(err)?;
    let theta = net.forward(&mut tape, &params, pre, &hop, &index).map_err(err)?;
    let out = tape.digraf(&unit, pre, theta, &index).map_err(err)?;
    let d = tape.value(out).max_abs_diff(tape.value(pre));
    ensure!(d <= 1e-12, "differs from identity by {d}");
    Ok(())
}

fn digraf_end_to_end(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let (adj, x) = toy_graph(&mut rng, 5, 3);
    let unit = Arc::new(Digraf::new(2.0, 5).map_err(err)?);
    let mut params = Params::new();
    let net = HyperNetwork::with_hidden(&mut params, &mut rng, Conv::Gcn, 3, 6, 4, PoolMode::Mean);
    *params.get_mut(net.head.weight) = glorot(&mut rng, 6, 4);
    let op = Arc::new(net.conv().operator(&adj));
    let index = Arc::new(GraphIndex::single(5).map_err(err)?);
    let target = Arc::new(x.map(|v| 0.5 * v.sin()));
    let mask = Arc::new((0..5).collect());
    let loss = |tape: &mut Tape, params: &Params| -> Result<Var, String> {
        let xv = tape.constant(x.clone());
        let theta = net.forward(tape, params, xv, &op, &index).map_err(err)?;
        let out = tape.digraf(&unit, xv, theta, &index).map_err(err)?;
        tape.regression(out, &target, &mask, RegressionLoss::Mse).map_err(err)
    };
    let mut tape = Tape::new();
    let l = loss(&mut tape, &params)?;
    let grads = tape.backward(l).map_err(err)?.for_params(&params);
    let h = 1e-6;
    for id in params.ids() {
        for k in 0..params.get(id).len() {
            let eval = |delta: f64| -> Result<f64, String> {
                let mut p = params.clone();
                p.get_mut(id).data_mut()[k] += delta;
                let mut tape = Tape::inference();
                let l = loss(&mut tape, &p)?;
                Ok(tape.value(l).item())
            };
            let fd = (eval(h)? - eval(-h)?) / (2.0 * h);
            let a = grads[id.index()].data()[k];
            ensure!(
                (a - fd).abs() <= 1e-3 * a.abs().max(fd.abs()).max(1e-4),
                "{}[{k}]: {a} vs {fd}",
                params.name(id)
            );
        }
    }
    Ok(())
}

fn nn_autodiff(seed: u64) -> Outcome {
    let mut rng = Rng::new(seed);
    let (adj, x) = toy_graph(&mut rng, 6, 3);
    let op = Arc::new(adj.gcn_operator());
    let index = Arc::new(GraphIndex::new(vec![0, 1, 0, 1, 1, 0], 2).map_err(err)?);
    let unit = Arc::new(Digraf::new(2.0, 4).map_err(err)?);
    let prior = Arc::new(PriorMatrix::with_defaults(&Tessellation::unit(4).map_err(err)?).map_err(err)?);
    let labels = Arc::new(vec![0, 1]);
    let mask = Arc::new(vec![0, 1]);
    let rnd = |rng: &mut Rng, r: usize, c: usize| {
        Tensor::from_vec(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).expect("shape")
    };
    let inputs = vec![x, rnd(&mut rng, 3, 3), rnd(&mut rng, 1, 3), rnd(&mut rng, 2, 3)];
    let build = |tape: &mut Tape, v: &[Var]| -> Result<Var, String> {
        let h = crate::nn::embed(tape, v[0], v[1], v[2]).map_err(err)?;
        let h = tape.propagate(&op, h).map_err(err)?;
        let h = tape.activation(h, Baseline::Elu).map_err(err)?;
        let theta = tape.activation(v[3], Baseline::Tanh).map_err(err)?;
        let h = tape.digraf(&unit, h, theta, &index).map_err(err)?;
        let s = tape.scale(h, 0.7).map_err(err)?;
        let h = tape.add(h, s).map_err(err)?;
        let p = tape.pool(h, &index, PoolMode::Max).map_err(err)?;
        let ce = tape.cross_entropy(p, &labels, &mask).map_err(err)?;
        let q = tape.quad_form(theta, &prior, 0.1).map_err(err)?;
        tape.add(ce, q).map_err(err)
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&mut tape, &vars)?;
    let grads = tape.backward(out).map_err(err)?;
    let h = 1e-6;
    for (i, input) in inputs.iter().enumerate() {
        for k in 0..input.len() {
            let eval = |delta: f64| -> Result<f64, String> {
                let mut tape = Tape::inference();
                let vars: Vec<Var> = inputs
                    .iter()
                    .enumerate()
                    .map(|(j, t)| {
                        let mut t = t.clone();
                        if j == i {
                            t.data_mut()[k] += delta;
                        }
                        tape.constant(t)
                    })
                    .collect();
                let out = build(&mut tape, &vars)?;
                Ok(tape.value(out).item())
            };
            let fd = (eval(h)? - eval(-h)?) / (2.0 * h);
            let a = grads.get(vars[i]).map_or(0.0, |g| g.data()[k]);
            ensure!(
                (a - fd).abs() <= 1e-5 * a.abs().max(fd.abs()).max(1e-3),
                "input {i}[{k}]: {a} vs {fd}"
            );
        }
    }
    Ok(())
}

fn nn_determinism(seed: u64) -> Outcome {
    let train = |seed: u64| -> Result<Params, String> {
        let mut rng = Rng::new(seed);
        let mut params = Params::new();
        let l1 = Linear::new(&mut params, &mut rng, "l1", 2, 8, true);
        let l2 = Linear::new(&mut params, &mut rng, "l2", 8, 1, true);
        let x = Tensor::from_vec(10, 2, (0..20).map(|_| rng.normal()).collect()).map_err(err)?;
        let y = Arc::new(Tensor::from_vec(10, 1, (0..10).map(|i| x.get(i, 0).sin()).collect()).map_err(err)?);
        let mask = Arc::new((0..10).collect());
        let mut adam = Adam::new(&params, 1e-2);
        for _ in 0..25 {
            let mut tape = Tape::new();
            let xv = tape.constant(x.clone());
            let h = l1.forward(&mut tape, &params, xv).map_err(err)?;
            let h = tape.activation(h, Baseline::Tanh).map_err(err)?;
            let o = l2.forward(&mut tape, &params, h).map_err(err)?;
            let l = tape.regression(o, &y, &mask, RegressionLoss::Mse).map_err(err)?;
            let g = tape.backward(l).map_err(err)?.for_params(&params);
            adam.step(&mut params, &g).map_err(err)?;
        }
        Ok(params)
    };
    let (a, b) = (train(seed)?, train(seed)?);
    for (p, q) in a.tensors().iter().zip(b.tensors()) {
        ensure!(
            p.data().iter().zip(q.data()).all(|(u, v)| u.to_bits() == v.to_bits()),
            "parameters differ between identical runs"
        );
    }
    Ok(())
}

fn nn_gcn_constant(_: u64) -> Outcome {
    for n in [3, 5, 12] {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let adj = SparseAdjacency::from_undirected(n, &pairs).map_err(err)?;
        let out = adj.gcn_operator().apply(&vec![1.0; n], 1);
        ensure!(out.iter().all(|v| (v - 1.0).abs() < 1e-14), "cycle {n} not preserved");
    }
    Ok(())
}

fn small_sbm(seed: u64) -> SbmConfig {
    SbmConfig {
        n_per_block: 30,
        n_blocks: 3,
        p_in: 0.3,
        p_out: 0.02,
        feature_dim: 4,
        noise: 0.5,
        seed,
    }
}

fn data_determinism(seed: u64) -> Outcome {
    let c = small_sbm(seed);
    ensure!(generate_sbm(&c).map_err(err)? == generate_sbm(&c).map_err(err)?, "sbm differs");
    let p = crate::data::sample_peaks(50, seed).map_err(err)?;
    ensure!(p == crate::data::sample_peaks(50, seed).map_err(err)?, "peaks differ");
    Ok(())
}

fn data_symmetry(seed: u64) -> Outcome {
    let d = generate_sbm(&small_sbm(seed)).map_err(err)?;
    let edges: std::collections::HashSet<_> = d.batches[0].adjacency.edges().iter().copied().collect();
    for &(u, v) in &edges {
        ensure!(u != v, "self-loop at {u}");
        ensure!(edges.contains(&(v, u)), "({u}, {v}) has no reverse");
    }
    Ok(())
}

fn data_totality(seed: u64) -> Outcome {
    let d = generate_sbm(&SbmConfig {
        n_per_block: 4,
        n_blocks: 2,
        ..small_sbm(seed)
    })
    .map_err(err)?;
    let text = write_graph(&d).map_err(err)?;
    ensure!(parse_graph(&text).as_ref() == Ok(&d), "round trip changed the dataset");
    let mut rng = Rng::new(seed);
    let bytes = text.as_bytes();
    for _ in 0..300 {
        let mut t = bytes.to_vec();
        let pos = rng.index(t.len());
        t[pos] = b"x -9\n 0.5e"[rng.index(10)];
        t.truncate(rng.index(t.len()) + 1);
        let s = String::from_utf8_lossy(&t).into_owned();
        let ok = std::panic::catch_unwind(|| {
            let _ = parse_graph(&s);
        })
        .is_ok();
        ensure!(ok, "loader panicked on {s:?}");
    }
    Ok(())
}

fn tiny_peaks(seed: u64) -> Result<ExperimentReport, String> {
    let data = crate::data::sample_peaks(300, seed).map_err(err)?;
    let (train, test) = data.split(0.8, &mut Rng::new(seed));
    let config = PeaksConfig {
        activation: PeaksActivation::Digraf,
        epochs: 6,
        batch_size: 64,
        hidden: 8,
        lr: 3e-3,
        seed,
        ..PeaksConfig::default()
    };
    let run = run_peaks_on(&train, &test, &config).map_err(err)?;
    let mut report = ExperimentReport::new("peaks", &config).map_err(err)?;
    report.push(run.to_seed_run(seed));
    Ok(report)
}

fn exp_purity(seed: u64) -> Outcome {
    let (a, b) = (tiny_peaks(seed)?, tiny_peaks(seed)?);
    ensure!(a.without_timings() == b.without_timings(), "reports differ");
    Ok(())
}

fn exp_roundtrip(seed: u64) -> Outcome {
    let a = tiny_peaks(seed)?;
    let back = ExperimentReport::from_json(&a.to_json().map_err(err)?).map_err(err)?;
    ensure!(back.without_timings() == a.without_timings(), "json round trip changed the report");
    Ok(())
}

fn exp_convergence(seed: u64) -> Outcome {
    let a = tiny_peaks(seed)?;
    let curve = &a.seeds[0].curve;
    let (first, last) = (curve[0].train_loss, curve[curve.len() - 1].train_loss);
    ensure!(last < first, "train loss went from {first} to {last}");
    Ok(())
}

fn cli_idempotent(seed: u64) -> Outcome {
    let base = std::env::temp_dir().join(format!("digraf-check-{}-{seed}", std::process::id()));
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = base.join(run.to_string());
        let argv: Vec<String> = [
            "dump-field", "--theta", "0.3,-0.2,0.5", "--cells", "4", "--points", "33", "--seed",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([seed.to_string(), "--out".into(), dir.display().to_string()])
        .collect();
        let mut sink = Vec::new();
        let code = crate::cli::run(&argv, &mut sink, &mut Vec::new());
        ensure!(code == 0, "dump-field exited with {code}");
        let mut files = Vec::new();
        for name in ["run.json", "report.json", "field.csv"] {
            files.push(std::fs::read(dir.join(name)).map_err(err)?);
        }
        outputs.push(files);
    }
    let _ = std::fs::remove_dir_all(&base);
    ensure!(outputs[0] == outputs[1], "outputs differ between reruns");
    Ok(())
}

fn registry_coverage(_: u64) -> Outcome {
    let registered: Vec<(&str, &str)> = registry().iter().map(|i| (i.module, i.name)).collect();
    let listed: Vec<(&str, &str)> = LISTED
        .iter()
        .flat_map(|(m, names)| names.iter().map(move |n| (*m, *n)))
        .collect();
    for entry in &listed {
        let n = registered.iter().filter(|r| *r == entry).count();
        ensure!(n == 1, "{}: {} registered {n} times", entry.0, entry.1);
    }
    for entry in &registered {
        ensure!(listed.contains(entry), "{}: {} is not a listed invariant", entry.0, entry.1);
    }
    Ok(())
}
