use digraf::data::{generate_sbm, sample_peaks, SbmConfig, TabularDataset};
use digraf::experiments::{
    bench_scaling, dump_field, field_csv, fit_activation, run_node_classification, run_peaks, run_peaks_on,
    Aggregate, ExperimentReport, FitConfig, FitTarget, NodeConfig, PeaksActivation, PeaksConfig,
};
use digraf::nn::Tensor;
use digraf::rng::Rng;

#[test]
fn fitting_identity_recovers_zero_theta() {
    let report = fit_activation(&FitConfig {
        target: FitTarget::Identity,
        iters: 300,
        ..FitConfig::default()
    })
    .unwrap();
    assert!(report.cpab_error <= 1e-8, "{}", report.cpab_error);
    assert!(report.theta.iter().all(|t| t.abs() < 1e-4), "{:?}", report.theta);
    assert_eq!(report.curve.len(), 300);
    assert_eq!(report.grid.len(), 1024);
}

#[test]
fn fit_rejects_bad_config() {
    for config in [
        FitConfig { iters: 0, ..FitConfig::default() },
        FitConfig { r: -1.0, ..FitConfig::default() },
        FitConfig { n_cells: 0, ..FitConfig::default() },
        FitConfig { lr: 0.0, ..FitConfig::default() },
    ] {
        assert!(fit_activation(&config).is_err(), "{config:?}");
    }
}

fn small_peaks(activation: PeaksActivation) -> PeaksConfig {
    PeaksConfig {
        activation,
        n_samples: 600,
        epochs: 8,
        batch_size: 64,
        hidden: 16,
        lr: 3e-3,
        seed: 5,
        ..PeaksConfig::default()
    }
}

#[test]
fn zero_targets_drive_error_to_zero() {
    let data = sample_peaks(400, 1).unwrap();
    let zeros = TabularDataset {
        inputs: data.inputs.clone(),
        targets: Tensor::zeros(data.len(), 1),
    };
    let (train, test) = zeros.split(0.8, &mut Rng::new(1));
    for activation in [PeaksActivation::Relu, PeaksActivation::Tanh, PeaksActivation::Digraf] {
        let config = PeaksConfig {
            epochs: 300,
            lr: 3e-3,
            ..small_peaks(activation)
        };
        let run = run_peaks_on(&train, &test, &config).unwrap();
        let start = run.curve[0].eval_metric;
        assert!(
            run.test_mse <= 1e-3 * start && run.test_mse <= 1e-4,
            "{activation}: {:e} from {start:e}",
            run.test_mse
        );
    }
}

#[test]
fn peaks_runs_are_reproducible_and_converge() {
    for activation in [PeaksActivation::Relu, PeaksActivation::Tanh, PeaksActivation::Digraf] {
        let a = run_peaks(&small_peaks(activation)).unwrap();
        let b = run_peaks(&small_peaks(activation)).unwrap();
        assert_eq!(a.test_mse.to_bits(), b.test_mse.to_bits());
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.curve.len(), 8);
        assert!(a.curve[7].train_loss < a.curve[0].train_loss);
        let layers = if activation == PeaksActivation::Digraf { 2 } else { 0 };
        assert_eq!(a.thetas.len(), layers);
        assert!(a.thetas.iter().flatten().all(|t| t.abs() <= 1.0));
    }
}

#[test]
fn separable_sbm_is_solved_by_every_arm() {
    let dataset = generate_sbm(&SbmConfig {
        n_per_block: 60,
        n_blocks: 2,
        p_in: 1.0,
        p_out: 0.0,
        feature_dim: 4,
        noise: 0.0,
        seed: 2,
    })
    .unwrap();
    for arm in ["identity", "relu", "tanh", "elu", "digraf", "digraf-adaptive"] {
        let report = run_node_classification(
            &dataset,
            &NodeConfig {
                arm: arm.parse().unwrap(),
                epochs: 30,
                hidden: 16,
                seeds: vec![0, 1],
                ..NodeConfig::default()
            },
        )
        .unwrap();
        for run in &report.seeds {
            assert_eq!(run.metrics["test_accuracy"], 1.0, "{arm} seed {}", run.seed);
        }
    }
}

#[test]
fn node_reports_are_deterministic_and_aggregate_correctly() {
    let dataset = generate_sbm(&SbmConfig {
        n_per_block: 50,
        n_blocks: 3,
        p_in: 0.2,
        p_out: 0.03,
        noise: 1.0,
        ..SbmConfig::default()
    })
    .unwrap();
    let config = NodeConfig {
        arm: "digraf-adaptive".parse().unwrap(),
        epochs: 10,
        hidden: 8,
        seeds: vec![3, 4, 5],
        ..NodeConfig::default()
    };
    let a = run_node_classification(&dataset, &config).unwrap();
    let b = run_node_classification(&dataset, &config).unwrap();
    assert_eq!(a.without_timings(), b.without_timings());

    let accs: Vec<f64> = a.seeds.iter().map(|s| s.metrics["test_accuracy"]).collect();
    let agg = a.aggregate["test_accuracy"];
    assert_eq!(agg, Aggregate::of(&accs));
    let mut copy = a.clone();
    copy.aggregate.clear();
    copy.recompute();
    assert_eq!(copy.aggregate, a.aggregate);

    let back = ExperimentReport::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn node_classification_rejects_tabular_tasks() {
    let mut dataset = generate_sbm(&SbmConfig {
        n_per_block: 30,
        n_blocks: 2,
        ..SbmConfig::default()
    })
    .unwrap();
    dataset.task = digraf::data::TaskKind::GraphRegress;
    assert!(run_node_classification(&dataset, &NodeConfig::default()).is_err());
}

#[test]
fn zero_field_is_identity() {
    let rows = dump_field(&[0.0; 7], 5.0, 8, 101).unwrap();
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert_eq!(r.velocity, 0.0);
        assert!((r.transform - r.x).abs() <= 1e-12, "{r:?}");
    }
    let csv = field_csv(&rows);
    assert_eq!(csv.lines().count(), 102);
    assert!(csv.starts_with("x,velocity,transform\n"));
}

#[test]
fn field_vanishes_at_both_ends() {
    let mut rng = Rng::new(8);
    for _ in 0..20 {
        let theta: Vec<f64> = (0..7).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let rows = dump_field(&theta, 5.0, 8, 33).unwrap();
        assert_eq!(rows[0].velocity, 0.0);
        assert_eq!(rows[32].velocity, 0.0);
    }
}

#[test]
fn tent_field_matches_unit_domain_values() {
    // Half-width 0.5 makes the activation coordinates a shift of the unit domain.
    let rows = dump_field(&[1.0], 0.5, 2, 5).unwrap();
    let s3 = 3f64.sqrt();
    assert!((rows[2].velocity - 0.5 / s3).abs() < 1e-12);
    assert!((rows[1].transform + 0.5 - 0.25 * (1.0 / s3).exp()).abs() < 1e-12);
}

#[test]
fn bench_keeps_raw_samples() {
    let report = bench_scaling(&[1000, 2000, 4000], &[0.0; 7], 5.0, 5, 0).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.ratios.len(), 2);
    for row in &report.rows {
        assert_eq!(row.samples.len(), 5);
        let mut s = row.samples.clone();
        s.sort_by(f64::total_cmp);
        assert_eq!(row.median, s[2]);
    }
    assert!(bench_scaling(&[2000, 1000], &[0.0; 7], 5.0, 5, 0).is_err());
}
