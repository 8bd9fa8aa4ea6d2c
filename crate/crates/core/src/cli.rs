//! Batch command-line interface. Each subcommand resolves a [`Config`] from
//! defaults, an optional `--config` file and flag overrides, runs, and writes
//! `run.json`, `report.json` and CSV files into `--out`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Config, KeySpec};
use crate::data::{generate_sbm, load_graph_file, SbmConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    bench_scaling, dump_field, field_csv, fit_activation, run_node_classification, run_peaks, Arm,
    ExperimentReport, FitConfig, NodeConfig, PeaksConfig,
};

const FIT_KEYS: &[KeySpec] = &[
    KeySpec::new("target", "elu", "function to fit: elu, tanh, sigmoid, softplus, identity"),
    KeySpec::new("r", "5", "half-width of the domain"),
    KeySpec::new("cells", "16", "tessellation cells"),
    KeySpec::new("iters", "2000", "optimizer steps"),
    KeySpec::new("lr", "0.05", "Adam learning rate"),
];

const PEAKS_KEYS: &[KeySpec] = &[
    KeySpec::new("activation", "digraf", "relu, tanh or digraf"),
    KeySpec::new("samples", "50000", "points sampled from the surface"),
    KeySpec::new("epochs", "200", "training epochs"),
    KeySpec::new("batch_size", "512", "minibatch size"),
    KeySpec::new("lr", "0.001", "Adam learning rate"),
    KeySpec::new("hidden", "64", "hidden width"),
    KeySpec::new("r", "5", "activation half-width"),
    KeySpec::new("cells", "16", "tessellation cells"),
    KeySpec::new("lambda_reg", "0.001", "smoothness penalty weight"),
    KeySpec::new("seeds", "5", "number of consecutive seeds starting at --seed"),
];

const NODE_KEYS: &[KeySpec] = &[
    KeySpec::new("activation", "relu", "identity, relu, tanh, elu or digraf"),
    KeySpec::new("adaptive", "false", "predict theta per graph with a hyper-network"),
    KeySpec::new("epochs", "200", "full-batch epochs"),
    KeySpec::new("lr", "0.01", "Adam learning rate"),
    KeySpec::new("weight_decay", "0.0005", "decoupled weight decay"),
    KeySpec::new("hidden", "64", "hidden width"),
    KeySpec::new("r", "5", "activation half-width"),
    KeySpec::new("cells", "16", "tessellation cells"),
    KeySpec::new("lambda_reg", "0.001", "smoothness penalty weight"),
    KeySpec::new("pool", "mean", "hyper-network pooling: mean, max or sum"),
    KeySpec::new("seeds", "5", "number of consecutive seeds starting at --seed"),
    KeySpec::new("graph", "", "graph file; empty generates an SBM"),
    KeySpec::new("sbm_nodes_per_block", "400", "SBM nodes per block"),
    KeySpec::new("sbm_blocks", "4", "SBM blocks"),
    KeySpec::new("sbm_p_in", "0.02", "SBM edge probability within a block"),
    KeySpec::new("sbm_p_out", "0.004", "SBM edge probability across blocks"),
    KeySpec::new("sbm_features", "8", "SBM feature dimension"),
    KeySpec::new("sbm_noise", "1.5", "SBM feature noise"),
];

const FIELD_KEYS: &[KeySpec] = &[
    KeySpec::new("theta", "0", "comma-separated theta, or 0 for zeros"),
    KeySpec::new("r", "5", "half-width of the domain"),
    KeySpec::new("cells", "8", "tessellation cells"),
    KeySpec::new("points", "101", "grid points"),
];

const BENCH_KEYS: &[KeySpec] = &[
    KeySpec::new(
        "sizes",
        "10000,20000,40000,80000,160000,320000,640000,1280000",
        "batch sizes, increasing",
    ),
    KeySpec::new("theta", "0", "comma-separated theta, or 0 for zeros"),
    KeySpec::new("cells", "16", "tessellation cells"),
    KeySpec::new("r", "5", "half-width of the domain"),
    KeySpec::new("repeats", "5", "timed repeats per size"),
];

const COMMANDS: &[(&str, &[KeySpec], &str)] = &[
    ("check", &[], "run every registered invariant"),
    ("fit-activation", FIT_KEYS, "fit a fixed activation with a CPAB transform"),
    ("peaks", PEAKS_KEYS, "regress the peaks surface with an MLP"),
    ("train-node", NODE_KEYS, "node classification with a two-layer GCN"),
    ("dump-field", FIELD_KEYS, "tabulate velocity field and transform"),
    ("bench", BENCH_KEYS, "time the batched activation at growing sizes"),
];

pub fn usage() -> String {
    let mut s = String::from(
        "usage: digraf <command> [--seed N] [--config FILE] [--out DIR] [--key value ...]\n\ncommands:\n",
    );
    for (name, keys, about) in COMMANDS {
        let _ = writeln!(s, "  {name:<15} {about}");
        for k in *keys {
            let flag = k.name.replace('_', "-");
            let _ = writeln!(s, "      --{flag:<22} {} [{}]", k.doc, k.default);
        }
    }
    s
}

struct Invocation {
    command: &'static str,
    schema: &'static [KeySpec],
    seed: u64,
    config: Option<PathBuf>,
    out: PathBuf,
    overrides: Vec<(String, String)>,
}

enum Parsed {
    Run(Invocation),
    Help,
}

fn parse_args(argv: &[String]) -> std::result::Result<Parsed, String> {
    let Some(first) = argv.first() else {
        return Err("missing command".into());
    };
    if first == "-h" || first == "--help" || first == "help" {
        return Ok(Parsed::Help);
    }
    let Some(&(command, schema, _)) = COMMANDS.iter().find(|c| c.0 == first) else {
        return Err(format!("unknown command `{first}`"));
    };
    let mut inv = Invocation {
        command,
        schema,
        seed: 0,
        config: None,
        out: PathBuf::from("digraf-out"),
        overrides: Vec::new(),
    };
    let mut rest = argv[1..].iter();
    while let Some(arg) = rest.next() {
        if arg == "-h" || arg == "--help" {
            return Ok(Parsed::Help);
        }
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(format!("unexpected argument `{arg}`"));
        };
        let (name, value) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = rest.next().ok_or_else(|| format!("flag --{flag} needs a value"))?;
                (flag.to_string(), v.clone())
            }
        };
        match name.as_str() {
            "seed" => inv.seed = value.parse().map_err(|_| format!("--seed expects an integer, got `{value}`"))?,
            "config" => inv.config = Some(PathBuf::from(value)),
            "out" => inv.out = PathBuf::from(value),
            other => {
                let key = other.replace('-', "_");
                if !schema.iter().any(|k| k.name == key) {
                    return Err(format!("unknown flag --{other} for `{command}`"));
                }
                inv.overrides.push((key, value));
            }
        }
    }
    Ok(Parsed::Run(inv))
}

/// Entry point for the binary: reads the process arguments and streams.
pub fn main() -> i32 {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    run(&argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Runs one command. `argv` excludes the program name. Returns 0 on success,
/// 1 on a failed check or runtime error, 2 on a usage error.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let inv = match parse_args(argv) {
        Ok(Parsed::Run(inv)) => inv,
        Ok(Parsed::Help) => {
            let _ = write!(out, "{}", usage());
            return 0;
        }
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}\n\n{}", usage());
            return 2;
        }
    };
    match execute(&inv, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    seed: u64,
    config: std::collections::BTreeMap<String, String>,
}

struct Output<'a> {
    dir: &'a Path,
}

impl Output<'_> {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(path, e))
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn theta_arg(cfg: &Config, cells: usize) -> Result<Vec<f64>> {
    if cfg.raw("theta")?.trim() == "0" {
        return Ok(vec![0.0; cells.saturating_sub(1)]);
    }
    let theta: Vec<f64> = cfg.list("theta", "a comma-separated list of numbers")?;
    if theta.len() + 1 != cells {
        return Err(Error::Input(format!(
            "theta has {} entries but {cells} cells need {}",
            theta.len(),
            cells.saturating_sub(1)
        )));
    }
    Ok(theta)
}

fn seed_list(seed: u64, n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::Input("seeds must be at least 1".into()));
    }
    Ok((0..n as u64).map(|i| seed + i).collect())
}

fn execute(inv: &Invocation, out: &mut dyn Write) -> Result<bool> {
    let cfg = Config::load(inv.config.as_deref(), &inv.overrides, inv.schema)?;
    std::fs::create_dir_all(&inv.out).map_err(|e| Error::io(&inv.out, e))?;
    let dir = Output { dir: &inv.out };
    dir.json(
        "run.json",
        &RunRecord {
            command: inv.command,
            seed: inv.seed,
            config: cfg.to_map(),
        },
    )?;
    let print = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    match inv.command {
        "check" => {
            let results = crate::check::run_all(inv.seed);
            let mut ok = true;
            for r in &results {
                ok &= r.passed;
                let status = if r.passed { "PASS" } else { "FAIL" };
                let detail = if r.passed { String::new() } else { format!(": {}", r.detail) };
                print(out, format!("{status} {}: {}{detail}", r.module, r.name));
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            print(out, format!("{} passed, {failed} failed", results.len() - failed));
            dir.json("report.json", &results)?;
            Ok(ok)
        }
        "fit-activation" => {
            let config = FitConfig {
                target: cfg.parsed("target", "a fit target")?,
                r: cfg.f64("r")?,
                n_cells: cfg.usize("cells")?,
                iters: cfg.usize("iters")?,
                lr: cfg.f64("lr")?,
                seed: inv.seed,
            };
            let report = fit_activation(&config)?;
            let mut csv = String::from("x,target,fitted\n");
            for (x, y) in report.grid.iter().zip(&report.fitted) {
                let _ = writeln!(csv, "{x},{},{y}", config.target.eval(*x));
            }
            let mut loss = String::from("iter,loss\n");
            for (i, l) in report.curve.iter().enumerate() {
                let _ = writeln!(loss, "{},{l}", i + 1);
            }
            dir.write("fit.csv", &csv)?;
            dir.write("loss.csv", &loss)?;
            dir.json("report.json", &report)?;
            print(
                out,
                format!(
                    "{}: cpab {:.3e}, piecewise relu k=1 {:.3e} k=2 {:.3e} k=3 {:.3e}",
                    config.target, report.cpab_error, report.prelu_k1_error, report.prelu_k2_error, report.prelu_k3_error
                ),
            );
            Ok(true)
        }
        "peaks" => {
            let base = PeaksConfig {
                activation: cfg.parsed("activation", "relu, tanh or digraf")?,
                n_samples: cfg.usize("samples")?,
                epochs: cfg.usize("epochs")?,
                batch_size: cfg.usize("batch_size")?,
                lr: cfg.f64("lr")?,
                hidden: cfg.usize("hidden")?,
                omega_half_width: cfg.f64("r")?,
                n_cells: cfg.usize("cells")?,
                lambda_reg: cfg.f64("lambda_reg")?,
                seed: inv.seed,
            };
            let mut report = ExperimentReport::new("peaks", &base)?;
            let mut csv = String::from("seed,epoch,train_loss,test_mse\n");
            for seed in seed_list(inv.seed, cfg.usize("seeds")?)? {
                let run = run_peaks(&PeaksConfig { seed, ..base.clone() })?;
                for p in &run.curve {
                    let _ = writeln!(csv, "{seed},{},{},{}", p.epoch, p.train_loss, p.eval_metric);
                }
                print(out, format!("seed {seed}: test mse {:.4e}", run.test_mse));
                report.push(run.to_seed_run(seed));
            }
            if let Some(m) = report.mean("test_mse") {
                print(out, format!("mean test mse {m:.4e}"));
            }
            dir.write("curves.csv", &csv)?;
            dir.json("report.json", &report)?;
            Ok(true)
        }
        "train-node" => {
            let graph = cfg.raw("graph")?.trim().to_string();
            let dataset = if graph.is_empty() {
                generate_sbm(&SbmConfig {
                    n_per_block: cfg.usize("sbm_nodes_per_block")?,
                    n_blocks: cfg.usize("sbm_blocks")?,
                    p_in: cfg.f64("sbm_p_in")?,
                    p_out: cfg.f64("sbm_p_out")?,
                    feature_dim: cfg.usize("sbm_features")?,
                    noise: cfg.f64("sbm_noise")?,
                    seed: inv.seed,
                })?
            } else {
                load_graph_file(&graph)?
            };
            let config = NodeConfig {
                arm: Arm::new(cfg.raw("activation")?, cfg.bool("adaptive")?)?,
                epochs: cfg.usize("epochs")?,
                lr: cfg.f64("lr")?,
                weight_decay: cfg.f64("weight_decay")?,
                hidden: cfg.usize("hidden")?,
                omega_half_width: cfg.f64("r")?,
                n_cells: cfg.usize("cells")?,
                lambda_reg: cfg.f64("lambda_reg")?,
                pool: cfg.parsed("pool", "mean, max or sum")?,
                seeds: seed_list(inv.seed, cfg.usize("seeds")?)?,
            };
            let report = run_node_classification(&dataset, &config)?;
            let mut csv = String::from("seed,epoch,train_loss,val_accuracy\n");
            for run in &report.seeds {
                for p in &run.curve {
                    let _ = writeln!(csv, "{},{},{},{}", run.seed, p.epoch, p.train_loss, p.eval_metric);
                }
                print(out, format!("seed {}: test accuracy {:.4}", run.seed, run.metrics["test_accuracy"]));
            }
            let agg = report.aggregate["test_accuracy"];
            print(out, format!("{}: test accuracy {:.4} ± {:.4}", config.arm, agg.mean, agg.std));
            dir.write("curves.csv", &csv)?;
            dir.json("report.json", &report)?;
            Ok(true)
        }
        "dump-field" => {
            let cells = cfg.usize("cells")?;
            let theta = theta_arg(&cfg, cells)?;
            let rows = dump_field(&theta, cfg.f64("r")?, cells, cfg.usize("points")?)?;
            dir.write("field.csv", &field_csv(&rows))?;
            dir.json("report.json", &rows)?;
            print(out, format!("wrote {} rows", rows.len()));
            Ok(true)
        }
        "bench" => {
            let cells = cfg.usize("cells")?;
            let theta = theta_arg(&cfg, cells)?;
            let sizes: Vec<usize> = cfg.list("sizes", "a comma-separated list of sizes")?;
            let report = bench_scaling(&sizes, &theta, cfg.f64("r")?, cfg.usize("repeats")?, inv.seed)?;
            let mut csv = String::from("size,median_seconds,ratio\n");
            for (i, row) in report.rows.iter().enumerate() {
                let ratio = if i == 0 { String::new() } else { report.ratios[i - 1].to_string() };
                let _ = writeln!(csv, "{},{},{ratio}", row.size, row.median);
                print(out, format!("{:>9} points: {:.3e} s {ratio}", row.size, row.median));
            }
            dir.write("bench.csv", &csv)?;
            dir.json("report.json", &report)?;
            Ok(true)
        }
        other => unreachable!("command `{other}` is registered but not dispatched"),
    }
}
