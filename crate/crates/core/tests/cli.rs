use std::path::Path;

use digraf::cli::run;
use digraf::config::{Config, ConfigError, KeySpec, Source};

fn argv(s: &str, out: &Path) -> Vec<String> {
    let mut v: Vec<String> = s.split_whitespace().map(String::from).collect();
    v.push("--out".into());
    v.push(out.display().to_string());
    v
}

fn run_ok(s: &str, out: &Path) -> String {
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = run(&argv(s, out), &mut stdout, &mut stderr);
    assert_eq!(code, 0, "{s}: {}", String::from_utf8_lossy(&stderr));
    String::from_utf8(stdout).unwrap()
}

const KEYS: &[KeySpec] = &[
    KeySpec::new("lr", "0.1", "learning rate"),
    KeySpec::new("epochs", "10", "epochs"),
];

#[test]
fn empty_config_gives_defaults() {
    let cfg = Config::parse("", &[], KEYS).unwrap();
    assert_eq!(cfg, Config::defaults(KEYS));
    assert_eq!(cfg.source("lr"), Some(&Source::Default));
}

#[test]
fn flags_override_file_values() {
    let cfg = Config::parse("lr = 0.01\n", &[("lr".into(), "0.001".into())], KEYS).unwrap();
    assert_eq!(cfg.f64("lr").unwrap(), 0.001);
    assert_eq!(cfg.source("lr"), Some(&Source::Flag));
}

#[test]
fn misspelled_key_names_key_and_line() {
    let err = Config::parse("epochs = 3\n\nlrr = 0.1\n", &[], KEYS).unwrap_err();
    assert_eq!(
        err,
        ConfigError::UnknownKey {
            key: "lrr".into(),
            origin: Source::Line(3)
        }
    );
    let msg = err.to_string();
    assert!(msg.contains("lrr") && msg.contains("line 3"), "{msg}");
}

#[test]
fn dump_field_zero_theta_writes_identity_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("dump-field --theta 0 --r 5 --cells 8 --points 101", dir.path());
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    for r in rows {
        assert!((r[0] - r[2]).abs() <= 1e-12, "{r:?}");
        assert_eq!(r[1], 0.0);
    }
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(run["command"], "dump-field");
    assert_eq!(run["config"]["points"], "101");
}

#[test]
fn config_file_and_flag_precedence_reach_run_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("field.cfg");
    std::fs::write(&cfg, "# field dump\ncells = 4\npoints = 9\n").unwrap();
    let out = dir.path().join("out");
    run_ok(&format!("dump-field --config {} --points 5", cfg.display()), &out);
    let run: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["config"]["cells"], "4");
    assert_eq!(run["config"]["points"], "5");
    assert_eq!(std::fs::read_to_string(out.join("field.csv")).unwrap().lines().count(), 6);
}

#[test]
fn reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = "fit-activation --target tanh --iters 50 --cells 6 --seed 4";
    run_ok(cmd, &dir.path().join("a"));
    run_ok(cmd, &dir.path().join("b"));
    for f in ["run.json", "report.json", "fit.csv", "loss.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(f)).unwrap(),
            std::fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |s: &str| run(&argv(s, dir.path()), &mut Vec::new(), &mut Vec::new());
    assert_eq!(code("nonsense"), 2);
    assert_eq!(code("bench --colour blue"), 2);
    assert_eq!(code("dump-field --cells 0"), 1);
    assert_eq!(code("dump-field --theta 1,2 --cells 8"), 1);
    assert_eq!(code("dump-field --points many"), 1);
    assert_eq!(code("train-node --graph /definitely/not/here"), 1);
    assert_eq!(code("--help"), 0);
}

#[test]
fn check_passes_and_reports_every_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok("check --seed 7", dir.path());
    let listed: usize = digraf::check::LISTED.iter().map(|(_, n)| n.len()).sum();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), listed);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), listed);
}

#[test]
fn train_node_on_a_small_sbm() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        "train-node --activation digraf --adaptive true --epochs 5 --hidden 8 --seeds 2 \
         --sbm-nodes-per-block 40 --sbm-blocks 2 --sbm-p-in 0.3 --sbm-p-out 0.05",
        dir.path(),
    );
    assert!(stdout.contains("digraf-adaptive"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
}
