//! Generators and the graph file loader.

use std::collections::HashSet;

use digraf::data::{
    generate_sbm, load_graph_file, parse_graph, write_graph, write_graph_file, ParseError,
    SbmConfig,
};
use proptest::prelude::*;

#[test]
fn sbm_edge_count_matches_binomial_moments() {
    let (k, b, p_in, p_out) = (40usize, 3usize, 0.3, 0.05);
    let within = (b * k * (k - 1) / 2) as f64;
    let across = (b * (b - 1) / 2 * k * k) as f64;
    let mean = within * p_in + across * p_out;
    let sd = (within * p_in * (1.0 - p_in) + across * p_out * (1.0 - p_out)).sqrt();
    for seed in 0..20 {
        let d = generate_sbm(&SbmConfig {
            n_per_block: k,
            n_blocks: b,
            p_in,
            p_out,
            feature_dim: 3,
            noise: 0.1,
            seed,
        })
        .unwrap();
        let edges = d.batches[0].adjacency.edges().len() as f64 / 2.0;
        assert!((edges - mean).abs() <= 5.0 * sd, "seed {seed}: {edges} vs {mean} ± {sd}");
    }
}

#[test]
fn sbm_is_symmetric_without_self_loops() {
    let d = generate_sbm(&SbmConfig {
        n_per_block: 50,
        seed: 4,
        ..SbmConfig::default()
    })
    .unwrap();
    let edges: HashSet<(usize, usize)> = d.batches[0].adjacency.edges().iter().copied().collect();
    assert!(!edges.is_empty());
    for &(u, v) in &edges {
        assert_ne!(u, v);
        assert!(edges.contains(&(v, u)));
    }
}

#[test]
fn sbm_separable_construction() {
    let d = generate_sbm(&SbmConfig {
        n_per_block: 25,
        n_blocks: 2,
        p_in: 1.0,
        p_out: 0.0,
        feature_dim: 2,
        noise: 0.0,
        seed: 1,
    })
    .unwrap();
    let b = &d.batches[0];
    assert_eq!(b.adjacency.edges().len(), 2 * 2 * 25 * 24 / 2);
    for &(u, v) in b.adjacency.edges() {
        assert_eq!(u / 25, v / 25);
    }
    for v in 0..50 {
        let mut onehot = [0.0; 2];
        onehot[v / 25] = 1.0;
        assert_eq!(b.features.row(v), &onehot);
        assert_eq!(b.labels[v], Some(v / 25));
    }
}

#[test]
fn sbm_is_deterministic() {
    let c = SbmConfig {
        n_per_block: 60,
        seed: 11,
        ..SbmConfig::default()
    };
    assert_eq!(generate_sbm(&c).unwrap(), generate_sbm(&c).unwrap());
    let other = SbmConfig { seed: 12, ..c.clone() };
    assert_ne!(generate_sbm(&c).unwrap(), generate_sbm(&other).unwrap());
}

#[test]
fn minimal_file() {
    let d = parse_graph("GRAPHV1 1 0 1 1\n0.5\nLABELS\n0\nTRAIN\n0\nVAL\n\nTEST\n\n").unwrap();
    let b = &d.batches[0];
    assert_eq!(b.num_nodes(), 1);
    assert!(b.adjacency.edges().is_empty());
    assert_eq!(b.features.item(), 0.5);
    assert_eq!(d.splits.train, vec![0]);
    d.validate().unwrap();
}

#[test]
fn edge_out_of_range_names_the_line() {
    let text = "GRAPHV1 2 2 1 2\n0 1\n1 2\n0\n1\nLABELS\n0\n1\nTRAIN\n\nVAL\n\nTEST\n\n";
    let err = parse_graph(text).unwrap_err();
    assert_eq!(
        err,
        ParseError::IndexOutOfRange {
            line: 3,
            index: 2,
            bound: 2
        }
    );
    assert!(err.to_string().starts_with("line 3:"));
}

#[test]
fn each_malformation_has_its_own_error() {
    let good = "GRAPHV1 2 1 2 2\n0 1\n1 2\n3 4\nLABELS\n0\n-1\nTRAIN\n0\nVAL\n\nTEST\n1\n";
    parse_graph(good).unwrap();
    let cases: Vec<(String, fn(&ParseError) -> bool)> = vec![
        (good.replace("GRAPHV1", "GRAPHV2"), |e| matches!(e, ParseError::Header { line: 1, .. })),
        (good.replace("GRAPHV1 2 1 2 2", "GRAPHV1 2 1 2"), |e| matches!(e, ParseError::Header { .. })),
        (good.replace("1 2\n3 4", "1\n3 4"), |e| matches!(e, ParseError::FieldCount { line: 3, expected: 2, found: 1 })),
        (good.replace("3 4", "3 x"), |e| matches!(e, ParseError::Number { line: 4, .. })),
        (good.replace("-1\n", "5\n"), |e| matches!(e, ParseError::Label { line: 7, label: 5, .. })),
        (good.replace("LABELS", "LABEL"), |e| matches!(e, ParseError::MissingSection { line: 5, expected: "LABELS" })),
        (good.replace("TEST\n1\n", "TEST\n0\n"), |e| matches!(e, ParseError::DuplicateSplit { line: 13, index: 0 })),
        (format!("{good}extra\n"), |e| matches!(e, ParseError::TrailingContent { line: 14 })),
        ("GRAPHV1 2 1 2 2\n0 1\n".to_string(), |e| matches!(e, ParseError::UnexpectedEof { line: 3, .. })),
        (good.replace("1 2\n", "1 inf\n"), |e| matches!(e, ParseError::Number { line: 3, .. })),
    ];
    for (text, want) in cases {
        let err = parse_graph(&text).unwrap_err();
        assert!(want(&err), "{text:?} gave {err:?}");
    }
}

#[test]
fn round_trip_through_a_file() {
    let d = generate_sbm(&SbmConfig {
        n_per_block: 40,
        n_blocks: 3,
        seed: 5,
        ..SbmConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    write_graph_file(&path, &d).unwrap();
    let back = load_graph_file(&path).unwrap();
    assert_eq!(back, d);
    assert!(load_graph_file(dir.path().join("missing.txt")).is_err());
}

proptest! {
    #[test]
    fn loader_never_panics_on_mutations(cut in 0usize..200, byte in any::<u8>(), pos in 0usize..200) {
        let d = generate_sbm(&SbmConfig { n_per_block: 5, n_blocks: 2, p_in: 0.5, p_out: 0.1, feature_dim: 2, noise: 0.3, seed: 2 }).unwrap();
        let mut text = write_graph(&d).unwrap().into_bytes();
        if pos < text.len() {
            text[pos] = byte;
        }
        text.truncate(cut.max(1) * text.len() / 200);
        let s = String::from_utf8_lossy(&text);
        let _ = parse_graph(&s);
    }
}
