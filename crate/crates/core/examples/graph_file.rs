//! Write a small SBM to the text graph format, read it back, and show what
//! a malformed file reports.

use digraf::data::{generate_sbm, load_graph_file, parse_graph, write_graph_file, SbmConfig};

fn main() -> digraf::Result<()> {
    let dataset = generate_sbm(&SbmConfig {
        n_per_block: 30,
        n_blocks: 2,
        p_in: 0.2,
        p_out: 0.02,
        feature_dim: 3,
        ..SbmConfig::default()
    })?;
    let path = std::env::temp_dir().join("digraf-example.graph");
    write_graph_file(&path, &dataset)?;
    let text = std::fs::read_to_string(&path).map_err(|e| digraf::Error::Input(e.to_string()))?;
    println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("...");
    assert_eq!(load_graph_file(&path)?, dataset);
    println!("round trip ok: {}", path.display());

    let broken = text.replacen('\n', "\n0 1 oops\n", 2);
    match parse_graph(&broken) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("malformed file: {e}"),
    }
    Ok(())
}
