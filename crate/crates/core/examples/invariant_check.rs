//! Run every registered invariant with a chosen seed.

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let results = digraf::check::run_all(seed);
    for r in &results {
        println!("{} {}: {} {}", if r.passed { "ok  " } else { "FAIL" }, r.module, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} passed", results.len() - failed, results.len());
    std::process::exit(i32::from(failed > 0));
}
