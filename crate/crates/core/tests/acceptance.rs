//! Runs the acceptance criteria and prints one line per criterion.
//!
//! `PPOT_ONLY=2,5` restricts the run to the listed criteria.

use ppot::acceptance::{run_all, AcceptanceConfig};

fn main() {
    let mut cfg = AcceptanceConfig::default();
    if let Ok(list) = std::env::var("PPOT_ONLY") {
        cfg.only = list.split(',').filter_map(|s| s.trim().parse().ok()).collect();
    }
    let outcomes = run_all(&cfg, |o| println!("{}", o.line()));
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
