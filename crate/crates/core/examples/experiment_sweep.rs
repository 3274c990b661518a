//! Run a JSON-described sweep and print the CSV rows.
//!
//! `cargo run --release --example experiment_sweep [config.json]`

use greedy_rs::harness::{run_experiment, write_csv, ExperimentConfig};

fn main() -> greedy_rs::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/configs/small_sweep.json"
        )
        .to_string()
    });
    let cfg = ExperimentConfig::load(&path)?;
    let outcomes = run_experiment(&cfg)?;
    let mut rows = Vec::new();
    for o in outcomes {
        match o.result {
            Ok(r) => rows.push(r),
            Err(e) => eprintln!(
                "{} k={} B={} {}: {e}",
                o.problem, o.k, o.budget, o.procedure
            ),
        }
    }
    write_csv(&rows, std::io::stdout())
}
