//! Greedy, explore-first greedy and equal allocation on the slippage
//! configuration as `k` grows with `B = 100 k`.
//!
//! `cargo run --release --example greedy_vs_efg`

use greedy_rs::harness::{estimate, ProcedureSpec};
use greedy_rs::problems::{make_gaussian, GaussianConfig, GaussianKind};
use greedy_rs::procedures::EfgSplit;

fn main() -> greedy_rs::Result<()> {
    let procs = [
        ProcedureSpec::Greedy,
        ProcedureSpec::Efg {
            split: EfgSplit::Proportion(0.8),
        },
        ProcedureSpec::Ea,
    ];
    let reps = 200;
    println!("{:>6} {:>14} {:>8} {:>8}", "k", "procedure", "PCS", "se");
    for (cell, l) in (6..=12).step_by(2).enumerate() {
        let k = 1usize << l;
        let inst = make_gaussian(&GaussianConfig {
            kind: GaussianKind::ScCv,
            k,
            seed: 0,
        })?;
        for p in &procs {
            let row = estimate(
                "sc-cv",
                &inst,
                100 * k as u64,
                p,
                reps,
                42,
                cell as u64,
                None,
            )?;
            println!(
                "{k:>6} {:>14} {:>8.3} {:>8.3}",
                row.procedure, row.pcs, row.pcs_se
            );
        }
    }
    Ok(())
}
