//! EFG+ against sequential halving on the (20,20) flow-line problem.
//!
//! `cargo run --release --example efg_plus_flowline`

use greedy_rs::harness::{estimate, ProcedureSpec};
use greedy_rs::problems::{tp_instance, FlowSamplerKind};

fn main() -> greedy_rs::Result<()> {
    let inst = tp_instance(20, 20, FlowSamplerKind::Fast)?;
    let budget = 100 * inst.k() as u64;
    let reps = 50;
    for p in [ProcedureSpec::efg_plus(), ProcedureSpec::Sh] {
        let row = estimate("tp:20,20", &inst, budget, &p, reps, 11, 0, Some(0.01))?;
        println!(
            "{:<18} PCS {:.2} (se {:.2})  PGS {:.2}  {:.0} ms/rep",
            row.procedure,
            row.pcs,
            row.pcs_se,
            row.pgs.unwrap_or(f64::NAN),
            row.mean_wall_ms
        );
    }
    Ok(())
}
