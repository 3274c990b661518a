//! EFG++ and its asynchronous variant on a simulated worker pool.
//!
//! `cargo run --release --example parallel_efg_pp`

use greedy_rs::derive_stream;
use greedy_rs::parallel::{run_asyn_efg_pp, run_efg_pp, EfgPpConfig, ServiceTime, WorkerPool};
use greedy_rs::problems::{make_gaussian, GaussianConfig, GaussianKind};
use greedy_rs::procedures::{run_efg_plus, EfgPlusSplit};

fn main() -> greedy_rs::Result<()> {
    let inst = make_gaussian(&GaussianConfig {
        kind: GaussianKind::EmCv,
        k: 4096,
        seed: 0,
    })?;
    let budget = 100 * inst.k() as u64;
    let split = EfgPlusSplit::standard(budget, inst.k())?;
    let stream = derive_stream(5, &[0]);

    let seq = run_efg_plus(&inst, budget, split.n_sd, split.n0, split.groups, &stream)?;
    println!(
        "EFG+        selected {} (best: {})",
        seq.selected,
        inst.is_best(seq.selected)
    );

    let cfg = EfgPpConfig { split, z: 4 };
    for q in [4, 16] {
        let pool = WorkerPool::simulated(q, ServiceTime::default());
        for (name, out) in [
            ("EFG++", run_efg_pp(&inst, budget, &cfg, &pool, &stream)?),
            (
                "Asyn-EFG++",
                run_asyn_efg_pp(&inst, budget, &cfg, &pool, &stream)?,
            ),
        ] {
            let u = &out.utilization;
            let phases: Vec<String> = u
                .phases
                .iter()
                .map(|(p, pu)| format!("{p:?} {:.3}", pu.utilization))
                .collect();
            println!(
                "{name:<11} q={q:<2} selected {} spent {} overshoot {} sim {:.2}s  [{}]",
                out.result.selected,
                out.result.spent(),
                out.result.overshoot,
                out.result.sim_time.as_secs_f64(),
                phases.join(", ")
            );
        }
    }
    Ok(())
}
