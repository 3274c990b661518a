//! Plug a user-defined observation model into the procedures.
//!
//! `cargo run --release --example custom_sampler`

use std::sync::Arc;

use greedy_rs::problems::{ProblemInstance, Sampler};
use greedy_rs::procedures::{run_efg, run_greedy, EfgSplit};
use greedy_rs::{derive_stream, SimRng};
use rand::Rng;

/// Bernoulli arms: alternative `i` succeeds with probability `p[i]`.
struct Bernoulli(Vec<f64>);

impl Sampler for Bernoulli {
    fn sample(&self, i: usize, rng: &mut SimRng) -> f64 {
        f64::from(u8::from(rng.random::<f64>() < self.0[i]))
    }
}

fn main() -> greedy_rs::Result<()> {
    let k = 2000;
    let p: Vec<f64> = (0..k).map(|i| if i == 17 { 0.6 } else { 0.5 }).collect();
    let inst = ProblemInstance::new("bernoulli", p.clone(), None, Arc::new(Bernoulli(p)))?;
    let budget = 200 * k as u64;
    let reps = 100;
    let mut hits = [0u32; 2];
    for r in 0..reps {
        let s = derive_stream(3, &[r]);
        hits[0] += u32::from(inst.is_best(run_greedy(&inst, budget, &s)?.selected));
        hits[1] += u32::from(
            inst.is_best(run_efg(&inst, budget, EfgSplit::Proportion(0.7), &s)?.selected),
        );
    }
    println!("greedy PCS {:.2}", f64::from(hits[0]) / reps as f64);
    println!("EFG    PCS {:.2}", f64::from(hits[1]) / reps as f64);
    Ok(())
}
