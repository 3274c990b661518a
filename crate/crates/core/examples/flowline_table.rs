//! Three-station flow line: enumerate designs, solve the CTMC for exact
//! throughput, and compare simulated observations against it.
//!
//! `cargo run --release --example flowline_table`

use greedy_rs::derive_stream;
use greedy_rs::problems::flowline::{flowline_exact_mean, flowline_simulate, FastFlowLine};
use greedy_rs::problems::{enumerate_flowline, tp_table_row, FlowLineDesign};

fn main() -> greedy_rs::Result<()> {
    let row = tp_table_row(20, 20, 0.01)?;
    println!(
        "(20,20): {} designs, best throughput {:.4}, gap {:.4}, {} best, {} within 0.01",
        row.k, row.highest_mean, row.gamma, row.n_best, row.n_good
    );

    let designs = enumerate_flowline(20, 20)?;
    let best: FlowLineDesign = designs
        .iter()
        .copied()
        .max_by(|a, b| {
            let ma = flowline_exact_mean(a).unwrap_or(0.0);
            let mb = flowline_exact_mean(b).unwrap_or(0.0);
            ma.total_cmp(&mb)
        })
        .expect("non-empty");
    let exact = flowline_exact_mean(&best)?;
    println!("best design {best:?}: exact {exact:.4}");

    let n = 2000;
    let mut rng = derive_stream(1, &[0]).rng();
    let des: f64 = (0..n)
        .map(|_| flowline_simulate(&best, &mut rng))
        .sum::<f64>()
        / n as f64;
    let fast = FastFlowLine::new(best)?;
    let quick: f64 = (0..n).map(|_| fast.sample(&mut rng)).sum::<f64>() / n as f64;
    println!("mean of {n} observations: event simulation {des:.4}, jump chain {quick:.4}");
    Ok(())
}
