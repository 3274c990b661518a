//! Asymptotic PCS bounds from the boundary-crossing series.
//!
//! `cargo run --release --example bounds`

use greedy_rs::analytics::{
    c_of_x, efg_bound_params, greedy_pcs_bounds, prob_min_above, SeriesControl,
};

fn main() -> greedy_rs::Result<()> {
    let ctl = SeriesControl::default();

    println!("x      C(x)        Pr{{min Z(n) > -x}}");
    for x in [0.05, 0.1, 0.2, 0.5, 1.0] {
        println!(
            "{x:<6} {:<11.5} {:.6}",
            c_of_x(x, &ctl)?,
            prob_min_above(-x, &ctl)?
        );
    }

    println!("\ngreedy, B = c k");
    for (sigma, c) in [(0.5, 100.0), (1.0, 100.0)] {
        let r = greedy_pcs_bounds(0.1, sigma, sigma, c, &ctl)?;
        println!(
            "  gamma=0.1 sigma={sigma} c={c}: gamma0={:.5}  PCS in [{:.4}, {:.4}]",
            r.gamma0,
            r.pcs_lower,
            r.pcs_upper.unwrap_or(f64::NAN)
        );
    }

    println!("\nexplore-first greedy (Monte Carlo), c = 100");
    for n0 in [20, 50, 80] {
        let r = efg_bound_params(0.1, 1.0, n0, 100 - n0, 4_000, 7, &ctl)?;
        println!(
            "  n0={n0:<3} gamma0={:.4}  PCS >= {:.4} +/- {:.4}",
            r.gamma0,
            r.pcs_lower,
            r.pcs_lower_half_width.unwrap_or(0.0)
        );
    }
    Ok(())
}
