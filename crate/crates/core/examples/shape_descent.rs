//! Projected descent of `F = E + εV` over star-shaped boundaries from a
//! perturbed disk; prints the trace.
//!
//! `cargo run --release --example shape_descent -- [eps] [seed] [cells]`

use shapelab::functionals::PenaltyParams;
use shapelab::shapeopt::{descend, seeded_start, DescentConfig};

fn main() -> shapelab::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map_or(1e-3, |a| a.parse().expect("eps"));
    let seed: u64 = args.next().map_or(0, |a| a.parse().expect("seed"));
    let cells: usize = args.next().map_or(128, |a| a.parse().expect("cells"));

    let cfg = DescentConfig::new(PenaltyParams::unconstrained(eps, 1.5)?, cells)?;
    let res = descend(&seeded_start(seed, 0.15, cfg.max_mode), &cfg)?;
    println!("iter  F          asymmetry");
    for r in &res.trace {
        println!("{:>4}  {:+.6}  {:.4}", r.iteration, r.objective, r.asymmetry);
    }
    println!("{:?}, final asymmetry {:.4}", res.status, res.final_asymmetry);
    Ok(())
}
