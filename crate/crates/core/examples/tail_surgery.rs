//! Tail cuts on a dumbbell with a long thin tail, one direction at a time.
//!
//! `cargo run --release --example tail_surgery -- [cells]`

use shapelab::surgery::fixtures::dumbbell_tail;
use shapelab::surgery::{surgery_sweep, SurgeryParams};

fn main() -> shapelab::Result<()> {
    let cells: usize = std::env::args().nth(1).map_or(256, |a| a.parse().expect("cells"));
    let dom = dumbbell_tail(2, cells)?;
    let sweep = surgery_sweep(&dom, &SurgeryParams::new(0.01, 1.5))?;
    for p in &sweep.passes {
        println!(
            "{:>3}  {:?}  t* {:>6}  {}  lambda {:.3} -> {:.3}  diameter {:.3}",
            p.direction.to_string(),
            p.case,
            p.t_star.map_or("-".into(), |t| format!("{t:.3}")),
            p.label,
            p.lambda_before,
            p.lambda_after,
            p.diameter
        );
    }
    println!(
        "diameter {:.3} -> {:.3}, F~ {:.3} -> {:.3}, monotone {}",
        sweep.initial_diameter, sweep.final_diameter, sweep.initial_f_tilde, sweep.final_f_tilde, sweep.monotone
    );
    Ok(())
}
