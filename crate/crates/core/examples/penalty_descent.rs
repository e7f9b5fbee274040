//! Volume-penalized descent of `G = E + εV + f_η(|Ω|)` against the
//! projected descent of `F` from the same perturbed disk.
//!
//! `cargo run --release --example penalty_descent -- [eps] [eta] [cells]`

use shapelab::functionals::{penalty_eta0, PenaltyParams};
use shapelab::shapeopt::{descend, seeded_start, DescentConfig, Functional, VolumeMode};

fn main() -> shapelab::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let eps = args.next().unwrap_or(1e-3);
    let eta = args.next().unwrap_or_else(|| penalty_eta0(2));
    let cells = args.next().unwrap_or(128.0) as usize;

    let proj = DescentConfig::new(PenaltyParams::new(eta, eps, 1.5, f64::INFINITY)?, cells)?;
    let mut pen = proj.clone();
    pen.functional = Functional::G;
    pen.volume = VolumeMode::Penalty;
    let start = seeded_start(0, 0.15, proj.max_mode);

    let p = descend(&start, &proj)?;
    let g = descend(&start.with_area(0.9), &pen)?;
    println!("iter  G          measure  asymmetry");
    for r in &g.trace {
        println!("{:>4}  {:+.6}  {:.4}   {:.4}", r.iteration, r.objective, r.measure, r.asymmetry);
    }
    println!("projection: asymmetry {:.4} ({:?})", p.final_asymmetry, p.status);
    println!("penalty:    asymmetry {:.4}, measure {:.4} ({:?})", g.final_asymmetry, g.final_boundary.area(), g.status);
    Ok(())
}
