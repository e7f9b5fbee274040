//! Deficits of `E` and `V` under single-mode perturbations of the disk, with
//! the fitted log-log slope.
//!
//! `cargo run --release --example spherical_fit -- [cells]`

use shapelab::shapeopt::{deficit_quadratic_fit, FitOptions};

fn main() -> shapelab::Result<()> {
    let cells: usize = std::env::args().nth(1).map_or(128, |a| a.parse().expect("cells"));
    let fo = FitOptions::new(cells)?;
    let amps = [0.02, 0.04, 0.07, 0.1, 0.14, 0.2];
    for k in 2..=4 {
        let fit = deficit_quadratic_fit(k, &amps, 1.5, &fo)?;
        println!(
            "mode {k}: E slope {:.3} (r2 {:.3}), V slope {:.3} (r2 {:.3})",
            fit.e_slope, fit.e_r_squared, fit.v_slope, fit.v_r_squared
        );
        for s in &fit.samples {
            println!("  a {:.2}  dE {:.3e}  dV {:.3e}", s.amplitude, s.e_deficit, s.v_deficit);
        }
    }
    Ok(())
}
