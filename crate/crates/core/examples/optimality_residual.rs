//! Boundary residual of the first-order condition `|∇u|² − εv = Λ` on the
//! disk and on an ellipse.
//!
//! `cargo run --release --example optimality_residual -- [eps]`

use shapelab::functionals::PenaltyParams;
use shapelab::geometry::{make_ball, make_ellipsoid_with_measure, BallSpec, GridSpec};
use shapelab::shapeopt::optimality_residual;

fn main() -> shapelab::Result<()> {
    let eps: f64 = std::env::args().nth(1).map_or(0.0, |a| a.parse().expect("eps"));
    let params = PenaltyParams::unconstrained(eps, 1.5)?;
    for cells in [128, 256] {
        let spec = GridSpec::centered(2, cells, 2.4)?;
        let disk = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0))?;
        let ell = make_ellipsoid_with_measure(&spec, [0.0; 3], 1.0, 1.5)?;
        let d = optimality_residual(&disk, &params)?;
        let e = optimality_residual(&ell, &params)?;
        println!(
            "{cells:>4} cells: disk Λ {:.4} spread {:.4}; ellipse Λ {:.4} spread {:.4}",
            d.lambda, d.relative_std, e.lambda, e.relative_std
        );
    }
    Ok(())
}
