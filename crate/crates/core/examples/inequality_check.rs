//! Saint-Venant, Faber-Krahn and Riesz deficits with the Fraenkel asymmetry,
//! for an ellipse of growing eccentricity.
//!
//! `cargo run --release --example inequality_check`

use shapelab::fields::SolverOptions;
use shapelab::functionals::{faber_krahn_deficit, riesz_deficit, saint_venant_deficit};
use shapelab::geometry::{make_ellipsoid_with_measure, GridSpec};

fn main() -> shapelab::Result<()> {
    let spec = GridSpec::centered(2, 160, 2.6)?;
    let opts = SolverOptions::with_tol(1e-8);
    println!("aspect  A       sv deficit  fk deficit  riesz deficit");
    for aspect in [1.0, 1.1, 1.25, 1.5, 2.0] {
        let dom = make_ellipsoid_with_measure(&spec, [0.0; 3], 1.0, aspect)?;
        let sv = saint_venant_deficit(&dom, &opts)?;
        let fk = faber_krahn_deficit(&dom, &opts)?;
        let rz = riesz_deficit(&dom, 1.5)?;
        println!(
            "{aspect:>6}  {:.4}  {:+.3e}  {:+.3e}  {:+.3e}",
            sv.asymmetry, sv.deficit, fk.deficit, rz.deficit
        );
    }
    Ok(())
}
