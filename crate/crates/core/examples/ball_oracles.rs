//! Torsion energy and first eigenvalue of the unit disk against their closed
//! forms, over a few grid resolutions.
//!
//! `cargo run --release --example ball_oracles`

use shapelab::fields::{solve_first_eigen_with, solve_torsion_with, SolverOptions};
use shapelab::functionals::{ball_eigenvalue, ball_torsion_energy};
use shapelab::geometry::{make_ball, BallSpec, GridSpec};

fn main() -> shapelab::Result<()> {
    let opts = SolverOptions::with_tol(1e-8);
    let (e_ref, l_ref) = (ball_torsion_energy(2, 1.0), ball_eigenvalue(2, 1.0)?);
    println!("cells  E            rel err   lambda1     rel err");
    for cells in [64, 128, 256] {
        let spec = GridSpec::centered(2, cells, 2.2)?;
        let disk = make_ball(&spec, &BallSpec::new([0.0; 3], 1.0))?;
        let e = solve_torsion_with(&disk, &opts)?.energy;
        let l = solve_first_eigen_with(&disk, &opts)?.lambda1;
        println!(
            "{cells:>5}  {e:+.8}  {:.2e}  {l:.6}  {:.2e}",
            (e / e_ref - 1.0).abs(),
            (l / l_ref - 1.0).abs()
        );
    }
    println!("exact  {e_ref:+.8}             {l_ref:.6}");
    Ok(())
}
