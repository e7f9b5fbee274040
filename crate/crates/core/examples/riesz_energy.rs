//! Riesz potential by FFT convolution, checked against the pairwise sum, and
//! the `t^{N+α}` scaling of the energy.
//!
//! `cargo run --release --example riesz_energy -- [alpha]`

use shapelab::geometry::{make_ball, BallSpec, GridSpec};
use shapelab::riesz::{riesz_energy, riesz_potential, riesz_potential_direct};

fn main() -> shapelab::Result<()> {
    let alpha: f64 = std::env::args().nth(1).map_or(1.5, |a| a.parse().expect("alpha"));

    let spec = GridSpec::centered(2, 32, 1.0)?;
    let small = make_ball(&spec, &BallSpec::new([0.0; 3], 0.4))?;
    let fft = riesz_potential(&small, alpha)?.energy;
    let direct = riesz_potential_direct(&small, alpha)?.energy;
    println!("32x32 disk: fft {fft:.12}  direct {direct:.12}  rel {:.1e}", (fft / direct - 1.0).abs());

    let spec = GridSpec::centered(2, 256, 1.6)?;
    let v1 = riesz_energy(&make_ball(&spec, &BallSpec::new([0.0; 3], 0.3))?, alpha)?;
    let v2 = riesz_energy(&make_ball(&spec, &BallSpec::new([0.0; 3], 0.6))?, alpha)?;
    println!("V(2B)/V(B) = {:.4}, 2^(N+alpha) = {:.4}", v2 / v1, 2f64.powf(2.0 + alpha));
    Ok(())
}
