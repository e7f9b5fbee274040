//! Ball against a necklace of small balls: the bounds at one ε and the ε where
//! the necklace starts to win.
//!
//! `cargo run --release --example necklace_flip -- [delta]`

use shapelab::functionals::{necklace_bounds, necklace_flip_point, NecklaceOptions};

fn main() -> shapelab::Result<()> {
    let delta: f64 = std::env::args().nth(1).map_or(0.4, |a| a.parse().expect("delta"));
    let opts = NecklaceOptions::for_dim(2);
    let b = necklace_bounds(delta, 0.0, 2, 1.5, &opts)?;
    println!(
        "eps 0: {} balls, ball {:.5} (analytic {:.5}), necklace {:.5} (analytic {:.5})",
        b.ball_count, b.lower_ball_side, b.analytic_ball, b.upper_necklace_side, b.analytic_necklace
    );
    let flip = necklace_flip_point(delta, 2, 1.5, &opts)?;
    println!(
        "necklace wins above eps {:.4e} (analytic {:.4e}), bracket {:?}",
        flip.epsilon_numeric, flip.epsilon_analytic, flip.bracket
    );
    Ok(())
}
