//! Infimum of the margin function over `[0, 1]` for a few parameter sets,
//! with its limit at `t = 1`.
//!
//! `cargo run --release --example penalty_margin`

use shapelab::functionals::{margin_limit, penalty_margin};

fn main() -> shapelab::Result<()> {
    for (p, q, n, a) in [(1.0, 0.5, 2, 1.5), (2.0, 1.0, 3, 1.0), (0.7, 0.65, 2, 0.5)] {
        let m = penalty_margin(p, q, n, a, 1000)?;
        println!(
            "P {p} Q {q} N {n} alpha {a}: inf {:.6} at t = {:.4}, limit {:.6}",
            m.inf_value,
            m.argmin,
            margin_limit(p, q, n, a)
        );
    }
    Ok(())
}
