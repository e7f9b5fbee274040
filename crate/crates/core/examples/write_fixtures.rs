//! Regenerates the shipped domain files in `data/`.
//!
//! `cargo run --release --example write_fixtures [dir]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use shapelab::geometry::io::write_domain;
use shapelab::geometry::{make_ball, measure, BallSpec, GridSpec};
use shapelab::surgery::fixtures::dumbbell_tail;

fn main() -> shapelab::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;
    let none = BTreeMap::new();

    let spec = GridSpec::centered(2, 128, 1.4)?;
    let ball = make_ball(&spec, &BallSpec::with_measure(2, [0.0; 3], 1.0))?;
    write_domain(&dir.join("ball_unit.dom"), &ball, &none)?;
    println!("ball_unit.dom      measure {:.5}", measure(&ball));

    let tail = dumbbell_tail(2, 256)?;
    write_domain(&dir.join("dumbbell_tail.dom"), &tail, &none)?;
    println!("dumbbell_tail.dom  measure {:.5}", measure(&tail));
    Ok(())
}
