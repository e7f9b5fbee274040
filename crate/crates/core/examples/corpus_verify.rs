//! Generate a small star corpus into a temporary directory and verify it.
//!
//! `cargo run --release --example corpus_verify -- [count]`

use shapelab::cli::{cmd_gen_corpus, cmd_verify, Check, CorpusArgs, RunConfig};

fn main() -> shapelab::Result<()> {
    let count: usize = std::env::args().nth(1).map_or(5, |a| a.parse().expect("count"));
    let dir = std::env::temp_dir().join("shapelab-corpus-example");
    let cfg = RunConfig {
        grid: Some(96),
        out: dir.clone(),
        ..RunConfig::default()
    };
    cmd_gen_corpus(&CorpusArgs { count, ..CorpusArgs::default() }, &cfg)?;
    let checks = [Check::SaintVenant, Check::FaberKrahn, Check::Riesz, Check::KohlerJobin];
    let (rec, _) = cmd_verify(&dir, &checks, &RunConfig { out: dir.join("report"), ..cfg })?;
    for r in &rec.payload.rows {
        println!("{:<8} {:<5} deficit {:+.3e}  A {:.3}  ok {}", r.id, r.check.to_string(), r.relative_deficit, r.asymmetry, r.ok);
    }
    println!("all ok: {}", rec.payload.all_ok);
    Ok(())
}
