//! Seeded star-shaped corpus with recorded values, and the inequality checks over it.
//!
//! A corpus directory holds `manifest.json` and one star document per entry.
//! The manifest pins the grid, tolerance and `α`, plus the values measured at
//! generation time; `verify` recomputes them and fails a check when a recorded
//! value or file hash no longer matches.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sha256_hex, write_atomic, Outcome, Provenance, ResultRecord, RunConfig};
use crate::error::{Result, ShapeError};
use crate::fields::SolverOptions;
use crate::functionals::{
    faber_krahn_deficit, first_eigenvalue, kohler_jobin_check, riesz_deficit, riesz_energy_cached,
    saint_venant_deficit, torsion_energy,
};
use crate::geometry::io::{star_from_str, write_star};
use crate::geometry::{fraenkel_asymmetry, measure, rasterize_star, GridDomain, GridSpec, StarBoundary};

pub const MANIFEST_FORMAT: &str = "shapelab-corpus";

/// Relative tolerance for recorded values.
const RECORD_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    SaintVenant,
    FaberKrahn,
    Riesz,
    KohlerJobin,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::SaintVenant, Check::FaberKrahn, Check::Riesz, Check::KohlerJobin];
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::SaintVenant => "sv",
            Check::FaberKrahn => "fk",
            Check::Riesz => "riesz",
            Check::KohlerJobin => "kj",
        })
    }
}

impl FromStr for Check {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sv" | "saint-venant" => Ok(Check::SaintVenant),
            "fk" | "faber-krahn" => Ok(Check::FaberKrahn),
            "riesz" => Ok(Check::Riesz),
            "kj" | "kohler-jobin" => Ok(Check::KohlerJobin),
            other => Err(ShapeError::parse("checks", format!("unknown check `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recorded {
    pub measure: f64,
    pub energy: f64,
    pub lambda1: f64,
    pub riesz: f64,
    pub asymmetry: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub file: String,
    pub sha256: String,
    pub recorded: Recorded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub alpha: f64,
    pub cells_per_axis: usize,
    pub side: f64,
    pub tol: f64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| {
            ShapeError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| ShapeError::parse("manifest", e.to_string()))?;
        if m.format != MANIFEST_FORMAT {
            return Err(ShapeError::parse("format", format!("expected \"{MANIFEST_FORMAT}\"")));
        }
        Ok(m)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::centered(2, self.cells_per_axis, self.side)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions::with_tol(self.tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusArgs {
    pub count: usize,
    pub alpha: f64,
    pub side: f64,
}

impl Default for CorpusArgs {
    fn default() -> Self {
        Self {
            count: 20,
            alpha: 1.5,
            side: 2.6,
        }
    }
}

/// Unit-area star with modes 2–6: mode `k` gets amplitude `U(0, ½)/k ≤ 0.25`
/// at a uniform phase. Draws are rejected until `r(θ) ≥ R/5`.
pub fn random_star(rng: &mut ChaCha8Rng) -> StarBoundary {
    loop {
        let mut s = StarBoundary::circle(1.0, [0.0, 0.0], 6);
        for k in 2..=6 {
            let amp: f64 = rng.gen_range(0.0..0.5) / k as f64;
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            s.fourier_cos[k] = amp * phase.cos();
            s.fourier_sin[k] = amp * phase.sin();
        }
        let n = 1024;
        let min_r = (0..n)
            .map(|i| s.radius(std::f64::consts::TAU * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        if min_r >= 0.2 {
            return s.with_area(1.0);
        }
    }
}

fn record_for(dom: &GridDomain, alpha: f64, opts: &SolverOptions) -> Result<Recorded> {
    Ok(Recorded {
        measure: measure(dom),
        energy: torsion_energy(dom, opts)?,
        lambda1: first_eigenvalue(dom, opts)?,
        riesz: riesz_energy_cached(dom, alpha)?,
        asymmetry: fraenkel_asymmetry(dom)?.value,
    })
}

/// Writes `count` seeded stars and the manifest into `cfg.out`.
pub fn cmd_gen_corpus(args: &CorpusArgs, cfg: &RunConfig) -> Result<(Manifest, Outcome)> {
    cfg.validate()?;
    if args.count == 0 {
        return Err(ShapeError::Domain("corpus count must be positive".into()));
    }
    let cells = cfg.cells_or(160);
    let spec = GridSpec::centered(2, cells, args.side)?;
    let opts = cfg.solver();
    std::fs::create_dir_all(&cfg.out)?;
    let entries: Vec<ManifestEntry> = (0..args.count)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let star = random_star(&mut ChaCha8Rng::seed_from_u64(seed));
            let file = format!("star-{i:02}.json");
            let path = cfg.out.join(&file);
            write_star(&path, &star)?;
            let dom = rasterize_star(&star, &spec)?;
            Ok(ManifestEntry {
                id: format!("star-{i:02}"),
                seed,
                sha256: sha256_hex(&std::fs::read(&path)?),
                file,
                recorded: record_for(&dom, args.alpha, &opts)?,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: 1,
        seed: cfg.seed,
        alpha: args.alpha,
        cells_per_axis: cells,
        side: args.side,
        tol: cfg.tol,
        entries,
    };
    let path = cfg.out.join("manifest.json");
    write_atomic(
        &path,
        (serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n").as_bytes(),
    )?;
    let summary = format!("{} domains written to {}", manifest.entries.len(), cfg.out.display());
    Ok((
        manifest,
        Outcome {
            checks_ok: true,
            files: vec![path],
            summary,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub id: String,
    pub check: Check,
    /// Deficit relative to the ball value; for Kohler-Jobin `lhs/rhs − 1`.
    pub relative_deficit: f64,
    pub asymmetry: f64,
    /// `deficit / A²` when the asymmetry is above the reporting threshold.
    pub ratio: Option<f64>,
    pub ok: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub rows: Vec<VerifyRow>,
    pub all_ok: bool,
    /// Smallest `deficit / A²` per check over the corpus.
    pub min_ratio: BTreeMap<String, f64>,
}

fn mismatch(name: &str, recorded: f64, now: f64) -> Option<String> {
    let scale = recorded.abs().max(now.abs()).max(1e-300);
    ((recorded - now).abs() > RECORD_TOL * scale)
        .then(|| format!("recorded {name} {recorded:.10e} differs from recomputed {now:.10e}"))
}

fn verify_entry(dir: &Path, m: &Manifest, e: &ManifestEntry, checks: &[Check]) -> Result<Vec<VerifyRow>> {
    let path = dir.join(&e.file);
    let bytes = std::fs::read(&path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| ShapeError::parse(&e.file, "not UTF-8"))?;
    let star = star_from_str(&text)?;
    let dom = rasterize_star(&star, &m.grid()?)?;
    let opts = m.solver();
    let hash_note = (sha256_hex(&bytes) != e.sha256).then(|| format!("{} does not match its hash", e.file));
    let r = &e.recorded;
    let measure_note = mismatch("measure", r.measure, measure(&dom));
    let mut rows = Vec::new();
    for &c in checks {
        let (rel, asym, ratio, ok, quantity) = match c {
            Check::SaintVenant => {
                let d = saint_venant_deficit(&dom, &opts)?;
                let q = mismatch("energy", r.energy, torsion_energy(&dom, &opts)?);
                (d.relative, d.asymmetry, d.ratio, d.ok, q)
            }
            Check::FaberKrahn => {
                let d = faber_krahn_deficit(&dom, &opts)?;
                let q = mismatch("lambda1", r.lambda1, first_eigenvalue(&dom, &opts)?);
                (d.relative, d.asymmetry, d.ratio, d.ok, q)
            }
            Check::Riesz => {
                let d = riesz_deficit(&dom, m.alpha)?;
                let q = mismatch("riesz", r.riesz, riesz_energy_cached(&dom, m.alpha)?);
                (d.relative, d.asymmetry, d.ratio, d.ok, q)
            }
            Check::KohlerJobin => {
                let k = kohler_jobin_check(&dom, &opts)?;
                let q = mismatch("energy", r.energy, torsion_energy(&dom, &opts)?)
                    .or_else(|| mismatch("lambda1", r.lambda1, first_eigenvalue(&dom, &opts).unwrap_or(f64::NAN)));
                (k.lhs / k.rhs - 1.0, r.asymmetry, None, k.ok, q)
            }
        };
        let notes: Vec<String> = [hash_note.clone(), measure_note.clone(), quantity].into_iter().flatten().collect();
        rows.push(VerifyRow {
            id: e.id.clone(),
            check: c,
            relative_deficit: rel,
            asymmetry: asym,
            ratio,
            ok: ok && notes.is_empty(),
            note: notes.join("; "),
        });
    }
    Ok(rows)
}

/// Runs `checks` on every corpus entry; `all_ok` is false when any deficit
/// falls below its slack or any record disagrees with the recomputation.
pub fn cmd_verify(dir: &Path, checks: &[Check], cfg: &RunConfig) -> Result<(ResultRecord<VerifySummary>, Outcome)> {
    cfg.validate()?;
    if !dir.is_dir() {
        return Err(ShapeError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("corpus directory {} not found", dir.display()),
        )));
    }
    let m = Manifest::read(dir)?;
    let checks: Vec<Check> = if checks.is_empty() { Check::ALL.to_vec() } else { checks.to_vec() };
    let rows: Vec<VerifyRow> = m
        .entries
        .par_iter()
        .map(|e| verify_entry(dir, &m, e, &checks))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut min_ratio = BTreeMap::new();
    for r in &rows {
        if let Some(q) = r.ratio {
            let slot = min_ratio.entry(r.check.to_string()).or_insert(f64::INFINITY);
            *slot = f64::min(*slot, q);
        }
    }
    let all_ok = rows.iter().all(|r| r.ok);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "check", "relative_deficit", "asymmetry", "ratio", "ok", "note"])?;
    for r in &rows {
        w.write_record([
            r.id.clone(),
            r.check.to_string(),
            format!("{:.6e}", r.relative_deficit),
            format!("{:.6e}", r.asymmetry),
            r.ratio.map_or(String::new(), |q| format!("{q:.6e}")),
            r.ok.to_string(),
            r.note.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ShapeError::Io(std::io::Error::other(e.to_string())))?;
    let csv_path = cfg.output("verify.csv")?;
    write_atomic(&csv_path, &bytes)?;
    let manifest_bytes = std::fs::read(dir.join("manifest.json"))?;
    let failed = rows.iter().filter(|r| !r.ok).count();
    let record = ResultRecord {
        experiment: "verify".into(),
        input_hash: sha256_hex(&manifest_bytes),
        payload: VerifySummary { rows, all_ok, min_ratio },
        provenance: Provenance::new(&m.grid()?, &RunConfig { tol: m.tol, ..cfg.clone() }, Some(m.alpha)),
    };
    let json = cfg.output("verify.json")?;
    record.write(&json)?;
    let summary = format!(
        "{} rows, {failed} failed; min deficit/A² {:?}",
        record.payload.rows.len(),
        record.payload.min_ratio
    );
    Ok((
        record,
        Outcome {
            checks_ok: all_ok,
            files: vec![csv_path, json],
            summary,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stars_are_seeded_and_bounded() {
        let a = random_star(&mut ChaCha8Rng::seed_from_u64(7));
        let b = random_star(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!((a.area() - 1.0).abs() < 1e-12);
        for k in 2..=6 {
            assert!(a.fourier_cos[k].hypot(a.fourier_sin[k]) <= 0.25);
        }
        assert_eq!(a.fourier_cos[1], 0.0);
    }

    #[test]
    fn check_names() {
        for c in Check::ALL {
            assert_eq!(c.to_string().parse::<Check>().unwrap(), c);
        }
        assert!("xx".parse::<Check>().is_err());
    }

    #[test]
    fn corrupted_record_fails() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            grid: Some(64),
            out: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let args = CorpusArgs {
            count: 2,
            ..CorpusArgs::default()
        };
        cmd_gen_corpus(&args, &cfg).unwrap();
        let (rec, out) = cmd_verify(dir.path(), &[], &cfg).unwrap();
        assert!(out.checks_ok, "{:?}", rec.payload.rows);
        assert_eq!(rec.payload.rows.len(), 8);

        let mut m = Manifest::read(dir.path()).unwrap();
        m.entries[1].recorded.energy *= 0.5;
        std::fs::write(dir.path().join("manifest.json"), serde_json::to_string(&m).unwrap()).unwrap();
        let (rec, out) = cmd_verify(dir.path(), &[Check::KohlerJobin], &cfg).unwrap();
        assert!(!out.checks_ok);
        assert_eq!(rec.payload.rows.len(), 2);
        assert!(rec.payload.rows[1].note.contains("energy"));
    }
}
